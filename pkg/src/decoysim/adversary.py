"""What an observer of the public record can learn, and what an active one can do.

The passive side enumerates the decoy population behind an observed total,
estimates posteriors empirically from simulated transcript samples, and
quantifies leakage as mutual information (plug-in estimator with
Miller-Madow bias correction).  The active side implements the two
interference attacks: jamming the shared medium and impersonating the
receiver, with and without the announcement-based defense.

Adversaries and the auditor consume transcripts and public observables
only; nothing in this module touches a party's private ramp state.
"""

from __future__ import annotations

import dataclasses
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .decoy import (
    IN_BUSINESS,
    detect_stabilization,
    generate_ramp,
    recover_secret,
    run_decoy_transmission,
    simulate_transmission,
)
from .engine import (
    ADVERSARY,
    RECEIVER,
    SENDER,
    STREAM_ADVERSARY,
    STREAM_SAMPLER,
    AdversaryKind,
    Protocol,
    RampModel,
    RngStream,
    Scenario,
    Transcript,
)
from .errors import InsufficientSamples, InvalidScenario, OutOfDomain, ProtocolTimeout
from .millionaires import ComparisonOutcome, Ordering

# --- decoy enumeration ------------------------------------------------------


@dataclass(frozen=True)
class SplitSet:
    """All (secret, key) pairs consistent with an observed stable total."""

    total: int
    pairs: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.pairs)

    def secrets(self) -> tuple[int, ...]:
        return tuple(pair[0] for pair in self.pairs)


def enumerate_splits(
    total: int, domain: tuple[int, int], max_key: Optional[int] = None
) -> SplitSet:
    """Every way to write `total` as secret + key with the secret in `domain`.

    The key only has to be a positive integer unless `max_key` bounds it
    (an adversary who knows the receiver's key is drawn from the same
    domain should pass max_key=domain[1]).  An empty set is a legal
    result; it means the parameters leak everything.
    """
    n1, n2 = domain
    lowest = n1 if max_key is None else max(n1, total - max_key)
    highest = min(n2, total - 1)
    pairs = tuple(
        (secret, total - secret) for secret in range(lowest, highest + 1)
    )
    return SplitSet(total=total, pairs=pairs)


def analytic_split_posterior(
    total: int, domain: tuple[int, int], max_key: Optional[int] = None
) -> dict[int, float]:
    """Exact posterior over the secret given only the stable total.

    With the secret and key independently uniform, every consistent split
    is equally likely, so the posterior is uniform on the split set.
    """
    splits = enumerate_splits(total, domain, max_key=max_key)
    if not splits.pairs:
        return {}
    weight = 1.0 / len(splits)
    return {secret: weight for secret in splits.secrets()}


def analytic_sum_mi(
    secret_domain: tuple[int, int], key_domain: Optional[tuple[int, int]] = None
) -> float:
    """Exact I(secret; secret + key) in bits, both uniform on their domains.

    Computed by full enumeration.  This is NOT zero on a bounded domain:
    extreme totals pin the secret down (total = 2 forces secret = 1), so
    this enumerated value -- not zero -- is the reference an empirical
    estimator of the sum channel must match.
    """
    if key_domain is None:
        key_domain = secret_domain
    s1, s2 = secret_domain
    k1, k2 = key_domain
    joint: Counter = Counter()
    for s in range(s1, s2 + 1):
        for k in range(k1, k2 + 1):
            joint[(s, s + k)] += 1
    n = (s2 - s1 + 1) * (k2 - k1 + 1)

    def entropy(counts: Iterable[int]) -> float:
        return -sum((c / n) * math.log2(c / n) for c in counts)

    h_s = entropy(Counter(s for s, _ in joint.elements()).values())
    h_t = entropy(Counter(t for _, t in joint.elements()).values())
    h_st = entropy(joint.values())
    return h_s + h_t - h_st


# --- plug-in estimators -----------------------------------------------------


def estimate_mutual_information(
    pairs: Sequence[tuple[object, object]], min_samples: int = 1000
) -> float:
    """Plug-in I(S;T) over a finite feature alphabet, Miller-Madow corrected.

    Ĥ_MM(X) = Ĥ(X) + (K_obs - 1) / (2N ln 2) bits, applied to each of
    H(S), H(T), H(S,T); the corrections cancel the leading
    O(alphabet / N) bias of the plug-in difference.  Small negative
    results are possible and are returned as-is.
    """
    n = len(pairs)
    if n < min_samples:
        raise InsufficientSamples(
            f"mutual information needs >= {min_samples} samples, got {n}"
        )
    counts_s: Counter = Counter()
    counts_t: Counter = Counter()
    counts_st: Counter = Counter()
    for s, t in pairs:
        counts_s[s] += 1
        counts_t[t] += 1
        counts_st[(s, t)] += 1

    ln2 = math.log(2.0)

    def entropy_mm(counter: Counter) -> float:
        h = -sum((c / n) * math.log2(c / n) for c in counter.values())
        return h + (len(counter) - 1) / (2.0 * n * ln2)

    return entropy_mm(counts_s) + entropy_mm(counts_t) - entropy_mm(counts_st)


@dataclass(frozen=True)
class TranscriptFeatures:
    """Quantized transcript summary used by the empirical estimators.

    Two components, both read off the public measurement sequence alone:
    the stable total rounded to the nearest integer, and the number of
    ticks from first channel activity to the onset of flatness, in coarse
    buckets.  Runs that never show activity map to ("silent",) and runs
    that never flatten long enough map to ("unstable",); reports carry
    these quantization choices.
    """

    hold_ticks: int
    noise_sigma: float
    bucket_width: int

    @classmethod
    def for_scenario(cls, scenario: Scenario) -> "TranscriptFeatures":
        return cls(
            hold_ticks=scenario.hold_ticks,
            noise_sigma=scenario.noise_sigma,
            bucket_width=max(1, scenario.max_ramp_ticks // 8),
        )

    @property
    def tolerance(self) -> float:
        return max(1e-9, 4.0 * self.noise_sigma)

    def __call__(self, transcript: Transcript) -> tuple:
        values = [value for _, value in transcript.measurements()]
        if not values:
            return ("empty",)
        tol = self.tolerance
        first_active = None
        for index, value in enumerate(values):
            if abs(value) > tol:
                first_active = index
                break
        if first_active is None:
            return ("silent",)
        flat_onset = 0
        for index in range(1, len(values)):
            if abs(values[index] - values[index - 1]) > tol:
                flat_onset = index
        if len(values) - flat_onset < self.hold_ticks:
            return ("unstable",)
        stable_total = round(math.fsum(values[flat_onset:]) / (len(values) - flat_onset))
        ramp_bucket = max(0, flat_onset - first_active) // self.bucket_width
        return (int(stable_total), int(ramp_bucket))


@dataclass
class PosteriorReport:
    """Adversary's inferred distribution over the secret domain."""

    domain: tuple[int, int]
    posterior: dict[int, float]
    max_prob: float
    mi_bits: float
    samples_used: int
    matched_samples: int
    observed_feature: tuple
    notes: tuple[str, ...] = ()

    def check_invariants(self) -> None:
        total = math.fsum(self.posterior.values())
        assert abs(total - 1.0) <= 1e-9
        assert abs(self.max_prob - max(self.posterior.values())) <= 1e-12


def estimate_posterior(
    samples: Sequence[tuple[int, Transcript]],
    observed: Transcript,
    features: Callable[[Transcript], tuple],
    domain: tuple[int, int],
    min_per_class: int = 100,
) -> PosteriorReport:
    """Empirical Bayes over simulated transcripts, uniform prior on the domain.

    posterior(s) is proportional to the number of sample transcripts with
    secret s whose feature vector matches the observed one.  The sample
    set must cover every domain value at least min_per_class times.
    """
    n1, n2 = domain
    class_counts = Counter(secret for secret, _ in samples)
    for secret in range(n1, n2 + 1):
        if class_counts[secret] < min_per_class:
            raise InsufficientSamples(
                f"need >= {min_per_class} samples for every secret in "
                f"[{n1}, {n2}]; secret {secret} has {class_counts[secret]}"
            )

    featured = [(secret, features(transcript)) for secret, transcript in samples]
    observed_feature = features(observed)
    matched = Counter(
        secret for secret, feature in featured if feature == observed_feature
    )
    total_matched = sum(matched.values())
    notes: tuple[str, ...] = ()
    if matched:
        posterior = {
            secret: matched.get(secret, 0) / total_matched
            for secret in range(n1, n2 + 1)
        }
    else:
        # Never-seen feature: the sample set says nothing, fall back to the prior.
        size = n2 - n1 + 1
        posterior = {secret: 1.0 / size for secret in range(n1, n2 + 1)}
        notes = ("observed feature never seen in the sample set; prior returned",)

    mi_bits = estimate_mutual_information(featured)
    report = PosteriorReport(
        domain=domain,
        posterior=posterior,
        max_prob=max(posterior.values()),
        mi_bits=mi_bits,
        samples_used=len(samples),
        matched_samples=total_matched,
        observed_feature=observed_feature,
        notes=notes,
    )
    report.check_invariants()
    return report


def collect_transmission_samples(
    scenario: Scenario, n_samples: int
) -> list[tuple[int, Transcript]]:
    """Simulate n_samples runs with secrets drawn uniformly over the domain.

    Per-run seeds are derived arithmetically from the base seed; the
    secret/key draws come from a dedicated sampler stream so they never
    interact with in-run randomness.  Timeouts and corrupted recoveries
    still contribute their transcripts (the adversary sees those runs
    too).
    """
    sampler = RngStream(scenario.seed, STREAM_SAMPLER)
    n1, n2 = scenario.secret_domain
    impersonation = scenario.adversary is AdversaryKind.IMPERSONATOR
    samples: list[tuple[int, Transcript]] = []
    for index in range(n_samples):
        secret = sampler.integers(n1, n2)
        key = sampler.integers(n1, n2)
        secrets = {SENDER: secret} if impersonation else {SENDER: secret, RECEIVER: key}
        run_scenario = dataclasses.replace(
            scenario, seed=scenario.seed + 1 + index, party_secrets=secrets
        )
        samples.append((secret, transcript_of(run_scenario)))
    return samples


def transcript_of(scenario: Scenario) -> Transcript:
    """The public record of one run, whether it completed or failed."""
    try:
        if scenario.adversary is AdversaryKind.IMPERSONATOR:
            return attack_impersonate(scenario).transcript
        if scenario.adversary is AdversaryKind.JAMMER:
            return attack_jam(scenario).transcript
        return run_decoy_transmission(scenario).transcript
    except (ProtocolTimeout, OutOfDomain) as exc:
        return exc.transcript


# --- active attacks ---------------------------------------------------------


@dataclass
class AttackOutcome:
    """What an active adversary achieved, and what it cost the protocol."""

    kind: str
    sender_secret: int
    transcript: Transcript
    disrupted: bool
    adversary_learned: bool
    adversary_recovered: Optional[int]
    receiver_recovered: Optional[int]
    receiver_error: Optional[str]
    timeout: bool
    jam_value: Optional[float] = None
    jam_tick: Optional[int] = None
    forged_announce_tick: Optional[int] = None
    notes: tuple[str, ...] = ()


class _JammerActor:
    """Watches the public total; once it goes flat, leans on the medium."""

    def __init__(self, jam_value: float, scenario: Scenario):
        self.jam_value = float(jam_value)
        self.watch_hold = max(1, scenario.hold_ticks // 2)
        self.epsilon = scenario.epsilon_stab
        self.arm_level = scenario.n1 - 0.5
        self.window: list[float] = []
        self.jam_tick: Optional[int] = None
        self._pending = False

    def on_tick(self, tick: int, channel, transcript) -> None:
        if self._pending and self.jam_tick is None:
            channel.set_contribution(ADVERSARY, self.jam_value)
            self.jam_tick = tick

    def on_reading(self, tick: int, reading: float) -> None:
        if self._pending or self.jam_tick is not None:
            return
        self.window.append(reading)
        if detect_stabilization(self.window, self.epsilon, self.watch_hold):
            mean = math.fsum(self.window[-self.watch_hold :]) / self.watch_hold
            if mean >= self.arm_level:
                self._pending = True


class _ImpersonatorActor:
    """Takes the receiver's place: stays silent, or forges his announcement."""

    def __init__(
        self,
        rng: RngStream,
        scenario: Scenario,
        forge_announcement: bool,
        own_key: float,
    ):
        self.rng = rng
        self.scenario = scenario
        self.forge = forge_announcement
        self.own_key = float(own_key)
        self.announce_tick = (
            rng.integers(1, scenario.receiver_start_max) if forge_announcement else None
        )
        self.ramp = None
        self.window: list[float] = []
        self.recovered: Optional[int] = None
        self.estimate: Optional[float] = None

    def on_tick(self, tick: int, channel, transcript) -> None:
        if not self.forge:
            return
        if tick == self.announce_tick:
            transcript.announce(tick, IN_BUSINESS)
        if tick >= self.announce_tick and self.own_key > 0.0:
            if self.ramp is None:
                self.ramp = generate_ramp(
                    self.rng,
                    self.own_key,
                    tick,
                    self.scenario.max_ramp_ticks,
                    RampModel.RANDOM_RAMP,
                )
            channel.set_contribution(ADVERSARY, self.ramp.value_at(tick))

    def on_reading(self, tick: int, reading: float) -> None:
        own = self.ramp.value_at(tick) if self.ramp is not None else 0.0
        self.window.append(reading - own)
        if self.recovered is not None:
            return
        scenario = self.scenario
        if detect_stabilization(self.window, scenario.epsilon_stab, scenario.hold_ticks):
            estimate = (
                math.fsum(self.window[-scenario.hold_ticks :]) / scenario.hold_ticks
            )
            if estimate >= scenario.n1 - 0.5:
                try:
                    self.recovered = recover_secret(
                        estimate + own, own, scenario.secret_domain, scenario.noise_sigma
                    )
                    self.estimate = estimate
                except OutOfDomain:
                    pass


def attack_jam(scenario: Scenario, jam_value: float = -2.0) -> AttackOutcome:
    """Active interference: add a constant force once the total stabilizes.

    The receiver either recovers a wrong value or rejects the transmission
    outright; either way the jammer learns nothing about the secret it did
    not already know from passive observation.
    """
    if scenario.adversary is not AdversaryKind.JAMMER:
        raise InvalidScenario("attack_jam needs scenario.adversary = jammer")
    actor = _JammerActor(jam_value, scenario)
    sender_secret = scenario.secret_of(SENDER)
    receiver_recovered: Optional[int] = None
    receiver_error: Optional[str] = None
    timeout = False
    try:
        outcome = simulate_transmission(scenario, actor=actor, receiver_present=True)
        receiver_recovered = outcome.recovered
        transcript = outcome.transcript
    except OutOfDomain as exc:
        receiver_error = "out_of_domain"
        transcript = exc.transcript
    except ProtocolTimeout as exc:
        receiver_error = "protocol_timeout"
        timeout = True
        transcript = exc.transcript
    jam_applied = actor.jam_tick is not None
    disrupted = jam_applied and jam_value != 0.0 and (
        receiver_error is not None or receiver_recovered != sender_secret
    )
    notes = () if jam_applied else ("jam never triggered before recovery",)
    return AttackOutcome(
        kind="jam",
        sender_secret=sender_secret,
        transcript=transcript,
        disrupted=disrupted,
        adversary_learned=False,
        adversary_recovered=None,
        receiver_recovered=receiver_recovered,
        receiver_error=receiver_error,
        timeout=timeout,
        jam_value=jam_value,
        jam_tick=actor.jam_tick,
        notes=notes,
    )


def attack_impersonate(
    scenario: Scenario,
    forge_announcement: bool = False,
    adversary_key: float = 4.0,
) -> AttackOutcome:
    """Take the receiver's place and try to read the sender's secret.

    Against a naive sender (defense off) the silent impersonator reads the
    stable total, which *is* the secret.  With the defense on, the sender
    refuses to move until she sees the in-business announcement, so a
    silent adversary gets nothing and the run times out.  Forging the
    announcement re-enables the read (minus the adversary's own known
    contribution): the defense assumes the announcement is authentic.
    """
    if scenario.adversary is not AdversaryKind.IMPERSONATOR:
        raise InvalidScenario("attack_impersonate needs scenario.adversary = impersonator")
    actor = _ImpersonatorActor(
        scenario.stream(STREAM_ADVERSARY),
        scenario,
        forge_announcement,
        adversary_key if forge_announcement else 0.0,
    )
    sender_secret = scenario.secret_of(SENDER)
    try:
        # No real receiver ever detects stabilization, so the run always
        # exhausts its tick budget; the question is what the actor saw.
        simulate_transmission(scenario, actor=actor, receiver_present=False)
        raise AssertionError("transmission cannot complete without a receiver")
    except ProtocolTimeout as exc:
        transcript = exc.transcript
    learned = actor.recovered == sender_secret
    return AttackOutcome(
        kind="impersonate",
        sender_secret=sender_secret,
        transcript=transcript,
        disrupted=True,
        adversary_learned=learned,
        adversary_recovered=actor.recovered,
        receiver_recovered=None,
        receiver_error="protocol_timeout",
        timeout=True,
        forged_announce_tick=actor.announce_tick,
        notes=("announcement forged",) if forge_announcement else ("silent",),
    )


# --- auditor ----------------------------------------------------------------


@dataclass(frozen=True)
class LeakageFinding:
    """One quantity the public record gives away beyond the comparison bit."""

    protocol: str
    quantity: str
    value: object
    description: str
    exceeds_comparison_bit: bool


def audit_comparison(
    outcome: ComparisonOutcome, protocol: Protocol | str, dt: float = 1.0
) -> list[LeakageFinding]:
    """Inspect a comparison's public observables for over-leakage.

    The auditor sees exactly what a bystander in public space sees: door
    events, the mark's timing, the bit string, the level series.  It never
    reads the parties' numbers; everything below is reconstructed from the
    observables alone.
    """
    tag = protocol.value if isinstance(protocol, Protocol) else str(protocol)
    findings: list[LeakageFinding] = []
    observables = outcome.public_observables

    if tag == Protocol.VESSELS.value:
        levels = [event.value for event in observables if event.label == "level"]
        if len(levels) >= 2:
            diffs = [levels[i + 1] - levels[i] for i in range(len(levels) - 1)]
            slope = math.fsum(diffs) / len(diffs)
            findings.append(
                LeakageFinding(
                    protocol=tag,
                    quantity="b-a",
                    value=slope,
                    description=f"difference leaked: b-a = {slope:g} "
                    "(per-tick drift of the public level series)",
                    exceeds_comparison_bit=True,
                )
            )
    elif tag == Protocol.ELEVATOR.value:
        doors = [event for event in observables if event.label == "doors_open"]
        findings.append(
            LeakageFinding(
                protocol=tag,
                quantity="b",
                value=len(doors) + 1,
                description=f"descending party's number leaked: b = {len(doors) + 1} "
                "(one door event per floor below the boarding floor)",
                exceeds_comparison_bit=True,
            )
        )
    elif tag == Protocol.RACE.value:
        marks = [event for event in observables if event.label == "mark"]
        if marks:
            mark_tick = marks[0].tick
            half = float(marks[0].value)
            upper: Optional[float]
            lower = half / (mark_tick * dt)
            upper = half / ((mark_tick - 1) * dt) if mark_tick > 1 else None
            lo_int = math.ceil(lower - 1e-12)
            hi_int = math.floor((upper - 1e-12)) if upper is not None else None
            exact = hi_int is not None and lo_int == hi_int
            findings.append(
                LeakageFinding(
                    protocol=tag,
                    quantity="max(a,b)",
                    value=lo_int if exact else (lo_int, hi_int),
                    description=(
                        f"mark appeared at tick {mark_tick}: the faster speed is "
                        + (f"exactly {lo_int}" if exact else f"in [{lo_int}, {hi_int}]")
                    ),
                    exceeds_comparison_bit=True,
                )
            )
    elif tag == Protocol.RACE_BITSTRING.value:
        finals = [event for event in observables if event.label == "final_string"]
        if finals:
            text = finals[0].value
            left = len(text) - len(text.lstrip("0X"))
            right = len(text) - len(text.rstrip("0X"))
            half = len(text) // 2
            slower = min(left, right)
            findings.append(
                LeakageFinding(
                    protocol=tag,
                    quantity="progress(a, b)",
                    value=(left, right),
                    description=(
                        f"string shows per-party progress {left}/{right} of {half}: "
                        "the slower-to-faster period ratio lies in "
                        f"[{half}/{slower + 1}, {half}/{max(slower, 1)}]"
                        if slower < half
                        else "both programs finished together"
                    ),
                    exceeds_comparison_bit=True,
                )
            )
    elif tag == "digitwise":
        counts = [
            event for event in observables if event.label == "subprotocol_invocations"
        ]
        if counts:
            invocations = int(counts[0].value)
            findings.append(
                LeakageFinding(
                    protocol=tag,
                    quantity="common_prefix_rounds",
                    value=invocations // 2,
                    description=(
                        f"{invocations} sub-protocol invocations reveal that the "
                        f"numbers agree on the first {invocations // 2 - 1} digits"
                        if outcome.ordering is not Ordering.EQUAL
                        else f"{invocations} invocations: all digits compared equal"
                    ),
                    exceeds_comparison_bit=invocations > 2,
                )
            )
    return findings

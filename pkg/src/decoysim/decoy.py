"""Decoy-based secret transmission over the additive channel.

The sender ramps a random contribution up to her secret value, the
receiver does the same with his private key, and once the public total
goes flat the receiver subtracts his own contribution to read the secret.
Everything an eavesdropper can see is the per-tick public measurement plus
the receiver's "in business" announcement.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelState, WaveParams
from .engine import (
    RECEIVER,
    SENDER,
    STREAM_NOISE,
    STREAM_RECEIVER,
    STREAM_SENDER,
    DECOY_PROTOCOLS,
    AdversaryKind,
    Protocol,
    RampModel,
    RngStream,
    Scenario,
    SimClock,
    Transcript,
)
from .errors import InvalidTarget, OutOfDomain, ProtocolTimeout

IN_BUSINESS = "in-business"


class Role(enum.Enum):
    SENDER = "sender"
    RECEIVER = "receiver"


@dataclass(frozen=True)
class RampProcess:
    """A party's private contribution as a function of the tick index.

    `schedule` stores the pre-target values for ticks
    [start_tick, stabilize_tick); outside that range the value is 0 before
    the start and exactly `target` from stabilize_tick on.
    """

    target: float
    start_tick: int
    stabilize_tick: int
    schedule: tuple[float, ...]

    def value_at(self, tick: int) -> float:
        if tick < self.start_tick:
            return 0.0
        if tick >= self.stabilize_tick:
            return self.target
        return self.schedule[tick - self.start_tick]

    def check_invariants(self) -> None:
        assert self.target > 0
        assert self.start_tick <= self.stabilize_tick
        assert len(self.schedule) == self.stabilize_tick - self.start_tick
        previous = 0.0
        for value in self.schedule:
            assert 0.0 <= value <= self.target
            assert value >= previous
            previous = value


@dataclass
class PartyState:
    """Mutable per-party bookkeeping while a transmission runs."""

    role: Role
    secret: int
    ramp: Optional[RampProcess] = None
    announced_in_business: bool = False
    observed_confirmation: bool = False
    confirmation_tick: Optional[int] = None


def generate_ramp(
    rng: RngStream,
    target: float,
    start_tick: int,
    max_ramp_ticks: int,
    model: RampModel = RampModel.RANDOM_RAMP,
    ticks_per_unit: Optional[int] = None,
) -> RampProcess:
    """Build one party's ramp-up plan.

    Synchronous plans jump straight to the target at start_tick.  Random
    plans draw a stabilization tick uniformly in
    [start_tick, start_tick + max_ramp_ticks] and fill the gap with
    uniform increments renormalized to land exactly on the target.  The
    deterministic-rate variant (negative control) climbs by a fixed amount
    per tick, so its duration is proportional to the target.
    """
    if not (target > 0):
        raise InvalidTarget(f"ramp target must be positive, got {target}")
    if max_ramp_ticks < 1:
        raise ValueError("max_ramp_ticks must be >= 1")
    target = float(target)

    if model is RampModel.SYNCHRONOUS:
        return RampProcess(target, start_tick, start_tick, ())

    if model is RampModel.DETERMINISTIC_RATE:
        if ticks_per_unit is None or ticks_per_unit < 1:
            raise ValueError("deterministic_rate needs ticks_per_unit >= 1")
        duration = max(1, int(round(ticks_per_unit * target)))
        schedule = tuple(target * j / duration for j in range(duration))
        return RampProcess(target, start_tick, start_tick + duration, schedule)

    duration = rng.integers(0, max_ramp_ticks)
    if duration == 0:
        return RampProcess(target, start_tick, start_tick, ())
    weights = rng.uniform(size=duration)
    total_weight = float(np.sum(weights))
    if total_weight <= 0.0:  # unreachable in practice; keeps the math total
        weights = np.ones(duration)
        total_weight = float(duration)
    partial = np.cumsum(weights) / total_weight
    # value at start_tick is 0; the j-th later tick carries the j-th partial sum
    schedule = (0.0,) + tuple(float(target * p) for p in partial[:-1])
    return RampProcess(target, start_tick, start_tick + duration, schedule)


def detect_stabilization(
    window: Sequence[float], epsilon_stab: float, hold_ticks: int
) -> bool:
    """True iff the last hold_ticks values all sit within +-epsilon of their mean."""
    if hold_ticks < 1:
        raise ValueError("hold_ticks must be >= 1")
    if epsilon_stab < 0:
        raise ValueError("epsilon_stab must be >= 0")
    if len(window) < hold_ticks:
        return False
    tail = window[-hold_ticks:]
    mean = math.fsum(tail) / hold_ticks
    return (max(tail) - mean) <= epsilon_stab and (mean - min(tail)) <= epsilon_stab


def recover_secret(
    total: float,
    own_key: float,
    secret_domain: tuple[int, int],
    noise_sigma: float = 0.0,
) -> int:
    """Subtract the private key from the public total and snap to the domain.

    Ties between two equally near integers round down.  If even the
    nearest domain element is further than 0.5 + 4*noise_sigma away the
    transmission is considered corrupted (jamming, gross noise) and
    OutOfDomain is raised.
    """
    total = float(total)
    own_key = float(own_key)
    if not (math.isfinite(total) and math.isfinite(own_key)):
        raise ValueError("total and own_key must be finite")
    diff = total - own_key
    n1, n2 = secret_domain
    nearest = min(max(math.ceil(diff - 0.5), n1), n2)
    distance = abs(diff - nearest)
    if distance > 0.5 + 4.0 * noise_sigma:
        raise OutOfDomain(
            f"recovered value {diff!r} is {distance:.3f} away from the nearest "
            f"domain element {nearest}; transmission corrupted",
            nearest=nearest,
            distance=distance,
        )
    return int(nearest)


@dataclass
class DecoyOutcome:
    """Result of one transmission run plus replay diagnostics."""

    recovered: int
    sender_secret: int
    receiver_key: Optional[int]
    transcript: Transcript
    detected_tick: int
    stable_estimate: float
    announce_tick: Optional[int]
    sender_start_tick: Optional[int]
    sender_stabilize_tick: Optional[int]
    receiver_stabilize_tick: Optional[int]

    @property
    def success(self) -> bool:
        return self.recovered == self.sender_secret


def _receiver_ramp_model(model: RampModel) -> RampModel:
    # The deterministic-rate control only makes the *sender* leaky; the
    # receiver jumps so the observable ramp duration is the sender's alone.
    if model is RampModel.DETERMINISTIC_RATE:
        return RampModel.SYNCHRONOUS
    return model


def simulate_transmission(
    scenario: Scenario,
    actor=None,
    receiver_present: bool = True,
) -> DecoyOutcome:
    """Run the tick loop for one transmission.

    `actor`, when given, is an active adversary with two hooks:
    ``on_tick(tick, channel, transcript)`` runs before the public
    measurement (it may push a contribution or forge an announcement) and
    ``on_reading(tick, reading)`` runs after it.  Raises ProtocolTimeout
    (with the transcript attached) if the receiver never detects
    stabilization within max_ticks.
    """
    scenario.validate()
    if scenario.protocol not in DECOY_PROTOCOLS:
        raise ValueError(f"not a transmission protocol: {scenario.protocol}")

    rng_sender = scenario.stream(STREAM_SENDER)
    rng_receiver = scenario.stream(STREAM_RECEIVER)
    rng_noise = scenario.stream(STREAM_NOISE)

    transcript = Transcript()
    channel = ChannelState(scenario.noise_sigma)
    clock = SimClock(scenario.dt)
    if scenario.protocol is Protocol.DECOY_WAVE:
        transcript.announce(0, WaveParams().announcement())

    domain = scenario.secret_domain
    sender = PartyState(Role.SENDER, scenario.secret_of(SENDER))
    receiver = (
        PartyState(Role.RECEIVER, scenario.secret_of(RECEIVER))
        if receiver_present
        else None
    )

    synchronized = scenario.ramp_model is RampModel.SYNCHRONOUS
    # Drawn from the receiver's stream whether or not he shows up, so an
    # impersonation run is tick-aligned with its honest twin.
    receiver_start = rng_receiver.integers(1, scenario.receiver_start_max)
    rate_ticks = max(1, scenario.max_ramp_ticks // scenario.n2)

    if receiver is not None:
        receiver.ramp = generate_ramp(
            rng_receiver,
            float(receiver.secret),
            receiver_start,
            scenario.max_ramp_ticks,
            _receiver_ramp_model(scenario.ramp_model),
        )

    announce_seen_tick: Optional[int] = None
    entries_scanned = 0
    window: list[float] = []
    hold = scenario.hold_ticks
    arm_level = scenario.n1 - 0.5

    def sender_may_start(tick: int) -> bool:
        if synchronized:
            # Idealized control: both parties move at one public tick, so
            # nobody's force is ever observable alone.
            return tick >= receiver_start
        if not scenario.defense_enabled:
            return True
        return announce_seen_tick is not None and tick > announce_seen_tick

    for tick in range(scenario.max_ticks):
        # 1. sender
        if sender.ramp is None and sender_may_start(tick):
            start = receiver_start if synchronized else tick
            sender.ramp = generate_ramp(
                rng_sender,
                float(sender.secret),
                start,
                scenario.max_ramp_ticks,
                scenario.ramp_model,
                ticks_per_unit=rate_ticks,
            )
        if sender.ramp is not None:
            channel.set_contribution(SENDER, sender.ramp.value_at(tick))

        # 2. receiver
        receiver_value = 0.0
        if receiver is not None and tick >= receiver_start:
            if tick == receiver_start:
                transcript.announce(tick, IN_BUSINESS)
                receiver.announced_in_business = True
            receiver_value = receiver.ramp.value_at(tick)
            channel.set_contribution(RECEIVER, receiver_value)

        # 3. adversary
        if actor is not None:
            actor.on_tick(tick, channel, transcript)

        # 4. public measurement
        reading = channel.measure(rng_noise)
        transcript.record_measurement(tick, reading)
        if actor is not None:
            actor.on_reading(tick, float(reading))

        # The sender reads announcements off the public record; a forged
        # one is indistinguishable from the real thing.
        if announce_seen_tick is None:
            entries = transcript.entries
            for entry in entries[entries_scanned:]:
                if getattr(entry, "tag", None) == IN_BUSINESS:
                    announce_seen_tick = entry.tick
                    sender.observed_confirmation = True
                    sender.confirmation_tick = entry.tick
                    break
            entries_scanned = len(entries)

        # 5. receiver-side detection: he subtracts his own known schedule
        # and waits for the remainder to go flat for hold_ticks.
        if receiver is not None:
            window.append(float(reading) - receiver_value)
            if len(window) >= hold and detect_stabilization(
                window, scenario.epsilon_stab, hold
            ):
                estimate = math.fsum(window[-hold:]) / hold
                if estimate >= arm_level:
                    key = float(receiver.secret)
                    try:
                        recovered = recover_secret(
                            estimate + key, key, domain, scenario.noise_sigma
                        )
                    except OutOfDomain as exc:
                        exc.transcript = transcript
                        raise
                    return DecoyOutcome(
                        recovered=recovered,
                        sender_secret=sender.secret,
                        receiver_key=receiver.secret,
                        transcript=transcript,
                        detected_tick=tick,
                        stable_estimate=estimate,
                        announce_tick=announce_seen_tick,
                        sender_start_tick=sender.ramp.start_tick if sender.ramp else None,
                        sender_stabilize_tick=(
                            sender.ramp.stabilize_tick if sender.ramp else None
                        ),
                        receiver_stabilize_tick=receiver.ramp.stabilize_tick,
                    )
        clock.step()

    raise ProtocolTimeout(
        f"no stabilization detected within {scenario.max_ticks} ticks",
        transcript=transcript,
    )


def run_decoy_transmission(scenario: Scenario) -> DecoyOutcome:
    """Run one honest (or passively observed) transmission end to end."""
    if scenario.adversary not in (AdversaryKind.NONE, AdversaryKind.PASSIVE):
        raise ValueError(
            "active adversaries run through the attack entry points, "
            f"not run_decoy_transmission (got {scenario.adversary})"
        )
    return simulate_transmission(scenario, actor=None, receiver_present=True)

"""Scenario dispatch: one entry point that runs any protocol deterministically.

Comparison protocols are pure functions; this module replays their public
observables into a Transcript (levels go through the additive channel so
they pick up measurement noise like any other public quantity) so that
every run, whatever the protocol, yields the same kind of public record.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from . import adversary as adversary_mod
from .channel import ChannelState
from .decoy import DecoyOutcome, run_decoy_transmission
from .engine import (
    RECEIVER,
    SENDER,
    STREAM_NOISE,
    AdversaryKind,
    Protocol,
    Scenario,
    Transcript,
)
from .errors import ProtocolTimeout
from .millionaires import (
    ComparisonOutcome,
    compare_elevator,
    compare_race,
    compare_race_bitstring,
    compare_vessels,
)

RunResult = Union[DecoyOutcome, ComparisonOutcome, adversary_mod.AttackOutcome]


@dataclass
class RunOutcome:
    """Protocol-specific result plus the complete public transcript."""

    scenario: Scenario
    result: RunResult
    transcript: Transcript

    @property
    def kind(self) -> str:
        if isinstance(self.result, DecoyOutcome):
            return "decoy"
        if isinstance(self.result, ComparisonOutcome):
            return "comparison"
        return "attack"


def _even_track_length(scenario: Scenario) -> int:
    length = scenario.n2 - scenario.n1
    if length % 2:
        length += 1
    return max(2, length)


def _check_budget(last_tick: int, scenario: Scenario, transcript: Transcript) -> None:
    if last_tick > scenario.max_ticks:
        raise ProtocolTimeout(
            f"protocol needs tick {last_tick} but max_ticks is {scenario.max_ticks}",
            transcript=transcript,
        )


def _vessels_transcript(scenario: Scenario, a: int, b: int) -> Transcript:
    """Re-derive the level series as channel superposition and measure it.

    Pumping out at rate a is a cumulative contribution of -a*t, pumping in
    is +b*t, and the initial fill is a constant third contribution; the
    public level is exactly their superposition.
    """
    transcript = Transcript()
    channel = ChannelState(scenario.noise_sigma)
    rng_noise = scenario.stream(STREAM_NOISE)
    initial_level = 10_000.0
    channel.set_contribution("reservoir", initial_level)
    for tick in range(scenario.hold_ticks + 1):
        channel.set_contribution(SENDER, -float(a) * tick)
        channel.set_contribution(RECEIVER, float(b) * tick)
        transcript.record_measurement(tick, channel.measure(rng_noise))
    return transcript


def _comparison_run(scenario: Scenario) -> RunOutcome:
    a = scenario.secret_of(SENDER)
    b = scenario.secret_of(RECEIVER)
    protocol = scenario.protocol

    if protocol is Protocol.ELEVATOR:
        outcome = compare_elevator(a, b, n_floors=scenario.n2)
    elif protocol is Protocol.RACE:
        outcome = compare_race(a, b, n=_even_track_length(scenario), dt=scenario.dt)
    elif protocol is Protocol.RACE_BITSTRING:
        outcome = compare_race_bitstring(a, b, n=_even_track_length(scenario))
    elif protocol is Protocol.VESSELS:
        outcome = compare_vessels(a, b, observation_ticks=scenario.hold_ticks)
    else:  # pragma: no cover - dispatch is exhaustive
        raise ValueError(f"not a comparison protocol: {protocol}")

    if protocol is Protocol.VESSELS:
        transcript = _vessels_transcript(scenario, a, b)
    else:
        transcript = Transcript()
        last_tick = max((event.tick for event in outcome.public_observables), default=0)
        _check_budget(last_tick, scenario, transcript)
        for event in sorted(outcome.public_observables, key=lambda e: e.tick):
            transcript.mark(event.tick, f"{event.label}={event.value}")
    return RunOutcome(scenario=scenario, result=outcome, transcript=transcript)


def run_scenario(scenario: Scenario) -> RunOutcome:
    """Validate and execute one scenario, dispatching on its protocol.

    Raises InvalidScenario on bad inputs, ProtocolTimeout if the protocol
    cannot finish within max_ticks, and OutOfDomain when a decoy recovery
    rejects the transmission.
    """
    scenario.validate()
    if scenario.protocol in (Protocol.DECOY_FORCE, Protocol.DECOY_WAVE):
        if scenario.adversary is AdversaryKind.JAMMER:
            attack = adversary_mod.attack_jam(scenario)
            return RunOutcome(scenario, attack, attack.transcript)
        if scenario.adversary is AdversaryKind.IMPERSONATOR:
            attack = adversary_mod.attack_impersonate(scenario)
            return RunOutcome(scenario, attack, attack.transcript)
        outcome = run_decoy_transmission(scenario)
        return RunOutcome(scenario, outcome, outcome.transcript)
    return _comparison_run(scenario)

"""Deterministic discrete-time core: clock, seeded streams, transcript, replay digest.

Everything a run does flows through these types.  Two runs of the same
scenario must produce byte-identical transcripts; the replay digest is how
that claim gets checked cheaply.
"""

from __future__ import annotations

import enum
import hashlib
import struct
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

import numpy as np

from .channel import Reading
from .errors import InvalidScenario


class Protocol(enum.Enum):
    DECOY_FORCE = "decoy_force"
    DECOY_WAVE = "decoy_wave"
    ELEVATOR = "elevator"
    RACE = "race"
    RACE_BITSTRING = "race_bitstring"
    VESSELS = "vessels"


class RampModel(enum.Enum):
    SYNCHRONOUS = "synchronous"
    RANDOM_RAMP = "random_ramp"
    # Leaky-by-design negative control: the sender ramps with a fixed
    # per-tick increment, so her ramp duration is proportional to her
    # secret.  Used to prove the leakage estimator actually detects leaks.
    DETERMINISTIC_RATE = "deterministic_rate"


class AdversaryKind(enum.Enum):
    NONE = "none"
    PASSIVE = "passive"
    JAMMER = "jammer"
    IMPERSONATOR = "impersonator"


DECOY_PROTOCOLS = (Protocol.DECOY_FORCE, Protocol.DECOY_WAVE)
COMPARISON_PROTOCOLS = (
    Protocol.ELEVATOR,
    Protocol.RACE,
    Protocol.RACE_BITSTRING,
    Protocol.VESSELS,
)

# Fixed stream labels: enabling an adversary or noise must never perturb
# the draws any other consumer sees.
STREAM_SENDER = 0
STREAM_RECEIVER = 1
STREAM_NOISE = 2
STREAM_ADVERSARY = 3
STREAM_SAMPLER = 4

_U64 = (1 << 64) - 1


class RngStream:
    """One independent deterministic random stream.

    The underlying generator is keyed purely by (seed, stream_id), so any
    consumer can be re-created in isolation and replays are bit-exact.
    """

    def __init__(self, seed: int, stream_id: int):
        self.seed = int(seed) & _U64
        self.stream_id = int(stream_id)
        self._gen = np.random.default_rng([self.seed, self.stream_id])

    def normal(self) -> float:
        return float(self._gen.standard_normal())

    def uniform(self, size: int | None = None):
        if size is None:
            return float(self._gen.random())
        return self._gen.random(size)

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in the inclusive range [low, high]."""
        return int(self._gen.integers(low, high, endpoint=True))


@dataclass
class SimClock:
    """Tick counter plus the immutable tick length in seconds."""

    dt: float
    t: int = 0

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValueError("dt must be positive")

    def step(self) -> int:
        self.t += 1
        return self.t


# --- transcript -----------------------------------------------------------


@dataclass(frozen=True)
class Measurement:
    tick: int
    value: float


@dataclass(frozen=True)
class Announcement:
    tick: int
    tag: str


@dataclass(frozen=True)
class Mark:
    tick: int
    label: str


TranscriptEntry = Union[Measurement, Announcement, Mark]


class Transcript:
    """Append-only record of everything that happened in public space.

    Entries are kept in insertion order and ticks may never decrease.
    Measurements must be :class:`~decoysim.channel.Reading` instances,
    i.e. values that came out of the channel's public measurement
    operation; raw floats are rejected so private contribution values
    cannot be smuggled into the public record.
    """

    def __init__(self):
        self._entries: list[TranscriptEntry] = []

    def _check_tick(self, tick: int) -> int:
        tick = int(tick)
        if tick < 0:
            raise ValueError("tick must be non-negative")
        if self._entries and tick < self._entries[-1].tick:
            raise ValueError(
                f"transcript ticks must be non-decreasing "
                f"(got {tick} after {self._entries[-1].tick})"
            )
        return tick

    def record_measurement(self, tick: int, reading: Reading) -> None:
        if not isinstance(reading, Reading):
            raise TypeError(
                "transcripts only accept channel Readings as measurements; "
                "got " + type(reading).__name__
            )
        self._entries.append(Measurement(self._check_tick(tick), float(reading)))

    def announce(self, tick: int, tag: str) -> None:
        self._entries.append(Announcement(self._check_tick(tick), str(tag)))

    def mark(self, tick: int, label: str) -> None:
        self._entries.append(Mark(self._check_tick(tick), str(label)))

    @property
    def entries(self) -> tuple[TranscriptEntry, ...]:
        return tuple(self._entries)

    def measurements(self) -> list[tuple[int, float]]:
        return [(e.tick, e.value) for e in self._entries if isinstance(e, Measurement)]

    def announcements(self) -> list[tuple[int, str]]:
        return [(e.tick, e.tag) for e in self._entries if isinstance(e, Announcement)]

    def marks(self) -> list[tuple[int, str]]:
        return [(e.tick, e.label) for e in self._entries if isinstance(e, Mark)]

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[TranscriptEntry]:
        return iter(self._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Transcript):
            return NotImplemented
        return self._entries == other._entries


# Digest of an empty transcript; fixed for the life of the format.
EMPTY_TRANSCRIPT_DIGEST = 0xB4B2797457A0A6E4


def replay_digest(transcript: Transcript) -> int:
    """64-bit digest of the full entry sequence.

    A pure function of the entries: equal transcripts hash equal, and any
    change -- down to one ulp of one measurement -- changes the digest
    with overwhelming probability.  Float payloads are hashed by their
    IEEE-754 bit pattern, never by a decimal rendering.
    """
    h = hashlib.blake2b(digest_size=8)
    for entry in transcript:
        if isinstance(entry, Measurement):
            h.update(b"M")
            h.update(struct.pack("<q", entry.tick))
            h.update(struct.pack("<d", entry.value))
        elif isinstance(entry, Announcement):
            payload = entry.tag.encode("utf-8")
            h.update(b"A")
            h.update(struct.pack("<q", entry.tick))
            h.update(struct.pack("<I", len(payload)))
            h.update(payload)
        elif isinstance(entry, Mark):
            payload = entry.label.encode("utf-8")
            h.update(b"K")
            h.update(struct.pack("<q", entry.tick))
            h.update(struct.pack("<I", len(payload)))
            h.update(payload)
        else:  # pragma: no cover - the entry union is closed
            raise TypeError(f"unknown transcript entry {entry!r}")
    return int.from_bytes(h.digest(), "little")


# --- scenario --------------------------------------------------------------

SENDER = "alice"
RECEIVER = "bob"
ADVERSARY = "eve"


@dataclass(frozen=True)
class Scenario:
    """Complete description of one protocol run.

    Every run is a pure function of this record; the seed pins all
    randomness (party ramps, noise, adversary behaviour) through
    per-consumer streams.
    """

    protocol: Protocol
    seed: int = 0
    dt: float = 1.0
    max_ticks: int = 400
    secret_domain: tuple[int, int] = (1, 100)
    party_secrets: Mapping[str, int] = field(default_factory=dict)
    ramp_model: RampModel = RampModel.RANDOM_RAMP
    hold_ticks: int = 3
    epsilon_stab: float = 0.0
    noise_sigma: float = 0.0
    adversary: AdversaryKind = AdversaryKind.NONE
    defense_enabled: bool = True

    # -- derived quantities --------------------------------------------

    @property
    def n1(self) -> int:
        return self.secret_domain[0]

    @property
    def n2(self) -> int:
        return self.secret_domain[1]

    @property
    def max_ramp_ticks(self) -> int:
        """Tick budget for one party's ramp, derived from the run budget.

        Leaves room for the receiver's start offset, both ramps, the hold
        window and detection slack inside max_ticks.
        """
        return max(1, (self.max_ticks - self.hold_ticks) // 6)

    @property
    def receiver_start_max(self) -> int:
        return max(1, self.max_ramp_ticks // 2)

    def stream(self, stream_id: int) -> RngStream:
        return RngStream(self.seed, stream_id)

    def secret_of(self, party: str) -> int:
        return int(self.party_secrets[party])

    def validate(self) -> None:
        """Raise InvalidScenario naming the first violated invariant."""
        n1, n2 = self.secret_domain
        if not (n1 >= 1):
            raise InvalidScenario(f"secret_domain: N1 must be >= 1, got {n1}")
        if not (n2 > n1):
            raise InvalidScenario(f"secret_domain: N2 must exceed N1, got [{n1}, {n2}]")
        if not (self.hold_ticks > 0):
            raise InvalidScenario(f"hold_ticks must be > 0, got {self.hold_ticks}")
        if not (self.max_ticks > self.hold_ticks):
            raise InvalidScenario(
                f"max_ticks must exceed hold_ticks, got "
                f"max_ticks={self.max_ticks} hold_ticks={self.hold_ticks}"
            )
        if not (self.dt > 0):
            raise InvalidScenario(f"dt must be positive, got {self.dt}")
        if not (self.noise_sigma >= 0):
            raise InvalidScenario(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not (self.epsilon_stab >= 0):
            raise InvalidScenario(f"epsilon_stab must be >= 0, got {self.epsilon_stab}")
        for party, secret in self.party_secrets.items():
            if not (n1 <= int(secret) <= n2):
                raise InvalidScenario(
                    f"party_secrets.{party}: {secret} outside secret_domain [{n1}, {n2}]"
                )
        if self.protocol in DECOY_PROTOCOLS:
            if SENDER not in self.party_secrets:
                raise InvalidScenario("party_secrets.alice required for decoy protocols")
            if (
                RECEIVER not in self.party_secrets
                and self.adversary is not AdversaryKind.IMPERSONATOR
            ):
                raise InvalidScenario(
                    "party_secrets.bob required unless the adversary impersonates him"
                )
            if (
                self.ramp_model is RampModel.DETERMINISTIC_RATE
                and self.max_ramp_ticks < self.n2
            ):
                raise InvalidScenario(
                    "deterministic_rate needs max_ramp_ticks >= N2 "
                    f"(have {self.max_ramp_ticks}, need {self.n2}); raise max_ticks"
                )
        else:
            for party in (SENDER, RECEIVER):
                if party not in self.party_secrets:
                    raise InvalidScenario(
                        f"party_secrets.{party} required for comparison protocols"
                    )
            if self.adversary in (AdversaryKind.JAMMER, AdversaryKind.IMPERSONATOR):
                raise InvalidScenario(
                    "active adversaries are only modeled for the decoy protocols"
                )

    def as_mapping(self) -> dict:
        """Flat mapping with config-file field names (for reports)."""
        return {
            "protocol": self.protocol.value,
            "seed": self.seed,
            "dt": self.dt,
            "max_ticks": self.max_ticks,
            "secret_domain": list(self.secret_domain),
            "party_secrets": {k: int(v) for k, v in self.party_secrets.items()},
            "ramp_model": self.ramp_model.value,
            "hold_ticks": self.hold_ticks,
            "epsilon_stab": self.epsilon_stab,
            "noise_sigma": self.noise_sigma,
            "adversary": self.adversary.value,
            "defense_enabled": self.defense_enabled,
        }

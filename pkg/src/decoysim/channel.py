"""Additive superposition channel shared by all parties.

The public observable at any instant is the sum of every private
contribution currently applied to the medium (forces on a rod, wave
amplitudes in a waveguide), optionally blurred by Gaussian measurement
noise.  Individual contributions never leave this module: the only value
that may enter a transcript is the output of :meth:`ChannelState.measure`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonFiniteValue


class Reading(float):
    """A public channel measurement.

    Transcripts only accept measurements of this type, which can only be
    produced by :meth:`ChannelState.measure`.  This is what keeps private
    contribution values out of the public record by construction rather
    than by convention.
    """

    __slots__ = ()


@dataclass(frozen=True)
class WaveParams:
    """Publicly agreed wave parameters for the acoustic variant.

    Both parties share one frequency and phase for the whole run, so the
    superposition of their waves reduces exactly to amplitude addition and
    omega/phi never enter the channel arithmetic.  They are carried as
    public metadata only.
    """

    omega: float = 1.0  # rad/s
    phi: float = 0.0  # radians

    def announcement(self) -> str:
        return f"wave-params omega={self.omega} phi={self.phi}"


class ChannelState:
    """Current private contributions plus the measurement noise level.

    An absent contributor is equivalent to a contribution of 0.  Setting a
    contribution replaces the previous value (map semantics, not
    accumulation).  Negative values are allowed at this level; protocol
    parties are constrained to positive targets elsewhere.
    """

    def __init__(self, noise_sigma: float = 0.0):
        if not (noise_sigma >= 0.0):
            raise ValueError("noise_sigma must be >= 0")
        self.noise_sigma = noise_sigma
        self.contributions: dict[str, float] = {}

    def set_contribution(self, who: str, value: float) -> None:
        """Replace `who`'s current contribution with `value`."""
        value = float(value)
        if not math.isfinite(value):
            raise NonFiniteValue(f"contribution for {who!r} is not finite: {value!r}")
        self.contributions[who] = value

    def clear_contribution(self, who: str) -> None:
        self.contributions.pop(who, None)

    def superpose(self) -> float:
        """Exact sum of all contributions (the noise-free ideal value)."""
        return math.fsum(self.contributions.values())

    def measure(self, rng) -> Reading:
        """One public measurement: superposition plus Gaussian noise.

        With noise_sigma == 0 the result is bit-exact equal to
        :meth:`superpose` and the noise stream is not consumed, so turning
        noise off does not perturb any other random stream.
        """
        total = self.superpose()
        if self.noise_sigma > 0.0:
            total += self.noise_sigma * rng.normal()
        return Reading(total)

"""Drive and modulation waveforms.

All waveforms are value types: frozen dataclasses with a vectorized
``sample`` method returning the control amplitude in rad/ns at a time in ns.
Samples outside a waveform's support are zero, so assemblies can evaluate
them on any grid without bounds bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SineEnvelopeDrive",
    "FmZModulation",
    "NascentDeltaTrain",
    "SegmentedDrive",
    "ModulatedQuadratureDrive",
]


def _as_times(t):
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


@dataclass(frozen=True)
class SineEnvelopeDrive:
    """Half-sine drive envelope ``amplitude * sin(pi t / duration)`` on [0, T].

    The X-gate calibration sets ``amplitude = pi^2 / (4 T)`` so the envelope
    integrates to a pulse area of pi/2.
    """

    amplitude: float
    duration: float

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError(f"drive duration must be positive, got {self.duration}")

    @classmethod
    def x_gate(cls, duration: float) -> "SineEnvelopeDrive":
        return cls(amplitude=math.pi**2 / (4.0 * duration), duration=duration)

    def sample(self, t):
        tt, scalar = _as_times(t)
        inside = (tt >= 0.0) & (tt <= self.duration)
        val = np.where(inside, self.amplitude * np.sin(np.pi * tt / self.duration), 0.0)
        return float(val) if scalar else val

    def area(self) -> float:
        """Integral over the full support: 2 * amplitude * duration / pi."""
        return 2.0 * self.amplitude * self.duration / math.pi


@dataclass(frozen=True)
class FmZModulation:
    """Sinusoidal Z modulation ``gamma * sin(2 pi cycles t / duration)``.

    ``cycles`` full periods fit in one gate window, so the accumulated phase

        alpha(t) = (gamma * duration / (pi * cycles)) * sin^2(pi * cycles * t / duration)

    vanishes at both window edges and the waveform repeats seamlessly across
    consecutive gates.
    """

    gamma: float
    cycles: int
    duration: float

    def __post_init__(self):
        if self.gamma < 0.0:
            raise ValueError(f"modulation amplitude must be >= 0, got {self.gamma}")
        if int(self.cycles) != self.cycles or self.cycles < 1:
            raise ValueError(f"cycle count must be a positive integer, got {self.cycles}")
        if self.duration <= 0.0:
            raise ValueError(f"modulation duration must be positive, got {self.duration}")

    def sample(self, t):
        tt, scalar = _as_times(t)
        val = self.gamma * np.sin(2.0 * np.pi * self.cycles * tt / self.duration)
        return float(val) if scalar else val

    def phase(self, t):
        """Accumulated phase ``alpha(t)``, the running integral of the waveform."""
        tt, scalar = _as_times(t)
        coeff = self.gamma * self.duration / (np.pi * self.cycles)
        val = coeff * np.sin(np.pi * self.cycles * tt / self.duration) ** 2
        return float(val) if scalar else val

    def area(self) -> float:
        """Whole-window integral; zero because the window holds full cycles."""
        return float(self.phase(self.duration))


@dataclass(frozen=True)
class NascentDeltaTrain:
    """Train of narrow unit-area pulses centered at ``s * interval``, s = 1..segments.

    Each pulse is the nascent delta ``(pi / (2 w)) * cos(pi u / w)`` on
    ``|u| <= w/2`` (zero outside), which integrates to exactly 1.  The train
    carries no overall coefficient; the Hamiltonian assembly scales it by the
    per-pulse rotation area (pi/2 for the Z train).
    """

    segments: int
    interval: float
    width: float

    def __post_init__(self):
        if self.segments < 1:
            raise ValueError(f"pulse train needs at least one pulse, got {self.segments}")
        if not 0.0 < self.width < self.interval:
            raise ValueError(
                f"pulse width must satisfy 0 < w < interval, got w={self.width}, "
                f"interval={self.interval}"
            )

    @property
    def pulse_area(self) -> float:
        """Area of a single pulse (exactly 1 by construction)."""
        return 1.0

    def sample(self, t):
        tt, scalar = _as_times(t)
        # Pulses do not overlap (w < interval), so only the nearest center matters.
        s = np.clip(np.round(tt / self.interval), 1, self.segments)
        u = tt - s * self.interval
        inside = np.abs(u) <= 0.5 * self.width
        val = np.where(inside, (np.pi / (2.0 * self.width)) * np.cos(np.pi * u / self.width), 0.0)
        return float(val) if scalar else val

    def area(self) -> float:
        return float(self.segments)


@dataclass(frozen=True)
class SegmentedDrive:
    """Cosine bursts filling the gaps of a pulse train, on odd segments only.

    Segment ``s`` covers ``[(s-1) * interval, s * interval]``; for odd ``s``
    up to ``segments`` the drive

        amplitude * cos(pi (t - (s - 1/2) interval) / (interval - width))

    is applied on ``[(s-1) interval + w/2, s interval - w/2]``, clear of the
    pulse windows at the segment boundaries.  The sqrt(X) calibration sets
    ``amplitude = pi^2 / (8 (interval - width))`` so each burst has area
    pi/4; two bursts per gate give an X gate.  ``width = 0`` is allowed and
    is the pulse-free reference drive.
    """

    amplitude: float
    segments: int
    interval: float
    width: float

    def __post_init__(self):
        if self.segments < 1:
            raise ValueError(f"segmented drive needs at least one segment, got {self.segments}")
        if not 0.0 <= self.width < self.interval:
            raise ValueError(
                f"width must satisfy 0 <= w < interval, got w={self.width}, "
                f"interval={self.interval}"
            )

    @classmethod
    def sqrt_x_bursts(cls, segments: int, interval: float, width: float) -> "SegmentedDrive":
        return cls(
            amplitude=math.pi**2 / (8.0 * (interval - width)),
            segments=segments,
            interval=interval,
            width=width,
        )

    @property
    def burst_area(self) -> float:
        """Area of one burst: 2 * amplitude * (interval - width) / pi."""
        return 2.0 * self.amplitude * (self.interval - self.width) / math.pi

    def sample(self, t):
        tt, scalar = _as_times(t)
        s = np.floor(tt / self.interval).astype(int) + 1
        gap = self.interval - self.width
        center = (s - 0.5) * self.interval
        inside = (
            (s % 2 == 1)
            & (s >= 1)
            & (s <= self.segments)
            & (np.abs(tt - center) <= 0.5 * gap)
        )
        val = np.where(inside, self.amplitude * np.cos(np.pi * (tt - center) / gap), 0.0)
        return float(val) if scalar else val

    def area(self) -> float:
        n_active = (self.segments + 1) // 2
        return n_active * self.burst_area


@dataclass(frozen=True)
class ModulatedQuadratureDrive:
    """Single-site drive expressed in the unmodulated (operation) frame.

    A drive that is a plain ``envelope * sigma_x`` in the modulated frame of
    ``modulation`` appears in the operation frame with both quadratures:
    ``envelope * (cos(2 alpha) sigma_x + sin(2 alpha) sigma_y)``.
    """

    envelope: SineEnvelopeDrive
    modulation: FmZModulation

    def sample_xy(self, t):
        """Pair of quadrature amplitudes ``(x, y)`` at time(s) ``t``."""
        omega = self.envelope.sample(t)
        two_alpha = 2.0 * np.asarray(self.modulation.phase(t))
        x = omega * np.cos(two_alpha)
        y = omega * np.sin(two_alpha)
        if np.ndim(t) == 0:
            return float(x), float(y)
        return x, y

    def area(self) -> float:
        return self.envelope.area()

"""Noise-limited cut-off frequency, the linear resolution limit, and peak separability."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .attenuation import AttenuationLaw, attenuation_coefficient, phase_velocity
from .signal import Signal

__all__ = [
    "ResolutionError",
    "ResolutionReport",
    "SeparabilityVerdict",
    "cutoff_frequency",
    "cutoff_by_bisection",
    "resolution_limit",
    "implied_exponent",
    "find_peaks",
    "separability",
    "fwhm",
    "zero_crossing_width",
]

VALLEY_RATIO = 0.8
PEAK_THRESHOLD = 0.2


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class ResolutionReport:
    omega_cut: float
    f_cut: float
    snr_used: float
    r: float
    delta_space: float
    delta_time: float
    c_at_cut: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def as_text(self) -> str:
        return "\n".join(f"{k}={v:.17g}" for k, v in self.as_dict().items())


def _check_cutoff_args(r: float, snr: float):
    if not snr > 1:
        raise ResolutionError("signal never below noise: snr must exceed 1 for a finite cut-off")
    if not r > 0:
        raise ResolutionError(f"propagation distance must be positive, got {r}")


def cutoff_by_bisection(alpha: Callable[[float], float], r: float, snr: float, rtol: float = 1e-15) -> float:
    """Solve ``alpha(w) r = ln(snr)`` for a non-decreasing ``alpha`` by bisection."""
    _check_cutoff_args(r, snr)
    target = math.log(snr) / r
    lo, hi = 0.0, 1.0
    while alpha(hi) < target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise ResolutionError("attenuation never reaches the noise level: infinite cut-off")
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or hi - lo <= rtol * hi:
            break
        if alpha(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def resolution_limit(omega_cut: float, law: AttenuationLaw) -> float:
    """Half the wavelength at the cut-off, ``pi c(w_cut) / w_cut``, in metres."""
    return math.pi * phase_velocity(law, omega_cut) / omega_cut


def cutoff_frequency(law: AttenuationLaw, r: float, snr: float, method: str = "closed") -> ResolutionReport:
    """Frequency where ``snr * exp(-alpha(w) r)`` drops to one.

    ``method="closed"`` uses ``(ln(snr) / (alpha0 r))**(1/y)``;
    ``method="bisection"`` only queries :func:`attenuation_coefficient`.
    """
    _check_cutoff_args(r, snr)
    if law.alpha0 == 0:
        raise ResolutionError("alpha0 = 0: infinite cut-off frequency")
    if method == "closed":
        w = (math.log(snr) / (law.alpha0 * r)) ** (1.0 / law.y)
    elif method == "bisection":
        w = cutoff_by_bisection(lambda om: attenuation_coefficient(law, om), r, snr)
    else:
        raise ValueError(f"unknown method {method!r}")
    c = phase_velocity(law, w)
    return ResolutionReport(
        omega_cut=w,
        f_cut=w / (2 * math.pi),
        snr_used=float(snr),
        r=float(r),
        delta_space=math.pi * c / w,
        delta_time=math.pi / w,
        c_at_cut=c,
    )


def implied_exponent(f1: float, r1: float, f2: float, r2: float) -> float:
    """Power-law exponent consistent with two cut-offs at the same SNR.

    From ``f**y * r = const``: ``y = ln(r2 / r1) / ln(f1 / f2)``.
    """
    return math.log(r2 / r1) / math.log(f1 / f2)


@dataclass(frozen=True)
class SeparabilityVerdict:
    resolved: bool
    peak_positions: tuple = field(default_factory=tuple)
    valley_ratio: float = math.nan


def find_peaks(x: np.ndarray, threshold: float) -> np.ndarray:
    """Indices of interior local maxima above ``threshold``.

    Three-point test ``x[i-1] < x[i] >= x[i+1]``; a flat top counts once at
    its left edge.
    """
    x = np.asarray(x, dtype=float)
    i = np.arange(1, x.size - 1)
    mask = (x[i] > x[i - 1]) & (x[i] >= x[i + 1]) & (x[i] > threshold)
    return i[mask]


def separability(s: Signal, threshold: float = PEAK_THRESHOLD, valley: float = VALLEY_RATIO) -> SeparabilityVerdict:
    """Two-peak test: exactly two maxima above ``threshold`` and a deep enough dip.

    The signal is normalized to a maximum of one first.
    """
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    peak = float(np.max(s.samples))
    if peak <= 0:
        return SeparabilityVerdict(False)
    x = s.samples / peak
    idx = find_peaks(x, threshold)
    times = tuple(float(t) for t in s.times[idx])
    if idx.size != 2:
        return SeparabilityVerdict(False, times)
    a, b = idx
    ratio = float(np.min(x[a : b + 1]) / min(x[a], x[b]))
    return SeparabilityVerdict(ratio < valley, times, ratio)


def _crossing(x, i, j, level):
    # linear interpolation of the level crossing between samples i and j
    return i + (level - x[i]) / (x[j] - x[i]) * (j - i)


def fwhm(s: Signal) -> float:
    """Full width at half maximum of the global peak, in seconds."""
    x = s.samples
    k = int(np.argmax(x))
    half = 0.5 * x[k]
    left = k
    while left > 0 and x[left] > half:
        left -= 1
    right = k
    while right < x.size - 1 and x[right] > half:
        right += 1
    if x[left] > half or x[right] > half:
        raise ResolutionError("peak does not fall to half maximum inside the window")
    lo = _crossing(x, left, left + 1, half)
    hi = _crossing(x, right - 1, right, half)
    return (hi - lo) * s.dt


def zero_crossing_width(s: Signal) -> float:
    """Distance between the zero crossings flanking the global peak, in seconds."""
    x = s.samples
    k = int(np.argmax(x))
    left = k
    while left > 0 and x[left] > 0:
        left -= 1
    right = k
    while right < x.size - 1 and x[right] > 0:
        right += 1
    if x[left] > 0 or x[right] > 0:
        raise ResolutionError("peak has no zero crossing inside the window")
    return (_crossing(x, right - 1, right, 0.0) - _crossing(x, left, left + 1, 0.0)) * s.dt

"""Sampled signals, the shared DFT convention, noise injection and SNR estimates.

DFT convention
--------------
Every module in the package goes through :func:`forward_dft` and
:func:`inverse_dft`.  The analysis transform is unnormalized with kernel
``exp(-i w t)``; the synthesis transform carries ``1/N`` with kernel
``exp(+i w t)``.  This is the ``numpy.fft`` convention.  Bin ``j`` sits at
angular frequency ``w_j = 2 pi j / (N dt)``; bins above ``N/2`` are the
negative frequencies.

The physics literature often writes the synthesis integral with
``exp(-i w t)`` instead.  A transfer function ``H(w)`` written in that
convention corresponds to ``conj(H(w))`` here (for real kernels), which is
how :mod:`paresolve.operator` maps it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Signal",
    "Spectrum",
    "NoiseModel",
    "SignalError",
    "forward_dft",
    "inverse_dft",
    "angular_frequencies",
    "add_noise",
    "estimate_snr",
    "read_signal_csv",
    "write_signal_csv",
]

# Relative imaginary residual tolerated when synthesizing a real signal.
SYMMETRY_RTOL = 1e-10


class SignalError(ValueError):
    """Raised for invalid signals, spectra or noise parameters."""


@dataclass(frozen=True, eq=False)
class Signal:
    """Uniformly sampled real time series.

    Parameters
    ----------
    samples : array_like
        Real pressure values.
    dt : float
        Sample interval in seconds.
    t0 : float
        Time of the first sample in seconds.
    """

    samples: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        x = np.array(self.samples, dtype=float, copy=True)
        if x.ndim != 1 or x.size < 2:
            raise SignalError(f"a signal needs a 1D array of at least 2 samples, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise SignalError("signal contains non-finite samples")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise SignalError(f"dt must be positive and finite, got {self.dt}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n) * self.dt

    def same_grid(self, other: "Signal") -> bool:
        return self.n == other.n and self.dt == other.dt and self.t0 == other.t0

    def check_grid(self, other: "Signal"):
        if not self.same_grid(other):
            raise SignalError(
                f"grid mismatch: (N={self.n}, dt={self.dt!r}, t0={self.t0!r}) vs "
                f"(N={other.n}, dt={other.dt!r}, t0={other.t0!r})"
            )

    def with_samples(self, samples) -> "Signal":
        return Signal(samples, self.dt, self.t0)

    def __add__(self, other: "Signal") -> "Signal":
        self.check_grid(other)
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other: "Signal") -> "Signal":
        self.check_grid(other)
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, a: float) -> "Signal":
        return self.with_samples(a * self.samples)

    __rmul__ = __mul__

    def allclose(self, other: "Signal", rtol=0.0, atol=1e-12) -> bool:
        self.check_grid(other)
        return bool(np.allclose(self.samples, other.samples, rtol=rtol, atol=atol))


def angular_frequencies(n: int, dt: float) -> np.ndarray:
    """Angular frequency of each DFT bin, negative frequencies in the upper half."""
    return 2.0 * np.pi * np.fft.fftfreq(n, d=dt)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """DFT coefficients of a signal on a known grid."""

    coefficients: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex, copy=True)
        if c.ndim != 1 or c.size < 2:
            raise SignalError("a spectrum needs at least 2 coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def n(self) -> int:
        return self.coefficients.size

    @property
    def omega(self) -> np.ndarray:
        return angular_frequencies(self.n, self.dt)

    def symmetry_residual(self) -> float:
        """Largest ``|X_j - conj(X_{N-j})|`` relative to the largest coefficient."""
        c = self.coefficients
        mirrored = np.conj(np.roll(c[::-1], 1))
        scale = np.max(np.abs(c))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(c - mirrored)) / scale)


def forward_dft(s: Signal) -> Spectrum:
    """Unnormalized DFT, ``X_j = sum_n x_n exp(-2 pi i j n / N)``."""
    if not np.all(np.isfinite(s.samples)):
        raise SignalError("rejected input: non-finite samples")
    return Spectrum(np.fft.fft(s.samples), s.dt, s.t0)


def inverse_dft(sp: Spectrum, rtol: float = SYMMETRY_RTOL) -> Signal:
    """Inverse DFT with the ``1/N`` factor; the result must be real.

    Raises
    ------
    SignalError
        If the synthesized imaginary part exceeds ``rtol`` times the largest
        real magnitude, i.e. the spectrum is not conjugate symmetric.
    """
    x = np.fft.ifft(sp.coefficients)
    imag = float(np.max(np.abs(x.imag)))
    scale = max(float(np.max(np.abs(x.real))), np.finfo(float).tiny)
    if imag > rtol * scale:
        raise SignalError(
            f"spectrum is not conjugate symmetric: max imaginary residual {imag:.3e} "
            f"(relative {imag / scale:.3e})"
        )
    return Signal(x.real, sp.dt, sp.t0)


@dataclass(frozen=True)
class NoiseModel:
    """Additive white Gaussian noise at a given peak SNR.

    The generator is numpy's PCG64 seeded from ``seed``; every draw starts
    from a fresh generator so identical parameters give identical noise.
    """

    snr: float
    seed: int = 0

    def __post_init__(self):
        if not self.snr > 1:
            raise SignalError(f"snr must be > 1, got {self.snr}")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def add_noise(s: Signal, nm: NoiseModel, reference_peak: float) -> Signal:
    """Return ``s`` plus Gaussian noise of std ``reference_peak / snr``."""
    if not reference_peak > 0:
        raise SignalError(f"reference_peak must be positive, got {reference_peak}")
    sigma = reference_peak / nm.snr
    noise = nm.generator().standard_normal(s.n) * sigma
    return s.with_samples(s.samples + noise)


def _window(w, n: int) -> range:
    r = range(*w) if isinstance(w, tuple) else w
    if not isinstance(r, range) or r.step != 1:
        raise SignalError(f"window must be a (start, stop) pair or unit-step range, got {w!r}")
    if r.start < 0 or r.stop > n:
        raise SignalError(f"window {r.start}:{r.stop} lies outside 0:{n}")
    return r


def estimate_snr(s: Signal, noise_window, signal_window, min_length: int = 16) -> float:
    """Peak of ``|s|`` in ``signal_window`` over the std in ``noise_window``.

    Windows are half-open ``(start, stop)`` index pairs (or ``range`` objects).
    """
    nw = _window(noise_window, s.n)
    sw = _window(signal_window, s.n)
    if len(nw) < min_length or len(sw) < min_length:
        raise SignalError(f"windows need at least {min_length} samples")
    if nw.start < sw.stop and sw.start < nw.stop:
        raise SignalError("noise and signal windows overlap")
    peak = float(np.max(np.abs(s.samples[sw.start:sw.stop])))
    noise = float(np.std(s.samples[nw.start:nw.stop]))
    if noise <= np.finfo(float).eps * max(peak, np.finfo(float).tiny):
        raise SignalError("noise floor below machine epsilon")
    return peak / noise


def write_signal_csv(s: Signal, path) -> Path:
    """Write ``t,p`` rows at 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("t,p\n")
        for t, p in zip(s.times, s.samples):
            fh.write(f"{t:.17g},{p:.17g}\n")
    return path


def _recover_dt(t: np.ndarray) -> float:
    # the file stores t0 + i*dt; find the double that reproduces it exactly
    guess = (t[-1] - t[0]) / (t.size - 1)
    idx = np.arange(t.size)
    candidates = [guess]
    lo = hi = guess
    for _ in range(4):
        lo = np.nextafter(lo, -np.inf)
        hi = np.nextafter(hi, np.inf)
        candidates += [lo, hi]
    for dt in candidates:
        if np.array_equal(t[0] + idx * dt, t):
            return float(dt)
    steps = np.diff(t)
    if np.max(np.abs(steps - guess)) > 1e-6 * abs(guess):
        raise SignalError("time column is not uniformly sampled")
    return float(guess)


def read_signal_csv(path) -> Signal:
    """Read a ``t,p`` CSV written by :func:`write_signal_csv` or by hand."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["t", "p"]:
            raise SignalError(f"expected header 't,p', got {','.join(header)!r}")
        rows = [(float(a), float(b)) for a, b in reader]
    if len(rows) < 2:
        raise SignalError("signal file has fewer than 2 samples")
    t, p = np.array(rows).T
    return Signal(p, _recover_dt(t), t[0])

"""The attenuation operator, diagonal in the DFT basis.

For a propagation distance ``r`` the measured signal is the ideal one
filtered by

    H(w) = w / (c0 K(w)) * exp(i gamma(w) r)

written for a synthesis kernel ``exp(-i w t)``.  Under the package DFT
convention (see :mod:`paresolve.signal`) the per-bin multiplier is therefore
``conj(H(w_j))``.  The magnitudes, and with them the singular values, are the
same either way.  An optional transducer impulse response is folded in as a
second diagonal factor.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attenuation import AttenuationLaw, gamma, wavenumber
from .signal import SYMMETRY_RTOL, Signal, SignalError, angular_frequencies

__all__ = [
    "ForwardOperator",
    "transfer_function",
    "build_operator",
    "apply",
    "apply_adjoint",
    "singular_values",
    "kernel",
    "dense_matrix",
    "near_unity_deviation",
    "wraparound_fraction",
    "export_operator_csv",
]


def transfer_function(law: AttenuationLaw, r: float, omega) -> np.ndarray:
    """``w / (c0 K(w)) exp(i gamma(w) r)`` with the DC value set to its limit 1."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    h = np.ones(w.shape, dtype=complex)
    nz = w != 0
    k = wavenumber(law, w[nz])
    h[nz] = w[nz] / (law.c0 * k) * np.exp(1j * gamma(law, w[nz]) * r)
    return h


@dataclass(frozen=True, eq=False)
class ForwardOperator:
    multipliers: np.ndarray
    r: float
    n: int
    dt: float
    t0: float = 0.0
    ir_spectrum: np.ndarray | None = None
    law: AttenuationLaw | None = None

    @property
    def omega(self) -> np.ndarray:
        return angular_frequencies(self.n, self.dt)

    @property
    def sigma(self) -> np.ndarray:
        return np.abs(self.multipliers)

    def check(self, s: Signal):
        if s.n != self.n or s.dt != self.dt or s.t0 != self.t0:
            raise SignalError(
                f"signal grid (N={s.n}, dt={s.dt!r}, t0={s.t0!r}) does not match operator "
                f"grid (N={self.n}, dt={self.dt!r}, t0={self.t0!r})"
            )

    # array-level kernels used by the solvers
    def forward_array(self, x: np.ndarray) -> np.ndarray:
        return np.fft.ifft(self.multipliers * np.fft.fft(x)).real

    def adjoint_array(self, x: np.ndarray) -> np.ndarray:
        return np.fft.ifft(np.conj(self.multipliers) * np.fft.fft(x)).real


def _hermitian_fix(m: np.ndarray) -> np.ndarray:
    n = m.size
    if n % 2 == 0:
        # the Nyquist bin is its own mirror image; a real signal only sees Re
        m[n // 2] = m[n // 2].real
    m[0] = m[0].real
    return m


def build_operator(law: AttenuationLaw, r: float, n: int, dt: float, ir: Signal | None = None, t0: float = 0.0) -> ForwardOperator:
    """Per-bin multipliers for distance ``r`` on an ``(n, dt)`` grid.

    ``r = 0`` gives the identity (times the impulse response, if any).

    ``ir`` is a time-domain impulse response on the same grid; its first
    sample is taken as lag zero of a circular convolution.
    """
    if not r >= 0:
        raise ValueError(f"propagation distance must be >= 0, got {r}")
    if n < 2 or not dt > 0:
        raise ValueError(f"invalid grid N={n}, dt={dt}")
    omega = angular_frequencies(n, dt)
    if r == 0:
        # no propagation path: the source pressure is observed unchanged
        m = np.ones(n, dtype=complex)
    else:
        m = _hermitian_fix(np.conj(transfer_function(law, r, omega)))
    ir_spec = None
    if ir is not None:
        if ir.n != n or ir.dt != dt:
            raise SignalError(f"impulse response grid (N={ir.n}, dt={ir.dt!r}) does not match (N={n}, dt={dt!r})")
        ir_spec = np.fft.fft(ir.samples)
        m = m * ir_spec
    m.setflags(write=False)
    return ForwardOperator(m, float(r), int(n), float(dt), float(t0), ir_spec, law)


def _synthesize(op: ForwardOperator, spec: np.ndarray) -> Signal:
    x = np.fft.ifft(spec)
    imag = float(np.max(np.abs(x.imag)))
    scale = max(float(np.max(np.abs(x.real))), np.finfo(float).tiny)
    if imag > SYMMETRY_RTOL * scale:
        raise SignalError(f"operator output is not real: imaginary residual {imag / scale:.3e}")
    return Signal(x.real, op.dt, op.t0)


def apply(op: ForwardOperator, s: Signal) -> Signal:
    op.check(s)
    return _synthesize(op, op.multipliers * np.fft.fft(s.samples))


def apply_adjoint(op: ForwardOperator, s: Signal) -> Signal:
    op.check(s)
    return _synthesize(op, np.conj(op.multipliers) * np.fft.fft(s.samples))


def singular_values(op: ForwardOperator) -> list[tuple[float, float]]:
    """``(omega_j, |m_j|)`` pairs sorted by ``|omega_j|``."""
    w = op.omega
    order = np.argsort(np.abs(w), kind="stable")
    sig = op.sigma
    return [(float(w[j]), float(sig[j])) for j in order]


def kernel(op: ForwardOperator) -> np.ndarray:
    """Sampled circular time-domain kernel; the response to a unit sample at index 0."""
    return np.fft.ifft(op.multipliers).real


def dense_matrix(op: ForwardOperator) -> np.ndarray:
    """Materialize the ``N x N`` matrix by applying the operator to unit impulses."""
    eye = np.eye(op.n)
    return np.column_stack([op.forward_array(e) for e in eye])


def near_unity_deviation(law: AttenuationLaw, f_lo: float, f_hi: float, num: int = 512) -> float:
    """Largest ``|w / (c0 K(w)) - 1|`` over ``[f_lo, f_hi]`` in Hz."""
    w = 2 * np.pi * np.linspace(f_lo, f_hi, num)
    return float(np.max(np.abs(w / (law.c0 * wavenumber(law, w)) - 1)))


def wraparound_fraction(law: AttenuationLaw, r: float, s: Signal, ir: Signal | None = None, pad: int = 8) -> float:
    """Energy fraction of the linear (non-circular) response that leaves the window.

    The signal is embedded at the start of a grid ``pad`` times longer and
    propagated there; whatever lands outside the original ``N`` samples
    would wrap around on the original grid.
    """
    n = s.n * pad
    x = np.zeros(n)
    x[: s.n] = s.samples
    irp = None
    if ir is not None:
        h = np.zeros(n)
        h[: ir.n] = ir.samples
        irp = Signal(h, s.dt)
    op = build_operator(law, r, n, s.dt, irp)
    y = op.forward_array(x)
    total = float(np.sum(y**2))
    if total == 0:
        return 0.0
    return float(np.sum(y[s.n:] ** 2) / total)


def export_operator_csv(op: ForwardOperator, path) -> Path:
    """Debug dump: one ``omega,sigma,phase`` row per bin in DFT order."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["omega", "sigma", "phase"])
        for om, m in zip(op.omega, op.multipliers):
            w.writerow([f"{om:.17g}", f"{abs(m):.17g}", f"{np.angle(m):.17g}"])
    return path

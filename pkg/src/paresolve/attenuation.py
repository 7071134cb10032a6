"""Power-law attenuation and its causal dispersion.

The medium is described by the complex wavenumber ``K(w) = w/c(w) + i a(w)``
with ``a(w) = alpha0 |w|**y``.  The phase velocity follows the power-law
Kramers-Kronig companion

    1/c(w) = 1/c0 + alpha0 tan(pi y / 2) (|w|**(y-1) - w_ref**(y-1)),

anchored so that ``c(w_ref) = c0``.  The ``y = 1`` (logarithmic) branch is not
implemented.  Downstream code only ever sees :func:`gamma`, the difference
between ``K`` and the lossless wavenumber ``w / c0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AttenuationLaw",
    "ComplexWavenumberSample",
    "UnsupportedExponentError",
    "DB_TO_NP",
    "attenuation_coefficient",
    "phase_velocity",
    "wavenumber",
    "gamma",
    "wavenumber_samples",
]

DB_TO_NP = math.log(10.0) / 20.0
DEFAULT_F_REF = 1e6


class UnsupportedExponentError(ValueError):
    pass


@dataclass(frozen=True)
class AttenuationLaw:
    """Power-law attenuation parameters.

    Parameters
    ----------
    alpha0 : float
        Prefactor in Np/m per (rad/s)**y.
    y : float
        Power-law exponent, ``0 < y <= 2``.
    c0 : float
        Sound speed of the ideal, dispersionless wave in m/s.
    omega_ref : float
        Angular frequency at which ``c(omega_ref) = c0``.
    dispersion : bool
        With ``False`` the phase velocity is ``c0`` everywhere.
    """

    alpha0: float
    y: float
    c0: float
    omega_ref: float = 2 * math.pi * DEFAULT_F_REF
    dispersion: bool = True

    def __post_init__(self):
        if not self.alpha0 >= 0:
            raise ValueError(f"alpha0 must be >= 0, got {self.alpha0}")
        if not 0 < self.y <= 2:
            raise ValueError(f"exponent y must lie in (0, 2], got {self.y}")
        if not self.c0 > 0:
            raise ValueError(f"c0 must be positive, got {self.c0}")
        if not self.omega_ref > 0:
            raise ValueError(f"omega_ref must be positive, got {self.omega_ref}")

    @classmethod
    def from_db(cls, alpha_db_cm_mhz_y, y, c0, f_ref_hz=DEFAULT_F_REF, dispersion=True):
        """Build a law from the customary dB/cm/MHz**y prefactor.

        ``a[Np/m] = alpha_db * (ln 10 / 20) * 100 * f_MHz**y`` and
        ``f_MHz = w / (2 pi 1e6)``, so
        ``alpha0 = alpha_db * (ln 10 / 20) * 100 / (2 pi 1e6)**y``.
        """
        alpha0 = alpha_db_cm_mhz_y * DB_TO_NP * 100.0 / (2 * math.pi * 1e6) ** y
        return cls(alpha0, y, c0, 2 * math.pi * f_ref_hz, dispersion)

    @property
    def alpha_db_cm_mhz_y(self) -> float:
        return self.alpha0 * (2 * math.pi * 1e6) ** self.y / (DB_TO_NP * 100.0)

    def conversion_text(self) -> str:
        return (
            "alpha0 [Np m^-1 (rad/s)^-y] = alpha [dB cm^-1 MHz^-y] * (ln(10)/20) * 100 "
            f"/ (2*pi*1e6)^y = {self.alpha_db_cm_mhz_y:.6g} * {DB_TO_NP * 100:.6g} "
            f"/ (2*pi*1e6)^{self.y:g} = {self.alpha0:.6e}"
        )


@dataclass(frozen=True)
class ComplexWavenumberSample:
    omega: float
    k_real: float
    k_imag: float


def attenuation_coefficient(law: AttenuationLaw, omega):
    """``alpha0 |omega|**y`` in Np/m; exactly zero at ``omega = 0``."""
    w = np.abs(np.asarray(omega, dtype=float))
    a = law.alpha0 * w**law.y
    return a if a.ndim else float(a)


def _slowness_shift(law: AttenuationLaw, w: np.ndarray) -> np.ndarray:
    if not law.dispersion or law.alpha0 == 0:
        return np.zeros_like(w)
    if law.y == 1:
        raise UnsupportedExponentError("y = 1 needs the logarithmic dispersion branch, which is not implemented")
    return law.alpha0 * math.tan(math.pi * law.y / 2) * (w ** (law.y - 1) - law.omega_ref ** (law.y - 1))


def phase_velocity(law: AttenuationLaw, omega):
    """Phase velocity ``c(omega)`` in m/s."""
    w = np.abs(np.asarray(omega, dtype=float))
    if np.any(w == 0) and law.dispersion and law.alpha0 > 0 and law.y < 1:
        raise ValueError("phase velocity is singular at omega = 0 for y < 1")
    c = 1.0 / (1.0 / law.c0 + _slowness_shift(law, w))
    return c if c.ndim else float(c)


def gamma(law: AttenuationLaw, omega):
    """``K(w) - w/c0 = w (1/c(w) - 1/c0) + i alpha(w)``; zero at ``w = 0``.

    The real part is odd in ``w`` and the imaginary part even.
    """
    w = np.asarray(omega, dtype=float)
    aw = np.abs(w)
    shift = np.zeros_like(aw)
    nz = aw > 0
    shift[nz] = _slowness_shift(law, aw[nz])
    g = w * shift + 1j * law.alpha0 * aw**law.y
    return g if g.ndim else complex(g)


def wavenumber(law: AttenuationLaw, omega):
    """Complex wavenumber ``K(w) = w / c0 + gamma(w)``."""
    w = np.asarray(omega, dtype=float)
    k = w / law.c0 + gamma(law, w)
    return k if np.ndim(k) else complex(k)


def wavenumber_samples(law: AttenuationLaw, omega) -> list[ComplexWavenumberSample]:
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    k = np.atleast_1d(wavenumber(law, w))
    return [ComplexWavenumberSample(float(a), float(b.real), float(b.imag)) for a, b in zip(w, k)]

"""Down-conversion photon-pair source model.

The source emits pairs anticorrelated in orbital angular momentum,

    |psi> = sum_l c_|l| |l>_A |-l>_B |H>_A |H>_B,

with real non-negative coefficients c_|l| and a cutoff |l| <= L.  The spatial
basis modes are p=0 Laguerre-Gaussian profiles with a common waist, which
fixes the radial falloff used by the topology computations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQRT2 = math.sqrt(2.0)


class BadSpectrum(ValueError):
    """Raised for malformed user-supplied spectrum coefficients."""


@dataclass(frozen=True)
class OAMSpectrum:
    """Mode weights c_|l| for |l| = 0..L, normalized over the signed ladder.

    Normalization counts each |l| > 0 twice (the +l and -l terms), so
    c0^2 + 2*sum_{l>0} c_l^2 = 1.
    """

    L: int
    c: np.ndarray

    def coefficient(self, ell: int) -> float:
        """c_|ell|, or 0.0 beyond the cutoff."""
        a = abs(int(ell))
        return float(self.c[a]) if a <= self.L else 0.0

    def signed_norm_sq(self) -> float:
        return float(self.c[0] ** 2 + 2.0 * np.sum(self.c[1:] ** 2))


@dataclass(frozen=True)
class LGMode:
    """Azimuthal-index Laguerre-Gaussian mode (radial index fixed to 0)."""

    ell: int
    waist: float = 1.0

    def __post_init__(self):
        if self.waist <= 0:
            raise ValueError("waist must be positive")


def lg_amplitude(mode: LGMode, r, phi):
    """Complex p=0 Laguerre-Gaussian amplitude at polar coordinates (r, phi).

    u(r, phi) = sqrt(2/(pi |l|!)) (1/w) (r sqrt2 / w)^|l| exp(-r^2/w^2) exp(i l phi)

    Unit L2 norm under the measure r dr dphi.  Accepts scalars or arrays.
    The |l|! prefactor is evaluated in log space so large |l| stays finite.
    """
    a = abs(mode.ell)
    w = mode.waist
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    log_pref = 0.5 * (math.log(2.0) - math.log(math.pi) - math.lgamma(a + 1)) - math.log(w)
    if a == 0:
        radial = np.exp(log_pref - (r / w) ** 2)
    else:
        with np.errstate(divide="ignore"):
            log_rad = a * np.log(np.where(r > 0, r * SQRT2 / w, 1.0))
        radial = np.where(r > 0, np.exp(log_pref + log_rad - (r / w) ** 2), 0.0)
    out = radial * np.exp(1j * mode.ell * phi)
    return complex(out) if out.ndim == 0 else out


def spdc_spectrum(model: str = "exponential", L: int = 6, *, l0: float = 2.0,
                  coefficients=None) -> OAMSpectrum:
    """Build an OAMSpectrum from a named model.

    model:
      "uniform"      equal weight for every |l|
      "exponential"  c_|l| proportional to exp(-|l| / (2 l0)), mimicking the
                     drop in pair rate at higher topological charge
      "user"         explicit coefficients (length L+1, non-negative)
    """
    if L < 0:
        raise BadSpectrum("cutoff L must be non-negative")
    if model == "uniform":
        c = np.ones(L + 1)
    elif model == "exponential":
        if l0 <= 0:
            raise BadSpectrum("exponential scale l0 must be positive")
        c = np.exp(-np.arange(L + 1) / (2.0 * l0))
    elif model == "user":
        if coefficients is None:
            raise BadSpectrum("user model requires coefficients")
        c = np.asarray(coefficients, dtype=float)
        if c.shape != (L + 1,):
            raise BadSpectrum(f"expected {L + 1} coefficients, got {c.shape}")
        if np.any(c < 0):
            raise BadSpectrum("coefficients must be non-negative")
        if not np.any(c > 0):
            raise BadSpectrum("coefficients must not all vanish")
    else:
        raise BadSpectrum(f"unknown spectrum model {model!r}")
    norm = math.sqrt(c[0] ** 2 + 2.0 * np.sum(c[1:] ** 2))
    return OAMSpectrum(L=L, c=c / norm)


@dataclass
class Ket:
    """Labeled superposition over (photon-A polarization, l_A, l_B) basis terms."""

    terms: dict = field(default_factory=dict)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.terms.values()))

    def normalized(self) -> "Ket":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero ket")
        return Ket({k: v / n for k, v in self.terms.items()})

    def items(self):
        return sorted(self.terms.items())


def build_input_state(spectrum: OAMSpectrum) -> Ket:
    """Anticorrelated pair state over labels ('H', l, -l), l in [-L, L]."""
    terms = {}
    for ell in range(-spectrum.L, spectrum.L + 1):
        amp = spectrum.coefficient(ell)
        if amp > 0:
            terms[("H", ell, -ell)] = complex(amp)
    return Ket(terms)

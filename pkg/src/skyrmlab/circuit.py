"""Reconfigurable spatial-to-polarization converter.

Photon A passes a half-wave plate, then a self-locking displacer
interferometer that shifts its spatial mode conditioned on polarization:

    |V, l>  ->  |H, l + l1>
    |H, l>  ->  e^{i chi} |V, l + l2>

Coupling photon A into a single-mode fiber keeps only l_A = 0, leaving the
two-qubit hybrid state (|H>|l1>_B + |V>|l2>_B)/sqrt(2) when the wave-plate
angle balances the arm weights.  Noise channels act on the resulting 4x4
density matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qmath import ID4, outer
from .source import Ket, OAMSpectrum, build_input_state


class BadBasis(ValueError):
    """State is not expressed in the labeled (pol, l_A, l_B) basis expected here."""


class EmptyPostselection(ValueError):
    """No term survives the single-mode-fiber projection."""


class Unbalanceable(ValueError):
    """Arm weights cannot be equalized because a coefficient vanishes."""


@dataclass(frozen=True)
class HybridStateSpec:
    """Device settings that select one hybrid state.

    ell1, ell2   hologram shifts applied to the two interferometer paths
    chi          path-mismatch phase on the H -> V branch
    hwp1_angle   input half-wave-plate angle (radians)
    extra_phase  mode-dependent phase (e.g. Gouy) applied to |V> after the gate
    """

    ell1: int
    ell2: int
    chi: float = 0.0
    hwp1_angle: float = math.pi / 8
    extra_phase: float = 0.0

    def __post_init__(self):
        if self.ell1 == self.ell2:
            raise ValueError("ell1 and ell2 must differ")


@dataclass(frozen=True)
class NoiseChannel:
    """Mixing channel: none, isotropic(p), dephasing(p) or background(rate).

    For isotropic and dephasing, p is the surviving signal fraction.  The
    background rate is not applied here; it feeds the coincidence synthesis
    as a uniform accidental floor.
    """

    kind: str = "none"
    p: float = 1.0
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "isotropic", "dephasing", "background"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.rate < 0:
            raise ValueError("background rate must be non-negative")

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def isotropic(cls, p):
        return cls("isotropic", p=p)

    @classmethod
    def dephasing(cls, p):
        return cls("dephasing", p=p)

    @classmethod
    def background(cls, rate):
        return cls("background", rate=rate)


def hwp_jones(theta: float) -> np.ndarray:
    """Half-wave plate Jones matrix with fast axis at theta."""
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp_jones(theta: float) -> np.ndarray:
    """Quarter-wave plate Jones matrix, R(-theta) diag(1, i) R(theta)."""
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, s], [-s, c]], dtype=complex)
    return rot.T @ np.diag([1.0, 1j]) @ rot


def apply_polarization(state: Ket, jones: np.ndarray) -> Ket:
    """Act with a 2x2 Jones matrix on photon A's polarization label."""
    jones = np.asarray(jones, dtype=complex)
    terms: dict = {}
    for (pol, la, lb), amp in state.terms.items():
        if pol not in ("H", "V"):
            raise BadBasis(f"unknown polarization label {pol!r}")
        col = 0 if pol == "H" else 1
        for row, out_pol in enumerate(("H", "V")):
            coeff = jones[row, col]
            if coeff != 0:
                key = (out_pol, la, lb)
                terms[key] = terms.get(key, 0.0) + coeff * amp
    return Ket({k: v for k, v in terms.items() if abs(v) > 0})


def gate_T(state: Ket, spec: HybridStateSpec) -> Ket:
    """Polarization-controlled mode shift of the interferometer.

    Each |V, l> term maps to |H, l + ell1> and each |H, l> term to
    e^{i chi} |V, l + ell2>; photon-B labels are untouched.  Norm preserving.
    """
    phase = np.exp(1j * spec.chi)
    terms: dict = {}
    for (pol, la, lb), amp in state.terms.items():
        if pol == "V":
            key = ("H", la + spec.ell1, lb)
            terms[key] = terms.get(key, 0.0) + amp
        elif pol == "H":
            key = ("V", la + spec.ell2, lb)
            terms[key] = terms.get(key, 0.0) + amp * phase
        else:
            raise BadBasis(f"unknown polarization label {pol!r}")
    return Ket(terms)


@dataclass
class HybridKet:
    """Post-selected two-qubit state on (polarization of A) x (mode of B).

    vector is ordered (H,m0), (H,m1), (V,m0), (V,m1) where m0 = |ell1> and
    m1 = |ell2>.  success_probability is the squared norm that survived the
    fiber projection, before renormalization.
    """

    vector: np.ndarray
    ell1: int
    ell2: int
    success_probability: float

    def density(self) -> np.ndarray:
        return outer(self.vector)


def postselect_smf(state: Ket, spec: HybridStateSpec, eta0: float = 1.0) -> HybridKet:
    """Project photon A onto l_A = 0 and relabel photon B onto the mode qubit.

    eta0 < 1 applies a per-mode coupling efficiency eta0^|l_B| to the surviving
    intensities, modeling weaker fiber coupling at higher charge.
    """
    if not 0.0 < eta0 <= 1.0:
        raise ValueError("eta0 must lie in (0, 1]")
    vec = np.zeros(4, dtype=complex)
    for (pol, la, lb), amp in state.terms.items():
        if la != 0:
            continue
        if lb == spec.ell1:
            mode = 0
        elif lb == spec.ell2:
            mode = 1
        else:
            raise BadBasis(f"surviving term has l_B={lb}, expected {spec.ell1} or {spec.ell2}")
        idx = (0 if pol == "H" else 2) + mode
        vec[idx] += amp * eta0 ** (abs(lb) / 2.0)
    prob = float(np.sum(np.abs(vec) ** 2))
    if prob < 1e-30:
        raise EmptyPostselection("no term survives the l_A = 0 projection")
    return HybridKet(vector=vec / math.sqrt(prob), ell1=spec.ell1, ell2=spec.ell2,
                     success_probability=prob)


def balance_hwp1(spectrum: OAMSpectrum, ell1: int, ell2: int) -> float:
    """Wave-plate angle that equalizes the two post-selected arm amplitudes.

    The H arm picks up c_|ell1| sin(2 theta) and the V arm c_|ell2| cos(2 theta),
    so theta = atan2(c_|ell2|, c_|ell1|) / 2.
    """
    c1 = spectrum.coefficient(ell1)
    c2 = spectrum.coefficient(ell2)
    if c1 <= 0 or c2 <= 0:
        raise Unbalanceable(f"spectrum has no weight on ell={ell1 if c1 <= 0 else ell2}")
    return 0.5 * math.atan2(c2, c1)


def apply_noise(rho: np.ndarray, channel: NoiseChannel) -> np.ndarray:
    """Trace-preserving mixing of a 4x4 density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if channel.kind == "isotropic":
        return channel.p * rho + (1.0 - channel.p) * ID4 / 4.0
    if channel.kind == "dephasing":
        return channel.p * rho + (1.0 - channel.p) * np.diag(np.diag(rho))
    return rho.copy()


def hybrid_ket(spec: HybridStateSpec, spectrum: OAMSpectrum, eta0: float = 1.0) -> HybridKet:
    """Run source -> HWP1 -> gate -> fiber projection, with the extra phase applied."""
    ket = build_input_state(spectrum)
    ket = apply_polarization(ket, hwp_jones(spec.hwp1_angle))
    ket = gate_T(ket, spec)
    hyb = postselect_smf(ket, spec, eta0=eta0)
    if spec.extra_phase != 0.0:
        u = np.diag([1.0, 1.0, np.exp(1j * spec.extra_phase), np.exp(1j * spec.extra_phase)])
        hyb.vector = u @ hyb.vector
    return hyb


def make_hybrid_density(spec: HybridStateSpec, spectrum: OAMSpectrum,
                        channel: NoiseChannel = NoiseChannel.none(),
                        eta0: float = 1.0) -> np.ndarray:
    """Full pipeline to a (possibly mixed) 4x4 hybrid density matrix."""
    return apply_noise(hybrid_ket(spec, spectrum, eta0=eta0).density(), channel)


def ideal_hybrid_ket(chi: float = 0.0) -> np.ndarray:
    """Target state (|H,m0> + e^{i chi} |V,m1>)/sqrt(2) as a 4-vector."""
    v = np.zeros(4, dtype=complex)
    v[0] = 1.0 / math.sqrt(2.0)
    v[3] = np.exp(1j * chi) / math.sqrt(2.0)
    return v


def ideal_hybrid_density(chi: float = 0.0) -> np.ndarray:
    return outer(ideal_hybrid_ket(chi))

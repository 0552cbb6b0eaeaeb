"""Projective measurements, coincidence synthesis and the CHSH test.

Photon A is projected onto equatorial polarization states
|theta_A> = (|H> + e^{i theta_A} |V>)/sqrt(2).  Photon B is projected onto
mode superpositions with a hologram, which picks out the conjugate phase, so
the effective analyzer is |theta_B> = (|m0> + e^{-i theta_B} |m1>)/sqrt(2).
With that convention the ideal hybrid state yields the joint rate
J proportional to cos^2((theta_A - theta_B)/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .qmath import outer, tensor_product

TWO_PI = 2.0 * math.pi
DEFAULT_CHSH_ANGLES = (0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4)


class Degenerate(ValueError):
    """Visibility is undefined because max + min counts vanish."""


class MissingSetting(ValueError):
    """A required (theta_A, theta_B) pair is absent from the count table."""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"count table lacks settings: {self.missing}")


class ProjectionSetting(NamedTuple):
    """Joint analyzer setting; each side is a phase angle or a projector label."""

    side_a: object
    side_b: object


def setting_key(side) -> object:
    """Canonical dictionary key: angles wrap to [0, 2pi) at 6 decimals."""
    if isinstance(side, str):
        return side
    return round(float(side) % TWO_PI, 6)


def pol_phase_ket(theta: float) -> np.ndarray:
    return np.array([1.0, np.exp(1j * theta)], dtype=complex) / math.sqrt(2.0)


def oam_phase_ket(theta: float) -> np.ndarray:
    # conjugate-mode projection of the analyzer hologram
    return np.array([1.0, np.exp(-1j * theta)], dtype=complex) / math.sqrt(2.0)


def joint_projector(theta_a: float, theta_b: float) -> np.ndarray:
    return outer(tensor_product(pol_phase_ket(theta_a), oam_phase_ket(theta_b)))


def joint_probability(rho: np.ndarray, theta_a: float, theta_b: float) -> float:
    """Tr(rho P_A x P_B) for normalized equatorial projectors, clamped to [0, 1]."""
    p = float(np.einsum("ij,ji->", joint_projector(theta_a, theta_b), rho).real)
    if p < -1e-12 or p > 1.0 + 1e-12:
        raise ValueError(f"probability {p} outside [0, 1] tolerance")
    return min(max(p, 0.0), 1.0)


@dataclass
class CountTable:
    """Coincidence counts keyed by joint setting.

    Counts are Poisson-sampled integers in sampled mode and expected values
    (floats) in exact mode.  Angles are stored wrapped to [0, 2pi) and rounded
    to 6 decimals; label settings (tomography) are stored verbatim.
    """

    entries: dict = field(default_factory=dict)
    n0: float = 0.0
    seed: int | None = None
    accidental: float = 0.0
    exact: bool = False

    def set(self, side_a, side_b, count: float):
        if count < 0:
            raise ValueError("counts must be non-negative")
        self.entries[(setting_key(side_a), setting_key(side_b))] = float(count)

    def get(self, side_a, side_b) -> float:
        return self.entries[(setting_key(side_a), setting_key(side_b))]

    def __contains__(self, setting) -> bool:
        side_a, side_b = setting
        return (setting_key(side_a), setting_key(side_b)) in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    def to_text(self) -> str:
        lines = [
            f"# n0 = {self.n0:.17g}",
            f"# seed = {'none' if self.seed is None else self.seed}",
            f"# accidental = {self.accidental:.17g}",
            f"# mode = {'exact' if self.exact else 'poisson'}",
        ]
        for (a, b), n in sorted(self.entries.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]))):
            fa = f"{a:.6f}" if isinstance(a, float) else a
            fb = f"{b:.6f}" if isinstance(b, float) else b
            lines.append(f"{fa} {fb} {n:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, path) -> "CountTable":
        table = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].partition("=")
                    key = key.strip()
                    value = value.strip()
                    if key == "n0":
                        table.n0 = float(value)
                    elif key == "seed":
                        table.seed = None if value == "none" else int(value)
                    elif key == "accidental":
                        table.accidental = float(value)
                    elif key == "mode":
                        table.exact = value == "exact"
                    continue
                ta, tb, count = line.split()
                side_a = float(ta) if "." in ta else ta
                side_b = float(tb) if "." in tb else tb
                table.set(side_a, side_b, float(count))
        return table


def coincidence_curve(rho: np.ndarray, theta_a_list, theta_b_grid, n0: float,
                      seed: int | None = None, accidental: float = 0.0,
                      exact: bool = False) -> CountTable:
    """Synthesize coincidence counts over a grid of analyzer settings.

    Mean counts are n0 * J(theta_a, theta_b) + accidental; sampled mode draws
    Poisson variates from a generator seeded with `seed`, exact mode stores
    the means themselves.
    """
    if n0 <= 0:
        raise ValueError("n0 must be positive")
    rng = None if exact else np.random.default_rng(seed)
    table = CountTable(n0=n0, seed=seed, accidental=accidental, exact=exact)
    for ta in np.atleast_1d(theta_a_list):
        for tb in np.atleast_1d(theta_b_grid):
            mean = n0 * joint_probability(rho, float(ta), float(tb)) + accidental
            table.set(float(ta), float(tb), mean if exact else float(rng.poisson(mean)))
    return table


def visibility(curve) -> float:
    """(J_max - J_min)/(J_max + J_min), averaged over the theta_A traces.

    Accepts a CountTable (grouped by the A-side setting) or a bare sequence of
    rates forming a single trace.
    """
    if isinstance(curve, CountTable):
        traces: dict = {}
        for (a, _b), n in curve.entries.items():
            traces.setdefault(a, []).append(n)
        groups = list(traces.values())
    else:
        groups = [list(np.asarray(curve, dtype=float))]
    vis = []
    for counts in groups:
        if len(counts) < 2:
            raise ValueError("need at least two samples per trace")
        top, bot = max(counts), min(counts)
        if top + bot == 0:
            raise Degenerate("flat zero trace")
        vis.append((top - bot) / (top + bot))
    return float(np.mean(vis))


def _correlation(rho, a, b):
    j = [joint_probability(rho, a, b), joint_probability(rho, a + math.pi, b + math.pi),
         joint_probability(rho, a + math.pi, b), joint_probability(rho, a, b + math.pi)]
    return (j[0] + j[1] - j[2] - j[3]) / (j[0] + j[1] + j[2] + j[3])


def chsh_s(rho: np.ndarray, angles=DEFAULT_CHSH_ANGLES) -> float:
    """CHSH parameter S = E(a,b) - E(a,b') + E(a',b) + E(a',b')."""
    a, ap, b, bp = angles
    return (_correlation(rho, a, b) - _correlation(rho, a, bp)
            + _correlation(rho, ap, b) + _correlation(rho, ap, bp))


def chsh_settings(angles=DEFAULT_CHSH_ANGLES):
    """The 16 (theta_A, theta_B) pairs needed to estimate S from counts."""
    a, ap, b, bp = angles
    pairs = []
    for x in (a, ap):
        for y in (b, bp):
            pairs += [(x, y), (x + math.pi, y + math.pi), (x + math.pi, y), (x, y + math.pi)]
    return pairs


def chsh_from_counts(table: CountTable, angles=DEFAULT_CHSH_ANGLES):
    """S and its Poisson standard error from raw coincidence counts."""
    a, ap, b, bp = angles
    missing = [(x, y) for x, y in chsh_settings(angles) if (x, y) not in table]
    if missing:
        raise MissingSetting(missing)

    def corr(x, y):
        signs = (1.0, 1.0, -1.0, -1.0)
        counts = [table.get(x, y), table.get(x + math.pi, y + math.pi),
                  table.get(x + math.pi, y), table.get(x, y + math.pi)]
        total = sum(counts)
        if total == 0:
            return 0.0, 0.0
        diff = sum(s * n for s, n in zip(signs, counts))
        var = sum(n * (s * total - diff) ** 2 for s, n in zip(signs, counts)) / total**4
        return diff / total, var

    e_ab, v_ab = corr(a, b)
    e_abp, v_abp = corr(a, bp)
    e_apb, v_apb = corr(ap, b)
    e_apbp, v_apbp = corr(ap, bp)
    s = e_ab - e_abp + e_apb + e_apbp
    return float(s), float(math.sqrt(v_ab + v_abp + v_apb + v_apbp))


def coherence_length(lambda_nm: float, delta_lambda_nm: float) -> float:
    """Two-photon coherence length lambda^2 / delta_lambda, in micrometers."""
    if lambda_nm <= 0 or delta_lambda_nm <= 0:
        raise ValueError("wavelength and bandwidth must be positive")
    return lambda_nm**2 / delta_lambda_nm / 1000.0

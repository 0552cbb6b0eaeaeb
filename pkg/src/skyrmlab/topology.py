"""Nonlocal Stokes vector field, Stokes phases and the skyrmion number.

Conditioning photon A's polarization on the detection position of photon B
gives a 2x2 matrix M(r) = sum_mn rho[(i,m),(j,n)] u_m(r) u_n(r)* built from
the mode amplitudes u of the two spatial basis modes.  The raw Stokes field
is S_i = Tr(sigma_i M); the unit-normalized field enters the surface integral

    N = (1/4pi) integral S . (dS/dx x dS/dy) dx dy,

evaluated with central finite differences and trapezoidal accumulation
(one-sided stencils at the borders, border ring excluded).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .qmath import ID2, tensor_product
from .source import LGMode, lg_amplitude

# A grid point is degenerate when the conditional intensity underflows or the
# polarization degree |S|/Tr M vanishes (e.g. maximally mixed states).
INTENSITY_FLOOR = 1e-280
DEGREE_EPS = 1e-12


class NotUnitary(ValueError):
    """The supplied polarization rotation is not unitary."""


class TooDegenerate(ValueError):
    """Too many masked points for a meaningful surface integral."""


@dataclass(frozen=True)
class GridSpec:
    """Square sampling grid: n x n points spanning [-extent, extent] waists."""

    n: int = 512
    extent: float = 6.0

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("grid must have at least 8 points per side")
        if self.extent <= 0:
            raise ValueError("extent must be positive")

    def axis(self, waist: float) -> np.ndarray:
        return np.linspace(-self.extent * waist, self.extent * waist, self.n)


@dataclass
class StokesField:
    """Sampled Stokes texture with grid metadata.

    s is the unit-normalized field (zero at masked points), raw the
    unnormalized Tr(sigma_i M) field, trm the conditional intensity.
    """

    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    raw: np.ndarray
    trm: np.ndarray
    mask: np.ndarray
    ell1: int
    ell2: int
    waist: float
    extent: float

    @property
    def n(self) -> int:
        return self.x.size

    def masked_fraction(self) -> float:
        return float(np.mean(self.mask))


class TopologyPrediction(NamedTuple):
    n: int
    polarity: int
    vorticity: int


@dataclass
class TopologyReport:
    """Skyrmion numbers and grid diagnostics for one subspace."""

    skyrmion_number: float
    skyrmion_number_raw: float
    predicted_n: int
    polarity: int
    vorticity: int
    grid_n: int
    extent: float
    waist: float
    discarded_points: int

    def to_text(self) -> str:
        rows = [
            ("ell1_ell2", "see field header"),
            ("skyrmion_number", f"{self.skyrmion_number:.17g}"),
            ("skyrmion_number_raw", f"{self.skyrmion_number_raw:.17g}"),
            ("predicted_n", str(self.predicted_n)),
            ("polarity", str(self.polarity)),
            ("vorticity", str(self.vorticity)),
            ("grid_n", str(self.grid_n)),
            ("extent", f"{self.extent:.17g}"),
            ("waist", f"{self.waist:.17g}"),
            ("discarded_points", str(self.discarded_points)),
        ]
        return "\n".join(f"{k} = {v}" for k, v in rows) + "\n"


def stokes_vectors(rho: np.ndarray, ell1: int, ell2: int, waist: float, x, y):
    """Raw Stokes 3-vectors and conditional intensity at arbitrary points.

    x and y may be any broadcastable arrays (waist units times `waist`).
    Returns (raw S with a trailing axis of size 3, Tr M).
    """
    rho = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    phi = np.arctan2(y, x)
    u = np.stack([lg_amplitude(LGMode(ell1, waist), r, phi),
                  lg_amplitude(LGMode(ell2, waist), r, phi)])
    # M[i,j] = sum_mn rho[i,m,j,n] u_m u_n*
    m = np.einsum("imjn,m...,n...->ij...", rho, u, u.conj())
    sx = 2.0 * m[0, 1].real
    sy = -2.0 * m[0, 1].imag
    sz = (m[0, 0] - m[1, 1]).real
    trm = (m[0, 0] + m[1, 1]).real
    return np.stack([sx, sy, sz], axis=-1), trm


def stokes_field(rho: np.ndarray, spec, waist: float = 1.0,
                 grid: GridSpec = GridSpec()) -> StokesField:
    """Sample the conditional Stokes texture of a hybrid state on a grid.

    `spec` provides the photon-B mode indices (anything with ell1/ell2
    attributes, e.g. a HybridStateSpec).
    """
    if waist <= 0:
        raise ValueError("waist must be positive")
    ax = grid.axis(waist)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    raw, trm = stokes_vectors(rho, spec.ell1, spec.ell2, waist, X, Y)
    snorm = np.linalg.norm(raw, axis=-1)
    mask = (trm < INTENSITY_FLOOR) | (snorm <= DEGREE_EPS * np.maximum(trm, INTENSITY_FLOOR))
    safe = np.where(mask, 1.0, snorm)
    s = raw / safe[..., None]
    s[mask] = 0.0
    return StokesField(x=ax, y=ax, s=s, raw=raw, trm=trm, mask=mask,
                       ell1=spec.ell1, ell2=spec.ell2, waist=waist, extent=grid.extent)


def skyrmion_number(field: StokesField, raw: bool = False) -> float:
    """Surface integral (1/4pi) S . (dxS x dyS) over the sampled window.

    Central differences in the interior, one-sided at the borders; masked
    points and the border ring contribute zero.  Raises TooDegenerate when
    at least half the grid is masked.
    """
    if field.masked_fraction() >= 0.5:
        raise TooDegenerate(f"{field.masked_fraction():.0%} of grid points are masked")
    s = field.raw if raw else field.s
    s = np.where(field.mask[..., None], 0.0, s)
    dx = float(field.x[1] - field.x[0])
    ds_dx = np.gradient(s, dx, axis=0)
    ds_dy = np.gradient(s, dx, axis=1)
    integrand = np.einsum("xyk,xyk->xy", s, np.cross(ds_dx, ds_dy))
    integrand[field.mask] = 0.0
    integrand[0, :] = integrand[-1, :] = 0.0
    integrand[:, 0] = integrand[:, -1] = 0.0
    return float(np.trapezoid(np.trapezoid(integrand, dx=dx, axis=1), dx=dx) / (4.0 * math.pi))


def stokes_phases(field: StokesField):
    """Stokes phases phi_xy, phi_yz, phi_zx via atan2, masked like the field."""
    sx, sy, sz = field.s[..., 0], field.s[..., 1], field.s[..., 2]
    return {
        "phi_xy": np.arctan2(sy, sx),
        "phi_yz": np.arctan2(sz, sy),
        "phi_zx": np.arctan2(sx, sz),
    }


def predict_topology(ell1: int, ell2: int) -> TopologyPrediction:
    """Analytic skyrmion number N = sgn(|l1| - |l2|) (l1 - l2)."""
    if ell1 == ell2:
        raise ValueError("ell1 and ell2 must differ")
    polarity = int(np.sign(abs(ell1) - abs(ell2)))
    vorticity = ell1 - ell2
    return TopologyPrediction(n=polarity * vorticity, polarity=polarity, vorticity=vorticity)


def basis_rotation(rho: np.ndarray, u_pol: np.ndarray) -> np.ndarray:
    """Rotate the polarization basis: (U x I) rho (U x I)^dagger."""
    u_pol = np.asarray(u_pol, dtype=complex)
    if u_pol.shape != (2, 2) or np.max(np.abs(u_pol.conj().T @ u_pol - ID2)) > 1e-10:
        raise NotUnitary("u_pol must be a 2x2 unitary")
    big = tensor_product(u_pol, ID2)
    return big @ np.asarray(rho, dtype=complex) @ big.conj().T


def topology_report(field: StokesField) -> TopologyReport:
    pred = predict_topology(field.ell1, field.ell2)
    return TopologyReport(
        skyrmion_number=skyrmion_number(field),
        skyrmion_number_raw=skyrmion_number(field, raw=True),
        predicted_n=pred.n,
        polarity=pred.polarity,
        vorticity=pred.vorticity,
        grid_n=field.n,
        extent=field.extent,
        waist=field.waist,
        discarded_points=int(np.sum(field.mask)),
    )


def _header_lines(field: StokesField) -> list[str]:
    return [
        f"# n = {field.n}",
        f"# extent = {field.extent:.17g}",
        f"# waist = {field.waist:.17g}",
        f"# ell1 = {field.ell1}",
        f"# ell2 = {field.ell2}",
    ]


def field_to_text(field: StokesField) -> str:
    """Flat text grid: header then rows "x y Sx Sy Sz mask" (full precision)."""
    lines = _header_lines(field)
    for i in range(field.n):
        for j in range(field.n):
            sx, sy, sz = field.s[i, j]
            lines.append(f"{field.x[i]:.17g} {field.y[j]:.17g} "
                         f"{sx:.17g} {sy:.17g} {sz:.17g} {int(field.mask[i, j])}")
    return "\n".join(lines) + "\n"


def field_from_text(text: str) -> StokesField:
    """Rebuild a StokesField from `field_to_text` output (raw = normalized)."""
    meta = {}
    rows = []
    for line in text.strip().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = value.strip()
            continue
        rows.append(line.split())
    n = int(meta["n"])
    if len(rows) != n * n:
        raise ValueError(f"expected {n * n} grid rows, got {len(rows)}")
    data = np.array(rows, dtype=float).reshape(n, n, 6)
    x = data[:, 0, 0].copy()
    y = data[0, :, 1].copy()
    s = data[..., 2:5].copy()
    mask = data[..., 5] > 0.5
    trm = np.where(mask, 0.0, 1.0)
    return StokesField(x=x, y=y, s=s, raw=s.copy(), trm=trm, mask=mask,
                       ell1=int(meta["ell1"]), ell2=int(meta["ell2"]),
                       waist=float(meta["waist"]), extent=float(meta["extent"]))


def phase_grid_to_text(field: StokesField, phase: np.ndarray, name: str) -> str:
    """Flat text grid for one Stokes phase: rows "x y phi mask"."""
    lines = _header_lines(field) + [f"# phase = {name}"]
    for i in range(field.n):
        for j in range(field.n):
            lines.append(f"{field.x[i]:.17g} {field.y[j]:.17g} "
                         f"{phase[i, j]:.17g} {int(field.mask[i, j])}")
    return "\n".join(lines) + "\n"

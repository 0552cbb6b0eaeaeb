"""Overcomplete two-qubit state tomography and state-quality metrics.

Both photons are probed with the six-state set {|0>, |1>, |+>, |+i>, |->, |-i>}
(36 joint settings).  Reconstruction minimizes the squared error between
block-normalized counts and Born-rule probabilities over the manifold of
physical states, parameterized through a Cholesky-like factor so the estimate
is positive semidefinite with unit trace by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .measurement import CountTable
from .qmath import gellmann_basis, outer, psd_sqrt, tensor_product, SIGMA_Y

LABELS = ("0", "1", "+", "+i", "-", "-i")
_K0 = np.array([1, 0], dtype=complex)
_K1 = np.array([0, 1], dtype=complex)
QUBIT_KETS = {
    "0": _K0,
    "1": _K1,
    "+": (_K0 + _K1) / math.sqrt(2),
    "-": (_K0 - _K1) / math.sqrt(2),
    "+i": (_K0 + 1j * _K1) / math.sqrt(2),
    "-i": (_K0 - 1j * _K1) / math.sqrt(2),
}
_BASIS_OF = {"0": "z", "1": "z", "+": "x", "-": "x", "+i": "y", "-i": "y"}

SETTINGS = tuple((a, b) for a in LABELS for b in LABELS)
_PROJ = np.stack([outer(tensor_product(QUBIT_KETS[a], QUBIT_KETS[b])) for a, b in SETTINGS])
# flattened so model probabilities are a single mat-vec: p_s = Re(M row . vec(rho))
_PROJ_FLAT = _PROJ.transpose(0, 2, 1).reshape(len(SETTINGS), 16)
_GAMMA = gellmann_basis()
_A_LIN = np.array([[np.trace(p @ g).real for g in _GAMMA] for p in _PROJ])
_BLOCKS = {}
for _i, (_a, _b) in enumerate(SETTINGS):
    _BLOCKS.setdefault((_BASIS_OF[_a], _BASIS_OF[_b]), []).append(_i)
_BLOCK_INDEX = [np.array(v) for v in _BLOCKS.values()]
_TRIL = np.tril_indices(4, -1)

MAX_EVALUATIONS = 200_000
_RESTARTS = 5
_IMPROVEMENT_TOL = 1e-12


class NoCoherence(ValueError):
    """The reconstructed state carries no usable coherence for phase readout."""


@dataclass
class ReconstructionResult:
    """Physical state estimate plus the derived quality metrics."""

    rho_hat: np.ndarray
    purity: float
    linear_entropy: float
    concurrence: float
    fidelity: float | None = None
    relative_phase: float | None = None
    gellmann_coefficients: np.ndarray = field(default_factory=lambda: np.zeros(16))
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True


def tomography_settings():
    """The 36 joint projector label pairs, A label first."""
    return list(SETTINGS)


def born_probabilities(rho: np.ndarray) -> np.ndarray:
    """Born-rule probabilities for all 36 settings."""
    return (_PROJ_FLAT @ np.asarray(rho, dtype=complex).ravel()).real


def simulate_tomography(rho: np.ndarray, n0: float, seed: int | None = None,
                        exact: bool = False, accidental: float = 0.0) -> CountTable:
    """Counts with mean n0 * Tr(rho P_a x P_b) per setting (plus accidentals)."""
    if n0 <= 0:
        raise ValueError("n0 must be positive")
    means = n0 * np.clip(born_probabilities(rho), 0.0, None) + accidental
    table = CountTable(n0=n0, seed=seed, accidental=accidental, exact=exact)
    values = means if exact else np.random.default_rng(seed).poisson(means).astype(float)
    for (a, b), v in zip(SETTINGS, values):
        table.set(a, b, float(v))
    return table


def _counts_vector(table: CountTable) -> np.ndarray:
    missing = [s for s in SETTINGS if s not in table]
    if missing:
        raise ValueError(f"count table lacks tomography settings: {missing[:4]}...")
    return np.array([table.get(a, b) for a, b in SETTINGS], dtype=float)


def _block_normalize(counts: np.ndarray) -> np.ndarray:
    out = np.zeros_like(counts)
    for idx in _BLOCK_INDEX:
        total = counts[idx].sum()
        if total <= 0:
            raise ValueError("a measurement block has zero total counts")
        out[idx] = counts[idx] / total
    return out


def _params_to_rho(t: np.ndarray) -> np.ndarray:
    T = np.zeros((4, 4), dtype=complex)
    T[np.diag_indices(4)] = t[:4]
    T[_TRIL] = t[4:10] + 1j * t[10:16]
    rho = T @ T.conj().T
    return rho / np.trace(rho).real


def _rho_to_params(rho: np.ndarray) -> np.ndarray:
    T = np.linalg.cholesky(rho + 1e-10 * np.eye(4))
    t = np.empty(16)
    t[:4] = np.real(np.diag(T))
    t[4:10] = np.real(T[_TRIL])
    t[10:16] = np.imag(T[_TRIL])
    return t


def _linear_inversion(normalized: np.ndarray) -> np.ndarray:
    b = np.linalg.lstsq(_A_LIN, normalized, rcond=None)[0]
    rho = sum(bi * g for bi, g in zip(b, _GAMMA))
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        return np.eye(4, dtype=complex) / 4.0
    rho = (v * w) @ v.conj().T
    return rho / np.trace(rho).real


def mle_reconstruct(table: CountTable, target: np.ndarray | None = None,
                    seed: int = 0) -> ReconstructionResult:
    """Least-squares maximum-likelihood state reconstruction.

    Counts are normalized per complete measurement block (3 x 3 basis choices,
    4 outcomes each) to absorb the unknown pair rate.  A linear-inversion
    estimate seeds a Nelder-Mead search over the 16 Cholesky parameters; up to
    4 random restarts follow, stopping once the best residual no longer
    improves by more than 1e-12.  If `target` (a density matrix or pure-state
    vector) is given the fidelity against it is reported.
    """
    counts = _counts_vector(table)
    if counts.sum() <= 0:
        raise ValueError("count table is empty")
    normalized = _block_normalize(counts)

    def objective(t):
        return float(np.sum((normalized - (_PROJ_FLAT @ _params_to_rho(t).ravel()).real) ** 2))

    x0 = _rho_to_params(_linear_inversion(normalized))
    rng = np.random.default_rng(seed)
    best = None
    evaluations = 0
    converged = False
    for attempt in range(_RESTARTS):
        start = x0 if attempt == 0 else rng.normal(scale=0.5, size=16)
        budget = min(MAX_EVALUATIONS - evaluations, 40_000 if attempt == 0 else 15_000)
        if budget <= 0:
            break
        res = minimize(objective, start, method="Nelder-Mead",
                       options=dict(maxfev=budget, maxiter=budget,
                                    fatol=_IMPROVEMENT_TOL, xatol=1e-8))
        evaluations += res.nfev
        converged = converged or bool(res.success)
        if best is None:
            best = res
            if best.fun < _IMPROVEMENT_TOL:
                break  # restarts cannot improve by more than the tolerance
            continue
        if res.fun < best.fun:
            improvement = best.fun - res.fun
            best = res
            if improvement < _IMPROVEMENT_TOL:
                break
        else:
            break

    rho_hat = _params_to_rho(best.x)
    rho_hat = 0.5 * (rho_hat + rho_hat.conj().T)
    gm = np.array([np.trace(rho_hat @ g).real / np.trace(g @ g).real for g in _GAMMA])
    try:
        phase = extract_relative_phase(rho_hat)
    except NoCoherence:
        phase = None
    fid = None
    if target is not None:
        target = np.asarray(target, dtype=complex)
        if target.ndim == 1:
            target = outer(target)
        fid = fidelity(rho_hat, target)
    gamma = purity(rho_hat)
    return ReconstructionResult(
        rho_hat=rho_hat,
        purity=gamma,
        linear_entropy=1.0 - gamma,
        concurrence=concurrence(rho_hat),
        fidelity=fid,
        relative_phase=phase,
        gellmann_coefficients=gm,
        iterations=evaluations,
        residual=float(best.fun),
        converged=converged,
    )


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, in [0, 1]."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    sr = psd_sqrt(rho)
    inner = psd_sqrt(sr @ sigma @ sr)
    return float(np.clip(np.trace(inner).real ** 2, 0.0, 1.0))


def purity(rho: np.ndarray) -> float:
    """Tr(rho^2)."""
    rho = np.asarray(rho, dtype=complex)
    return float(np.einsum("ij,ji->", rho, rho).real)


def linear_entropy(rho: np.ndarray) -> float:
    return 1.0 - purity(rho)


def spin_flip(rho: np.ndarray) -> np.ndarray:
    """rho_tilde = (sigma_y x sigma_y) rho* (sigma_y x sigma_y)."""
    yy = tensor_product(SIGMA_Y, SIGMA_Y)
    return yy @ np.conj(rho) @ yy


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence max(0, l1 - l2 - l3 - l4).

    The l_j are the descending eigenvalues of R = sqrt(sqrt(rho) rho_tilde
    sqrt(rho)).
    """
    rho = np.asarray(rho, dtype=complex)
    sr = psd_sqrt(rho)
    r_op = psd_sqrt(sr @ spin_flip(rho) @ sr, neg_tol=1e-7)
    lam = np.sort(np.linalg.eigvalsh(r_op))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def concurrence_from_product_spectrum(rho: np.ndarray) -> float:
    """Equivalent concurrence from the eigenvalues of rho rho_tilde.

    Independent route used to cross-check `concurrence`; the l_j are the
    square roots of the (real, non-negative) spectrum of rho rho_tilde.
    """
    rho = np.asarray(rho, dtype=complex)
    mu = np.linalg.eigvals(rho @ spin_flip(rho))
    lam = np.sort(np.sqrt(np.clip(mu.real, 0.0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def extract_relative_phase(rho: np.ndarray) -> float:
    """Phase of the m1-arm amplitude relative to the m0 arm.

    Reads the coherence between the |V,m1> and |H,m0> basis states; raises
    NoCoherence when its magnitude is below 1e-6 (fully dephased states).
    """
    rho = np.asarray(rho, dtype=complex)
    coh = rho[3, 0]
    if abs(coh) < 1e-6:
        raise NoCoherence("|<11|rho|00>| coherence below 1e-6")
    return float(math.atan2(coh.imag, coh.real))


def rho_to_text(rho: np.ndarray) -> str:
    """Row-major 16-line "re im" block with 12 significant digits."""
    lines = [f"{z.real:.12g} {z.imag:.12g}" for z in np.asarray(rho, dtype=complex).ravel()]
    return "\n".join(lines) + "\n"


def rho_from_text(text: str) -> np.ndarray:
    values = [complex(float(a), float(b)) for a, b in
              (line.split() for line in text.strip().splitlines())]
    if len(values) != 16:
        raise ValueError(f"expected 16 entries, got {len(values)}")
    return np.array(values, dtype=complex).reshape(4, 4)


def format_report(result: ReconstructionResult) -> str:
    """Key-value summary of a reconstruction."""
    rows = [
        ("purity", f"{result.purity:.6f}"),
        ("linear_entropy", f"{result.linear_entropy:.6f}"),
        ("concurrence", f"{result.concurrence:.6f}"),
        ("fidelity", "n/a" if result.fidelity is None else f"{result.fidelity:.6f}"),
        ("relative_phase", "n/a" if result.relative_phase is None
         else f"{result.relative_phase:.6f}"),
        ("iterations", str(result.iterations)),
        ("residual", f"{result.residual:.6e}"),
        ("converged", str(result.converged).lower()),
    ]
    return "\n".join(f"{k} = {v}" for k, v in rows) + "\n"

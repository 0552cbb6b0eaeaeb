"""Dense complex linear algebra helpers for 2- and 4-dimensional Hilbert spaces.

Everything operates on plain numpy arrays.  Basis conventions used across the
package: |H> = (1,0) before |V> = (0,1) in polarization space, and the first
spatial mode before the second, so a two-qubit hybrid vector is ordered
(H,m0), (H,m1), (V,m0), (V,m1).
"""

from __future__ import annotations

import itertools
import math

import numpy as np

HERMITIAN_ATOL = 1e-10

ID2 = np.eye(2, dtype=complex)
ID4 = np.eye(4, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

KET_H = np.array([1, 0], dtype=complex)
KET_V = np.array([0, 1], dtype=complex)


class NotHermitian(ValueError):
    """Raised when an operation requires a Hermitian matrix."""


class NotPSD(ValueError):
    """Raised when an operation requires a positive semidefinite matrix."""


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with row-major block ordering."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def is_hermitian(m: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= atol)


def hermitian_eig(m: np.ndarray, atol: float = HERMITIAN_ATOL):
    """Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.

    Returns (eigenvalues, eigenvectors) with eigenvectors in columns, so that
    m = V diag(w) V^dagger.  Raises NotHermitian if the symmetry check fails.
    """
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, atol):
        raise NotHermitian(f"matrix deviates from Hermiticity by more than {atol}")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def psd_sqrt(m: np.ndarray, neg_tol: float = 1e-8) -> np.ndarray:
    """Hermitian square root of a positive semidefinite matrix.

    Eigenvalues in [-neg_tol, 0) are clamped to zero; anything below -neg_tol
    raises NotPSD.  Clamping is needed because maximum-likelihood outputs sit
    on the PSD boundary.
    """
    w, v = hermitian_eig(m)
    if np.min(w) < -neg_tol:
        raise NotPSD(f"eigenvalue {np.min(w):.3e} below -{neg_tol:.0e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def gellmann_basis() -> list[np.ndarray]:
    """Generalized Gell-Mann operator basis for dimension 4.

    Returns [G0, G1, ..., G15] where G0 is the identity and the remaining 15
    are traceless Hermitian generators with Tr(Gm Gn) = 2 delta_mn.
    """
    mats = [ID4.copy()]
    dim = 4
    for j, k in itertools.combinations(range(dim), 2):
        m = np.zeros((dim, dim), dtype=complex)
        m[j, k] = m[k, j] = 1.0
        mats.append(m)
    for j, k in itertools.combinations(range(dim), 2):
        m = np.zeros((dim, dim), dtype=complex)
        m[j, k] = -1j
        m[k, j] = 1j
        mats.append(m)
    for level in range(1, dim):
        d = np.zeros(dim)
        d[:level] = 1.0
        d[level] = -level
        mats.append(np.diag(d).astype(complex) * math.sqrt(2.0 / (level * (level + 1))))
    return mats


def outer(ket: np.ndarray) -> np.ndarray:
    """Projector |ket><ket| (ket need not be normalized)."""
    k = np.asarray(ket, dtype=complex)
    return np.outer(k, k.conj())


def check_density(rho: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    """Validate trace-1 Hermitian PSD structure; returns rho as complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if not is_hermitian(rho, 1e-8):
        raise NotHermitian("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-6:
        raise ValueError(f"density matrix trace {tr} != 1")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -max(atol, 1e-7):
        raise NotPSD("density matrix has a significantly negative eigenvalue")
    return rho

import numpy as np
import pytest

from skyrmlab.qmath import (ID2, ID4, SIGMA_X, SIGMA_Y, SIGMA_Z, NotHermitian,
                            NotPSD, gellmann_basis, hermitian_eig, psd_sqrt,
                            tensor_product)


def random_hermitian(rng, dim=4):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (m + m.conj().T)


def random_psd(rng, dim=4):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return m @ m.conj().T


class TestTensorProduct:
    def test_identity(self):
        assert np.array_equal(tensor_product(ID2, ID2), ID4)

    def test_spin_flip_construction(self):
        # sigma_y x sigma_y conjugation used in the concurrence spin flip
        yy = tensor_product(SIGMA_Y, SIGMA_Y)
        bell = np.zeros(4, complex)
        bell[0] = bell[3] = 1 / np.sqrt(2)
        rho = np.outer(bell, bell.conj())
        rho_tilde = yy @ rho.conj() @ yy
        assert np.allclose(rho_tilde, rho, atol=1e-14)

    def test_involution(self):
        m = tensor_product(SIGMA_X, ID2)
        assert np.allclose(m @ m, ID4, atol=0)

    def test_associativity_binary_fractions(self):
        a = np.array([[0.5, 0.25], [1.5, -0.75]], complex)
        b = np.array([[2.0, 0.125], [-0.5, 1.0]], complex)
        c = np.array([[0.25, -1.5], [0.0, 0.5]], complex)
        left = tensor_product(tensor_product(a, b), c)
        right = tensor_product(a, tensor_product(b, c))
        assert np.array_equal(left, right)


class TestHermitianEig:
    def test_sigma_z(self):
        w, _ = hermitian_eig(SIGMA_Z)
        assert np.allclose(w, [1.0, -1.0], atol=0)

    def test_maximally_mixed(self):
        w, _ = hermitian_eig(ID4 / 4)
        assert np.allclose(w, [0.25] * 4, atol=1e-15)

    def test_round_trip(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            m = random_hermitian(rng)
            w, v = hermitian_eig(m)
            assert np.max(np.abs(m - (v * w) @ v.conj().T)) < 1e-10
            assert np.all(np.diff(w) <= 1e-12)

    def test_trace_preservation(self):
        rng = np.random.default_rng(12)
        m = random_hermitian(rng)
        w, _ = hermitian_eig(m)
        assert abs(w.sum() - np.trace(m).real) < 1e-10

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            hermitian_eig(np.array([[0, 1], [0, 0]], complex))


class TestPsdSqrt:
    def test_identity(self):
        assert np.allclose(psd_sqrt(ID4), ID4, atol=1e-12)

    def test_diagonal(self):
        m = np.diag([4.0, 1.0, 0.0, 0.0]).astype(complex)
        assert np.allclose(psd_sqrt(m), np.diag([2.0, 1.0, 0.0, 0.0]), atol=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            m = random_psd(rng)
            s = psd_sqrt(m)
            assert np.max(np.abs(s @ s - m)) < 1e-9
            assert np.max(np.abs(s - s.conj().T)) < 1e-10

    def test_fourth_root(self):
        rng = np.random.default_rng(14)
        m = random_psd(rng)
        m /= np.trace(m).real
        q = psd_sqrt(psd_sqrt(m))
        assert np.max(np.abs((q @ q) @ (q @ q) - m)) < 1e-8

    def test_not_psd(self):
        with pytest.raises(NotPSD):
            psd_sqrt(np.diag([1.0, -0.5]).astype(complex))

    def test_boundary_clamp(self):
        m = np.diag([1.0, -5e-9]).astype(complex)
        s = psd_sqrt(m)
        assert np.allclose(s, np.diag([1.0, 0.0]), atol=1e-8)


class TestGellmannBasis:
    def test_identity_first(self):
        basis = gellmann_basis()
        assert len(basis) == 16
        assert np.array_equal(basis[0], ID4)

    def test_orthogonality(self):
        basis = gellmann_basis()
        for m in range(1, 16):
            for n in range(1, 16):
                expected = 2.0 if m == n else 0.0
                assert abs(np.trace(basis[m] @ basis[n]).real - expected) < 1e-12

    def test_traceless_hermitian(self):
        for g in gellmann_basis()[1:]:
            assert abs(np.trace(g)) < 1e-12
            assert np.max(np.abs(g - g.conj().T)) < 1e-12

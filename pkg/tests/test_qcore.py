import math

import numpy as np
import pytest

from dephaskit.errors import ContractViolationError, DimensionMismatchError, ValidationError
from dephaskit.qcore import (
    ID2,
    KET_H,
    KET_P,
    KET_PHI_PLUS,
    KET_V,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityMatrix,
    concurrence,
    hermitian_eig,
    partial_trace,
    partial_transpose,
    trace_distance,
    von_neumann_entropy,
)
from conftest import random_density, random_hermitian, random_unitary


def binary_entropy(p):
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def dephased_bell(k):
    """Bell projector with the coherence corner scaled by k."""
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[3, 3] = 0.5
    m[0, 3] = np.conj(k) / 2
    m[3, 0] = k / 2
    return DensityMatrix(m)


class TestHermitianEig:
    def test_pauli_z(self):
        eig = hermitian_eig(PAULI_Z)
        assert np.allclose(eig.eigenvalues, [1.0, -1.0])

    def test_maximally_mixed(self):
        eig = hermitian_eig(ID2 / 2)
        assert np.allclose(eig.eigenvalues, [0.5, 0.5])

    def test_bloch_x_state(self):
        # characteristic polynomial of (I + 0.6 X)/2 gives (1 +/- 0.6)/2
        eig = hermitian_eig((ID2 + 0.6 * PAULI_X) / 2)
        assert np.allclose(eig.eigenvalues, [0.8, 0.2], atol=1e-12)

    def test_reconstruction_and_unitarity(self, rng):
        for dim in (2, 4):
            for _ in range(50):
                a = random_hermitian(rng, dim)
                eig = hermitian_eig(a)
                v, w = eig.eigenvectors, eig.eigenvalues
                assert np.all(np.diff(w) <= 1e-14)
                assert np.max(np.abs((v * w) @ v.conj().T - a)) < 1e-10
                assert np.max(np.abs(v.conj().T @ v - np.eye(dim))) < 1e-10

    def test_rejects_non_hermitian(self):
        with pytest.raises(ContractViolationError):
            hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


class TestTraceDistance:
    def test_orthogonal_pure_states(self):
        assert trace_distance(DensityMatrix.from_ket(KET_H), DensityMatrix.from_ket(KET_V)) == pytest.approx(1.0)

    def test_equal_states(self, rng):
        rho = DensityMatrix(random_density(rng, 2))
        assert trace_distance(rho, rho) == 0.0

    def test_plus_versus_mixed(self):
        # difference (|+><+| - I/2) has eigenvalues +/- 0.5 by the eig oracle
        plus = DensityMatrix.from_ket(KET_P)
        mixed = DensityMatrix.maximally_mixed(2)
        eig = hermitian_eig(plus.matrix - mixed.matrix)
        assert np.allclose(eig.eigenvalues, [0.5, -0.5])
        assert trace_distance(plus, mixed) == pytest.approx(0.5, abs=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            trace_distance(DensityMatrix.maximally_mixed(2), DensityMatrix.maximally_mixed(4))

    def test_range_symmetry_triangle(self, rng):
        for _ in range(100):
            a = DensityMatrix(random_density(rng, 2))
            b = DensityMatrix(random_density(rng, 2))
            c = DensityMatrix(random_density(rng, 2))
            dab, dba = trace_distance(a, b), trace_distance(b, a)
            assert dab == pytest.approx(dba, abs=1e-14)
            assert -1e-12 <= dab <= 1.0 + 1e-12
            assert dab <= trace_distance(a, c) + trace_distance(c, b) + 1e-9


class TestPartialTrace:
    def test_bell_marginal(self):
        bell = DensityMatrix.from_ket(KET_PHI_PLUS)
        assert np.allclose(partial_trace(bell, 0).matrix, ID2 / 2)

    def test_product_state(self):
        rho = DensityMatrix(np.kron(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])).astype(complex))
        assert np.allclose(partial_trace(rho, 1).matrix, np.diag([0.0, 1.0]))

    def test_dephased_bell_marginal(self):
        # index contraction by hand: sum_k rho[(i,k),(j,k)]
        rho = dephased_bell(0.5)
        expected = np.zeros((2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    expected[i, j] += rho.matrix[2 * i + k, 2 * j + k]
        assert np.allclose(expected, ID2 / 2)
        assert np.allclose(partial_trace(rho, 0).matrix, expected)

    def test_trace_preserved(self, rng):
        for _ in range(20):
            rho = DensityMatrix(random_density(rng, 4))
            for keep in (0, 1):
                assert np.trace(partial_trace(rho, keep).matrix) == pytest.approx(1.0)


class TestPartialTranspose:
    def test_diagonal_fixed(self):
        d = np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex)
        assert np.array_equal(partial_transpose(d), d)

    def test_bell_spectrum(self):
        pt = partial_transpose(DensityMatrix.from_ket(KET_PHI_PLUS).matrix)
        w = np.sort(np.linalg.eigvalsh(pt))
        assert np.allclose(w, [-0.5, 0.5, 0.5, 0.5])

    def test_involution_trace_hermiticity(self, rng):
        for _ in range(1000):
            m = random_hermitian(rng, 4)
            pt = partial_transpose(m)
            assert np.max(np.abs(partial_transpose(pt) - m)) < 1e-12
            assert np.trace(pt) == pytest.approx(np.trace(m).real)
            assert np.max(np.abs(pt - pt.conj().T)) < 1e-12


class TestEntropy:
    def test_pure_state(self):
        assert von_neumann_entropy(DensityMatrix.from_ket(KET_H)) == 0.0

    def test_maximally_mixed(self):
        assert von_neumann_entropy(DensityMatrix.maximally_mixed(2)) == pytest.approx(1.0)

    def test_binary_entropy_oracle(self):
        rho = DensityMatrix(np.diag([0.8, 0.2]).astype(complex))
        assert von_neumann_entropy(rho) == pytest.approx(binary_entropy(0.8), abs=1e-12)
        assert binary_entropy(0.8) == pytest.approx(0.7219280948873623)

    def test_additive_on_products(self, rng):
        for _ in range(20):
            a = DensityMatrix(random_density(rng, 2))
            b = DensityMatrix(random_density(rng, 2))
            ab = DensityMatrix(np.kron(a.matrix, b.matrix))
            assert von_neumann_entropy(ab) == pytest.approx(
                von_neumann_entropy(a) + von_neumann_entropy(b), abs=1e-9
            )

    def test_bounded_by_log_dim(self, rng):
        for _ in range(20):
            rho = DensityMatrix(random_density(rng, 4))
            assert von_neumann_entropy(rho) <= 2.0 + 1e-12


def brute_force_concurrence(rho):
    """Direct spin-flip eigenvalue recipe, kept independent of the library path."""
    yy = np.kron(PAULI_Y, PAULI_Y)
    r = rho @ yy @ rho.conj() @ yy
    e = np.sort(np.abs(np.real(np.linalg.eigvals(r))))[::-1]
    lam = np.sqrt(e)
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


class TestConcurrence:
    def test_bell_state(self):
        assert concurrence(DensityMatrix.from_ket(KET_PHI_PLUS)) == pytest.approx(1.0, abs=1e-12)

    def test_product_state(self):
        rho = DensityMatrix(np.kron(np.diag([1.0, 0.0]), np.diag([1.0, 0.0])).astype(complex))
        assert concurrence(rho) == pytest.approx(0.0, abs=1e-12)

    def test_dephased_bell(self):
        rho = dephased_bell(0.3 * np.exp(0.4j))
        assert brute_force_concurrence(rho.matrix) == pytest.approx(0.3, abs=1e-7)
        assert concurrence(rho) == pytest.approx(0.3, abs=1e-12)

    def test_matches_brute_force(self, rng):
        for _ in range(50):
            rho = DensityMatrix(random_density(rng, 4))
            assert concurrence(rho) == pytest.approx(brute_force_concurrence(rho.matrix), abs=1e-7)

    def test_local_unitary_invariance(self, rng):
        for _ in range(100):
            rho = DensityMatrix(random_density(rng, 4))
            u = np.kron(random_unitary(rng, 2), random_unitary(rng, 2))
            rotated = DensityMatrix(u @ rho.matrix @ u.conj().T)
            assert concurrence(rotated) == pytest.approx(concurrence(rho), abs=1e-9)


class TestDensityMatrixValidation:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            DensityMatrix(np.array([[0.5, 0.5], [0.0, 0.5]], dtype=complex))

    def test_rejects_bad_trace(self):
        with pytest.raises(ValidationError):
            DensityMatrix(np.eye(2, dtype=complex))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValidationError):
            DensityMatrix(np.diag([1.5, -0.5]).astype(complex))

    def test_rejects_odd_dims(self):
        with pytest.raises(ValidationError):
            DensityMatrix(np.eye(3, dtype=complex) / 3)

"""Complex Hermitian linear algebra and two-qubit quantum-information primitives.

All matrices are small (2x2 or 4x4) and dense.  Two-qubit objects use the
basis ordering |HH>, |HV>, |VH>, |VV>.  Entropies are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, DimensionMismatchError, ValidationError

HERM_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
# roundoff floor for eigenvalue clamping in entropy / PSD checks
EIG_CLAMP = 1e-10

ID2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

KET_H = np.array([1, 0], dtype=complex)
KET_V = np.array([0, 1], dtype=complex)
KET_P = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_M = np.array([1, -1], dtype=complex) / np.sqrt(2)
KET_R = np.array([1, 1j], dtype=complex) / np.sqrt(2)
KET_L = np.array([1, -1j], dtype=complex) / np.sqrt(2)

# |Phi+> = (|HH> + |VV>)/sqrt(2)
KET_PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def herm_deviation(a: np.ndarray) -> float:
    """Max entrywise deviation from Hermiticity."""
    return float(np.max(np.abs(a - dagger(a))))


def projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density operator (dim 2 or 4).

    Hermitian within 1e-12, unit trace within 1e-12, eigenvalues >= -1e-10.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
            raise ValidationError(f"density matrix must be 2x2 or 4x4, got shape {m.shape}")
        if herm_deviation(m) > HERM_TOL:
            raise ValidationError(f"density matrix not Hermitian: deviation {herm_deviation(m):.3e}")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise ValidationError(f"density matrix trace {np.trace(m)} != 1")
        w = np.linalg.eigvalsh(m)
        if w.min() < -PSD_TOL:
            raise ValidationError(f"density matrix has eigenvalue {w.min():.3e} < -1e-10")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_ket(cls, ket: np.ndarray) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex)
        return cls(projector(ket / np.linalg.norm(ket)))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)


@dataclass(frozen=True)
class HermitianEigen:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # unitary, columns match eigenvalues


def hermitian_eig(a: np.ndarray) -> HermitianEigen:
    """Dense Hermitian eigendecomposition with descending eigenvalues."""
    a = np.asarray(a, dtype=complex)
    if herm_deviation(a) > 1e-10:
        raise ContractViolationError(
            f"hermitian_eig requires a Hermitian matrix (deviation {herm_deviation(a):.3e})"
        )
    w, v = np.linalg.eigh(a)
    order = np.argsort(w)[::-1]
    return HermitianEigen(eigenvalues=w[order], eigenvectors=v[:, order])


def trace_distance(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """Half the trace norm of rho1 - rho2; lies in [0, 1] for states."""
    if rho1.dim != rho2.dim:
        raise DimensionMismatchError(f"dims {rho1.dim} and {rho2.dim} differ")
    w = np.linalg.eigvalsh(rho1.matrix - rho2.matrix)
    return float(0.5 * np.sum(np.abs(w)))


def partial_trace(rho: DensityMatrix, keep: int) -> DensityMatrix:
    """Trace out one qubit of a two-qubit state. keep=0 keeps the first factor."""
    if rho.dim != 4:
        raise DimensionMismatchError("partial_trace expects a 4x4 state")
    if keep not in (0, 1):
        raise ContractViolationError("keep must be 0 (first) or 1 (second)")
    r = rho.matrix.reshape(2, 2, 2, 2)
    if keep == 0:
        out = np.einsum("ikjk->ij", r)
    else:
        out = np.einsum("kikj->ij", r)
    return DensityMatrix(out)


def partial_transpose(m: np.ndarray) -> np.ndarray:
    """Transpose the second factor of a 4x4 matrix with 2x2 tensor structure."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise DimensionMismatchError("partial_transpose expects a 4x4 matrix")
    return m.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy in bits; 0 log 0 := 0, eigenvalues clamped to [0, 1]."""
    w = np.clip(np.linalg.eigvalsh(rho.matrix), 0.0, 1.0)
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))


def _sqrtm_psd(m: np.ndarray) -> np.ndarray:
    """Matrix square root of a PSD Hermitian matrix, clamping roundoff negatives."""
    w, v = np.linalg.eigh(m)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ dagger(v)


def concurrence(rho: DensityMatrix) -> float:
    """Two-qubit concurrence max(0, sqrt(e1) - sqrt(e2) - sqrt(e3) - sqrt(e4)).

    e_i are the descending eigenvalues of R = rho (Y x Y) rho* (Y x Y).  Their
    square roots are evaluated as singular values of sqrt(rho_tilde) sqrt(rho),
    which agree with sqrt(eig(R)) exactly but avoid the sqrt blow-up of
    roundoff on near-zero eigenvalues.
    """
    if rho.dim != 4:
        raise DimensionMismatchError("concurrence expects a two-qubit state")
    yy = np.kron(PAULI_Y, PAULI_Y)
    rho_tilde = yy @ rho.matrix.conj() @ yy
    lam = np.linalg.svd(_sqrtm_psd(rho_tilde) @ _sqrtm_psd(rho.matrix), compute_uv=False)
    lam = np.sort(lam)[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))

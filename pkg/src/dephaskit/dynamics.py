"""Dephasing dynamics of the polarization qubit coupled to its frequency mode.

The evolution variable s is the optical path difference delta_n * L expressed
in units of the reference wavelength lambda0, so a spectral component centered
at wavelength lc accumulates phase 2 pi s lambda0 / lc.  The decoherence
factor kappa(s) is the characteristic function of the frequency distribution
evaluated at that delay; with the mixture model it has the closed form

    kappa(s) = sum_j w_j exp(i 2 pi s l0 / lc_j) exp(-(2 pi s l0 sigma_j / lc_j^2)^2 / 2)

The spectral line of component j is Gaussian in the reciprocal axis r = 1/lam
with center 1/lc_j and width sigma_j/lc_j^2 (the monochromator-axis params
mapped through the first-order change of variables), which makes the closed
form exact; kappa_quadrature integrates the same line shape over wavelength
with the exact phase 2 pi s l0 / lam and serves as the independent oracle.

Process matrices are expressed in the operator basis M1 = I, M2 = X,
M3 = -iY, M4 = Z.  Choi matrices are trace-normalized to 1 and ordered
input (x) output in the |HH>, |HV>, |VH>, |VV> basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import (
    ContractViolationError,
    DomainError,
    NonPhysicalChannelError,
    ValidationError,
)
from .qcore import (
    ID2,
    KET_H,
    KET_P,
    KET_R,
    KET_V,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityMatrix,
    dagger,
    herm_deviation,
    projector,
)
from .spectra import Spectrum

M_BASIS = (ID2, PAULI_X, -1j * PAULI_Y, PAULI_Z)

_PHI_PLUS_PROJ = np.zeros((4, 4), dtype=complex)
_PHI_PLUS_PROJ[0, 0] = _PHI_PLUS_PROJ[0, 3] = _PHI_PLUS_PROJ[3, 0] = _PHI_PLUS_PROJ[3, 3] = 0.5


def _chi_choi_map() -> np.ndarray:
    """16x16 linear map taking vec(chi) to vec(choi)."""
    k = np.zeros((16, 16), dtype=complex)
    for m in range(4):
        for n in range(4):
            b = np.kron(ID2, M_BASIS[m]) @ _PHI_PLUS_PROJ @ dagger(np.kron(ID2, M_BASIS[n]))
            k[:, 4 * m + n] = b.reshape(-1)
    return k


_CHI_TO_CHOI = _chi_choi_map()
_CHOI_TO_CHI = np.linalg.inv(_CHI_TO_CHOI)


def chi_matrix_to_choi_matrix(chi: np.ndarray) -> np.ndarray:
    return (_CHI_TO_CHOI @ np.asarray(chi, dtype=complex).reshape(-1)).reshape(4, 4)


def choi_matrix_to_chi_matrix(choi: np.ndarray) -> np.ndarray:
    return (_CHOI_TO_CHI @ np.asarray(choi, dtype=complex).reshape(-1)).reshape(4, 4)


def output_marginal(choi: np.ndarray) -> np.ndarray:
    """Trace the output factor of an input (x) output Choi matrix."""
    return np.einsum("ikjk->ij", np.asarray(choi, dtype=complex).reshape(2, 2, 2, 2))


@dataclass(frozen=True)
class EvolutionParams:
    """Birefringence delta_n, reference wavelength, and path difference s."""

    delta_n: float = 0.0115
    lambda0_nm: float = 702.0
    s: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.delta_n < 1.0):
            raise ValidationError(f"delta_n {self.delta_n} outside (0, 1)")
        if self.lambda0_nm <= 0:
            raise ValidationError("lambda0_nm must be positive")
        if self.s < 0:
            raise ValidationError("s must be nonnegative")

    def plate_length_nm(self) -> float:
        """Physical crystal length realizing this path difference."""
        return self.s * self.lambda0_nm / self.delta_n


@dataclass(frozen=True)
class ProcessMatrix:
    """Channel coefficients in the {I, X, -iY, Z} operator basis.

    Hermitian within 1e-12; the corresponding Choi matrix must be PSD within
    1e-10 and trace preserving (output marginal I/2 within 1e-10).
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValidationError("process matrix must be 4x4")
        if herm_deviation(m) > 1e-12:
            raise ValidationError(f"process matrix not Hermitian: {herm_deviation(m):.3e}")
        choi = chi_matrix_to_choi_matrix(m)
        wmin = float(np.linalg.eigvalsh((choi + dagger(choi)) / 2).min())
        if wmin < -1e-10:
            raise ValidationError(f"Choi eigenvalue {wmin:.3e} < -1e-10: not completely positive")
        if np.max(np.abs(output_marginal(choi) - ID2 / 2)) > 1e-10:
            raise ValidationError("channel is not trace preserving")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class ChoiMatrix:
    """Trace-1 Choi matrix, input (x) output, basis |HH>, |HV>, |VH>, |VV>."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValidationError("Choi matrix must be 4x4")
        if herm_deviation(m) > 1e-12:
            raise ValidationError(f"Choi matrix not Hermitian: {herm_deviation(m):.3e}")
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise ValidationError(f"Choi trace {np.trace(m)} != 1")
        if float(np.linalg.eigvalsh(m).min()) < -1e-10:
            raise ValidationError("Choi matrix is not PSD within 1e-10")
        if np.max(np.abs(output_marginal(m) - ID2 / 2)) > 1e-10:
            raise ValidationError("Choi output marginal is not I/2")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class KappaTrajectory:
    """Decoherence factor sampled on an increasing s grid."""

    s_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        s = np.array(self.s_grid, dtype=float)
        v = np.array(self.values, dtype=complex)
        if s.ndim != 1 or v.shape != s.shape:
            raise ValidationError("s_grid and values must be 1-d and equal length")
        if np.any(np.diff(s) <= 0):
            raise ValidationError("s_grid must be strictly increasing")
        if np.max(np.abs(v)) > 1.0 + 1e-9:
            raise ValidationError("|kappa| exceeds 1")
        if s[0] == 0.0 and abs(v[0] - 1.0) > 1e-9:
            raise ValidationError("kappa(0) must be 1")
        s.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "s_grid", s)
        object.__setattr__(self, "values", v)


def kappa_array(spectrum: Spectrum, lambda0_nm: float, s_values) -> np.ndarray:
    """Closed-form decoherence factor on an array of path differences."""
    s = np.asarray(s_values, dtype=float)
    out = np.zeros(s.shape, dtype=complex)
    for c in spectrum.components:
        phase = 2.0 * np.pi * s * lambda0_nm / c.center_nm
        decay = np.exp(-0.5 * (2.0 * np.pi * s * lambda0_nm * c.sigma_nm / c.center_nm**2) ** 2)
        out = out + c.weight * decay * np.exp(1j * phase)
    return out


def kappa(spectrum: Spectrum, params: EvolutionParams) -> complex:
    """Decoherence factor at params.s.  Modulus is at most 1."""
    if params.s < 0:
        raise DomainError("s must be nonnegative")
    return complex(kappa_array(spectrum, params.lambda0_nm, np.array([params.s]))[0])


def kappa_quadrature(spectrum: Spectrum, params: EvolutionParams) -> complex:
    """Decoherence factor by adaptive quadrature over the wavelength axis.

    Integrates each component's line shape against exp(i 2 pi s l0 / lam)
    over an 8 sigma window with relative tolerance 1e-9.  Zero-width
    components contribute a pure phase.  Independent of kappa()'s algebra.
    """
    total = 0.0 + 0.0j
    l0s = 2.0 * np.pi * params.s * params.lambda0_nm
    for c in spectrum.components:
        if c.sigma_nm == 0.0:
            total += c.weight * np.exp(1j * l0s / c.center_nm)
            continue
        r_c = 1.0 / c.center_nm
        r_sigma = c.sigma_nm / c.center_nm**2
        norm = 1.0 / (r_sigma * np.sqrt(2.0 * np.pi))

        def density(lam):
            # line shape over wavelength: Gaussian in 1/lam times |dr/dlam|
            return norm * np.exp(-0.5 * ((1.0 / lam - r_c) / r_sigma) ** 2) / lam**2

        lo = c.center_nm - 8.0 * c.sigma_nm
        hi = c.center_nm + 8.0 * c.sigma_nm
        re, _ = quad(lambda lam: density(lam) * np.cos(l0s / lam), lo, hi,
                     epsabs=0.0, epsrel=1e-9, limit=200)
        im, _ = quad(lambda lam: density(lam) * np.sin(l0s / lam), lo, hi,
                     epsabs=0.0, epsrel=1e-9, limit=200)
        total += c.weight * (re + 1j * im)
    return complex(total)


def kappa_trajectory(spectrum: Spectrum, params: EvolutionParams, s_grid) -> KappaTrajectory:
    s = np.asarray(s_grid, dtype=float)
    return KappaTrajectory(s_grid=s, values=kappa_array(spectrum, params.lambda0_nm, s))


def write_kappa_csv(trajectory: KappaTrajectory, path) -> None:
    """Trajectory export: header s,re_kappa,im_kappa,abs_kappa, 12 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("s,re_kappa,im_kappa,abs_kappa\n")
        for s, v in zip(trajectory.s_grid, trajectory.values):
            fh.write(f"{s:.12g},{v.real:.12g},{v.imag:.12g},{abs(v):.12g}\n")


def process_from_kappa(k: complex) -> ProcessMatrix:
    """Dephasing process matrix for decoherence factor k (|k| <= 1)."""
    k = complex(k)
    if abs(k) > 1.0 + 1e-9:
        raise DomainError(f"|kappa| = {abs(k)} exceeds 1")
    chi = np.zeros((4, 4), dtype=complex)
    chi[0, 0] = (2.0 + k + k.conjugate()) / 4.0
    chi[0, 3] = (k - k.conjugate()) / 4.0
    chi[3, 0] = (k.conjugate() - k) / 4.0
    chi[3, 3] = (2.0 - k - k.conjugate()) / 4.0
    return ProcessMatrix(chi)


def kappa_from_process(chi: ProcessMatrix, tol: float = 1e-12):
    """Recover k when chi has the pure-dephasing corner structure, else None."""
    m = chi.matrix
    off = m.copy()
    mask = np.zeros((4, 4), dtype=bool)
    mask[0, 0] = mask[0, 3] = mask[3, 0] = mask[3, 3] = True
    if np.max(np.abs(off[~mask])) > tol:
        return None
    if abs(m[0, 0].imag) > tol or abs(m[3, 3].imag) > tol:
        return None
    if abs(m[0, 0].real + m[3, 3].real - 1.0) > tol:
        return None
    if abs(m[0, 3].real) > tol:
        return None
    k = complex(m[0, 0].real - m[3, 3].real, 2.0 * m[0, 3].imag)
    if abs(k) > 1.0 + 1e-9:
        return None
    return k


def apply_process(chi: ProcessMatrix, rho: DensityMatrix) -> DensityMatrix:
    """Operator-sum action sum_mn chi_mn M_m rho M_n^dag."""
    out = np.zeros((2, 2), dtype=complex)
    for m in range(4):
        for n in range(4):
            c = chi.matrix[m, n]
            if c != 0:
                out = out + c * (M_BASIS[m] @ rho.matrix @ dagger(M_BASIS[n]))
    return DensityMatrix((out + dagger(out)) / 2)


def apply_process_to_half(chi: ProcessMatrix, rho: DensityMatrix) -> DensityMatrix:
    """Channel on the first qubit, identity on the second."""
    if rho.dim != 4:
        raise ContractViolationError("expected a two-qubit state")
    out = np.zeros((4, 4), dtype=complex)
    for m in range(4):
        for n in range(4):
            c = chi.matrix[m, n]
            if c != 0:
                km = np.kron(M_BASIS[m], ID2)
                kn = np.kron(M_BASIS[n], ID2)
                out = out + c * (km @ rho.matrix @ dagger(kn))
    return DensityMatrix((out + dagger(out)) / 2)


def _transfer_matrix(chi: np.ndarray) -> np.ndarray:
    """Row-major superoperator: vec(rho_out) = T vec(rho_in)."""
    t = np.zeros((4, 4), dtype=complex)
    for m in range(4):
        for n in range(4):
            t = t + chi[m, n] * np.kron(M_BASIS[m], M_BASIS[n].conj())
    return t


def _transfer_to_choi(t: np.ndarray) -> np.ndarray:
    # T[(k,l),(i,j)] = map(|i><j|)[k,l];  choi[(i,k),(j,l)] = map(|i><j|)[k,l] / 2
    return t.reshape(2, 2, 2, 2).transpose(2, 0, 3, 1).reshape(4, 4) / 2.0


def compose(chi_b: ProcessMatrix, chi_a: ProcessMatrix) -> ProcessMatrix:
    """Process matrix of chi_b applied after chi_a."""
    t = _transfer_matrix(chi_b.matrix) @ _transfer_matrix(chi_a.matrix)
    chi = choi_matrix_to_chi_matrix(_transfer_to_choi(t))
    return ProcessMatrix((chi + dagger(chi)) / 2)


def chi_to_choi(chi: ProcessMatrix) -> ChoiMatrix:
    c = chi_matrix_to_choi_matrix(chi.matrix)
    return ChoiMatrix((c + dagger(c)) / 2)


def choi_to_chi(choi: ChoiMatrix) -> ProcessMatrix:
    chi = choi_matrix_to_chi_matrix(choi.matrix)
    return ProcessMatrix((chi + dagger(chi)) / 2)


def _frequency_bins(spectrum: Spectrum, n_samples: int):
    """Midpoint discretization of the line shape on the reciprocal axis.

    Returns (reciprocal centers, weights) with weights normalized to sum 1,
    so s = 0 reproduces the input state exactly.
    """
    centers = []
    weights = []
    for c in spectrum.components:
        if c.sigma_nm == 0.0:
            centers.append(np.array([1.0 / c.center_nm]))
            weights.append(np.array([c.weight]))
            continue
        n_c = max(8, int(round(n_samples * c.weight)))
        r_c = 1.0 / c.center_nm
        r_sigma = c.sigma_nm / c.center_nm**2
        edges = np.linspace(r_c - 8.0 * r_sigma, r_c + 8.0 * r_sigma, n_c + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        pdf = np.exp(-0.5 * ((mids - r_c) / r_sigma) ** 2)
        w = pdf / pdf.sum() * c.weight
        centers.append(mids)
        weights.append(w)
    r = np.concatenate(centers)
    w = np.concatenate(weights)
    return r, w / w.sum()


def simulate_environment(
    spectrum: Spectrum, params: EvolutionParams, rho0: DensityMatrix, n_samples: int
) -> DensityMatrix:
    """Environment-level oracle: discretize the line shape and average the
    per-frequency unitary conjugation.  Diagonal entries pass through exactly;
    the off-diagonal is scaled by the discretized decoherence factor.
    """
    if n_samples < 16:
        raise DomainError("n_samples must be at least 16")
    if rho0.dim != 2:
        raise ContractViolationError("environment simulation acts on a single qubit")
    r, w = _frequency_bins(spectrum, n_samples)
    phases = np.exp(1j * 2.0 * np.pi * params.s * params.lambda0_nm * r)
    k_disc = complex(np.sum(w * phases))
    out = rho0.matrix.copy()
    out[0, 1] = rho0.matrix[0, 1] * k_disc.conjugate()
    out[1, 0] = rho0.matrix[1, 0] * k_disc
    return DensityMatrix(out)


_PROBE_STATES = (projector(KET_H), projector(KET_V), projector(KET_P), projector(KET_R))


def simulate_tomography(channel) -> ProcessMatrix:
    """Reconstruct the process matrix from the four probe outputs H, V, +, R.

    channel maps a DensityMatrix to a DensityMatrix and must be linear and
    trace preserving on the probes.  The remaining matrix-unit images follow
    by linearity; a reconstruction whose Choi dips below -1e-8 is rejected.
    """
    outs = [np.asarray(channel(DensityMatrix(p)).matrix, dtype=complex) for p in _PROBE_STATES]
    out_h, out_v, out_p, out_r = outs
    sym = 2.0 * out_p - out_h - out_v          # map(|H><V|) + map(|V><H|)
    antisym = 2.0 * out_r - out_h - out_v      # i map(|V><H|) - i map(|H><V|)
    out_hv = (sym + 1j * antisym) / 2.0
    out_vh = (sym - 1j * antisym) / 2.0
    choi = np.zeros((4, 4), dtype=complex)
    blocks = {(0, 0): out_h, (0, 1): out_hv, (1, 0): out_vh, (1, 1): out_v}
    for (i, j), block in blocks.items():
        for k in range(2):
            for l in range(2):
                choi[2 * i + k, 2 * j + l] = 0.5 * block[k, l]
    choi = (choi + dagger(choi)) / 2
    wmin = float(np.linalg.eigvalsh(choi).min())
    if wmin < -1e-8:
        raise NonPhysicalChannelError(
            f"reconstructed Choi matrix has eigenvalue {wmin:.3e} < -1e-8"
        )
    chi = choi_matrix_to_chi_matrix(choi)
    chi = (chi + dagger(chi)) / 2
    return ProcessMatrix(chi)

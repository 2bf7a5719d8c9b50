"""Non-Markovianity criteria for a dephasing family parameterized by s.

Five measures are evaluated on a uniform s grid:

- hcl_w: integrated positive variation of the quantum-content trajectory
  (alpha or beta) of the single process chi_s.
- hcl_n: gap between the quantum content of chi_s and of the two-leg
  composite built from the same environment at the split point.
- blp: largest positive variation of the trace distance between two evolved
  states, maximized over antipodal pure pairs on the Bloch sphere.
- rhp: positive variation of the concurrence of an evolved maximally
  entangled system-ancilla pair.
- lfs: positive variation of the system-ancilla mutual information.

For pure dephasing the trace distance of the evolved equatorial pair, the
concurrence, and 2 - h((1 + |kappa|) / 2) all reduce to functions of
|kappa(s)|, which the test suite verifies against the state-level
definitions point by point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .dynamics import (
    EvolutionParams,
    apply_process_to_half,
    compose,
    kappa_array,
    process_from_kappa,
)
from .errors import ContractViolationError, DomainError, ValidationError
from .qcore import (
    KET_PHI_PLUS,
    DensityMatrix,
    concurrence,
    partial_trace,
    von_neumann_entropy,
)
from .quantumness import MEASURE_PREPARE_PPT, alpha, beta
from .spectra import Spectrum

DEFAULT_THRESHOLDS = {
    "blp": 1e-9,
    "rhp": 1e-9,
    "lfs": 1e-9,
    "hcl_w": 1e-9,
    "hcl_n": 0.01,  # experimental resolution of the composite comparison
}


@dataclass(frozen=True)
class DynamicsFamily:
    """A spectrum evolving over the uniform grid {0, step, ..., s_max}."""

    spectrum: Spectrum
    params: EvolutionParams = EvolutionParams()
    s_max: float = 160.0
    step: float = 0.1

    def __post_init__(self):
        if self.step <= 0:
            raise ValidationError("step must be positive")
        if self.s_max < self.step:
            raise ValidationError("s_max must be at least one step")

    @property
    def grid(self) -> np.ndarray:
        n = int(round(self.s_max / self.step))
        return np.linspace(0.0, n * self.step, n + 1)

    def kappa_values(self) -> np.ndarray:
        return kappa_array(self.spectrum, self.params.lambda0_nm, self.grid)


def positive_variation(series) -> float:
    """Sum of positive increments; the discrete integral of the positive derivative."""
    x = np.asarray(series, dtype=float)
    if x.size < 2:
        raise DomainError("positive variation needs at least 2 samples")
    return float(np.sum(np.clip(np.diff(x), 0.0, None)))


def _quantum_content_of(chi, which, formulation) -> float:
    if which == "alpha":
        return alpha(chi, formulation, certificates=False).alpha
    if which == "beta":
        return beta(chi, formulation, certificates=False).beta
    raise ContractViolationError("which must be 'alpha' or 'beta'")


def hcl_w(family: DynamicsFamily, which: str = "alpha", formulation=MEASURE_PREPARE_PPT) -> float:
    """Positive variation of the alpha (or beta) trajectory of chi_s."""
    values = [
        _quantum_content_of(process_from_kappa(k), which, formulation)
        for k in family.kappa_values()
    ]
    return positive_variation(values)


def hcl_n(
    family: DynamicsFamily,
    s: float,
    t1_fraction: float = 0.5,
    which: str = "alpha",
    formulation=MEASURE_PREPARE_PPT,
) -> float:
    """Quantum-content gap between chi_s and the two-leg composite at time s.

    Both legs see the same environment (it is re-prepared between plates), so
    for the even split the composite is the dephasing process with factor
    kappa(s/2)^2.
    """
    if not (0.0 < t1_fraction < 1.0):
        raise DomainError("t1_fraction must lie strictly between 0 and 1")
    lam0 = family.params.lambda0_nm
    k_full, k_leg1, k_leg2 = kappa_array(
        family.spectrum, lam0, np.array([s, t1_fraction * s, (1.0 - t1_fraction) * s])
    )
    chi_full = process_from_kappa(k_full)
    composite = compose(process_from_kappa(k_leg2), process_from_kappa(k_leg1))
    q_full = _quantum_content_of(chi_full, which, formulation)
    q_comp = _quantum_content_of(composite, which, formulation)
    return abs(q_full - q_comp)


@dataclass(frozen=True)
class BlpSearchConfig:
    """Antipodal-pair search grid (azimuth x polar) with optional refinement."""

    n_azimuth: int = 32
    n_polar: int = 16
    refine: bool = True


def _pair_variation(abs_kappa: np.ndarray, polar: float, azimuth: float) -> float:
    # antipodal pure pair along Bloch direction n: the evolved trace distance
    # is sqrt(nz^2 + |kappa|^2 (nx^2 + ny^2)); azimuth drops out for dephasing
    nz = np.cos(polar)
    nxy2 = np.sin(polar) ** 2
    d = np.sqrt(nz * nz + nxy2 * abs_kappa**2)
    return positive_variation(d)


def _blp_search(family: DynamicsFamily, config: BlpSearchConfig):
    abs_kappa = np.abs(family.kappa_values())
    best = (-1.0, 0.0, 0.0)
    polars = np.linspace(0.0, np.pi / 2.0, config.n_polar)
    azimuths = np.linspace(0.0, 2.0 * np.pi, config.n_azimuth, endpoint=False)
    for polar in polars:
        for az in azimuths:
            value = _pair_variation(abs_kappa, polar, az)
            if value > best[0]:
                best = (value, polar, az)
    value, polar, az = best
    if config.refine:
        result = minimize(
            lambda p: -_pair_variation(abs_kappa, p[0], p[1]),
            np.array([polar, az]),
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 200},
        )
        if -result.fun > value:
            value, polar, az = -result.fun, result.x[0], result.x[1]
    return value, polar, az


def blp(family: DynamicsFamily, search: BlpSearchConfig | None = None) -> float:
    """Trace-distance revival measure, maximized over antipodal pure pairs."""
    value, _, _ = _blp_search(family, search or BlpSearchConfig())
    return value


_BELL = DensityMatrix.from_ket(KET_PHI_PLUS)


def rhp(family: DynamicsFamily) -> float:
    """Concurrence revival of the evolved maximally entangled pair."""
    values = [
        concurrence(apply_process_to_half(process_from_kappa(k), _BELL))
        for k in family.kappa_values()
    ]
    return positive_variation(values)


def _mutual_information(rho_sa: DensityMatrix) -> float:
    s_sys = von_neumann_entropy(partial_trace(rho_sa, keep=0))
    s_anc = von_neumann_entropy(partial_trace(rho_sa, keep=1))
    return s_sys + s_anc - von_neumann_entropy(rho_sa)


def lfs(family: DynamicsFamily) -> float:
    """Mutual-information revival of the evolved maximally entangled pair."""
    values = [
        _mutual_information(apply_process_to_half(process_from_kappa(k), _BELL))
        for k in family.kappa_values()
    ]
    return positive_variation(values)


def divisibility_gap(family: DynamicsFamily, s: float) -> float:
    """Max-entry norm of chi_s minus the composed half-time processes."""
    grid = family.grid
    if np.min(np.abs(grid - s)) > 1e-9:
        raise DomainError(f"s = {s} is not on the family grid")
    lam0 = family.params.lambda0_nm
    k_full, k_half = kappa_array(family.spectrum, lam0, np.array([s, s / 2.0]))
    chi_full = process_from_kappa(k_full)
    half = process_from_kappa(k_half)
    return float(np.max(np.abs(chi_full.matrix - compose(half, half).matrix)))


@dataclass(frozen=True)
class CriteriaReport:
    """All measures for one family, with per-criterion verdicts.

    A verdict of True means the measure exceeded its threshold, i.e. the
    dynamics are flagged non-Markovian by that criterion.
    """

    label: str
    w_alpha: float
    w_beta: float
    n_alpha: float
    n_beta: float
    n_blp: float
    n_rhp: float
    n_lfs: float
    thresholds: dict
    verdicts: dict
    formulation: str

    def __post_init__(self):
        for name in ("w_alpha", "w_beta", "n_alpha", "n_beta", "n_blp", "n_rhp", "n_lfs"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative")
        expected = {
            "blp": self.n_blp > self.thresholds["blp"],
            "rhp": self.n_rhp > self.thresholds["rhp"],
            "lfs": self.n_lfs > self.thresholds["lfs"],
            "hcl_w": max(self.w_alpha, self.w_beta) > self.thresholds["hcl_w"],
            "hcl_n": max(self.n_alpha, self.n_beta) > self.thresholds["hcl_n"],
        }
        if expected != dict(self.verdicts):
            raise ValidationError("verdicts inconsistent with measures and thresholds")


def criteria_report(
    family: DynamicsFamily,
    label: str = "",
    t1_fraction: float = 0.5,
    formulation=MEASURE_PREPARE_PPT,
    thresholds: dict | None = None,
    search: BlpSearchConfig | None = None,
) -> CriteriaReport:
    """Evaluate every criterion for one family (composite gap taken at s_max)."""
    thr = dict(DEFAULT_THRESHOLDS)
    if thresholds:
        thr.update(thresholds)
    w_alpha = hcl_w(family, "alpha", formulation)
    w_beta = hcl_w(family, "beta", formulation)
    n_alpha = hcl_n(family, family.s_max, t1_fraction, "alpha", formulation)
    n_beta = hcl_n(family, family.s_max, t1_fraction, "beta", formulation)
    n_blp = blp(family, search)
    n_rhp = rhp(family)
    n_lfs = lfs(family)
    verdicts = {
        "blp": n_blp > thr["blp"],
        "rhp": n_rhp > thr["rhp"],
        "lfs": n_lfs > thr["lfs"],
        "hcl_w": max(w_alpha, w_beta) > thr["hcl_w"],
        "hcl_n": max(n_alpha, n_beta) > thr["hcl_n"],
    }
    return CriteriaReport(
        label=label,
        w_alpha=w_alpha,
        w_beta=w_beta,
        n_alpha=n_alpha,
        n_beta=n_beta,
        n_blp=n_blp,
        n_rhp=n_rhp,
        n_lfs=n_lfs,
        thresholds=thr,
        verdicts=verdicts,
        formulation=formulation.tag,
    )


CRITERIA_CSV_HEADER = (
    "theta,W_alpha,W_beta,N_alpha,N_beta,N_blp,N_rhp,N_lfs,"
    "verdict_blp,verdict_rhp,verdict_lfs,verdict_hcl_w,verdict_hcl_n"
)


def _verdict_text(flag: bool) -> str:
    return "non-Markovian" if flag else "Markovian"


def write_criteria_csv(reports, path) -> None:
    """One row per family, 12 significant digits, stable order."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CRITERIA_CSV_HEADER + "\n")
        for r in reports:
            values = [r.w_alpha, r.w_beta, r.n_alpha, r.n_beta, r.n_blp, r.n_rhp, r.n_lfs]
            cells = [r.label] + [f"{v:.12g}" for v in values]
            cells += [_verdict_text(r.verdicts[k]) for k in ("blp", "rhp", "lfs", "hcl_w", "hcl_n")]
            fh.write(",".join(cells) + "\n")

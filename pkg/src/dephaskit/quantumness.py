"""Quantum content of a dynamical process: composition alpha and robustness beta.

alpha is the least weight of a genuine quantum process in any convex split
chi = alpha * chi_Q + (1 - alpha) * chi_C with chi_C drawn from the classical
set; beta is the least noise weight making (chi + beta * chi') / (1 + beta)
classical, with chi' ranging over all channels.

The default classical set is the measure-and-prepare family, decided exactly
by the partial-transpose test on the Choi matrix (separable equals PPT for
qubit channels).  Alternative classical sets plug in through
ClassicalSetFormulation; reports always carry the formulation tag so numbers
from different sets are never compared silently.

Pure dephasing processes admit exact optimizers under the default set: the
split |k| * (phase unitary) + (1 - |k|) * (complete dephasing) is achievable,
and the partial-transpose negativity of the Choi matrix forces alpha >= |k|,
so alpha = |k|; mixing with the bit-flip unitary's Choi matrix at weight |k|
makes the partial transpose exactly PSD, and a maximally-entangled witness
forces beta >= |k|, so beta = |k|.  alpha() and beta() return these certified
values directly for dephasing-structured inputs and fall back to bisection
over a feasibility cone program otherwise (or when method="sdp" is forced).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import cone
from .cone import PSD, PSD_AFTER_PARTIAL_TRANSPOSE, ConeVariable, FeasibilityFamily
from .dynamics import (
    ChoiMatrix,
    ProcessMatrix,
    chi_to_choi,
    choi_to_chi,
    kappa_from_process,
    process_from_kappa,
)
from .errors import SolverError, ValidationError
from .qcore import ID2, partial_transpose

MEMBERSHIP_TOL = 1e-9

TAG_MEASURE_PREPARE_PPT = "MEASURE_PREPARE_PPT"
TAG_PLUGGABLE = "PLUGGABLE"


class ClassicalityResult(NamedTuple):
    member: bool
    violation: float


@dataclass(frozen=True)
class ClassicalSetFormulation:
    """Which set of processes counts as classical.

    The default (measure-and-prepare) set is built in.  A pluggable
    formulation supplies a membership test with the same signature and,
    if the cone solver should run against it, the cone tags describing the
    set's Choi matrices.
    """

    tag: str = TAG_MEASURE_PREPARE_PPT
    membership: Callable | None = None
    classical_cones: tuple = (PSD, PSD_AFTER_PARTIAL_TRANSPOSE)

    def __post_init__(self):
        if self.tag == TAG_PLUGGABLE and self.membership is None:
            raise ValidationError("pluggable formulation needs a membership callable")


MEASURE_PREPARE_PPT = ClassicalSetFormulation()


def pluggable_formulation(membership, classical_cones=None) -> ClassicalSetFormulation:
    cones = tuple(classical_cones) if classical_cones else (PSD, PSD_AFTER_PARTIAL_TRANSPOSE)
    return ClassicalSetFormulation(tag=TAG_PLUGGABLE, membership=membership, classical_cones=cones)


def _as_matrix(choi) -> np.ndarray:
    return np.asarray(getattr(choi, "matrix", choi), dtype=complex)


def is_classical(choi, formulation: ClassicalSetFormulation = MEASURE_PREPARE_PPT) -> ClassicalityResult:
    """Membership in the classical set, with the size of any violation.

    Accepts a ChoiMatrix or a raw 4x4 array (so near-feasible mixtures from
    the solver can be tested without re-validation).
    """
    if formulation.tag == TAG_PLUGGABLE:
        member, violation = formulation.membership(choi)
        return ClassicalityResult(bool(member), float(violation))
    m = _as_matrix(choi)
    wmin = float(np.linalg.eigvalsh(partial_transpose(m)).min())
    return ClassicalityResult(wmin >= -MEMBERSHIP_TOL, max(0.0, -wmin))


@dataclass(frozen=True)
class AlphaCertificate:
    quantum_choi: np.ndarray
    classical_choi: np.ndarray


@dataclass(frozen=True)
class BetaCertificate:
    noise_choi: np.ndarray


@dataclass(frozen=True)
class QuantumnessReport:
    formulation: str
    choi: np.ndarray
    alpha: float | None = None
    beta: float | None = None
    alpha_certificate: AlphaCertificate | None = None
    beta_certificate: BetaCertificate | None = None
    solver_gap: float = 0.0


def alpha_reconstruction_error(report: QuantumnessReport) -> float:
    """Max entrywise error of alpha * Q + (1 - alpha) * C against the input."""
    cert = report.alpha_certificate
    mix = report.alpha * cert.quantum_choi + (1.0 - report.alpha) * cert.classical_choi
    return float(np.max(np.abs(mix - report.choi)))


def beta_mixture(report: QuantumnessReport) -> np.ndarray:
    """The noisy mixture (choi + beta * noise) / (1 + beta)."""
    cert = report.beta_certificate
    return (report.choi + report.beta * cert.noise_choi) / (1.0 + report.beta)


# Choi matrices of the weightless certificate placeholders
_CHOI_IDENTITY = chi_to_choi(process_from_kappa(1.0)).matrix
_CHOI_DEPHASE = chi_to_choi(process_from_kappa(0.0)).matrix
_CHOI_DEPOLARIZING = np.eye(4, dtype=complex) / 4.0
# Choi of the bit-flip unitary: the |Psi+> projector
_CHOI_BIT_FLIP = np.zeros((4, 4), dtype=complex)
_CHOI_BIT_FLIP[1, 1] = _CHOI_BIT_FLIP[1, 2] = _CHOI_BIT_FLIP[2, 1] = _CHOI_BIT_FLIP[2, 2] = 0.5


def _dephasing_alpha(k: complex, choi: np.ndarray, formulation, certificates: bool):
    a = abs(k)
    if a >= 1.0 - 1e-12:
        # rank-1 Choi: the SDP is numerically hostile, and no classical
        # component can exist, so short-circuit
        value, quantum, classical = 1.0, choi, _CHOI_DEPHASE
    elif a < 1e-12:
        value, quantum, classical = 0.0, _CHOI_IDENTITY, choi
    else:
        phase_unitary = chi_to_choi(process_from_kappa(k / a)).matrix
        value, quantum, classical = a, phase_unitary, _CHOI_DEPHASE
    cert = AlphaCertificate(quantum, classical) if certificates else None
    return QuantumnessReport(
        formulation=formulation.tag, choi=choi, alpha=value, alpha_certificate=cert, solver_gap=0.0
    )


def _dephasing_beta(k: complex, choi: np.ndarray, formulation, certificates: bool):
    b = abs(k)
    noise = _CHOI_BIT_FLIP if b >= 1e-12 else _CHOI_DEPOLARIZING
    cert = BetaCertificate(noise) if certificates else None
    return QuantumnessReport(
        formulation=formulation.tag, choi=choi, beta=b, beta_certificate=cert, solver_gap=0.0
    )


def _alpha_family(formulation) -> FeasibilityFamily:
    variables = (
        ConeVariable("quantum_part", 4, cones=(PSD,)),
        ConeVariable("classical_part", 4, cones=formulation.classical_cones),
    )
    equalities = (
        cone.eq_combo(
            {"quantum_part": 1.0, "classical_part": 1.0},
            np.zeros((4, 4)),
            {"quantum_part": 4, "classical_part": 4},
        ),
        cone.eq_output_marginal("quantum_part", np.zeros((2, 2))),
    )
    return FeasibilityFamily(variables, equalities)


def _beta_family(formulation) -> FeasibilityFamily:
    variables = (
        ConeVariable("noise", 4, cones=(PSD,)),
        ConeVariable("mixture", 4, cones=formulation.classical_cones),
    )
    equalities = (
        cone.eq_combo(
            {"mixture": 1.0, "noise": -1.0},
            np.zeros((4, 4)),
            {"mixture": 4, "noise": 4},
        ),
        cone.eq_output_marginal("noise", np.zeros((2, 2))),
    )
    return FeasibilityFamily(variables, equalities)


def _bisect_level(family, rhs_at, lo, hi, tol, feas_tol, max_iters):
    """Monotone bisection: the feasible set of levels is an upward interval."""
    ok, x, res, _ = family.check(rhs_at(lo), feas_tol=feas_tol, max_iters=max_iters)
    if ok:
        return lo, x, 0.0
    ok, x_hi, res, _ = family.check(rhs_at(hi), feas_tol=feas_tol, max_iters=max_iters)
    if not ok:
        raise SolverError(
            f"feasibility failed at upper bracket {hi}", residual=res, iterations=max_iters
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ok, x, _, _ = family.check(rhs_at(mid), x0=x_hi, feas_tol=feas_tol, max_iters=max_iters)
        if ok:
            hi, x_hi = mid, x
        else:
            lo = mid
    return hi, x_hi, hi - lo


def _sdp_alpha(choi: np.ndarray, formulation, certificates, tol, feas_tol, max_iters):
    family = _alpha_family(formulation)

    def rhs_at(a):
        rhs = family.rhs.copy()
        rhs[:16] = cone.hvec(choi)
        rhs[16:] = cone.hvec(a * ID2 / 2.0)
        return rhs

    value, x, gap = _bisect_level(family, rhs_at, 0.0, 1.0, tol, feas_tol, max_iters)
    parts = family.split(x)
    if certificates:
        q_raw, c_raw = parts["quantum_part"], parts["classical_part"]
        quantum = q_raw / value if value > 1e-9 else _CHOI_IDENTITY
        classical = c_raw / (1.0 - value) if value < 1.0 - 1e-9 else _CHOI_DEPHASE
        cert = AlphaCertificate(quantum, classical)
    else:
        cert = None
    return QuantumnessReport(
        formulation=formulation.tag,
        choi=choi,
        alpha=value,
        alpha_certificate=cert,
        solver_gap=gap,
    )


def _sdp_beta(choi: np.ndarray, formulation, certificates, tol, feas_tol, max_iters):
    family = _beta_family(formulation)

    def rhs_at(b):
        rhs = family.rhs.copy()
        rhs[:16] = cone.hvec(choi)
        rhs[16:] = cone.hvec(b * ID2 / 2.0)
        return rhs

    value, x, gap = _bisect_level(family, rhs_at, 0.0, 2.0, tol, feas_tol, max_iters)
    parts = family.split(x)
    if certificates:
        noise = parts["noise"] / value if value > 1e-9 else _CHOI_DEPOLARIZING
        cert = BetaCertificate(noise)
    else:
        cert = None
    return QuantumnessReport(
        formulation=formulation.tag,
        choi=choi,
        beta=value,
        beta_certificate=cert,
        solver_gap=gap,
    )


def _resolve_input(chi):
    if isinstance(chi, ProcessMatrix):
        return chi, chi_to_choi(chi).matrix
    if isinstance(chi, ChoiMatrix):
        return choi_to_chi(chi), np.asarray(chi.matrix)
    raise ValidationError("expected a ProcessMatrix or ChoiMatrix")


def alpha(
    chi,
    formulation: ClassicalSetFormulation = MEASURE_PREPARE_PPT,
    method: str = "auto",
    certificates: bool = True,
    tol: float = 1e-7,
    feas_tol: float = 1e-8,
    max_iters: int = 50000,
) -> QuantumnessReport:
    """Least quantum weight in a classical/quantum convex split of the process.

    method="auto" uses the exact certified optimizer for dephasing-structured
    processes under the default formulation and the cone program otherwise;
    method="sdp" always runs bisection over the feasibility cone program.
    """
    process, choi = _resolve_input(chi)
    if method == "auto" and formulation.tag == TAG_MEASURE_PREPARE_PPT:
        k = kappa_from_process(process)
        if k is not None:
            return _dephasing_alpha(k, choi, formulation, certificates)
    return _sdp_alpha(choi, formulation, certificates, tol, feas_tol, max_iters)


def beta(
    chi,
    formulation: ClassicalSetFormulation = MEASURE_PREPARE_PPT,
    method: str = "auto",
    certificates: bool = True,
    tol: float = 1e-7,
    feas_tol: float = 1e-8,
    max_iters: int = 50000,
) -> QuantumnessReport:
    """Least channel-noise weight whose admixture makes the process classical."""
    process, choi = _resolve_input(chi)
    if method == "auto" and formulation.tag == TAG_MEASURE_PREPARE_PPT:
        k = kappa_from_process(process)
        if k is not None:
            return _dephasing_beta(k, choi, formulation, certificates)
    return _sdp_beta(choi, formulation, certificates, tol, feas_tol, max_iters)

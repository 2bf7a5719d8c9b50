"""Small dense solver for feasibility and linear objectives over PSD cones.

Problems have a handful of Hermitian matrix variables (dimension <= 8), affine
equality constraints, and cone memberships drawn from {PSD,
PSD_AFTER_PARTIAL_TRANSPOSE}.  The engine parameterizes the affine subspace
exactly and minimizes the summed squared projection distances to the cones (a
smooth first-order scheme from the alternating-projections family; the
distance gradient is the Dykstra-style displacement x - P(x)).  A point is
accepted when every cone distance falls below the feasibility tolerance.
Linear objectives are handled by bisection on the objective level set with a
nonnegative slack, which keeps every probe a plain feasibility problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize

from .errors import SolverError, ValidationError
from .qcore import dagger, herm_deviation, partial_transpose

PSD = "PSD"
PSD_AFTER_PARTIAL_TRANSPOSE = "PSD_AFTER_PARTIAL_TRANSPOSE"

_SQRT2 = np.sqrt(2.0)


def hvec(m: np.ndarray) -> np.ndarray:
    """Isometric real vectorization of a Hermitian matrix."""
    m = np.asarray(m, dtype=complex)
    d = m.shape[0]
    iu = np.triu_indices(d, 1)
    return np.concatenate(
        [np.real(np.diag(m)), _SQRT2 * np.real(m[iu]), _SQRT2 * np.imag(m[iu])]
    )


def hmat(v: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of hvec."""
    v = np.asarray(v, dtype=float)
    k = dim * (dim - 1) // 2
    m = np.diag(v[:dim].astype(complex))
    iu = np.triu_indices(dim, 1)
    upper = (v[dim : dim + k] + 1j * v[dim + k : dim + 2 * k]) / _SQRT2
    m[iu] = upper
    m[(iu[1], iu[0])] = upper.conj()
    return m


def _proj_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return (v * w) @ dagger(v)


def _proj_psd_pt(m: np.ndarray) -> np.ndarray:
    # the partial transpose is an isometric involution, so projecting onto
    # {X : PT(X) >= 0} is PT o proj_psd o PT
    return partial_transpose(_proj_psd(partial_transpose(m)))


_PROJECTIONS = {PSD: _proj_psd, PSD_AFTER_PARTIAL_TRANSPOSE: _proj_psd_pt}


@dataclass(frozen=True)
class ConeVariable:
    """Hermitian matrix variable with optional cone memberships."""

    name: str
    dim: int
    cones: tuple = ()

    def __post_init__(self):
        if not (1 <= self.dim <= 8):
            raise ValidationError("variable dimension must be in [1, 8]")
        for tag in self.cones:
            if tag not in _PROJECTIONS:
                raise ValidationError(f"unknown cone tag {tag!r}")
            if tag == PSD_AFTER_PARTIAL_TRANSPOSE and self.dim != 4:
                raise ValidationError("partial-transpose cone requires a 4x4 variable")


@dataclass(frozen=True)
class EqualityBlock:
    """Affine rows sum_v coeffs[v] @ hvec(X_v) = rhs."""

    coeffs: dict
    rhs: np.ndarray


def eq_combo(terms: dict, target: np.ndarray, dims: dict) -> EqualityBlock:
    """Entrywise equality sum_v c_v X_v = target for scalar coefficients c_v."""
    target = np.asarray(target, dtype=complex)
    if herm_deviation(target) > 1e-12:
        raise ValidationError("equality target must be Hermitian")
    d = target.shape[0]
    coeffs = {name: float(c) * np.eye(d * d) for name, c in terms.items()}
    for name in terms:
        if dims[name] != d:
            raise ValidationError("dimension mismatch in equality block")
    return EqualityBlock(coeffs=coeffs, rhs=hvec(target))


def _probe_linear(fn, dim_in: int, dim_out: int) -> np.ndarray:
    """Matrix of a Hermitian-to-Hermitian linear map in hvec coordinates."""
    rows = dim_out * dim_out
    cols = dim_in * dim_in
    op = np.empty((rows, cols))
    for j in range(cols):
        e = np.zeros(cols)
        e[j] = 1.0
        op[:, j] = hvec(fn(hmat(e, dim_in)))
    return op


def _output_marginal(m: np.ndarray) -> np.ndarray:
    return np.einsum("ikjk->ij", m.reshape(2, 2, 2, 2))


_MARGINAL_OP = _probe_linear(_output_marginal, 4, 2)


def eq_output_marginal(name: str, target2: np.ndarray) -> EqualityBlock:
    """Constraint tr_out(X) = target2 for a 4x4 input-output variable."""
    return EqualityBlock(coeffs={name: _MARGINAL_OP}, rhs=hvec(np.asarray(target2)))


def eq_scalar(terms: dict, value: float) -> EqualityBlock:
    """Single row sum_v <G_v, X_v> = value for Hermitian G_v."""
    coeffs = {name: hvec(g)[None, :] for name, g in terms.items()}
    return EqualityBlock(coeffs=coeffs, rhs=np.array([float(value)]))


@dataclass(frozen=True)
class ConeProblem:
    variables: tuple
    equalities: tuple
    objective: dict | None = None  # var name -> Hermitian G, minimize sum <G, X>
    objective_bracket: tuple = (-64.0, 64.0)


@dataclass(frozen=True)
class ConeSolution:
    status: str  # "feasible", "infeasible", "solved"
    variables: dict
    objective_value: float | None
    gap: float
    residual: float
    iterations: int


class FeasibilityFamily:
    """Reusable feasibility machinery for a fixed constraint structure.

    The equality right-hand side may change between calls (e.g. along a
    bisection); the affine geometry is precomputed once.
    """

    def __init__(self, variables, equalities):
        self.variables = tuple(variables)
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate variable names")
        self.offsets = {}
        off = 0
        for v in self.variables:
            self.offsets[v.name] = off
            off += v.dim * v.dim
        self.total_dim = off
        rows = []
        rhs = []
        for block in equalities:
            m = len(block.rhs)
            row = np.zeros((m, self.total_dim))
            for name, coeff in block.coeffs.items():
                o = self.offsets[name]
                d2 = next(v.dim * v.dim for v in self.variables if v.name == name)
                row[:, o : o + d2] = coeff
            rows.append(row)
            rhs.append(np.asarray(block.rhs, dtype=float))
        self.eq_matrix = np.vstack(rows) if rows else np.zeros((0, self.total_dim))
        self.rhs = np.concatenate(rhs) if rhs else np.zeros(0)
        self.pinv = np.linalg.pinv(self.eq_matrix) if rows else None
        self.null = (
            null_space(self.eq_matrix) if rows else np.eye(self.total_dim)
        )
        self.cone_sets = []
        for v in self.variables:
            o = self.offsets[v.name]
            for tag in v.cones:
                self.cone_sets.append((slice(o, o + v.dim * v.dim), v.dim, _PROJECTIONS[tag]))

    def split(self, x: np.ndarray) -> dict:
        out = {}
        for v in self.variables:
            o = self.offsets[v.name]
            out[v.name] = hmat(x[o : o + v.dim * v.dim], v.dim)
        return out

    def _cone_fg(self, x: np.ndarray):
        total = 0.0
        grad = np.zeros_like(x)
        worst = 0.0
        for sl, d, proj in self.cone_sets:
            m = hmat(x[sl], d)
            diff = x[sl] - hvec(proj(m))
            dist2 = float(diff @ diff)
            total += 0.5 * dist2
            worst = max(worst, np.sqrt(dist2))
            grad[sl] += diff
        return total, grad, worst

    def check(self, rhs: np.ndarray, x0=None, feas_tol: float = 1e-8, max_iters: int = 50000):
        """Search the affine slice for a point inside every cone.

        Returns (feasible, x, residual, evaluations).
        """
        if self.pinv is not None:
            xp = self.pinv @ rhs
        else:
            xp = np.zeros(self.total_dim)
        z = self.null
        if z.shape[1] == 0:
            _, _, worst = self._cone_fg(xp)
            return worst < feas_tol, xp, worst, 1
        if x0 is not None:
            y0 = z.T @ (x0 - xp)
        else:
            y0 = np.zeros(z.shape[1])

        evals = [0]

        def fg(y):
            evals[0] += 1
            x = xp + z @ y
            total, grad, _ = self._cone_fg(x)
            return total, z.T @ grad

        result = minimize(
            fg,
            y0,
            jac=True,
            method="L-BFGS-B",
            options={"maxfun": max_iters, "maxiter": max_iters, "ftol": 0.0, "gtol": 1e-14},
        )
        x = xp + z @ result.x
        _, _, worst = self._cone_fg(x)
        return worst < feas_tol, x, worst, evals[0]


def solve_cone(
    problem: ConeProblem,
    feas_tol: float = 1e-8,
    gap_tol: float = 1e-6,
    max_iters: int = 50000,
) -> ConeSolution:
    """Solve a cone feasibility problem, or a linear objective by bisection.

    Feasible points satisfy every cone membership within feas_tol (Frobenius
    distance) and the equalities exactly by construction.  With an objective,
    the reported optimum brackets the true value within gap_tol from above.
    Raises SolverError with the residual when no point is found.
    """
    if problem.objective is None:
        fam = FeasibilityFamily(problem.variables, problem.equalities)
        ok, x, res, its = fam.check(fam.rhs, feas_tol=feas_tol, max_iters=max_iters)
        return ConeSolution(
            status="feasible" if ok else "infeasible",
            variables=fam.split(x),
            objective_value=None,
            gap=0.0,
            residual=res,
            iterations=its,
        )

    slack = ConeVariable("_objective_slack", 1, cones=(PSD,))
    variables = problem.variables + (slack,)
    dims = {v.name: v.dim for v in variables}
    obj_terms = {name: np.asarray(g, dtype=complex) for name, g in problem.objective.items()}
    level_row = eq_scalar({**obj_terms, "_objective_slack": np.eye(1)}, 0.0)
    equalities = problem.equalities + (level_row,)
    fam = FeasibilityFamily(variables, equalities)

    def rhs_at(t):
        rhs = fam.rhs.copy()
        rhs[-1] = t
        return rhs

    lo, hi = problem.objective_bracket
    total_its = 0
    ok, x_hi, res, its = fam.check(rhs_at(hi), feas_tol=feas_tol, max_iters=max_iters)
    total_its += its
    if not ok:
        raise SolverError(
            f"no feasible point at objective level {hi}", residual=res, iterations=total_its
        )
    ok, x, res, its = fam.check(rhs_at(lo), x0=x_hi, feas_tol=feas_tol, max_iters=max_iters)
    total_its += its
    if ok:
        x_hi, hi = x, lo
    else:
        while hi - lo > gap_tol:
            mid = 0.5 * (lo + hi)
            ok, x, res, its = fam.check(rhs_at(mid), x0=x_hi, feas_tol=feas_tol, max_iters=max_iters)
            total_its += its
            if ok:
                hi, x_hi = mid, x
            else:
                lo = mid
    out_vars = fam.split(x_hi)
    out_vars.pop("_objective_slack", None)
    _, _, final_res = fam._cone_fg(x_hi)
    return ConeSolution(
        status="solved",
        variables=out_vars,
        objective_value=hi,
        gap=hi - lo,
        residual=final_res,
        iterations=total_its,
    )

"""Solver-agnostic conic problems over Hermitian matrix variables.

A problem holds PSD / free Hermitian matrix variables on named factor grids,
free scalars, affine equality and LMI constraints built from a small set of
structural linear maps (partial trace, trace-replace, tensor-embedding), and
a linear objective.  `solve` compiles it for a real-symmetric interior-point
backend, embedding complex data via `embedding` when needed, and maps primal
values and equality duals back to complex Hermitian matrices.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from .embedding import embed_complex, is_effectively_real, unembed_complex
from .errors import SolverError

DEFAULT_SOLVER = "CLARABEL"
DEFAULT_FEAS_TOL = 1e-8
SOLVER_TOL_ENV = "CAUSALCERT_SOLVER_TOL"


# ---------------------------------------------------------------------------
# structural linear maps (applied left to right on a variable)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PTrace:
    """Partial trace over the given factor axes."""

    axes: tuple[int, ...]


@dataclass(frozen=True)
class TraceReplace:
    """(Tr_axes X) (x) 1/d restored at the original positions."""

    axes: tuple[int, ...]


@dataclass(frozen=True)
class TensorEmbed:
    """X on a factor subset, tensored with identity into a larger grid.

    `positions[i]` is the axis of the output grid carrying input axis i;
    `out_dims` is the full output dimension list.
    """

    positions: tuple[int, ...]
    out_dims: tuple[int, ...]


@dataclass(frozen=True)
class MatVar:
    name: str
    dims: tuple[int, ...]
    psd: bool

    @property
    def side(self) -> int:
        return int(np.prod(self.dims))


@dataclass(frozen=True)
class ScalarVar:
    name: str
    nonneg: bool = False


@dataclass(frozen=True)
class Term:
    """coeff * chain(var); chain entries are applied left to right."""

    var: MatVar
    chain: tuple = ()
    coeff: float = 1.0


@dataclass(frozen=True)
class ScalarTerm:
    """var * matrix, for scalar variables entering matrix constraints."""

    var: ScalarVar
    matrix: np.ndarray


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple
    rhs: np.ndarray
    kind: str = "eq"  # "eq": sum(terms) == rhs; "psd": sum(terms) - rhs >> 0


@dataclass
class ConicProblem:
    mat_vars: list[MatVar] = field(default_factory=list)
    scalar_vars: list[ScalarVar] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: ScalarVar | None = None
    sense: str = "min"

    def psd_var(self, name: str, dims) -> MatVar:
        v = MatVar(name, tuple(int(d) for d in dims), psd=True)
        self.mat_vars.append(v)
        return v

    def herm_var(self, name: str, dims) -> MatVar:
        v = MatVar(name, tuple(int(d) for d in dims), psd=False)
        self.mat_vars.append(v)
        return v

    def scalar_var(self, name: str, nonneg: bool = False) -> ScalarVar:
        v = ScalarVar(name, nonneg)
        self.scalar_vars.append(v)
        return v

    def add_eq(self, name: str, terms, rhs) -> None:
        self.constraints.append(Constraint(name, tuple(terms), np.asarray(rhs, dtype=complex), "eq"))

    def add_psd(self, name: str, terms, rhs) -> None:
        self.constraints.append(Constraint(name, tuple(terms), np.asarray(rhs, dtype=complex), "psd"))

    def minimize(self, var: ScalarVar) -> None:
        self.objective, self.sense = var, "min"

    def maximize(self, var: ScalarVar) -> None:
        self.objective, self.sense = var, "max"

    def solve(self, solver: str | None = None, feas_tol: float | None = None,
              verbose: bool = False) -> "ConicSolution":
        return _solve_cvxpy(self, solver=solver, feas_tol=feas_tol, verbose=verbose)


@dataclass
class ConicSolution:
    status: str
    objective: float | None
    mat_values: dict
    scalar_values: dict
    eq_duals: dict
    solve_time_s: float

    def value(self, var: MatVar) -> np.ndarray:
        return self.mat_values[var.name]

    def scalar(self, var: ScalarVar) -> float:
        return self.scalar_values[var.name]

    def dual(self, constraint_name: str) -> np.ndarray:
        return self.eq_duals[constraint_name]


# ---------------------------------------------------------------------------
# cvxpy backend
# ---------------------------------------------------------------------------

_OK_STATUSES = {"optimal": "optimal", "optimal_inaccurate": "optimal_inaccurate"}


def _perm_matrix(dims, perm):
    """P with P|m> reordering axes so output axis i carries input axis perm[i]."""
    n = int(np.prod(dims))
    out_dims = [dims[p] for p in perm]
    rows = np.empty(n, dtype=np.int64)
    for flat in range(n):
        m = np.unravel_index(flat, dims)
        rows[flat] = np.ravel_multi_index(tuple(m[p] for p in perm), out_dims)
    p = np.zeros((n, n))
    p[rows, np.arange(n)] = 1.0
    return p


def _apply_chain_cvxpy(cp, expr, dims, chain, offset):
    """Apply structural maps to a cvxpy expression; `offset` is 1 when a
    doubling factor was prepended by the complex embedding."""

    def ptrace(e, cur_dims, ax):
        return cp.partial_trace(e, [2] * offset + list(cur_dims), axis=ax + offset)

    dims = list(dims)
    for op in chain:
        if isinstance(op, PTrace):
            for ax in sorted(op.axes, reverse=True):
                expr = ptrace(expr, dims, ax)
                dims.pop(ax)
        elif isinstance(op, TraceReplace):
            axes = sorted(op.axes)
            d_rm = int(np.prod([dims[a] for a in axes]))
            red = expr
            red_dims = list(dims)
            for ax in sorted(axes, reverse=True):
                red = ptrace(red, red_dims, ax)
                red_dims.pop(ax)
            big = cp.kron(red, np.eye(d_rm))
            cur = [a for a in range(len(dims)) if a not in axes] + axes
            perm = [cur.index(i) for i in range(len(dims))]
            full_dims = ([2] * offset) + [dims[a] for a in cur]
            full_perm = list(range(offset)) + [q + offset for q in perm]
            pm = _perm_matrix(full_dims, full_perm)
            expr = (pm @ big @ pm.T) / d_rm
        elif isinstance(op, TensorEmbed):
            missing = [i for i in range(len(op.out_dims)) if i not in op.positions]
            d_miss = int(np.prod([op.out_dims[i] for i in missing])) if missing else 1
            big = cp.kron(expr, np.eye(d_miss)) if d_miss > 1 else expr
            cur = list(op.positions) + missing
            perm = [cur.index(i) for i in range(len(op.out_dims))]
            full_dims = ([2] * offset) + [op.out_dims[a] for a in cur]
            full_perm = list(range(offset)) + [q + offset for q in perm]
            pm = _perm_matrix(full_dims, full_perm)
            expr = pm @ big @ pm.T
            dims = list(op.out_dims)
        else:
            raise TypeError(f"unknown chain op {op!r}")
    return expr


def _permute_np(m: np.ndarray, dims, perm) -> np.ndarray:
    n = len(dims)
    t = m.reshape(list(dims) * 2)
    t = np.transpose(t, list(perm) + [p + n for p in perm])
    d = int(np.prod(dims))
    return t.reshape(d, d)


def apply_chain_numpy(m: np.ndarray, dims, chain) -> np.ndarray:
    """Reference implementation of the structural maps on plain arrays."""
    m = np.ascontiguousarray(m, dtype=complex)
    dims = list(dims)
    for step in chain:
        if isinstance(step, (PTrace, TraceReplace)):
            n = len(dims)
            t = m.reshape(dims * 2)
            letters = list("abcdefghijklmnopqrstuvwxyz"[: 2 * n])
            for ax in step.axes:
                letters[n + ax] = letters[ax]
            keep = [i for i in range(n) if i not in step.axes]
            out = [letters[i] for i in keep] + [letters[n + i] for i in keep]
            red = np.einsum("".join(letters) + "->" + "".join(out), t)
            d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
            red = red.reshape(d_keep, d_keep)
            if isinstance(step, PTrace):
                m, dims = red, [dims[i] for i in keep]
            else:
                axes = sorted(step.axes)
                d_rm = int(np.prod([dims[a] for a in axes]))
                big = np.kron(red, np.eye(d_rm)) / d_rm
                cur = keep + axes
                perm = [cur.index(i) for i in range(n)]
                m = _permute_np(big, [dims[a] for a in cur], perm)
        elif isinstance(step, TensorEmbed):
            missing = [i for i in range(len(step.out_dims)) if i not in step.positions]
            d_miss = int(np.prod([step.out_dims[i] for i in missing])) if missing else 1
            big = np.kron(m, np.eye(d_miss)) if d_miss > 1 else m
            cur = list(step.positions) + missing
            perm = [cur.index(i) for i in range(len(step.out_dims))]
            m = _permute_np(big, [step.out_dims[a] for a in cur], perm)
            dims = list(step.out_dims)
        else:
            raise TypeError(f"unknown chain op {step!r}")
    return m


def _solver_tolerance_kwargs(solver: str, feas_tol: float) -> dict:
    if solver == "CLARABEL":
        return {"tol_feas": feas_tol, "tol_gap_abs": feas_tol, "tol_gap_rel": feas_tol}
    if solver == "SCS":
        return {"eps": feas_tol}
    return {}


def _solve_cvxpy(problem: ConicProblem, solver=None, feas_tol=None, verbose=False) -> ConicSolution:
    import cvxpy as cp

    solver = solver or os.environ.get("CAUSALCERT_SOLVER", DEFAULT_SOLVER)
    if feas_tol is None:
        feas_tol = float(os.environ.get(SOLVER_TOL_ENV, DEFAULT_FEAS_TOL))

    data = [c.rhs for c in problem.constraints]
    data += [t.matrix for c in problem.constraints for t in c.terms if isinstance(t, ScalarTerm)]
    real_path = is_effectively_real(data)
    offset = 0 if real_path else 1
    emb = (lambda m: np.asarray(m, dtype=complex).real) if real_path else embed_complex

    cp_mats = {}
    for v in problem.mat_vars:
        side = v.side * (1 if real_path else 2)
        cp_mats[v.name] = cp.Variable((side, side), PSD=True) if v.psd else cp.Variable((side, side), symmetric=True)
    cp_scalars = {v.name: cp.Variable(nonneg=v.nonneg) for v in problem.scalar_vars}

    cons = []
    eq_handles = {}
    for c in problem.constraints:
        expr = None
        for t in c.terms:
            if isinstance(t, ScalarTerm):
                piece = cp_scalars[t.var.name] * emb(t.matrix)
            else:
                piece = _apply_chain_cvxpy(cp, cp_mats[t.var.name], t.var.dims, t.chain, offset)
                if t.coeff != 1.0:
                    piece = t.coeff * piece
            expr = piece if expr is None else expr + piece
        rhs = emb(c.rhs)
        if c.kind == "eq":
            con = expr == rhs
            eq_handles[c.name] = con
        else:
            con = expr - rhs >> 0
        cons.append(con)

    if problem.objective is None:
        obj = cp.Minimize(0)
    else:
        target = cp_scalars[problem.objective.name]
        obj = cp.Minimize(target) if problem.sense == "min" else cp.Maximize(target)

    prob = cp.Problem(obj, cons)
    kwargs = _solver_tolerance_kwargs(solver, feas_tol)
    t0 = time.perf_counter()
    try:
        prob.solve(solver=solver, verbose=verbose, **kwargs)
    except cp.error.SolverError as exc:
        raise SolverError(prob.status or "failed", str(exc)) from exc
    elapsed = time.perf_counter() - t0

    status = _OK_STATUSES.get(prob.status)
    if status is None:
        raise SolverError(prob.status, f"solver returned status {prob.status!r}")

    unpack = (lambda x: (np.asarray(x) + np.asarray(x).T) / 2 + 0j) if real_path else (
        lambda x: unembed_complex(np.asarray(x)))
    mat_values = {v.name: unpack(cp_mats[v.name].value) for v in problem.mat_vars}
    scalar_values = {v.name: float(cp_scalars[v.name].value) for v in problem.scalar_vars}
    eq_duals = {}
    for name, handle in eq_handles.items():
        dv = handle.dual_value
        if dv is not None:
            eq_duals[name] = unpack(dv)
    return ConicSolution(status, None if problem.objective is None else float(prob.value),
                         mat_values, scalar_values, eq_duals, elapsed)

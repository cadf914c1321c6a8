"""
Dense bounded-variable simplex with dual extraction.

Problems have the form::

    minimize    c^T z
    subject to  A z <= b
                lower <= z <= upper        (infinite bounds allowed)

The solver works on a shifted copy of the problem in which every column is
nonnegative with an optional finite upper bound, appends one slack per row and
runs a two-phase primal simplex. Artificial variables are never stored as
columns: the artificial of row ``k`` has column ``-e_k``, which is the negated
slack column, so the tableau only holds structural and slack columns.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field

import numba
import numpy as np

__all__ = [
    "LpStatus",
    "LpProblem",
    "LpSolution",
    "solve",
    "check_kkt",
    "dual_objective",
    "bound_multipliers",
    "FEAS_TOL",
]

FEAS_TOL = 1e-9
_PIVOT_TOL = 1e-11
# consecutive degenerate pivots before switching to Bland's rule
_DEGENERACY_TRIP = 50
_REFACTOR_EVERY = 100


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class LpProblem:
    """Linear program ``min c^T z  s.t.  A z <= b,  lower <= z <= upper``."""

    objective: np.ndarray
    ineq_matrix: np.ndarray
    ineq_rhs: np.ndarray
    var_lower: np.ndarray
    var_upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        n = c.size
        A = np.asarray(self.ineq_matrix, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        if A.ndim != 2 or A.shape[1] != n:
            raise ValueError(f"ineq_matrix has shape {A.shape}, expected (m, {n})")
        b = np.asarray(self.ineq_rhs, dtype=float).reshape(-1)
        if b.size != A.shape[0]:
            raise ValueError(f"ineq_rhs has length {b.size}, expected {A.shape[0]}")
        lo = np.asarray(self.var_lower, dtype=float).reshape(-1)
        hi = np.asarray(self.var_upper, dtype=float).reshape(-1)
        if lo.size != n or hi.size != n:
            raise ValueError("bound vectors must have one entry per variable")
        if np.any(lo > hi):
            raise ValueError("var_lower exceeds var_upper")
        if np.any(np.isnan(A)) or np.any(np.isnan(b)) or np.any(np.isnan(c)):
            raise ValueError("NaN in problem data")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("objective, ineq_matrix and ineq_rhs must be finite")
        if np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValueError("bounds must not be +inf below or -inf above")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "ineq_matrix", A)
        object.__setattr__(self, "ineq_rhs", b)
        object.__setattr__(self, "var_lower", lo)
        object.__setattr__(self, "var_upper", hi)

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @property
    def num_rows(self) -> int:
        return self.ineq_rhs.size

    def dump(self) -> str:
        """Plain-text rendering for bug reports (round-trips at full precision)."""
        out = io.StringIO()
        out.write(f"lp {self.num_vars} {self.num_rows}\n")
        fmt = lambda v: " ".join(repr(float(x)) for x in v)
        out.write("c " + fmt(self.objective) + "\n")
        out.write("lower " + fmt(self.var_lower) + "\n")
        out.write("upper " + fmt(self.var_upper) + "\n")
        for row, rhs in zip(self.ineq_matrix, self.ineq_rhs):
            out.write("row " + fmt(row) + " <= " + repr(float(rhs)) + "\n")
        return out.getvalue()

    @classmethod
    def load(cls, text: str) -> "LpProblem":
        lines = [ln.split() for ln in text.strip().splitlines()]
        n, m = int(lines[0][1]), int(lines[0][2])
        parse = lambda toks: np.array([float(t) for t in toks], dtype=float)
        c = parse(lines[1][1:])
        lo = parse(lines[2][1:])
        hi = parse(lines[3][1:])
        rows, rhs = [], []
        for toks in lines[4 : 4 + m]:
            rows.append(parse(toks[1:-2]))
            rhs.append(float(toks[-1]))
        A = np.array(rows, dtype=float).reshape(m, n)
        return cls(c, A, np.array(rhs), lo, hi)


@dataclass
class LpSolution:
    status: LpStatus
    primal: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective_value: float = float("nan")
    ineq_duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


_OPTIMAL, _UNBOUNDED, _LIMIT, _REFACTOR = 0, 1, 2, 3


@numba.njit(cache=True)
def _iterate(T, xB, basis, in_basis, at_upper, ub, ubB, d, iterations, max_iter, pivot_budget):
    """Bounded primal simplex pivots on the tableau ``T = B^-1 M``.

    ``d`` holds the reduced costs and is updated in place with every pivot.
    Returns ``(code, iterations)``; ``_REFACTOR`` means ``pivot_budget`` pivots
    were spent and the caller should refactorize before resuming.
    """
    m, ncols = T.shape
    degenerate_run = 0
    pivots = 0
    while True:
        if iterations >= max_iter:
            return _LIMIT, iterations
        bland = degenerate_run >= _DEGENERACY_TRIP
        j = -1
        best_score = FEAS_TOL
        for k in range(ncols):
            if in_basis[k] >= 0:
                continue
            score = d[k] if at_upper[k] else -d[k]
            if score > best_score:
                j = k
                if bland:
                    break
                best_score = score
        if j < 0:
            return _OPTIMAL, iterations
        delta = -1.0 if at_upper[j] else 1.0
        theta = ub[j]
        leave = -1
        leave_to_upper = False
        for r in range(m):
            da = delta * T[r, j]
            if da > _PIVOT_TOL:
                ratio = max(xB[r], 0.0) / da
                to_upper = False
            elif da < -_PIVOT_TOL and ubB[r] < np.inf:
                ratio = max(ubB[r] - xB[r], 0.0) / -da
                to_upper = True
            else:
                continue
            if leave < 0:
                better = ratio < theta
            elif ratio < theta - _PIVOT_TOL:
                better = True
            elif ratio <= theta + _PIVOT_TOL:
                # tie: Bland keeps the smallest basic index, otherwise the first row
                better = bland and basis[r] < basis[leave]
            else:
                better = False
            if better:
                theta = ratio
                leave = r
                leave_to_upper = to_upper
        if theta == np.inf:
            return _UNBOUNDED, iterations
        iterations += 1
        if theta <= FEAS_TOL:
            degenerate_run += 1
        else:
            degenerate_run = 0
        for r in range(m):
            xB[r] -= theta * delta * T[r, j]
        if leave < 0:
            at_upper[j] = not at_upper[j]
            continue
        entering_value = (ub[j] if at_upper[j] else 0.0) + delta * theta
        old = basis[leave]
        piv = T[leave, j]
        for k in range(ncols):
            T[leave, k] /= piv
        for r in range(m):
            if r == leave:
                continue
            f = T[r, j]
            if f != 0.0:
                for k in range(ncols):
                    T[r, k] -= f * T[leave, k]
        f = d[j]
        for k in range(ncols):
            d[k] -= f * T[leave, k]
        basis[leave] = j
        in_basis[j] = leave
        ubB[leave] = ub[j]
        xB[leave] = entering_value
        if old < ncols:
            in_basis[old] = -1
            at_upper[old] = leave_to_upper
        at_upper[j] = False
        pivots += 1
        if pivots >= pivot_budget:
            return _REFACTOR, iterations


class _Tableau:
    """Working state of the bounded simplex on ``M w = rhs``, ``0 <= w <= ub``.

    Columns ``0..n-1`` are structural, ``n..n+m-1`` are slacks. Basis entries
    ``>= n+m`` denote the artificial of row ``entry - n - m``.
    """

    def __init__(self, M, rhs, ub):
        self.m, ncols = M.shape
        self.ncols = ncols
        self.n = ncols - self.m
        self.M = M
        self.rhs = rhs
        self.ub = ub
        self.at_upper = np.zeros(ncols, dtype=np.bool_)
        self.basis = np.empty(self.m, dtype=np.int64)
        self.in_basis = np.full(ncols, -1, dtype=np.int64)
        art = rhs < 0
        self.basis[:] = np.where(art, ncols + np.arange(self.m), self.n + np.arange(self.m))
        self.in_basis[self.n + np.flatnonzero(~art)] = np.flatnonzero(~art)
        self.xB = np.abs(rhs).astype(float)
        self.T = np.ascontiguousarray(M * np.where(art, -1.0, 1.0)[:, None])
        # upper bound of each row's basic variable (artificials are unbounded)
        self.ubB = np.where(art, np.inf, ub[self.n :])
        self.iterations = 0
        self.refactor_every = max(_REFACTOR_EVERY, self.m)

    def column_of(self, j):
        if j < self.ncols:
            return self.M[:, j]
        col = np.zeros(self.m)
        col[j - self.ncols] = -1.0
        return col

    def basis_matrix(self):
        B = np.empty((self.m, self.m))
        for r, j in enumerate(self.basis):
            B[:, r] = self.column_of(j)
        return B

    def nonbasic_values(self):
        w = np.where(self.at_upper, self.ub, 0.0)
        w[self.in_basis >= 0] = 0.0
        return w

    def refactor(self):
        if self.m == 0:
            return
        B = self.basis_matrix()
        self.T = np.ascontiguousarray(np.linalg.solve(B, self.M))
        self.xB = np.linalg.solve(B, self.rhs - self.M @ self.nonbasic_values())

    def final_values(self, cost_basic):
        """Basic values and simplex multipliers recomputed from the basis matrix."""
        if self.m == 0:
            return self.xB, np.zeros(0)
        B = self.basis_matrix()
        xB = np.linalg.solve(B, self.rhs - self.M @ self.nonbasic_values())
        pi = np.linalg.solve(B.T, cost_basic)
        return xB, pi

    def run(self, cost_cols, artificial_cost, max_iter):
        """Iterate to optimality; returns ``"optimal"``, ``"unbounded"`` or ``"limit"``."""
        while True:
            cB = np.where(self.basis < self.ncols, cost_cols[np.minimum(self.basis, self.ncols - 1)],
                          artificial_cost)
            d = cost_cols - cB @ self.T
            code, self.iterations = _iterate(
                self.T, self.xB, self.basis, self.in_basis, self.at_upper, self.ub, self.ubB, d,
                self.iterations, max_iter, self.refactor_every,
            )
            if code == _REFACTOR:
                self.refactor()
                continue
            return {_OPTIMAL: "optimal", _UNBOUNDED: "unbounded", _LIMIT: "limit"}[code]

    def pivot(self, r, j):
        piv = self.T[r, j]
        self.T[r] /= piv
        col = self.T[:, j].copy()
        col[r] = 0.0
        self.T -= np.outer(col, self.T[r])
        self.basis[r] = j
        self.in_basis[j] = r
        self.ubB[r] = self.ub[j]


def _standardize(p: LpProblem):
    """Map each variable to a nonnegative one; return the transform."""
    lo, hi = p.var_lower, p.var_upper
    cols, ubs = [], []
    for j in range(p.num_vars):
        if np.isfinite(lo[j]):
            cols.append((j, 1.0))
            ubs.append(hi[j] - lo[j])
        elif np.isfinite(hi[j]):
            cols.append((j, -1.0))
            ubs.append(np.inf)
        else:
            cols.append((j, 1.0))
            ubs.append(np.inf)
            cols.append((j, -1.0))
            ubs.append(np.inf)
    # z_j = base_j + sum of signed columns
    base = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
    idx = np.array([c[0] for c in cols], dtype=np.int64)
    sgn = np.array([c[1] for c in cols])
    return idx, sgn, np.array(ubs), base


def solve(p: LpProblem, max_iter: int | None = None) -> LpSolution:
    """Solve ``p`` with the two-phase bounded simplex.

    Returns an :class:`LpSolution`; ``ineq_duals`` are the nonnegative row
    multipliers ``y`` with ``c + A^T y`` balanced by the bound multipliers.
    """
    m, nv = p.num_rows, p.num_vars
    idx, sgn, ub_s, base = _standardize(p)
    n = idx.size
    A_s = p.ineq_matrix[:, idx] * sgn
    c_s = p.objective[idx] * sgn
    rhs = p.ineq_rhs - p.ineq_matrix @ base
    M = np.hstack([A_s, np.eye(m)])
    ub = np.concatenate([ub_s, np.full(m, np.inf)])
    if max_iter is None:
        max_iter = 50 * (m + nv)
    tab = _Tableau(M, rhs, ub)
    ncols = n + m

    if np.any(tab.basis >= ncols):
        outcome = tab.run(np.zeros(ncols), 1.0, max_iter)
        if outcome == "limit":
            return LpSolution(LpStatus.ITERATION_LIMIT, iterations=tab.iterations)
        infeas = float(np.sum(tab.xB[tab.basis >= ncols]))
        if infeas > FEAS_TOL * max(1.0, np.abs(rhs).max(initial=0.0)):
            return LpSolution(LpStatus.INFEASIBLE, iterations=tab.iterations)
        _drive_out_artificials(tab)

    cost_cols = np.concatenate([c_s, np.zeros(m)])
    outcome = tab.run(cost_cols, 0.0, max_iter)
    if outcome == "limit":
        return LpSolution(LpStatus.ITERATION_LIMIT, iterations=tab.iterations)
    if outcome == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, iterations=tab.iterations)
    xB, pi = tab.final_values(cost_cols[tab.basis])
    w = tab.nonbasic_values()
    w[tab.basis] = xB
    w_struct = w[:n]
    z = base.copy()
    np.add.at(z, idx, sgn * w_struct)
    y = -pi
    y = np.maximum(y, 0.0)
    return LpSolution(
        LpStatus.OPTIMAL,
        primal=z,
        objective_value=float(p.objective @ z),
        ineq_duals=y,
        iterations=tab.iterations,
    )


def _drive_out_artificials(tab: _Tableau):
    ncols = tab.ncols
    for r in np.flatnonzero(tab.basis >= ncols):
        row = tab.T[r].copy()
        row[tab.in_basis >= 0] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) <= _PIVOT_TOL:
            raise RuntimeError("artificial variable stuck in basis")
        value = tab.ub[j] if tab.at_upper[j] else 0.0
        tab.pivot(r, j)
        tab.xB[r] = value
        tab.at_upper[j] = False


def bound_multipliers(p: LpProblem, s: LpSolution):
    """Split ``c + A^T y`` into lower- and upper-bound multipliers."""
    r = p.objective + p.ineq_matrix.T @ s.ineq_duals
    return np.maximum(r, 0.0), np.maximum(-r, 0.0)


def dual_objective(p: LpProblem, s: LpSolution, tol: float = FEAS_TOL) -> float:
    """Lagrangian dual value ``-b^T y + l^T r_l - u^T r_u``.

    A multiplier above ``tol`` on an infinite bound makes the value ``-inf``;
    smaller ones are treated as round-off and dropped.
    """
    r_lo, r_hi = bound_multipliers(p, s)
    total = -float(p.ineq_rhs @ s.ineq_duals)
    for mult, bound, sgn in ((r_lo, p.var_lower, 1.0), (r_hi, p.var_upper, -1.0)):
        finite = np.isfinite(bound)
        if np.any(mult[~finite] > tol):
            return -np.inf
        total += sgn * float(mult[finite] @ bound[finite])
    return total


def check_kkt(p: LpProblem, s: LpSolution, tol: float = 1e-7) -> bool:
    """True iff ``s`` satisfies the KKT conditions of ``p`` within ``tol``.

    Stationarity is checked in its bound-constrained form: wherever
    ``c + A^T y`` is positive the variable must sit at its lower bound, and
    wherever it is negative at its upper bound.
    """
    if s.status is not LpStatus.OPTIMAL:
        return False
    z, y = s.primal, s.ineq_duals
    if z.shape != (p.num_vars,) or y.shape != (p.num_rows,):
        return False
    if np.any(z < p.var_lower - tol) or np.any(z > p.var_upper + tol):
        return False
    slack = p.ineq_rhs - p.ineq_matrix @ z
    if np.any(slack < -tol):
        return False
    if np.any(y < -tol):
        return False
    if np.any(np.abs(y * slack) > tol):
        return False
    r = p.objective + p.ineq_matrix.T @ y
    at_lo = np.isfinite(p.var_lower) & (np.abs(z - p.var_lower) <= tol)
    at_hi = np.isfinite(p.var_upper) & (np.abs(z - p.var_upper) <= tol)
    if np.any((r > tol) & ~at_lo):
        return False
    if np.any((r < -tol) & ~at_hi):
        return False
    return True

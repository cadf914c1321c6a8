"""
Local and centralized LPs for the min-max peak problem.

Every agent owns a bounded polytope ``X_i = {x : A_i x <= b_i, lo <= x <= hi}``
and an affine per-slot cost ``c_s * x_s``. The local problem of node ``i`` at
a given coupling vector ``delta_lambda`` is::

    minimize    rho
    subject to  c_s x_s + delta_lambda_s <= rho     s = 1..S
                x in X_i

The multipliers of the ``S`` epigraph rows form the node's dual vector ``mu``,
which always lies on the unit simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from peakshave import linprog
from peakshave.linprog import LpProblem, LpStatus

__all__ = [
    "InfeasibleLocalProblem",
    "LocalProblemData",
    "PrimalDualPair",
    "build_local",
    "solve_local",
    "eval_qi",
    "eval_eta_i",
    "solve_centralized",
]


class InfeasibleLocalProblem(ValueError):
    """Raised when an agent polytope is empty or a local LP fails."""


@dataclass(frozen=True, eq=False)
class LocalProblemData:
    """Polytope ``X_i`` and affine slot costs of one agent.

    Parameters
    ----------
    cost_coeffs : array_like, shape (S,)
        Cost of one unit of ``x_s`` in slot ``s``.
    poly_matrix, poly_rhs : array_like
        Rows of ``A_i x <= b_i``. May have zero rows.
    lower, upper : array_like, optional
        Finite box bounds, ``[0, 1]^S`` by default.
    check : bool
        Verify nonemptiness with a feasibility LP.
    """

    cost_coeffs: np.ndarray
    poly_matrix: np.ndarray
    poly_rhs: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    check: bool = True

    def __post_init__(self):
        c = np.asarray(self.cost_coeffs, dtype=float).reshape(-1)
        S = c.size
        if S == 0:
            raise ValueError("need at least one slot")
        A = np.asarray(self.poly_matrix, dtype=float)
        if A.size == 0:
            A = A.reshape(0, S)
        b = np.asarray(self.poly_rhs, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[1] != S or A.shape[0] != b.size:
            raise ValueError(f"poly_matrix {A.shape} / poly_rhs {b.shape} inconsistent with S={S}")
        lo = np.zeros(S) if self.lower is None else np.broadcast_to(np.asarray(self.lower, dtype=float), (S,)).copy()
        hi = np.ones(S) if self.upper is None else np.broadcast_to(np.asarray(self.upper, dtype=float), (S,)).copy()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("lower exceeds upper")
        for name, val in (("cost_coeffs", c), ("poly_matrix", A), ("poly_rhs", b), ("lower", lo), ("upper", hi)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        if self.check and not self.is_nonempty():
            raise InfeasibleLocalProblem("agent polytope is empty")

    @property
    def slot_count(self) -> int:
        return self.cost_coeffs.size

    def is_nonempty(self) -> bool:
        p = LpProblem(np.zeros(self.slot_count), self.poly_matrix, self.poly_rhs, self.lower, self.upper)
        return linprog.solve(p).status is LpStatus.OPTIMAL

    def contains(self, x, tol: float = 1e-8) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lower - tol) or np.any(x > self.upper + tol):
            return False
        return bool(np.all(self.poly_matrix @ x <= self.poly_rhs + tol))


@dataclass(frozen=True)
class PrimalDualPair:
    """Primal ``(x, rho)`` and epigraph multipliers ``mu`` of a local solve."""

    x: np.ndarray
    rho: float
    mu: np.ndarray


def _check_delta(data: LocalProblemData, delta_lambda) -> np.ndarray:
    d = np.asarray(delta_lambda, dtype=float).reshape(-1)
    if d.size != data.slot_count:
        raise ValueError(f"delta_lambda has length {d.size}, expected {data.slot_count}")
    return d


def build_local(data: LocalProblemData, delta_lambda) -> LpProblem:
    """LP over ``(x, rho)``; the first ``S`` rows are the epigraph rows."""
    d = _check_delta(data, delta_lambda)
    S = data.slot_count
    epi = np.hstack([np.diag(data.cost_coeffs), -np.ones((S, 1))])
    poly = np.hstack([data.poly_matrix, np.zeros((data.poly_matrix.shape[0], 1))])
    objective = np.zeros(S + 1)
    objective[S] = 1.0
    return LpProblem(
        objective,
        np.vstack([epi, poly]),
        np.concatenate([-d, data.poly_rhs]),
        np.append(data.lower, -np.inf),
        np.append(data.upper, np.inf),
    )


def solve_local(data: LocalProblemData, delta_lambda) -> PrimalDualPair:
    """Primal-dual optimal ``(x, rho, mu)`` of the local LP."""
    p = build_local(data, delta_lambda)
    sol = linprog.solve(p)
    if sol.status is not LpStatus.OPTIMAL:
        raise InfeasibleLocalProblem(f"local LP returned {sol.status.value}")
    S = data.slot_count
    return PrimalDualPair(x=sol.primal[:S], rho=float(sol.primal[S]), mu=sol.ineq_duals[:S])


def eval_qi(data: LocalProblemData, mu):
    """Return ``(min_{x in X_i} sum_s mu_s c_s x_s, argmin)``."""
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.size != data.slot_count:
        raise ValueError("mu has wrong length")
    p = LpProblem(mu * data.cost_coeffs, data.poly_matrix, data.poly_rhs, data.lower, data.upper)
    sol = linprog.solve(p)
    if sol.status is not LpStatus.OPTIMAL:
        raise InfeasibleLocalProblem(f"q_i LP returned {sol.status.value}")
    return sol.objective_value, sol.primal


def eval_eta_i(data: LocalProblemData, delta_lambda, certify: bool = False, samples: int = 0,
               rng=None, tol: float = 1e-7) -> float:
    """Value of ``max_{mu in simplex} q_i(mu) + mu . delta_lambda``.

    Computed as ``rho`` of the local LP. With ``certify`` the value is also
    rebuilt from the returned ``mu`` through an independent ``q_i`` solve, and
    ``samples`` random simplex points are checked to lie below it.
    """
    d = _check_delta(data, delta_lambda)
    pair = solve_local(data, d)
    if certify:
        q, _ = eval_qi(data, pair.mu)
        if abs(q + pair.mu @ d - pair.rho) > tol * max(1.0, abs(pair.rho)):
            raise AssertionError(f"saddle value {q + pair.mu @ d} differs from rho {pair.rho}")
    if samples:
        rng = np.random.default_rng(rng)
        for mu in rng.dirichlet(np.ones(data.slot_count), size=samples):
            q, _ = eval_qi(data, mu)
            if q + mu @ d > pair.rho + tol:
                raise AssertionError("sampled simplex point exceeds rho")
    return pair.rho


def solve_centralized(instance):
    """Solve the joint epigraph LP. Returns ``(P*, [x^1, ..., x^N])``."""
    instance = list(instance)
    if not instance:
        raise ValueError("empty instance")
    S = instance[0].slot_count
    if any(d.slot_count != S for d in instance):
        raise ValueError("all agents must share the same slot count")
    N = len(instance)
    nv = N * S + 1
    coupling = np.zeros((S, nv))
    coupling[:, -1] = -1.0
    blocks = []
    for i, d in enumerate(instance):
        coupling[np.arange(S), i * S + np.arange(S)] = d.cost_coeffs
        blk = np.zeros((d.poly_matrix.shape[0], nv))
        blk[:, i * S : (i + 1) * S] = d.poly_matrix
        blocks.append(blk)
    A = np.vstack([coupling] + blocks)
    b = np.concatenate([np.zeros(S)] + [d.poly_rhs for d in instance])
    c = np.zeros(nv)
    c[-1] = 1.0
    lo = np.concatenate([d.lower for d in instance] + [[-np.inf]])
    hi = np.concatenate([d.upper for d in instance] + [[np.inf]])
    sol = linprog.solve(LpProblem(c, A, b, lo, hi))
    if sol.status is not LpStatus.OPTIMAL:
        raise InfeasibleLocalProblem(f"centralized LP returned {sol.status.value}")
    xs = [sol.primal[i * S : (i + 1) * S].copy() for i in range(N)]
    return float(sol.primal[-1]), xs

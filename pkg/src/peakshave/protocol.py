"""
Per-node state machine of the distributed min-max algorithm.

Each round a node

1. gathers ``lambda^{ji}`` from its neighbors,
2. solves its local LP with ``delta_lambda = sum_j (lambda^{ij} - lambda^{ji})``,
   keeping the epigraph multipliers ``mu^i``,
3. gathers ``mu^j`` from its neighbors,
4. sets ``lambda^{ij} <- lambda^{ij} - gamma(t) (mu^i - mu^j)``.

Rounds are numbered from ``t = 1``, so the first update uses ``gamma(1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from peakshave.subproblem import LocalProblemData, PrimalDualPair, solve_local

__all__ = [
    "ProtocolError",
    "StepSchedule",
    "NodeState",
    "step_size",
    "init_state",
    "delta_lambda",
    "node_solve",
    "lambda_update",
]


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class StepSchedule:
    """``gamma(t) = scale * (1/t) ** exponent``.

    Exponents in ``(0.5, 1]`` give a diminishing, non-summable, square-summable
    sequence.
    """

    exponent: float = 0.8
    scale: float = 1.0
    kind: str = "power_law"

    def __post_init__(self):
        if self.kind != "power_law":
            raise ValueError(f"unsupported schedule {self.kind!r}")
        if not 0.5 < self.exponent <= 1.0:
            raise ValueError("exponent must lie in (0.5, 1]")
        if not self.scale > 0:
            raise ValueError("scale must be positive")


def step_size(sched: StepSchedule, t: int) -> float:
    if t < 1:
        raise ValueError("rounds start at t = 1")
    return sched.scale * (1.0 / t) ** sched.exponent


@dataclass
class NodeState:
    node_id: int
    local_data: LocalProblemData
    lambdas: dict = field(default_factory=dict)
    last_pair: PrimalDualPair | None = None
    last_delta: np.ndarray | None = None


def init_state(node_id: int, data: LocalProblemData, nbrs) -> NodeState:
    S = data.slot_count
    return NodeState(node_id, data, {j: np.zeros(S) for j in nbrs})


def _check_cover(state: NodeState, msgs: dict, what: str):
    if set(msgs) != set(state.lambdas):
        missing = sorted(set(state.lambdas) - set(msgs))
        extra = sorted(set(msgs) - set(state.lambdas))
        raise ProtocolError(f"node {state.node_id}: {what} missing from {missing}, unexpected from {extra}")


def delta_lambda(state: NodeState, incoming_lambda: dict) -> np.ndarray:
    _check_cover(state, incoming_lambda, "lambda")
    total = np.zeros(state.local_data.slot_count)
    for j in sorted(state.lambdas):
        total += state.lambdas[j] - np.asarray(incoming_lambda[j], dtype=float)
    return total


def node_solve(state: NodeState, incoming_lambda: dict) -> PrimalDualPair:
    """Solve the local LP for the current multipliers and store the result."""
    d = delta_lambda(state, incoming_lambda)
    pair = solve_local(state.local_data, d)
    state.last_pair = pair
    state.last_delta = d
    return pair


def lambda_update(state: NodeState, incoming_mu: dict, gamma: float) -> NodeState:
    if state.last_pair is None:
        raise ProtocolError(f"node {state.node_id}: update before solve")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    _check_cover(state, incoming_mu, "mu")
    mu_i = state.last_pair.mu
    for j in sorted(state.lambdas):
        state.lambdas[j] = state.lambdas[j] - gamma * (mu_i - np.asarray(incoming_mu[j], dtype=float))
    return state

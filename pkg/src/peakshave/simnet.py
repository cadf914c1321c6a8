"""
Synchronous round-based simulation of the distributed algorithm.

Every round is a pair of barrier-separated exchanges: all ``lambda`` messages
are delivered, every node solves, all ``mu`` messages are delivered, every
node updates. Message delivery is reliable and instantaneous.
"""

from __future__ import annotations

import io
import json
import time
from dataclasses import dataclass, field

import numpy as np

from peakshave import protocol
from peakshave.graph import Graph, neighbors
from peakshave.protocol import StepSchedule, step_size
from peakshave.subproblem import InfeasibleLocalProblem, solve_centralized, solve_local

__all__ = [
    "NodeFailure",
    "RunConfig",
    "Trace",
    "run",
    "consensus_residual",
    "STEP_INDEXING",
    "error_envelope",
    "loglog_slope",
]

STEP_INDEXING = "rounds t = 1, 2, ...; round t solves with lambda(t-1) and updates with gamma(t)"


class NodeFailure(RuntimeError):
    def __init__(self, node_id, round_no, reason):
        super().__init__(f"node {node_id} failed in round {round_no}: {reason}")
        self.node_id = node_id
        self.round_no = round_no


@dataclass(frozen=True)
class RunConfig:
    max_rounds: int = 3000
    schedule: StepSchedule = field(default_factory=StepSchedule)
    epsilon_consensus: float = 1e-6
    record_every: int = 1
    seed: int = 0
    compute_oracle: bool = True
    consensus_patience: int = 10

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")


@dataclass
class Trace:
    t: np.ndarray
    rho: np.ndarray
    sum_rho: np.ndarray
    cost_error: np.ndarray | None
    consensus_residual: np.ndarray
    aggregate_profile: np.ndarray
    final_x: np.ndarray
    p_star: float | None
    x_star: np.ndarray | None
    rounds_executed: int
    stop_reason: str
    wall_time: float = 0.0

    @property
    def n_agents(self) -> int:
        return self.rho.shape[1]

    def trace_csv(self) -> str:
        out = io.StringIO()
        cols = ["t", "sum_rho", "cost_error", "consensus_residual"] + [f"rho_{i}" for i in range(1, self.n_agents + 1)]
        out.write(",".join(cols) + "\n")
        for k in range(self.t.size):
            err = "" if self.cost_error is None else _fmt(self.cost_error[k])
            vals = [str(int(self.t[k])), _fmt(self.sum_rho[k]), err, _fmt(self.consensus_residual[k])]
            vals += [_fmt(v) for v in self.rho[k]]
            out.write(",".join(vals) + "\n")
        return out.getvalue()

    def profile_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(["slot", "aggregate"] + [f"agent_{i}" for i in range(1, self.n_agents + 1)]) + "\n")
        agg = self.final_x.sum(axis=0)
        for s in range(self.final_x.shape[1]):
            vals = [str(s + 1), _fmt(agg[s])] + [_fmt(v) for v in self.final_x[:, s]]
            out.write(",".join(vals) + "\n")
        return out.getvalue()

    def summary(self, include_wall_time: bool = True) -> dict:
        d = {
            "p_star": self.p_star,
            "final_sum_rho": float(self.sum_rho[-1]),
            "final_cost_error": None if self.cost_error is None else float(self.cost_error[-1]),
            "rounds_executed": self.rounds_executed,
            "stop_reason": self.stop_reason,
            "final_peak": float(self.final_x.sum(axis=0).max()),
            "step_indexing": STEP_INDEXING,
        }
        if include_wall_time:
            d["wall_time"] = self.wall_time
        return d

    def summary_json(self, include_wall_time: bool = True) -> str:
        return json.dumps(self.summary(include_wall_time), indent=2, default=_json_num) + "\n"


def _fmt(v) -> str:
    return f"{float(v):.12g}"


def _json_num(v):
    return float(f"{float(v):.12g}")


def consensus_residual(states) -> float:
    """Largest ``||mu^i - mu^j||_inf`` over the edges among ``states``."""
    by_id = {s.node_id: s for s in states}
    worst = 0.0
    for s in states:
        for j in s.lambdas:
            if j > s.node_id:
                diff = np.max(np.abs(s.last_pair.mu - by_id[j].last_pair.mu))
                worst = max(worst, float(diff))
    return worst


def _solve_task(args):
    data, delta = args
    return solve_local(data, delta)


def run(instance, graph: Graph, config: RunConfig, observer=None, executor=None) -> Trace:
    """Run the algorithm and record a :class:`Trace`.

    ``observer(t, states)`` is called after the update of every round.
    ``executor`` may be any object with an order-preserving ``map``; the
    result does not depend on it.
    """
    instance = list(instance)
    N = len(instance)
    if N != graph.n_nodes:
        raise ValueError(f"instance has {N} agents but graph has {graph.n_nodes} nodes")
    S = instance[0].slot_count
    started = time.perf_counter()
    p_star, x_star = None, None
    if config.compute_oracle:
        p_star, xs = solve_centralized(instance)
        x_star = np.array(xs)
    states = [protocol.init_state(i + 1, d, neighbors(graph, i + 1)) for i, d in enumerate(instance)]
    mapper = map if executor is None else executor.map

    rec_t, rec_rho, rec_res, rec_agg = [], [], [], []
    calm = 0
    stop_reason = "max_rounds"
    t = 0
    for t in range(1, config.max_rounds + 1):
        # lambda exchange: node i receives lambda^{ji} from each neighbor j
        deltas = []
        for s in states:
            incoming = {j: states[j - 1].lambdas[s.node_id] for j in s.lambdas}
            deltas.append(protocol.delta_lambda(s, incoming))
        try:
            pairs = list(mapper(_solve_task, [(s.local_data, d) for s, d in zip(states, deltas)]))
        except InfeasibleLocalProblem as exc:
            failed = _locate_failure(states, deltas)
            raise NodeFailure(failed, t, str(exc)) from exc
        for s, d, pair in zip(states, deltas, pairs):
            s.last_pair, s.last_delta = pair, d
        # mu exchange, then every node updates
        residual = consensus_residual(states)
        gamma = step_size(config.schedule, t)
        mus = [s.last_pair.mu for s in states]
        for s in states:
            protocol.lambda_update(s, {j: mus[j - 1] for j in s.lambdas}, gamma)
        if observer is not None:
            observer(t, states)

        calm = calm + 1 if residual < config.epsilon_consensus else 0
        done = calm >= config.consensus_patience
        if (t - 1) % config.record_every == 0 or done or t == config.max_rounds:
            rec_t.append(t)
            rec_rho.append([s.last_pair.rho for s in states])
            rec_res.append(residual)
            rec_agg.append(sum(s.local_data.cost_coeffs * s.last_pair.x for s in states))
        if done:
            stop_reason = "consensus"
            break

    rho = np.array(rec_rho)
    sum_rho = rho.sum(axis=1)
    return Trace(
        t=np.array(rec_t, dtype=np.int64),
        rho=rho,
        sum_rho=sum_rho,
        cost_error=None if p_star is None else np.abs(sum_rho - p_star),
        consensus_residual=np.array(rec_res),
        aggregate_profile=np.array(rec_agg).reshape(len(rec_t), S),
        final_x=np.array([s.last_pair.x for s in states]),
        p_star=p_star,
        x_star=x_star,
        rounds_executed=t,
        stop_reason=stop_reason,
        wall_time=time.perf_counter() - started,
    )


def _locate_failure(states, deltas):
    for s, d in zip(states, deltas):
        try:
            solve_local(s.local_data, d)
        except InfeasibleLocalProblem:
            return s.node_id
    return None


def error_envelope(t, err, at: float, width: float = 0.1) -> float:
    """Upper envelope of ``err`` at round ``at``: max over ``[at / (1 + width), at]``."""
    t = np.asarray(t, dtype=float)
    err = np.asarray(err, dtype=float)
    window = (t >= at / (1.0 + width)) & (t <= at)
    if not window.any():
        raise ValueError(f"no recorded rounds near t={at}")
    return float(err[window].max())


def loglog_slope(t, err, t_lo: float, t_hi: float, points: int = 25, width: float = 0.1) -> float:
    """Least-squares slope of ``log envelope`` against ``log t`` on ``[t_lo, t_hi]``."""
    grid = np.geomspace(t_lo, t_hi, points)
    env = np.array([error_envelope(t, err, g, width) for g in grid])
    if np.any(env <= 0):
        raise ValueError("envelope must be positive for a log fit")
    slope, _ = np.polyfit(np.log(grid), np.log(env), 1)
    return float(slope)

"""Acceptance criteria, each printed as one PASS/FAIL line.

The two long runs (small instance and 15-agent experiment) are executed once
per module with an invariant monitor attached; the monitor times itself so
the runtime criteria measure the algorithm alone.
"""

import time

import numpy as np
import pytest

from conftest import three_agent_instance
from oracles import forward_temperatures, random_local_data, random_lp, vertex_enumeration
from peakshave import dsm, graph
from peakshave.dsm import ParamRanges
from peakshave.linprog import LpProblem, check_kkt, solve
from peakshave.protocol import StepSchedule
from peakshave.simnet import RunConfig, error_envelope, loglog_slope, run
from peakshave.subproblem import eval_eta_i, eval_qi, solve_local

# the literal forcing sign cools the house towards -T_out; stronger heaters keep the band reachable
LITERAL_RANGES = ParamRanges(gain=(40.0, 60.0))

EXPERIMENT_SEED = 7


class InvariantMonitor:
    """Worst per-round violation of each protocol invariant."""

    def __init__(self):
        self.worst = dict(simplex=0.0, antisymmetry=0.0, telescoping=0.0, membership=0.0, eta_identity=0.0)
        self.rounds = 0
        self.elapsed = 0.0

    def _bump(self, key, value):
        self.worst[key] = max(self.worst[key], float(value))

    def __call__(self, t, states):
        start = time.perf_counter()
        self.rounds += 1
        total = 0.0
        for s in states:
            data, pair, d = s.local_data, s.last_pair, s.last_delta
            self._bump("simplex", max(-pair.mu.min(), abs(pair.mu.sum() - 1.0)))
            viol = np.concatenate([data.poly_matrix @ pair.x - data.poly_rhs, data.lower - pair.x,
                                   pair.x - data.upper])
            self._bump("membership", viol.max(initial=0.0))
            # rho against a fresh eta_i evaluation and against q_i at the returned mu
            q, _ = eval_qi(data, pair.mu)
            self._bump("eta_identity", max(abs(pair.rho - eval_eta_i(data, d)), abs(q + pair.mu @ d - pair.rho)))
            for j, lam in s.lambdas.items():
                self._bump("antisymmetry", np.abs(lam + states[j - 1].lambdas[s.node_id]).max())
                total = total + lam - states[j - 1].lambdas[s.node_id]
        self._bump("telescoping", np.abs(total).max(initial=0.0))
        self.elapsed += time.perf_counter() - start

    def violations(self):
        limits = dict(simplex=1e-7, antisymmetry=1e-12, telescoping=1e-10, membership=1e-8, eta_identity=1e-7)
        return {k: (self.worst[k], limits[k]) for k in limits if not self.worst[k] <= limits[k]}


def timed_run(instance, g, config):
    monitor = InvariantMonitor()
    start = time.perf_counter()
    trace = run(instance, g, config, observer=monitor)
    runtime = time.perf_counter() - start - monitor.elapsed
    return trace, monitor, runtime


@pytest.fixture(scope="module")
def small_run():
    cfg = RunConfig(max_rounds=20000, schedule=StepSchedule(0.8))
    return timed_run(three_agent_instance(), graph.path_graph(3), cfg)


@pytest.fixture(scope="module")
def experiment_run():
    instance = dsm.gen_instance(15, 50, seed=EXPERIMENT_SEED)
    g = graph.gen_erdos_renyi(15, 0.2, EXPERIMENT_SEED)
    cfg = RunConfig(max_rounds=3000, schedule=StepSchedule(0.8))
    trace, monitor, runtime = timed_run(instance, g, cfg)
    return instance, trace, monitor, runtime


def test_criterion_1_lp_oracle(report):
    rng = np.random.default_rng(20240101)
    worst_obj, kkt_fail = 0.0, 0
    start = time.perf_counter()
    for _ in range(200):
        c, A, b, lo, hi = random_lp(rng)
        sol = solve(LpProblem(c, A, b, lo, hi))
        expected, _ = vertex_enumeration(c, A, b, lo, hi)
        if not sol.optimal or expected is None:
            worst_obj = np.inf
            continue
        worst_obj = max(worst_obj, abs(sol.objective_value - expected))
        kkt_fail += not check_kkt(LpProblem(c, A, b, lo, hi), sol, 1e-7)
    elapsed = time.perf_counter() - start
    ok = worst_obj <= 1e-7 and kkt_fail == 0 and elapsed < 10
    report(1, ok, f"200 LPs, max |obj - oracle| = {worst_obj:.2e}, KKT failures = {kkt_fail}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_saddle_identity(report):
    rng = np.random.default_rng(31337)
    above, at_mu, best_gap, sample_gap = 0.0, 0.0, 0.0, 0.0
    start = time.perf_counter()
    for _ in range(50):
        data = random_local_data(rng)
        S = data.slot_count
        d = rng.normal(size=S)
        pair = solve_local(data, d)
        sampled = max(eval_qi(data, mu)[0] + mu @ d for mu in rng.dirichlet(np.ones(S), size=200))
        at_returned = eval_qi(data, pair.mu)[0] + pair.mu @ d
        above = max(above, sampled - pair.rho)
        at_mu = max(at_mu, abs(at_returned - pair.rho))
        best_gap = max(best_gap, pair.rho - max(sampled, at_returned))
        sample_gap = max(sample_gap, pair.rho - sampled)
    elapsed = time.perf_counter() - start
    ok = above <= 1e-7 and at_mu <= 1e-7 and 0 <= best_gap + 1e-7 and best_gap <= 1e-4 and elapsed < 30
    report(2, ok, f"max(sampled - rho) = {above:.2e}, |value at mu - rho| = {at_mu:.2e}, "
                  f"rho - max(samples, mu) = {best_gap:.2e} (samples alone: {sample_gap:.2e}), {elapsed:.2f}s")
    assert ok


@pytest.mark.slow
def test_criterion_3_small_convergence(report, small_run):
    trace, _, runtime = small_run
    bound = 1e-3 * max(1.0, abs(trace.p_star))
    hits = trace.t[trace.cost_error <= bound]
    first = int(hits[0]) if hits.size else None
    ok = first is not None and first <= 20000 and runtime < 60
    report(3, ok, f"P* = {trace.p_star:.12g}, first t with error <= {bound:g}: {first}, "
                  f"final error {trace.cost_error[-1]:.2e} at t={trace.t[-1]}, {runtime:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_4_full_experiment(report, experiment_run):
    _, trace, _, runtime = experiment_run
    rel = trace.cost_error / abs(trace.p_star)
    at = int(np.searchsorted(trace.t, 3000))
    env300 = error_envelope(trace.t, trace.cost_error, 300)
    env3000 = error_envelope(trace.t, trace.cost_error, 3000)
    ok = trace.t[at] == 3000 and rel[at] < 0.05 and env3000 < env300 and runtime < 600
    report(4, ok, f"P* = {trace.p_star:.12g}, relative error at t=3000 = {rel[at]:.4%}, "
                  f"envelope 300 -> 3000: {env300:.3e} -> {env3000:.3e}, {runtime:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_5_sublinear_rate(report, experiment_run):
    _, trace, _, _ = experiment_run
    slope = loglog_slope(trace.t, trace.cost_error, 100, 3000)
    ok = -1.5 <= slope <= -0.25
    report(5, ok, f"log-log envelope slope over [100, 3000] = {slope:.3f}")
    assert ok


@pytest.mark.slow
def test_criterion_6_invariants(report, small_run, experiment_run):
    monitors = {"small": small_run[1], "experiment": experiment_run[2]}
    failures = {name: m.violations() for name, m in monitors.items() if m.violations()}
    worst = {k: max(m.worst[k] for m in monitors.values()) for k in monitors["small"].worst}
    rounds = sum(m.rounds for m in monitors.values())
    ok = not failures
    report(6, ok, f"{rounds} rounds checked; worst " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))
    assert ok, failures


def test_criterion_7_single_agent(report, triangle):
    tcl = dsm.gen_instance(1, 50, seed=EXPERIMENT_SEED)[0]
    worst = 0.0
    for data in (triangle, tcl):
        trace = run([data], graph.Graph(1, frozenset()), RunConfig(max_rounds=20))
        assert trace.t[0] == 1
        worst = max(worst, float(np.abs(trace.sum_rho - trace.p_star).max()))
    ok = worst <= 1e-9
    report(7, ok, f"max |sum_rho - P*| over all rounds = {worst:.2e}")
    assert ok


def _band_ok(p, dyn, x, tol=1e-9):
    T = forward_temperatures(dyn.a, dyn.b_u, dyn.forcing, p.T0, x)
    lo, hi = p.band()
    return bool(np.all(x >= -tol) and np.all(x <= 1 + tol) and np.all(T >= lo - tol) and np.all(T <= hi + tol))


def _samples(rng, data, k):
    """Uniform points, convex combinations of LP vertices, and perturbations of those."""
    S = data.slot_count
    verts = [solve_local(data, rng.normal(scale=0.5, size=S)).x for _ in range(4)]
    out = list(rng.uniform(0, 1, (k // 3, S)))
    while len(out) < 2 * k // 3:
        w = rng.dirichlet(np.ones(len(verts)))
        out.append(w @ np.array(verts))
    while len(out) < k:
        out.append(np.clip(out[len(out) - k // 3] + rng.normal(scale=0.02, size=S), 0, 1))
    return out


@pytest.mark.slow
def test_criterion_8_dsm_consistency(report, experiment_run):
    rng = np.random.default_rng(8)
    counts = {}
    mismatches = 0
    for convention, ranges in (("exact_zoh", None), ("paper_literal", LITERAL_RANGES)):
        inside = outside = 0
        for seed in range(3):
            sc = dsm.gen_scenario(5, 50, ranges, seed=seed, sign_convention=convention)
            for p, data in zip(sc.devices, sc.instance()):
                dyn = dsm.discretize(p, convention)
                for x in _samples(rng, data, 100):
                    member = data.contains(x, 1e-9)
                    mismatches += member != _band_ok(p, dyn, x)
                    inside += member
                    outside += not member
        counts[convention] = (inside, outside)
    instance, trace, _, _ = experiment_run
    naive_peak = float(sum(solve_local(d, np.zeros(d.slot_count)).x for d in instance).max())
    final_peak = float(trace.final_x.sum(axis=0).max())
    nonvacuous = all(i > 0 and o > 0 for i, o in counts.values())
    ok = mismatches == 0 and nonvacuous and final_peak <= naive_peak
    report(8, ok, f"membership/simulation mismatches = {mismatches} "
                  f"(inside/outside per convention {counts}); peak {final_peak:.6g} <= naive {naive_peak:.6g}")
    assert ok

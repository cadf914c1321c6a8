"""
Command-line experiment runner.

Subcommands::

    peakshave run           generate or load a scenario, run, write traces
    peakshave validate      check every agent polytope of a scenario file
    peakshave gen-scenario  sample a TCL scenario and write it as JSON
    peakshave gen-graph     sample or build a graph and write its edge list

Exit codes: 0 success, 2 bad arguments or configuration, 3 infeasible
scenario, 4 LP or node failure, 5 graph error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from peakshave import dsm, figures, graph, simnet
from peakshave.graph import GraphError
from peakshave.protocol import StepSchedule
from peakshave.simnet import NodeFailure, RunConfig
from peakshave.subproblem import InfeasibleLocalProblem

log = logging.getLogger("peakshave")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_LP, EXIT_GRAPH = 0, 2, 3, 4, 5


class ConfigError(ValueError):
    pass


def parse_step(text: str) -> StepSchedule:
    """``pow:EXP`` or ``pow:EXP:SCALE``."""
    parts = text.split(":")
    if parts[0] != "pow" or len(parts) not in (2, 3):
        raise ConfigError(f"bad step spec {text!r}; expected pow:EXP[:SCALE]")
    try:
        exponent = float(parts[1])
        scale = float(parts[2]) if len(parts) == 3 else 1.0
        return StepSchedule(exponent=exponent, scale=scale)
    except ValueError as exc:
        raise ConfigError(f"bad step spec {text!r}: {exc}") from None


def make_graph(spec: str, n: int, seed: int) -> graph.Graph:
    """``er:P``, ``path``, ``cycle``, ``complete`` or a path to an edge-list file."""
    if spec.startswith("er:"):
        try:
            p = float(spec[3:])
        except ValueError:
            raise ConfigError(f"bad graph spec {spec!r}") from None
        return graph.gen_erdos_renyi(n, p, seed)
    builders = {"path": graph.path_graph, "cycle": graph.cycle_graph, "complete": graph.complete_graph}
    if spec in builders:
        return builders[spec](n)
    path = Path(spec)
    if path.exists():
        return graph.read_edge_list(path.read_text())
    raise ConfigError(f"unknown graph spec {spec!r}")


def _load_ranges(path):
    if path is None:
        return None
    return dsm.ParamRanges.from_dict(json.loads(Path(path).read_text()))


def _scenario_from_args(args) -> dsm.Scenario:
    if args.scenario:
        return dsm.load_scenario(Path(args.scenario).read_text())
    return dsm.gen_scenario(args.agents, args.slots, _load_ranges(args.ranges), args.seed,
                            args.sign_convention)


def cmd_run(args) -> int:
    scenario = _scenario_from_args(args)
    instance = scenario.instance()
    n = len(instance)
    gseed = args.seed if args.graph_seed is None else args.graph_seed
    g = graph.read_edge_list(Path(args.graph_file).read_text()) if args.graph_file else make_graph(args.graph, n, gseed)
    if g.n_nodes != n:
        raise ConfigError(f"scenario has {n} agents but graph has {g.n_nodes} nodes")
    if not graph.is_connected(g):
        raise GraphError("communication graph is not connected")
    config = RunConfig(
        max_rounds=args.rounds,
        schedule=parse_step(args.step),
        epsilon_consensus=args.epsilon,
        record_every=args.record_every,
        seed=args.seed,
        compute_oracle=args.oracle,
    )
    trace = simnet.run(instance, g, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.csv").write_text(trace.trace_csv())
    (out / "profile.csv").write_text(trace.profile_csv())
    (out / "summary.json").write_text(trace.summary_json())
    (out / "scenario.json").write_text(dsm.dump_scenario(scenario))
    (out / "graph.txt").write_text(graph.write_edge_list(g))
    figures.emit_figures_data(trace, out)
    if args.plot:
        figures.render_figures(trace, out)
    summary = trace.summary()
    print(f"rounds={summary['rounds_executed']} sum_rho={summary['final_sum_rho']:.12g}"
          + ("" if trace.p_star is None else f" p_star={trace.p_star:.12g} cost_error={summary['final_cost_error']:.12g}"))
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = dsm.load_scenario(Path(args.scenario).read_text())
    bad = 0
    for i, p in enumerate(scenario.devices, start=1):
        try:
            dsm.build_polytope(dsm.discretize(p, scenario.sign_convention), p)
            print(f"agent {i}: feasible")
        except dsm.InfeasibleScenario:
            print(f"agent {i}: INFEASIBLE")
            bad += 1
    return EXIT_INFEASIBLE if bad else EXIT_OK


def cmd_gen_scenario(args) -> int:
    sc = dsm.gen_scenario(args.agents, args.slots, _load_ranges(args.ranges), args.seed, args.sign_convention)
    _write(args.out, dsm.dump_scenario(sc))
    return EXIT_OK


def cmd_gen_graph(args) -> int:
    _write(args.out, graph.write_edge_list(make_graph(args.graph, args.nodes, args.seed)))
    return EXIT_OK


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def build_parser() -> tuple[argparse.ArgumentParser, argparse.ArgumentParser]:
    parser = argparse.ArgumentParser(prog="peakshave", description=__doc__.splitlines()[1])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the distributed algorithm")
    run.add_argument("--config", help="JSON file with option defaults (same names as the flags)")
    run.add_argument("--scenario", help="scenario JSON; otherwise one is generated")
    run.add_argument("--agents", type=int, default=15)
    run.add_argument("--slots", type=int, default=50)
    run.add_argument("--ranges", help="JSON file with device parameter ranges")
    run.add_argument("--sign-convention", choices=dsm.SIGN_CONVENTIONS, default="exact_zoh")
    run.add_argument("--graph", default="er:0.2", help="er:P, path, cycle, complete or an edge-list file")
    run.add_argument("--graph-file", help="edge-list file (overrides --graph)")
    run.add_argument("--graph-seed", type=int, help="seed for random graphs (defaults to --seed)")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--rounds", type=int, default=3000)
    run.add_argument("--step", default="pow:0.8", help="pow:EXP[:SCALE], gamma(t) = SCALE * t^-EXP")
    run.add_argument("--epsilon", type=float, default=1e-6, help="consensus stopping threshold")
    run.add_argument("--record-every", type=int, default=1)
    run.add_argument("--oracle", action=argparse.BooleanOptionalAction, default=False,
                     help="solve the centralized problem for P* and cost errors")
    run.add_argument("--plot", action="store_true", help="also render fig1-3 as PNG (needs matplotlib)")
    run.add_argument("--out", default="results")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check feasibility of every agent in a scenario")
    val.add_argument("--scenario", required=True)
    val.set_defaults(func=cmd_validate)

    gs = sub.add_parser("gen-scenario", help="generate a TCL scenario")
    gs.add_argument("--agents", type=int, default=15)
    gs.add_argument("--slots", type=int, default=50)
    gs.add_argument("--seed", type=int, default=0)
    gs.add_argument("--ranges")
    gs.add_argument("--sign-convention", choices=dsm.SIGN_CONVENTIONS, default="exact_zoh")
    gs.add_argument("--out", default="-")
    gs.set_defaults(func=cmd_gen_scenario)

    gg = sub.add_parser("gen-graph", help="generate a communication graph")
    gg.add_argument("--nodes", type=int, default=15)
    gg.add_argument("--graph", default="er:0.2")
    gg.add_argument("--seed", type=int, default=0)
    gg.add_argument("--out", default="-")
    gg.set_defaults(func=cmd_gen_graph)
    return parser, run


def _apply_config(parser, run_parser, argv):
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        known = {a.dest for a in run_parser._actions}
        unknown = set(k.replace("-", "_") for k in cfg) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        run_parser.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    parser, run_parser = build_parser()
    try:
        args = _apply_config(parser, run_parser, argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except dsm.InfeasibleScenario as exc:
        print(f"infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NodeFailure, InfeasibleLocalProblem) as exc:
        print(f"LP failure: {exc}", file=sys.stderr)
        return EXIT_LP
    except GraphError as exc:
        print(f"graph error: {exc}", file=sys.stderr)
        return EXIT_GRAPH
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

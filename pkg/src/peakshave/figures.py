"""
Figure data and rendering for a finished run.

``fig1.csv``  local costs ``rho_i(t)``, their sum and the centralized optimum
``fig2.csv``  final per-agent profiles and their slot-wise aggregate
``fig3.csv``  absolute cost error, clipped away from zero for log axes

PNG rendering needs matplotlib and is only done on request.
"""

from __future__ import annotations

import io
import logging
from pathlib import Path

import numpy as np

from peakshave.simnet import Trace

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-16


def _fmt(v) -> str:
    return f"{float(v):.12g}"


def fig1_csv(trace: Trace) -> str:
    out = io.StringIO()
    N = trace.n_agents
    out.write(",".join(["t"] + [f"rho_{i}" for i in range(1, N + 1)] + ["sum_rho", "p_star"]) + "\n")
    pstar = "" if trace.p_star is None else _fmt(trace.p_star)
    for k in range(trace.t.size):
        row = [str(int(trace.t[k]))] + [_fmt(v) for v in trace.rho[k]] + [_fmt(trace.sum_rho[k]), pstar]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def fig2_csv(trace: Trace) -> str:
    out = io.StringIO()
    N = trace.n_agents
    out.write(",".join(["slot"] + [f"agent_{i}" for i in range(1, N + 1)] + ["aggregate"]) + "\n")
    agg = trace.final_x.sum(axis=0)
    for s in range(trace.final_x.shape[1]):
        row = [str(s + 1)] + [_fmt(v) for v in trace.final_x[:, s]] + [_fmt(agg[s])]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def fig3_csv(trace: Trace) -> str | None:
    if trace.cost_error is None:
        return None
    out = io.StringIO()
    out.write("t,cost_error\n")
    for t, e in zip(trace.t, np.maximum(trace.cost_error, LOG_FLOOR)):
        out.write(f"{int(t)},{_fmt(e)}\n")
    return out.getvalue()


def emit_figures_data(trace: Trace, outdir) -> list:
    """Write fig1..fig3 CSVs into ``outdir``; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in (("fig1.csv", fig1_csv(trace)), ("fig2.csv", fig2_csv(trace)), ("fig3.csv", fig3_csv(trace))):
        if text is None:
            log.warning("no centralized optimum in trace; skipping %s", name)
            continue
        path = outdir / name
        path.write_text(text)
        written.append(path)
    return written


def render_figures(trace: Trace, outdir, fmt: str = "png") -> list:
    """Plot the three figures with matplotlib (Agg backend)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for i in range(trace.n_agents):
        ax.plot(trace.t, trace.rho[:, i], lw=0.8)
    ax.plot(trace.t, trace.sum_rho, "k:", lw=1.5, label=r"$\sum_i \rho_i$")
    if trace.p_star is not None:
        ax.axhline(trace.p_star, color="k", ls="-.", lw=1.0, label=r"$P^\star$")
    ax.set_xlabel("iteration $t$")
    ax.set_ylabel(r"$\rho_i(t)$")
    ax.legend(loc="best")
    written.append(_save(fig, outdir / f"fig1.{fmt}"))

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    slots = np.arange(1, trace.final_x.shape[1] + 1)
    for i in range(trace.n_agents):
        ax.plot(slots, trace.final_x[i], lw=0.8)
    ax.plot(slots, trace.final_x.sum(axis=0), "k:", lw=1.5, label="aggregate")
    ax.set_xlabel("slot $s$")
    ax.set_ylabel("consumption")
    ax.legend(loc="best")
    written.append(_save(fig, outdir / f"fig2.{fmt}"))

    if trace.cost_error is not None:
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.semilogy(trace.t, np.maximum(trace.cost_error, LOG_FLOOR), "k", lw=1.0)
        ax.set_xlabel("iteration $t$")
        ax.set_ylabel(r"$|\sum_i \rho_i(t) - P^\star|$")
        written.append(_save(fig, outdir / f"fig3.{fmt}"))
    else:
        log.warning("no centralized optimum in trace; skipping fig3.%s", fmt)
    return written


def _save(fig, path):
    import matplotlib.pyplot as plt

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path

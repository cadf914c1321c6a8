"""
Thermostatically controlled load (TCL) scenarios.

A TCL follows ``dT/dtau = -alpha (T - T_out) + Q x`` with the duty cycle
``x in [0, 1]`` held constant over each sampling interval. Sampling gives the
affine recursion ``T_{s+1} = a T_s + b_u x_s + forcing_s`` which is unrolled
into linear constraints on ``x`` that keep every sampled temperature inside
the comfort band.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from peakshave.subproblem import InfeasibleLocalProblem, LocalProblemData

__all__ = [
    "SIGN_CONVENTIONS",
    "InfeasibleScenario",
    "TclParams",
    "AffineDynamics",
    "ParamRanges",
    "Scenario",
    "discretize",
    "temperature_map",
    "simulate",
    "build_polytope",
    "gen_params",
    "gen_scenario",
    "gen_instance",
    "load_scenario",
    "dump_scenario",
]

SIGN_CONVENTIONS = ("exact_zoh", "paper_literal")


class InfeasibleScenario(ValueError):
    """The comfort band cannot be met by any admissible input sequence."""


@dataclass
class TclParams:
    alpha: float
    Q: float
    delta_tau: float
    T0: float
    T_out: list
    T_min: float | list
    T_max: float | list

    def __post_init__(self):
        self.T_out = [float(v) for v in np.asarray(self.T_out, dtype=float).reshape(-1)]
        if not self.T_out:
            raise ValueError("T_out must have at least one slot")
        for name in ("T_min", "T_max"):
            val = getattr(self, name)
            if np.ndim(val):
                val = [float(v) for v in val]
                if len(val) != self.S:
                    raise ValueError(f"{name} must be scalar or have length S={self.S}")
            else:
                val = float(val)
            setattr(self, name, val)
        if not (self.alpha > 0 and self.Q > 0 and self.delta_tau > 0):
            raise ValueError("alpha, Q and delta_tau must be positive")
        lo, hi = self.band()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("comfort band must be finite")
        if np.any(lo >= hi):
            raise ValueError("T_min must be below T_max")

    @property
    def S(self) -> int:
        return len(self.T_out)

    def band(self):
        """Per-slot ``(T_min, T_max)`` arrays of length S."""
        return (np.broadcast_to(np.asarray(self.T_min, dtype=float), (self.S,)),
                np.broadcast_to(np.asarray(self.T_max, dtype=float), (self.S,)))


@dataclass(frozen=True)
class AffineDynamics:
    a: float
    b_u: float
    forcing: np.ndarray

    @property
    def S(self) -> int:
        return self.forcing.size


def discretize(p: TclParams, sign_convention: str = "exact_zoh") -> AffineDynamics:
    """Zero-order-hold sampling of the thermal model.

    ``exact_zoh`` relaxes toward the outside temperature (forcing
    ``+(1-a) T_out``). ``paper_literal`` keeps the minus sign on ``T_out``
    found in the commonly printed recursion; it is not the sampled continuous
    model and exists only for reproduction attempts.
    """
    if sign_convention not in SIGN_CONVENTIONS:
        raise ValueError(f"unknown sign convention {sign_convention!r}")
    a = math.exp(-p.alpha * p.delta_tau)
    b_u = (1.0 - a) * p.Q / p.alpha
    sign = 1.0 if sign_convention == "exact_zoh" else -1.0
    forcing = sign * (1.0 - a) * np.asarray(p.T_out, dtype=float)
    return AffineDynamics(a=a, b_u=b_u, forcing=forcing)


def temperature_map(dyn: AffineDynamics, T0: float):
    """Return ``(G, h)`` with ``[T_1, ..., T_S] = G x + h``."""
    S = dyn.S
    powers = dyn.a ** np.arange(S)
    # G[s, k] = a^(s-k) b_u for k <= s (row s holds T_{s+1})
    lag = np.subtract.outer(np.arange(S), np.arange(S))
    G = np.where(lag >= 0, dyn.a ** np.maximum(lag, 0), 0.0)
    h = dyn.a * powers * T0 + G @ dyn.forcing
    return G * dyn.b_u, h


def simulate(dyn: AffineDynamics, T0: float, x) -> np.ndarray:
    """Step the recursion; returns ``[T_1, ..., T_S]``."""
    x = np.asarray(x, dtype=float)
    T = np.empty(dyn.S)
    cur = T0
    for s in range(dyn.S):
        cur = dyn.a * cur + dyn.b_u * x[s] + dyn.forcing[s]
        T[s] = cur
    return T


def build_polytope(dyn: AffineDynamics, p: TclParams, check: bool = True) -> LocalProblemData:
    """Comfort-band rows ``T_min <= G x + h <= T_max`` plus the unit box.

    Rows ``0..S-1`` are the upper limits, rows ``S..2S-1`` the lower limits.
    """
    if dyn.S != p.S:
        raise ValueError("dynamics and parameters disagree on S")
    G, h = temperature_map(dyn, p.T0)
    lo, hi = p.band()
    A = np.vstack([G, -G])
    b = np.concatenate([hi - h, h - lo])
    try:
        return LocalProblemData(np.ones(p.S), A, b, check=check)
    except InfeasibleLocalProblem as exc:
        raise InfeasibleScenario("comfort band unreachable for this device") from exc


@dataclass
class ParamRanges:
    """Uniform sampling ranges for generated devices.

    ``gain`` is ``Q / alpha``, the steady-state temperature lift at full duty.
    ``T_out`` is ``mean - amp * cos(2 pi (s + phase) / S)`` over the horizon.
    """

    alpha: tuple = (0.1, 0.5)
    gain: tuple = (20.0, 40.0)
    T0: tuple = (18.0, 24.0)
    delta_tau: float = 1.0
    T_min: float = 18.0
    T_max: float = 24.0
    T_out_mean: float = 7.5
    T_out_amp: float = 7.5
    T_out_phase: tuple = (0.0, 0.0)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


@dataclass
class Scenario:
    S: int
    devices: list = field(default_factory=list)
    sign_convention: str = "exact_zoh"

    def instance(self, check: bool = True):
        out = []
        for i, p in enumerate(self.devices):
            try:
                out.append(build_polytope(discretize(p, self.sign_convention), p, check=check))
            except InfeasibleScenario as exc:
                raise InfeasibleScenario(f"agent {i + 1}: {exc}") from None
        return out


def gen_params(rng: np.random.Generator, S: int, ranges: ParamRanges) -> TclParams:
    alpha = rng.uniform(*ranges.alpha)
    gain = rng.uniform(*ranges.gain)
    T0 = rng.uniform(*ranges.T0)
    phase = rng.uniform(*ranges.T_out_phase)
    s = np.arange(S)
    T_out = ranges.T_out_mean - ranges.T_out_amp * np.cos(2 * np.pi * (s + phase) / S)
    return TclParams(alpha=alpha, Q=alpha * gain, delta_tau=ranges.delta_tau, T0=T0,
                     T_out=T_out, T_min=ranges.T_min, T_max=ranges.T_max)


def gen_scenario(n_agents: int, S: int, param_ranges: ParamRanges | None = None, seed: int = 0,
                 sign_convention: str = "exact_zoh", max_retries: int = 100) -> Scenario:
    """Sample ``n_agents`` feasible devices; resamples a device when its band is unreachable."""
    if n_agents < 1 or S < 1:
        raise ValueError("n_agents and S must be positive")
    ranges = param_ranges or ParamRanges()
    rng = np.random.default_rng(seed)
    devices = []
    for i in range(n_agents):
        for _ in range(max_retries):
            p = gen_params(rng, S, ranges)
            try:
                build_polytope(discretize(p, sign_convention), p)
            except InfeasibleScenario:
                continue
            devices.append(p)
            break
        else:
            raise InfeasibleScenario(f"agent {i + 1}: no feasible device after {max_retries} draws")
    return Scenario(S=S, devices=devices, sign_convention=sign_convention)


def gen_instance(n_agents: int, S: int, param_ranges: ParamRanges | None = None, seed: int = 0,
                 sign_convention: str = "exact_zoh", max_retries: int = 100):
    return gen_scenario(n_agents, S, param_ranges, seed, sign_convention, max_retries).instance(check=False)


def dump_scenario(sc: Scenario) -> str:
    return json.dumps(
        {"S": sc.S, "sign_convention": sc.sign_convention, "devices": [asdict(p) for p in sc.devices]},
        indent=2,
    )


def load_scenario(text: str) -> Scenario:
    d = json.loads(text)
    S = int(d["S"])
    devices = [TclParams(**p) for p in d["devices"]]
    if any(p.S != S for p in devices):
        raise ValueError("device T_out length does not match S")
    return Scenario(S=S, devices=devices, sign_convention=d.get("sign_convention", "exact_zoh"))

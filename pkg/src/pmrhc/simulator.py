"""Deterministic event loop over [0, T], metrics, config generation and sweeps."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from . import config as cfgmod
from .controller import Decision, World
from .geometry import NetworkGraph
from .sensing import NeighborhoodSnapshot, value_fn
from .transit import MethodParams, fo1_params, fo2_params, optimize_transit


def alpha_from_budget(beta: float, y_ref: float, v_max: float) -> float:
    """Energy weight that makes energy a fraction beta of the combined scale, via a speed reference."""
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    if y_ref <= 0.0 or v_max <= 0.0:
        raise ValueError("references must be positive")
    return beta / (1.0 - beta) * y_ref**2 / v_max**4


def alpha_from_accel(beta: float, u_max: float) -> float:
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    if u_max <= 0.0:
        raise ValueError("reference acceleration must be positive")
    return beta / (1.0 - beta) / u_max**2


@dataclass
class SimConfig:
    graph: NetworkGraph
    placements: dict[int, int]
    T: float
    H: float
    params: MethodParams
    sample_dt: float | None = None
    seed: int = 0
    name: str = "config"

    def __post_init__(self) -> None:
        if self.T <= 0.0 or self.H <= 0.0:
            raise ValueError("T and H must be positive")
        if len(set(self.placements.values())) != len(self.placements):
            raise ValueError("agents must start on distinct targets")


@dataclass
class MetricsReport:
    J_T: float
    J_e: float
    J_s: float
    v_max: float
    u_max: float
    alpha: float
    visits: dict[int, int] = field(default_factory=dict)
    energy_per_agent: dict[int, float] = field(default_factory=dict)
    event_count: int = 0

    def row(self) -> dict[str, float]:
        return {"J_T": self.J_T, "J_e": self.J_e, "J_s": self.J_s, "v_max": self.v_max, "u_max": self.u_max}


@dataclass
class RunResult:
    config: SimConfig
    metrics: MetricsReport
    events: list[dict]
    decisions: list[Decision]
    world: World
    timeseries: list[dict] | None = None


def _alpha(sim: dict) -> float:
    if "alpha" in sim:
        return float(sim["alpha"])
    af = sim["alpha_from"]
    if "u_max" in af:
        return alpha_from_accel(af["beta"], af["u_max"])
    return alpha_from_budget(af["beta"], af["y_ref"], af["v_max"])


def calibrate(cfg: dict) -> tuple[float, float]:
    """Peak (acceleration, speed) observed in an unconstrained second-order run of the same config."""
    so = cfgmod.set_path(cfg, "method", {"name": "SO"})
    m = run(so).metrics
    return m.u_max, m.v_max


def sim_config(cfg: dict, calibration: tuple[float, float] | None = None) -> SimConfig:
    """Build a SimConfig from a config dict, running the calibration pass if a baseline needs it."""
    cfg = cfgmod.normalize(cfg)
    graph = cfgmod.build_graph(cfg)
    sim, meth = cfg["sim"], cfg["method"]
    alpha = _alpha(sim)
    name = meth["name"]
    kw: dict[str, Any] = {"v_bar": meth.get("v_bar"), "u_bar": meth.get("u_bar")}
    if name in ("FO1", "FO2"):
        if "u_so_max" in meth and "v_so_max" in meth:
            u_so, v_so = meth["u_so_max"], meth["v_so_max"]
        else:
            u_so, v_so = calibration if calibration is not None else calibrate(cfg)
        if name == "FO1":
            kw["u_f1"], kw["v_m1"] = fo1_params(graph.edge_lengths(), u_so, v_so)
        else:
            kw["v_m2"] = fo2_params(graph.edge_lengths(), u_so, v_so)
    params = MethodParams(name, alpha, **kw)
    placements = {a["id"]: a["start"] for a in cfg["agents"]}
    return SimConfig(graph, placements, float(sim["T"]), float(sim["H"]), params, sim.get("sample_dt"),
                     int(sim.get("seed", 0)), cfg.get("name", "config"))


def run(config: SimConfig | dict, sample_dt: float | None = None) -> RunResult:
    sc = config if isinstance(config, SimConfig) else sim_config(config)
    world = World(sc.graph, sc.params, sc.T, sc.H, dict(sc.placements))
    while world.step():
        pass
    world.finish()
    metrics = _metrics(world, sc)
    dt = sample_dt if sample_dt is not None else sc.sample_dt
    ts = sample_timeseries(world, dt) if dt else None
    return RunResult(sc, metrics, world.events_log, world.decisions, world, ts)


def _metrics(world: World, sc: SimConfig) -> MetricsReport:
    T = sc.T
    energy = {a: 0.0 for a in world.agents}
    v_max = u_max = 0.0
    for rec in world.transits:
        p = rec.plan
        if p.t_o >= T:
            continue
        if p.t_f <= T:
            energy[rec.agent] += p.energy
            v_max = max(v_max, p.v_peak)
        else:
            energy[rec.agent] += p.energy_until(T)
            mid = p.t_o + 0.5 * p.rho
            v_max = max(v_max, p.v_peak if T >= mid else p.velocity(T))
        u_max = max(u_max, p.u_peak)
    J_e = math.fsum(energy.values())
    J_s = world.J_s_integral / T
    alpha = sc.params.alpha
    return MetricsReport(alpha * J_e + J_s, J_e, J_s, v_max, u_max, alpha, dict(world.visits), energy,
                         len(world.events_log))


# ---------------------------------------------------------------------------
# exact trajectories for output and cross-checks


def uncertainty_at(world: World, i: int, t: np.ndarray | float) -> np.ndarray:
    hist = world.r_history[i]
    times = np.array([h[0] for h in hist])
    R0 = np.array([h[1] for h in hist])
    sl = np.array([h[2] for h in hist])
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    k = np.searchsorted(times, tt, side="right") - 1
    k = np.clip(k, 0, len(times) - 1)
    return np.maximum(R0[k] + sl[k] * (tt - times[k]), 0.0)


def occupancy_at(world: World, t: float) -> dict[int, int]:
    occ = {i: 0 for i in world.targets}
    for a, dw in world.dwells.items():
        for i, t0, t1 in dw:
            if t0 <= t and (t1 is None or t < t1):
                occ[i] += 1
    return occ


def agent_state_at(world: World, a: int, t: float) -> tuple[float, float, float, float, float]:
    """(x, y, heading, v, u) of agent a at time t."""
    heading = _initial_heading(world, world.placements[a])
    for rec in world.transits:
        if rec.agent != a or rec.plan.t_o > t:
            continue
        seg = world.graph.edges[rec.edge]
        if t < rec.plan.t_f:
            l = min(max(rec.plan.distance(t), 0.0), seg.length)
            (x, y), th = seg.position_and_heading(l)
            return x, y, th, rec.plan.velocity(t), rec.plan.accel(t)
        heading = seg.heading(seg.p_f)
    for i, t0, t1 in world.dwells[a]:
        if t0 <= t and (t1 is None or t < t1):
            x, y = world.graph.targets[i].pos
            return x, y, heading, 0.0, 0.0
    x, y = world.graph.targets[world.placements[a]].pos
    return x, y, heading, 0.0, 0.0


def _initial_heading(world: World, i: int) -> float:
    seg = next((s for (p, _), s in sorted(world.graph.edges.items()) if p == i), None)
    return seg.heading(seg.p_o) if seg is not None else 0.0


def sample_timeseries(world: World, dt: float) -> list[dict]:
    n = int(math.floor(world.T / dt + 1e-9))
    times = [k * dt for k in range(n + 1)]
    Rs = {i: uncertainty_at(world, i, np.array(times)) for i in sorted(world.targets)}
    rows = []
    for k, t in enumerate(times):
        row: dict[str, float] = {"t": t}
        for a in sorted(world.agents):
            x, y, th, v, u = agent_state_at(world, a, t)
            row.update({f"x_{a}": x, f"y_{a}": y, f"heading_{a}": th, f"v_{a}": v, f"u_{a}": u})
        for i in sorted(world.targets):
            row[f"R_{i}"] = float(Rs[i][k])
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# generated configurations


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def initial_placements(M: int, N: int) -> list[int]:
    """Start targets 1 + (a-1)*round(M/N), moved to the next free target on a clash."""
    step = _round_half_up(M / N)
    out: list[int] = []
    for a in range(1, N + 1):
        i = (1 + (a - 1) * step - 1) % M + 1
        while i in out:
            i = i % M + 1
        out.append(i)
    return out


def generate_config(topology: str, M: int, N: int, seed: int = 0, box: float = 600.0, *, A: float = 1.0,
                    B: float = 10.0, R0: float = 0.5, T: float = 500.0, H: float = 250.0,
                    alpha: float = 213.3e-6, method: str = "SO", arcs: bool = False) -> dict:
    """A connected target graph inside a box x box mission space, as a config dict."""
    if M < 2:
        raise ValueError("need at least two targets")
    if not 1 <= N < M:
        raise ValueError("need 1 <= N < M agents")
    rng = np.random.default_rng(seed)
    c = box / 2.0
    pairs: set[tuple[int, int]] = set()
    shapes: dict[tuple[int, int], dict] = {}
    if topology == "ring":
        r = 0.35 * box
        pos = [(c + r * math.cos(2 * math.pi * k / M), c + r * math.sin(2 * math.pi * k / M)) for k in range(M)]
        for k in range(M):
            a, b = k + 1, (k + 1) % M + 1
            if a != b:
                pairs.add((min(a, b), max(a, b)))
                if arcs:
                    shapes[(a, b)] = {"type": "arc", "center": [c, c], "radius": r, "ccw": True}
                    shapes[(b, a)] = {"type": "arc", "center": [c, c], "radius": r, "ccw": False}
    elif topology == "grid":
        cols = math.ceil(math.sqrt(M))
        rows = math.ceil(M / cols)
        sx, sy = box / (cols + 1), box / (rows + 1)
        pos = [((k % cols + 1) * sx, (k // cols + 1) * sy) for k in range(M)]
        for k in range(M):
            if k % cols + 1 < cols and k + 1 < M:
                pairs.add((k + 1, k + 2))
            if k + cols < M:
                pairs.add((k + 1, k + cols + 1))
    elif topology in ("random-geometric", "random"):
        margin = 0.05 * box
        min_sep = 0.25 * box / math.sqrt(M)
        pos = []
        while len(pos) < M:
            p = tuple(float(v) for v in rng.uniform(margin, box - margin, 2))
            if all(math.dist(p, q) >= min_sep for q in pos):
                pos.append(p)
        radius = 1.3 * box / math.sqrt(M)
        for a in range(M):
            for b in range(a + 1, M):
                if math.dist(pos[a], pos[b]) <= radius:
                    pairs.add((a + 1, b + 1))
        # Euclidean spanning tree guarantees connectivity
        inside, rest = {0}, set(range(1, M))
        while rest:
            a, b = min(((a, b) for a in inside for b in rest), key=lambda e: math.dist(pos[e[0]], pos[e[1]]))
            pairs.add((min(a, b) + 1, max(a, b) + 1))
            inside.add(b)
            rest.remove(b)
    else:
        raise ValueError(f"unknown topology {topology!r}")
    pos = [(round(x, 6), round(y, 6)) for x, y in pos]
    edges = []
    for a, b in sorted(pairs):
        for u, v in ((a, b), (b, a)):
            edges.append({"from": u, "to": v, "shape": shapes.get((u, v), {"type": "line"})})
    cfg = {
        "name": f"{topology}-M{M}-N{N}-s{seed}",
        "targets": [{"id": k + 1, "pos": [x, y], "A": A, "B": B, "R0": R0} for k, (x, y) in enumerate(pos)],
        "edges": edges,
        "agents": [{"id": a + 1, "start": s} for a, s in enumerate(initial_placements(M, N))],
        "sim": {"T": T, "H": H, "alpha": alpha, "sample_dt": None, "seed": seed},
        "method": {"name": method},
    }
    return cfgmod.normalize(cfg)


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepRow:
    value: Any
    metrics: MetricsReport
    decisions: list[Decision]


def sweep(cfg: dict, path: str, values: Sequence[Any]) -> list[SweepRow]:
    """Independent full runs with one config entry varied, in input order."""
    out = []
    for v in values:
        res = run(cfgmod.set_path(cfg, path, v))
        out.append(SweepRow(v, res.metrics, res.decisions))
    return out


RHCP_DEFAULTS: dict[str, Any] = {
    "form": "RHCP3", "method": "SO", "A": 1.0, "B": 10.0, "neighbors": 3, "alpha": 0.5,
    "R_i0": None, "R_j0": 100.0, "R_k0": None, "y": 50.0, "H": 250.0, "v_bar": None, "u_bar": None,
    "u_f1": None, "v_m1": None, "v_m2": None,
}


def rhcp_setup(**overrides: Any) -> dict:
    """A single decision at target 1 with neighbour 2 and further bystander targets.

    The default leaves the current target empty and puts 50 on the bystander for
    the departure form, and 50 on the current target for the other forms.
    """
    s = dict(RHCP_DEFAULTS)
    unknown = set(overrides) - set(s)
    if unknown:
        raise KeyError(f"unknown setup keys {sorted(unknown)}")
    s.update(overrides)
    dwell_form = s["form"] != "RHCP3"
    if s["R_i0"] is None:
        s["R_i0"] = 50.0 if s["form"] == "RHCP1" else 0.0
    if s["R_k0"] is None:
        s["R_k0"] = 0.0 if dwell_form else 50.0
    return s


def single_rhcp(setup: dict) -> dict[str, float]:
    """Solve one decision problem and report the quantities plotted against sweep parameters."""
    s = rhcp_setup(**setup)
    n = int(s["neighbors"])
    if n < 2:
        raise ValueError("need the current target and at least one neighbour")
    ids = list(range(1, n + 1))
    R = {1: float(s["R_i0"]), 2: float(s["R_j0"])}
    for m in ids[2:]:
        R[m] = float(s["R_k0"])
    snap = NeighborhoodSnapshot(0.0, 1, float(s["H"]), {m: float(s["A"]) for m in ids},
                                {m: float(s["B"]) for m in ids}, R)
    params = MethodParams(s["method"], float(s["alpha"]), s["v_bar"], s["u_bar"], s["u_f1"], s["v_m1"], s["v_m2"])
    vf = value_fn(snap, 2, s["form"])
    ch = optimize_transit(params, vf, float(s["y"]))
    return {"rho": ch.plan.rho, "t_o": ch.sensing.dwell_i, "v_peak": ch.plan.v_peak, "u_peak": ch.plan.u_peak,
            "J_sH": ch.J_sH, "J_eH": ch.J_eH, "J_H": ch.J_H, "tau_i": ch.sensing.tau_i,
            "tau_i_bar": ch.sensing.tau_i_bar, "tau_j": ch.sensing.tau_j, "tau_j_bar": ch.sensing.tau_j_bar}


def rhcp_sweep(setup: dict, param: str, values: Iterable[float]) -> list[dict[str, float]]:
    rows = []
    for v in values:
        s = dict(setup)
        s[param] = v
        row = {"value": v}
        row.update(single_rhcp(s))
        rows.append(row)
    return rows

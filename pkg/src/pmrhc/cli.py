"""Command-line front end: run, compare, sweep and generate."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import config as cfgmod
from . import simulator as sim
from .sensing import InfeasibleError
from .transit import canonical_method

METRIC_COLUMNS = ["pc", "method", "J_T", "J_e", "J_s", "v_max", "u_max"]
SWEEP_COLUMNS = ["value", "rho", "t_o", "v_peak", "u_peak", "J_sH", "J_eH", "J_H"]
EXIT_CONFIG, EXIT_SOLVER = 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def parse_seeds(text: str) -> list[int]:
    """'1..5' or '1,2,7' or '3'."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad seed list {text!r}; use a..b or a,b,c") from None


def parse_range(spec: str) -> tuple[str, list[float]]:
    """'param=start:stop:steps' -> (param, evenly spaced values)."""
    if "=" not in spec:
        raise UsageError(f"bad sweep spec {spec!r}; expected param=start:stop:steps")
    name, rng = spec.split("=", 1)
    parts = rng.split(":")
    if not name or len(parts) != 3:
        raise UsageError(f"bad sweep spec {spec!r}; expected param=start:stop:steps")
    try:
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"bad sweep spec {spec!r}; start/stop must be numbers and steps an integer") from None
    if steps < 1 or not (math.isfinite(start) and math.isfinite(stop)):
        raise UsageError(f"bad sweep spec {spec!r}; steps must be >= 1")
    values = [start] if steps == 1 else [float(v) for v in np.linspace(start, stop, steps)]
    return name, values


def load_config(source: str, seed: int | None = None) -> tuple[dict, str]:
    """A config from a JSON path, or generated from 'gen:topology:M:N'.  Returns (config, origin)."""
    if source.startswith("gen:"):
        parts = source.split(":")
        if len(parts) != 4:
            raise cfgmod.ConfigError([("", f"generator spec {source!r} must be gen:topology:M:N")])
        try:
            cfg = sim.generate_config(parts[1], int(parts[2]), int(parts[3]), seed=seed or 0)
        except ValueError as exc:
            raise cfgmod.ConfigError([("", str(exc))]) from exc
        return cfg, "generated"
    cfg = cfgmod.load(source)
    if seed is not None:
        cfg["sim"]["seed"] = seed
    return cfg, "file"


def _with_method(cfg: dict, method: str, extra: dict | None = None) -> dict:
    try:
        name = canonical_method(method)
    except ValueError as exc:
        raise cfgmod.ConfigError([("method/name", str(exc))]) from exc
    m = dict(extra or {})
    for key in ("v_bar", "u_bar", "u_so_max", "v_so_max"):
        if key in cfg["method"] and key not in m:
            m[key] = cfg["method"][key]
    m["name"] = name
    return cfgmod.normalize(cfgmod.set_path(cfg, "method", m))


def _fmt(x: Any) -> Any:
    if isinstance(x, float):
        return repr(x)
    return x


def write_csv(path: Path, columns: Sequence[str], rows: Sequence[dict]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in columns})


def metrics_row(pc: str, method: str, m: sim.MetricsReport, scale_je: bool = False) -> dict:
    row = {"pc": pc, "method": method}
    row.update(m.row())
    if scale_je:
        row["J_e"] = row["J_e"] / 10000.0
    return row


def _meta(cfg: dict, origin: str, extra: dict) -> dict:
    meta = {
        "config_hash": cfgmod.config_hash(cfg),
        "config_name": cfg.get("name"),
        "config_origin": origin,
        "seed": cfg["sim"].get("seed", 0),
        "version": __version__,
    }
    if origin == "generated":
        meta["note"] = "layout produced by the built-in generator, not a reference scenario"
    meta.update(extra)
    return meta


def _dump_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_run(args: argparse.Namespace) -> int:
    cfg, origin = load_config(args.config, args.seed)
    if args.method:
        cfg = _with_method(cfg, args.method)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res = sim.run(cfg, sample_dt=args.sample_dt)
    method = cfg["method"]["name"]
    write_csv(out / "metrics.csv", METRIC_COLUMNS, [metrics_row(cfg["name"], method, res.metrics, args.scale_je)])
    with (out / "events.jsonl").open("w") as fh:
        for ev in res.events:
            fh.write(json.dumps(ev, sort_keys=True) + "\n")
    if res.timeseries:
        write_csv(out / "timeseries.csv", list(res.timeseries[0].keys()), res.timeseries)
    m = res.metrics
    _dump_json(out / "meta.json", _meta(cfg, origin, {
        "method": method, "alpha": m.alpha, "event_count": m.event_count,
        "visits": {str(k): v for k, v in m.visits.items()},
        "energy_per_agent": {str(k): v for k, v in m.energy_per_agent.items()},
        "sample_dt": args.sample_dt, "J_e_scaled": bool(args.scale_je),
    }))
    print(f"{cfg['name']} {method}: J_T={m.J_T:.6g} J_e={m.J_e:.6g} J_s={m.J_s:.6g} "
          f"v_max={m.v_max:.6g} u_max={m.u_max:.6g}")
    return 0


def _compare_one(cfg: dict, methods: list[str]) -> dict[str, sim.MetricsReport]:
    """All methods on one config; the second-order run doubles as the calibration pass."""
    out: dict[str, sim.MetricsReport] = {}
    calib = None
    order = sorted(methods, key=lambda m: m != "SO")
    for m in order:
        c = _with_method(cfg, m)
        if m in ("FO1", "FO2") and calib is None and "u_so_max" not in c["method"]:
            so = out.get("SO") or sim.run(_with_method(cfg, "SO")).metrics
            calib = (so.u_max, so.v_max)
        out[m] = sim.run(sim.sim_config(c, calibration=calib)).metrics
    return {m: out[m] for m in methods}


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        methods = [canonical_method(m) for m in args.methods]
    except ValueError as exc:
        raise cfgmod.ConfigError([("method/name", str(exc))]) from exc
    if len(set(methods)) < 2:
        raise UsageError("compare needs at least two distinct methods")
    seeds = parse_seeds(args.seeds) if args.seeds else [None]
    configs = [load_config(args.config, s) for s in seeds]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_compare_one, [c for c, _ in configs], [methods] * len(configs)))
    else:
        results = [_compare_one(c, methods) for c, _ in configs]
    rows = []
    for (cfg, _), res in zip(configs, results):
        for m in methods:
            rows.append(metrics_row(cfg["name"], m, res[m], args.scale_je))
    if len(configs) > 1:
        for m in methods:
            sel = [r for r in rows if r["method"] == m and r["pc"] != "mean"]
            mean = {"pc": "mean", "method": m}
            for k in METRIC_COLUMNS[2:]:
                mean[k] = float(np.mean([r[k] for r in sel]))
            rows.append(mean)
    for pc in dict.fromkeys(r["pc"] for r in rows):
        grp = [r for r in rows if r["pc"] == pc]
        best = min(grp, key=lambda r: (r["J_T"], methods.index(r["method"])))
        for r in grp:
            r["best"] = int(r is best)
    write_csv(out / "metrics.csv", METRIC_COLUMNS + ["best"], rows)
    _dump_json(out / "meta.json", _meta(configs[0][0], configs[0][1], {
        "methods": methods, "seeds": seeds, "config_hashes": [cfgmod.config_hash(c) for c, _ in configs],
        "J_e_scaled": bool(args.scale_je)}))
    width = max(len(r["pc"]) for r in rows)
    print(f"{'pc':<{width}} {'method':<6} {'J_T':>12} {'J_e':>14} {'J_s':>10} {'v_max':>9} {'u_max':>9} best")
    for r in rows:
        print(f"{r['pc']:<{width}} {r['method']:<6} {r['J_T']:>12.4f} {r['J_e']:>14.4f} {r['J_s']:>10.4f} "
              f"{r['v_max']:>9.4f} {r['u_max']:>9.4f} {'*' if r['best'] else ''}")
    return 0


def _parse_set(items: Sequence[str]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for it in items:
        if "=" not in it:
            raise UsageError(f"bad --set item {it!r}; expected key=value")
        k, v = it.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def cmd_sweep(args: argparse.Namespace) -> int:
    param, values = parse_range(args.spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    overrides = _parse_set(args.set or [])
    if args.config and not args.config.startswith("gen:") and "targets" not in _peek(args.config):
        overrides = {**_peek(args.config), **overrides}
        args.config = None
    if args.config:
        cfg, origin = load_config(args.config)
        for k, v in overrides.items():
            cfg = cfgmod.set_path(cfg, k, v)
        rows = []
        for r in sim.sweep(cfg, param, values):
            row = {"value": r.value}
            row.update(r.metrics.row())
            rows.append(row)
        write_csv(out / "sweep.csv", ["value", "J_T", "J_e", "J_s", "v_max", "u_max"], rows)
        _dump_json(out / "meta.json", _meta(cfg, origin, {"param": param, "values": values}))
    else:
        setup = dict(overrides)
        if "method" in setup:
            setup["method"] = canonical_method(setup["method"])
        if param not in sim.RHCP_DEFAULTS:
            raise cfgmod.ConfigError([(param, "not a parameter of the single-decision setup")])
        try:
            rows = sim.rhcp_sweep(setup, param, values)
        except KeyError as exc:
            raise cfgmod.ConfigError([("", str(exc))]) from exc
        write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
        _dump_json(out / "meta.json", {"param": param, "values": values, "setup": sim.rhcp_setup(**setup),
                                       "version": __version__})
    for r in rows:
        print(" ".join(f"{k}={_num(r[k])}" for k in r if k in SWEEP_COLUMNS + ["J_T", "J_e", "J_s"]))
    return 0


def _num(x: Any) -> str:
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def _peek(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise cfgmod.ConfigError([("", f"cannot read {path}: {exc.strerror}")]) from exc
    except json.JSONDecodeError as exc:
        raise cfgmod.ConfigError([("", f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")]) from exc
    if not isinstance(data, dict):
        raise cfgmod.ConfigError([("", f"{path}: expected a JSON object")])
    return data


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        cfg = sim.generate_config(args.topology, args.M, args.N, seed=args.seed, box=args.box,
                                  method=canonical_method(args.method), arcs=args.arcs)
    except ValueError as exc:
        raise cfgmod.ConfigError([("", str(exc))]) from exc
    text = cfgmod.dumps(cfg)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = cfgmod.load(args.config)
    cfgmod.build_graph(cfg)
    text = cfgmod.dumps(cfg)
    if args.canonical:
        sys.stdout.write(text)
    else:
        print(f"ok {cfgmod.config_hash(cfg)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pmrhc", description="Event-driven receding-horizon persistent monitoring")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one config")
    r.add_argument("--config", required=True, help="JSON config path or gen:topology:M:N")
    r.add_argument("--method", help="override the config's transit method")
    r.add_argument("--out", default="results")
    r.add_argument("--seed", type=int)
    r.add_argument("--sample-dt", type=float, help="also write timeseries.csv at this spacing")
    r.add_argument("--scale-je", action="store_true", help="report J_e / 10000")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run several methods on the same config(s)")
    c.add_argument("--config", required=True, help="JSON config path or gen:topology:M:N")
    c.add_argument("--methods", nargs="+", required=True)
    c.add_argument("--out", default="results")
    c.add_argument("--seeds", help="seed list such as 1..5; each seed regenerates a generated config")
    c.add_argument("--scale-je", action="store_true", help="report J_e / 10000")
    c.add_argument("--jobs", type=int, default=1, help="parallel worker processes across seeds")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("sweep", help="vary one parameter")
    s.add_argument("spec", help="param=start:stop:steps")
    s.add_argument("--config", help="full simulation config (dotted param path) or single-decision setup JSON")
    s.add_argument("--set", nargs="*", metavar="KEY=VALUE", help="overrides, e.g. form=RHCP1 method=SO")
    s.add_argument("--out", default="results")
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("generate", help="write a generated config")
    g.add_argument("topology", choices=["ring", "grid", "random-geometric"])
    g.add_argument("M", type=int)
    g.add_argument("N", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--box", type=float, default=600.0)
    g.add_argument("--method", default="SO")
    g.add_argument("--arcs", action="store_true", help="ring edges as circular arcs")
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="check a config and print its hash")
    v.add_argument("--config", required=True)
    v.add_argument("--canonical", action="store_true", help="print the canonical form instead")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (cfgmod.ConfigError, UsageError) as exc:
        problems = getattr(exc, "problems", None)
        if problems:
            print("config error:", file=sys.stderr)
            for path, msg in problems:
                print(f"  {path or '<root>'}: {msg}", file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, RuntimeError, ArithmeticError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

"""JSON configuration: schema validation, canonical form and conversion to a SimConfig."""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path
from typing import Any

import jsonschema

from .geometry import GeometryError, NetworkGraph, Target, segment_from_config
from .transit import METHODS, canonical_method

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_POINT = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["targets", "edges", "agents", "sim", "method"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "targets": {
            "type": "array",
            "minItems": 2,
            "items": {
                "type": "object",
                "required": ["id", "pos", "A", "B", "R0"],
                "additionalProperties": False,
                "properties": {"id": {"type": "integer"}, "pos": _POINT, "A": _POS, "B": _POS,
                               "R0": {"type": "number", "minimum": 0}},
            },
        },
        "edges": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["from", "to", "shape"],
                "additionalProperties": False,
                "properties": {
                    "from": {"type": "integer"},
                    "to": {"type": "integer"},
                    "shape": {
                        "type": "object",
                        "required": ["type"],
                        "properties": {
                            "type": {"enum": ["line", "arc", "poly"]},
                            "center": _POINT,
                            "radius": _POS,
                            "ccw": {"type": "boolean"},
                            "points": {"type": "array", "minItems": 4,
                                       "items": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}},
                        },
                        "additionalProperties": False,
                    },
                },
            },
        },
        "agents": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "start"],
                "additionalProperties": False,
                "properties": {"id": {"type": "integer"}, "start": {"type": "integer"}},
            },
        },
        "sim": {
            "type": "object",
            "required": ["T", "H"],
            "additionalProperties": False,
            "properties": {
                "T": _POS,
                "H": _POS,
                "alpha": {"type": "number", "minimum": 0},
                "alpha_from": {
                    "type": "object",
                    "required": ["beta"],
                    "additionalProperties": False,
                    "properties": {"beta": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                                   "y_ref": _POS, "v_max": _POS, "u_max": _POS},
                },
                "sample_dt": {"oneOf": [_POS, {"type": "null"}]},
                "seed": {"type": "integer"},
            },
        },
        "method": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {
                "name": {"type": "string"},
                "v_bar": _POS,
                "u_bar": _POS,
                "u_so_max": _POS,
                "v_so_max": _POS,
            },
        },
    },
}


class ConfigError(ValueError):
    """Invalid configuration; .problems lists (path, message) pairs."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        super().__init__("; ".join(f"{p or '<root>'}: {m}" for p, m in problems))


def _path(parts) -> str:
    return "/".join(str(p) for p in parts)


def normalize(raw: dict) -> dict:
    """Validate a raw config dict and return its canonical dict form."""
    if not isinstance(raw, dict):
        raise ConfigError([("", "config must be a JSON object")])
    cfg = copy.deepcopy(raw)
    if isinstance(cfg.get("method"), str):
        cfg["method"] = {"name": cfg["method"]}
    validator = jsonschema.Draft202012Validator(SCHEMA)
    problems = [(_path(e.absolute_path), e.message) for e in sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))]
    if problems:
        raise ConfigError(problems)
    try:
        cfg["method"]["name"] = canonical_method(cfg["method"]["name"])
    except ValueError as exc:
        problems.append(("method/name", str(exc)))
    sim = cfg["sim"]
    if ("alpha" in sim) == ("alpha_from" in sim):
        problems.append(("sim", "give exactly one of alpha or alpha_from"))
    elif "alpha_from" in sim:
        af = sim["alpha_from"]
        if not (("y_ref" in af and "v_max" in af) or "u_max" in af):
            problems.append(("sim/alpha_from", "needs y_ref and v_max, or u_max"))
    sim.setdefault("sample_dt", None)
    sim.setdefault("seed", 0)
    cfg.setdefault("name", "config")
    ids = [t["id"] for t in cfg["targets"]]
    for k, t in enumerate(cfg["targets"]):
        if ids.count(t["id"]) > 1:
            problems.append((f"targets/{k}/id", f"duplicate target id {t['id']}"))
        if not t["A"] < t["B"]:
            problems.append((f"targets/{k}", "need A < B"))
    seen = set()
    for k, e in enumerate(cfg["edges"]):
        for end in ("from", "to"):
            if e[end] not in ids:
                problems.append((f"edges/{k}/{end}", f"unknown target {e[end]}"))
        key = (e["from"], e["to"])
        if key in seen:
            problems.append((f"edges/{k}", f"duplicate edge {key}"))
        seen.add(key)
        shp = e["shape"]
        if shp["type"] == "arc" and not ("center" in shp and "radius" in shp):
            problems.append((f"edges/{k}/shape", "arc needs center and radius"))
        if shp["type"] == "poly" and "points" not in shp:
            problems.append((f"edges/{k}/shape", "poly needs points"))
    aids = [a["id"] for a in cfg["agents"]]
    starts = [a["start"] for a in cfg["agents"]]
    for k, a in enumerate(cfg["agents"]):
        if aids.count(a["id"]) > 1:
            problems.append((f"agents/{k}/id", f"duplicate agent id {a['id']}"))
        if a["start"] not in ids:
            problems.append((f"agents/{k}/start", f"unknown target {a['start']}"))
        elif starts.count(a["start"]) > 1:
            problems.append((f"agents/{k}/start", "agents must start on distinct targets"))
    if len(cfg["agents"]) >= len(cfg["targets"]):
        problems.append(("agents", "need fewer agents than targets"))
    if problems:
        raise ConfigError(problems)
    cfg["targets"] = sorted(cfg["targets"], key=lambda t: t["id"])
    cfg["edges"] = sorted(cfg["edges"], key=lambda e: (e["from"], e["to"]))
    cfg["agents"] = sorted(cfg["agents"], key=lambda a: a["id"])
    return cfg


def dumps(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, indent=2) + "\n"


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(dumps(normalize(cfg)).encode()).hexdigest()[:16]


def load(path: str | Path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError([("", f"cannot read {p}: {exc.strerror}")]) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"{p}: invalid JSON at line {exc.lineno}: {exc.msg}")]) from exc
    return normalize(raw)


def build_graph(cfg: dict) -> NetworkGraph:
    tmap = {t["id"]: Target(t["id"], (float(t["pos"][0]), float(t["pos"][1])), float(t["A"]), float(t["B"]),
                            float(t["R0"])) for t in cfg["targets"]}
    edges = {}
    problems = []
    for k, e in enumerate(cfg["edges"]):
        try:
            edges[(e["from"], e["to"])] = segment_from_config(e["shape"], tmap[e["from"]].pos, tmap[e["to"]].pos)
        except (GeometryError, KeyError) as exc:
            problems.append((f"edges/{k}/shape", str(exc)))
    if problems:
        raise ConfigError(problems)
    try:
        return NetworkGraph(tmap, edges)
    except GeometryError as exc:
        raise ConfigError([("edges", str(exc))]) from exc


def set_path(cfg: dict, path: str, value: Any) -> dict:
    """Copy of cfg with the dotted path set; list items are addressed by index."""
    out = copy.deepcopy(cfg)
    parts = path.split(".")
    node: Any = out
    try:
        for p in parts[:-1]:
            node = node[int(p)] if isinstance(node, list) else node[p]
        last = parts[-1]
        if isinstance(node, list):
            node[int(last)] = value
        elif isinstance(node, dict) and (last in node or parts[0] in ("sim", "method")):
            node[last] = value
        else:
            raise KeyError(last)
    except (KeyError, IndexError, ValueError, TypeError) as exc:
        raise ConfigError([(path.replace(".", "/"), "path does not resolve in config")]) from exc
    return out


__all__ = ["ConfigError", "SCHEMA", "METHODS", "normalize", "dumps", "config_hash", "load", "build_graph", "set_path"]

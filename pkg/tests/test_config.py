from __future__ import annotations

import json
import math

import pytest

from pmrhc import config as C
from pmrhc.geometry import CircularArc, SampledParametric


def base():
    return {
        "targets": [{"id": 2, "pos": [50.0, 0.0], "A": 1, "B": 10, "R0": 0.5},
                    {"id": 1, "pos": [0.0, 0.0], "A": 1, "B": 10, "R0": 0.5}],
        "edges": [{"from": 2, "to": 1, "shape": {"type": "line"}}, {"from": 1, "to": 2, "shape": {"type": "line"}}],
        "agents": [{"id": 1, "start": 1}],
        "sim": {"T": 10, "H": 250, "alpha": 0.001},
        "method": "so",
    }


def problems_of(cfg):
    with pytest.raises(C.ConfigError) as info:
        C.normalize(cfg)
    return dict(info.value.problems)


def test_normalize_sorts_and_fills_defaults():
    cfg = C.normalize(base())
    assert [t["id"] for t in cfg["targets"]] == [1, 2]
    assert [(e["from"], e["to"]) for e in cfg["edges"]] == [(1, 2), (2, 1)]
    assert cfg["method"] == {"name": "SO"}
    assert cfg["sim"]["sample_dt"] is None and cfg["sim"]["seed"] == 0


def test_canonical_round_trip(tmp_path):
    text = C.dumps(C.normalize(base()))
    p = tmp_path / "c.json"
    p.write_text(text)
    assert C.dumps(C.load(p)) == text
    assert C.config_hash(base()) == C.config_hash(json.loads(text))


@pytest.mark.parametrize("mutate, path", [
    (lambda c: c["targets"][0].update(A=20), "targets/0"),
    (lambda c: c["targets"][1].update(id=2), "targets/0/id"),
    (lambda c: c["edges"].append({"from": 1, "to": 9, "shape": {"type": "line"}}), "edges/2/to"),
    (lambda c: c["edges"].append({"from": 1, "to": 2, "shape": {"type": "line"}}), "edges/2"),
    (lambda c: c["agents"].append({"id": 2, "start": 2}), "agents"),
    (lambda c: c["agents"][0].update(start=7), "agents/0/start"),
    (lambda c: c["sim"].pop("alpha"), "sim"),
    (lambda c: c.update(method="warp"), "method/name"),
    (lambda c: c["edges"][0].update(shape={"type": "arc"}), "edges/0/shape"),
    (lambda c: c["sim"].update(T=-1), "sim/T"),
])
def test_schema_errors_name_the_path(mutate, path):
    cfg = base()
    mutate(cfg)
    assert path in problems_of(cfg)


def test_load_errors(tmp_path):
    with pytest.raises(C.ConfigError):
        C.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(C.ConfigError, match="invalid JSON"):
        C.load(bad)


def test_arc_and_poly_shapes():
    cfg = base()
    cfg["edges"][0]["shape"] = {"type": "arc", "center": [25.0, 0.0], "radius": 25.0, "ccw": True}
    pts = [[0.0, 0.0, 0.0], [1 / 3, 15.0, 10.0], [2 / 3, 35.0, 10.0], [1.0, 50.0, 0.0]]
    cfg["edges"][1]["shape"] = {"type": "poly", "points": pts}
    g = C.build_graph(C.normalize(cfg))
    arc, poly = g.edges[(2, 1)], g.edges[(1, 2)]
    assert isinstance(arc, CircularArc) and isinstance(poly, SampledParametric)
    assert arc.length == pytest.approx(25.0 * math.pi, rel=1e-12)
    assert poly.length > 50.0


def test_poly_must_meet_targets():
    cfg = base()
    cfg["edges"][1]["shape"] = {"type": "poly", "points": [[0, 0, 0], [0.3, 10, 5], [0.6, 20, 5], [1, 30, 0]]}
    with pytest.raises(C.ConfigError):
        C.build_graph(C.normalize(cfg))


def test_set_path():
    cfg = C.normalize(base())
    out = C.set_path(cfg, "sim.alpha", 0.5)
    assert out["sim"]["alpha"] == 0.5 and cfg["sim"]["alpha"] == 0.001
    assert C.set_path(cfg, "targets.0.A", 2.0)["targets"][0]["A"] == 2.0
    assert C.set_path(cfg, "method.u_bar", 3.0)["method"]["u_bar"] == 3.0
    for bad in ("targets.9.A", "sim.alpha.x", "nothing"):
        with pytest.raises(C.ConfigError):
            C.set_path(cfg, bad, 1)

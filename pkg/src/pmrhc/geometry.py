"""Trajectory segment shapes and the arc-length machinery used to steer along them.

Every segment is a planar curve (x(p), y(p)) for p in [p_o, p_f].  Agents move
along it by arc length l, so each shape provides f(p) (length travelled up to
p), its inverse, the signed curvature F(p) and the angular rate F(f^-1(l))·v
that keeps a unicycle on the curve.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

Point = tuple[float, float]

ENDPOINT_TOL = 1e-9


class GeometryError(ValueError):
    """Raised for malformed shapes and out-of-domain queries."""


class Segment:
    """Base class for a parametrized planar curve."""

    p_o: float
    p_f: float
    length: float

    # subclasses supply point/derivatives in p
    def point(self, p: float) -> Point:
        raise NotImplementedError

    def derivatives(self, p: float) -> tuple[float, float, float, float]:
        """Return (x', y', x'', y'') at p."""
        raise NotImplementedError

    def arc_length(self, p: float) -> float:
        raise NotImplementedError

    def param_at_length(self, l: float) -> float:
        raise NotImplementedError

    # shared behaviour
    def _check_p(self, p: float) -> float:
        span = self.p_f - self.p_o
        if p < self.p_o - 1e-12 * max(1.0, abs(span)) or p > self.p_f + 1e-12 * max(1.0, abs(span)):
            raise GeometryError(f"parameter {p} outside [{self.p_o}, {self.p_f}]")
        return min(max(p, self.p_o), self.p_f)

    def _check_l(self, l: float) -> float:
        if l < -1e-12 * self.length or l > self.length * (1 + 1e-12):
            raise GeometryError(f"length {l} outside [0, {self.length}]")
        return min(max(l, 0.0), self.length)

    def curvature(self, p: float) -> float:
        p = self._check_p(p)
        dx, dy, ddx, ddy = self.derivatives(p)
        speed2 = dx * dx + dy * dy
        if speed2 <= 0.0:
            raise GeometryError(f"degenerate tangent at p={p}")
        return (dx * ddy - dy * ddx) / speed2**1.5

    def angular_velocity(self, l: float, v: float) -> float:
        return self.curvature(self.param_at_length(l)) * v

    def heading(self, p: float) -> float:
        dx, dy, _, _ = self.derivatives(self._check_p(p))
        if dx == 0.0 and dy == 0.0:
            raise GeometryError(f"degenerate tangent at p={p}")
        return math.atan2(dy, dx)

    def position_and_heading(self, l: float) -> tuple[Point, float]:
        p = self.param_at_length(l)
        return self.point(p), self.heading(p)

    @property
    def start(self) -> Point:
        return self.point(self.p_o)

    @property
    def end(self) -> Point:
        return self.point(self.p_f)


@dataclass(frozen=True)
class Line(Segment):
    a: Point
    b: Point

    def __post_init__(self) -> None:
        length = math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])
        if length <= 0.0:
            raise GeometryError("line segment has zero length")
        # parametrized by arc length directly
        object.__setattr__(self, "p_o", 0.0)
        object.__setattr__(self, "p_f", length)
        object.__setattr__(self, "length", length)

    def point(self, p: float) -> Point:
        s = self._check_p(p) / self.length
        return (self.a[0] + s * (self.b[0] - self.a[0]), self.a[1] + s * (self.b[1] - self.a[1]))

    def derivatives(self, p: float) -> tuple[float, float, float, float]:
        return ((self.b[0] - self.a[0]) / self.length, (self.b[1] - self.a[1]) / self.length, 0.0, 0.0)

    def arc_length(self, p: float) -> float:
        return self._check_p(p) - self.p_o

    def param_at_length(self, l: float) -> float:
        return self.p_o + self._check_l(l)


@dataclass(frozen=True)
class CircularArc(Segment):
    """Arc of a circle; p is the polar angle for ccw arcs and its negative for cw arcs."""

    center: Point
    radius: float
    start_angle: float
    sweep: float
    ccw: bool = True

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise GeometryError("arc radius must be positive")
        if not 0.0 < self.sweep <= 2 * math.pi:
            raise GeometryError("arc sweep must lie in (0, 2*pi]")
        sigma = 1.0 if self.ccw else -1.0
        object.__setattr__(self, "p_o", sigma * self.start_angle)
        object.__setattr__(self, "p_f", sigma * self.start_angle + self.sweep)
        object.__setattr__(self, "length", self.radius * self.sweep)

    @classmethod
    def through(cls, a: Point, b: Point, center: Point, radius: float, ccw: bool) -> "CircularArc":
        """Arc from a to b around center, checking both endpoints lie on the circle."""
        for name, q in (("source", a), ("destination", b)):
            d = math.hypot(q[0] - center[0], q[1] - center[1])
            if abs(d - radius) > ENDPOINT_TOL * max(1.0, radius):
                raise GeometryError(f"{name} point is {d} from center, radius is {radius}")
        th_a = math.atan2(a[1] - center[1], a[0] - center[0])
        th_b = math.atan2(b[1] - center[1], b[0] - center[0])
        sweep = (th_b - th_a) if ccw else (th_a - th_b)
        sweep %= 2 * math.pi
        if sweep == 0.0:
            sweep = 2 * math.pi
        return cls(center=center, radius=radius, start_angle=th_a, sweep=sweep, ccw=ccw)

    def _angle(self, p: float) -> float:
        return p if self.ccw else -p

    def point(self, p: float) -> Point:
        th = self._angle(self._check_p(p))
        return (self.center[0] + self.radius * math.cos(th), self.center[1] + self.radius * math.sin(th))

    def derivatives(self, p: float) -> tuple[float, float, float, float]:
        sigma = 1.0 if self.ccw else -1.0
        th = self._angle(p)
        r = self.radius
        c, s = math.cos(th), math.sin(th)
        return (-sigma * r * s, sigma * r * c, -r * c, -r * s)

    def arc_length(self, p: float) -> float:
        return self.radius * (self._check_p(p) - self.p_o)

    def param_at_length(self, l: float) -> float:
        return self.p_o + self._check_l(l) / self.radius


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


@dataclass(frozen=True)
class SampledParametric(Segment):
    """Curve through (p, x, y) samples, interpolated by cubic splines in p."""

    samples: tuple[tuple[float, float, float], ...]
    _sx: CubicSpline = field(init=False, repr=False, compare=False)
    _sy: CubicSpline = field(init=False, repr=False, compare=False)
    _dsx: CubicSpline = field(init=False, repr=False, compare=False)
    _dsy: CubicSpline = field(init=False, repr=False, compare=False)
    _knots: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _cum: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        pts = np.asarray(self.samples, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise GeometryError("samples must be (p, x, y) triples")
        if len(pts) < 4:
            raise GeometryError("at least 4 samples are required")
        p = pts[:, 0]
        if np.any(np.diff(p) <= 0):
            raise GeometryError("sample parameters must be strictly increasing")
        sx = CubicSpline(p, pts[:, 1])
        sy = CubicSpline(p, pts[:, 2])
        dsx, dsy = sx.derivative(), sy.derivative()
        # fail fast on vanishing tangents, checked on and between samples
        probe = np.concatenate([p, 0.5 * (p[1:] + p[:-1])])
        speed = np.hypot(dsx(probe), dsy(probe))
        if np.any(speed <= 1e-12 * max(1.0, float(np.max(speed)))):
            raise GeometryError("degenerate tangent in sampled curve")
        object.__setattr__(self, "_sx", sx)
        object.__setattr__(self, "_sy", sy)
        object.__setattr__(self, "_dsx", dsx)
        object.__setattr__(self, "_dsy", dsy)
        object.__setattr__(self, "p_o", float(p[0]))
        object.__setattr__(self, "p_f", float(p[-1]))
        cum = [0.0]
        for k in range(len(p) - 1):
            cum.append(cum[-1] + self._quad(float(p[k]), float(p[k + 1])))
        object.__setattr__(self, "_knots", tuple(float(q) for q in p))
        object.__setattr__(self, "_cum", tuple(cum))
        object.__setattr__(self, "length", cum[-1])

    def _quad(self, a: float, b: float) -> float:
        if b <= a:
            return 0.0
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        q = mid + half * _GL_NODES
        return float(half * np.dot(_GL_WEIGHTS, np.hypot(self._dsx(q), self._dsy(q))))

    def point(self, p: float) -> Point:
        p = self._check_p(p)
        return (float(self._sx(p)), float(self._sy(p)))

    def derivatives(self, p: float) -> tuple[float, float, float, float]:
        return (float(self._sx(p, 1)), float(self._sy(p, 1)), float(self._sx(p, 2)), float(self._sy(p, 2)))

    def arc_length(self, p: float) -> float:
        p = self._check_p(p)
        k = max(0, min(bisect.bisect_right(self._knots, p) - 1, len(self._knots) - 2))
        return self._cum[k] + self._quad(self._knots[k], p)

    def param_at_length(self, l: float) -> float:
        l = self._check_l(l)
        if l == 0.0:
            return self.p_o
        if l >= self.length:
            return self.p_f
        k = max(0, min(bisect.bisect_right(self._cum, l) - 1, len(self._knots) - 2))
        a, b = self._knots[k], self._knots[k + 1]
        base = self._cum[k]
        return brentq(lambda q: base + self._quad(a, q) - l, a, b, xtol=1e-12 * self.length, rtol=8.9e-16)


def segment_from_config(spec: dict, a: Point, b: Point) -> Segment:
    """Build a segment from its config description, anchored at target locations a and b."""
    kind = spec.get("type")
    if kind == "line":
        return Line(tuple(a), tuple(b))
    if kind == "arc":
        return CircularArc.through(tuple(a), tuple(b), tuple(spec["center"]), float(spec["radius"]), bool(spec.get("ccw", True)))
    if kind == "poly":
        seg = SampledParametric(tuple(tuple(float(v) for v in row) for row in spec["points"]))
        for name, got, want in (("start", seg.start, a), ("end", seg.end, b)):
            if math.hypot(got[0] - want[0], got[1] - want[1]) > ENDPOINT_TOL:
                raise GeometryError(f"sampled curve {name} {got} does not match target location {want}")
        return seg
    raise GeometryError(f"unknown shape type {kind!r}")


@dataclass(frozen=True)
class Target:
    id: int
    pos: Point
    A: float
    B: float
    R0: float


@dataclass
class NetworkGraph:
    targets: dict[int, Target]
    edges: dict[tuple[int, int], Segment]

    def __post_init__(self) -> None:
        for t in self.targets.values():
            if not 0.0 < t.A < t.B:
                raise GeometryError(f"target {t.id}: need 0 < A < B, got A={t.A}, B={t.B}")
            if t.R0 < 0.0:
                raise GeometryError(f"target {t.id}: negative initial uncertainty")
        for (i, j), seg in self.edges.items():
            if i not in self.targets or j not in self.targets:
                raise GeometryError(f"edge ({i}, {j}) references an unknown target")
            if i == j:
                raise GeometryError(f"self loop at target {i}")
            for got, want in ((seg.start, self.targets[i].pos), (seg.end, self.targets[j].pos)):
                if math.hypot(got[0] - want[0], got[1] - want[1]) > ENDPOINT_TOL * max(1.0, seg.length):
                    raise GeometryError(f"edge ({i}, {j}) endpoint {got} does not match target at {want}")
        self._nbrs: dict[int, tuple[int, ...]] = {i: () for i in self.targets}
        for i, j in sorted(self.edges):
            self._nbrs[i] = self._nbrs[i] + (j,)

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Targets reachable from i over one segment, in ascending id order."""
        return self._nbrs[i]

    def length(self, i: int, j: int) -> float:
        return self.edges[(i, j)].length

    def edge_lengths(self) -> list[float]:
        return [seg.length for seg in self.edges.values()]

    def is_strongly_connected(self) -> bool:
        ids = sorted(self.targets)
        if not ids:
            return False
        rev: dict[int, list[int]] = {i: [] for i in ids}
        for i, j in self.edges:
            rev[j].append(i)

        def reach(adj) -> set[int]:
            seen, stack = {ids[0]}, [ids[0]]
            while stack:
                for n in adj(stack.pop()):
                    if n not in seen:
                        seen.add(n)
                        stack.append(n)
            return seen

        return len(reach(self.neighbors)) == len(ids) and len(reach(lambda n: rev[n])) == len(ids)


def sample_curve(fx, fy, p: Sequence[float]) -> tuple[tuple[float, float, float], ...]:
    """Tabulate a parametric curve into the sample format SampledParametric expects."""
    return tuple((float(q), float(fx(q)), float(fy(q))) for q in p)

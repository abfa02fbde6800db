"""Transit-time selection and rest-to-rest velocity profiles along a segment.

A transit of length y takes rho time units and its energy is the integral of
u(t)^2.  Given the optimal sensing cost phi(rho) = J*(rho) of the downstream
dwell problem, each method picks rho (and the profile shape) to minimise
alpha*E(rho) + phi(rho), or fixes rho in advance for the first-order baselines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq, minimize_scalar

from .sensing import InfeasibleError, SensingSolution, ValueFunction

METHODS = ("SO", "FO1", "FO2", "FO3", "SOV", "SOA", "FOV", "FOA")
RHO_EPS = 1e-6

_ALIASES = {m.replace("O", "O-", 1) if m.startswith("FO") else m: m for m in METHODS}
_ALIASES.update({"SO-V": "SOV", "SO-A": "SOA", "FO-V": "FOV", "FO-A": "FOA"})


def canonical_method(name: str) -> str:
    key = name.strip().upper()
    key = _ALIASES.get(key, key)
    if key not in METHODS:
        raise ValueError(f"unknown method {name!r}; expected one of {', '.join(METHODS)}")
    return key


# ---------------------------------------------------------------------------
# profiles


class PiecewiseAccel:
    """Acceleration as a piecewise polynomial on [0, rho], starting from rest."""

    rho: float

    def pieces(self) -> list[tuple[float, float, np.ndarray]]:
        """[(t0, t1, coeffs)] with u(t) = sum c_k (t - t0)^k on [t0, t1]."""
        raise NotImplementedError

    @cached_property
    def _table(self):
        rows = []
        v0 = l0 = e0 = 0.0
        for t0, t1, c in self.pieces():
            vc = P.polyint(c, k=v0)
            lc = P.polyint(vc, k=l0)
            ec = P.polyint(P.polymul(c, c), k=e0)
            rows.append((t0, t1, c, vc, lc, ec))
            h = t1 - t0
            v0, l0, e0 = P.polyval(h, vc), P.polyval(h, lc), P.polyval(h, ec)
        return rows

    def _eval(self, t: float, which: int) -> float:
        t = min(max(t, 0.0), self.rho)
        rows = self._table
        for row in rows:
            if t <= row[1]:
                return float(P.polyval(t - row[0], row[which]))
        last = rows[-1]
        return float(P.polyval(last[1] - last[0], last[which]))

    def accel(self, t: float) -> float:
        if t < 0.0 or t > self.rho:
            return 0.0
        return self._eval(t, 2)

    def velocity(self, t: float) -> float:
        return self._eval(t, 3)

    def distance(self, t: float) -> float:
        return self._eval(t, 4)

    def energy_until(self, t: float) -> float:
        return self._eval(t, 5)

    @property
    def total_energy(self) -> float:
        return self.energy_until(self.rho)


@dataclass(frozen=True)
class SoParabolic(PiecewiseAccel):
    """Unconstrained optimum: linear acceleration, parabolic velocity."""

    y: float
    rho: float

    def pieces(self):
        r = self.rho
        return [(0.0, r, np.array([6 * self.y / r**2, -12 * self.y / r**3]))]


@dataclass(frozen=True)
class Trapezoid(PiecewiseAccel):
    """Constant acceleration, cruise, constant deceleration (triangle if no cruise)."""

    accel_mag: float
    cruise: float
    rho: float

    def pieces(self):
        tr = self.cruise / self.accel_mag
        out = [(0.0, tr, np.array([self.accel_mag]))]
        if self.rho - 2 * tr > 0.0:
            out.append((tr, self.rho - tr, np.array([0.0])))
        out.append((self.rho - tr, self.rho, np.array([-self.accel_mag])))
        return out


@dataclass(frozen=True)
class SoVComposite(PiecewiseAccel):
    """Velocity-bounded profile: parabolic rise to the bound, cruise, parabolic fall."""

    beta: float
    t1: float
    t2: float
    rho: float
    y: float

    def pieces(self):
        a0 = 6 * self.y / self.beta**3
        out = [(0.0, self.t1, np.array([a0 * self.beta, -2 * a0]))]
        if self.t2 > self.t1:
            out.append((self.t1, self.t2, np.array([0.0])))
        out.append((self.t2, self.rho, np.array([a0 * (2 * self.t1 - self.beta), -2 * a0])))
        return out


@dataclass(frozen=True)
class SoAComposite(PiecewiseAccel):
    """Acceleration-bounded profile: +u_bar, linear ramp of slope -2*beta, -u_bar."""

    beta: float
    t1: float
    t2: float
    rho: float
    u_bar: float

    def pieces(self):
        out = []
        if self.t1 > 0.0:
            out.append((0.0, self.t1, np.array([self.u_bar])))
        out.append((self.t1, self.t2, np.array([self.u_bar, -2 * self.beta])))
        if self.rho > self.t2:
            out.append((self.t2, self.rho, np.array([-self.u_bar])))
        return out


@dataclass(frozen=True)
class TransitPlan:
    method: str
    y: float
    rho: float
    t_o: float
    profile: PiecewiseAccel
    energy: float
    v_peak: float
    u_peak: float
    at_boundary: bool = False

    @property
    def t_f(self) -> float:
        return self.t_o + self.rho

    def accel(self, t: float) -> float:
        return self.profile.accel(t - self.t_o)

    def velocity(self, t: float) -> float:
        return self.profile.velocity(t - self.t_o)

    def distance(self, t: float) -> float:
        return self.profile.distance(t - self.t_o)

    def energy_until(self, t: float) -> float:
        return self.profile.energy_until(t - self.t_o)

    def shifted(self, t_o: float) -> "TransitPlan":
        return TransitPlan(self.method, self.y, self.rho, t_o, self.profile, self.energy, self.v_peak,
                           self.u_peak, self.at_boundary)


# ---------------------------------------------------------------------------
# closed-form profiles


def so_energy(y: float, rho: float) -> float:
    return 12.0 * y * y / rho**3


def fo3_energy(y: float, rho: float) -> float:
    return 13.5 * y * y / rho**3


def so_profile(rho: float, y: float, t_o: float = 0.0, method: str = "SO", at_boundary: bool = False) -> TransitPlan:
    if rho <= 0.0:
        raise ValueError("transit time must be positive")
    return TransitPlan(method, y, rho, t_o, SoParabolic(y, rho), so_energy(y, rho), 1.5 * y / rho,
                       6.0 * y / rho**2, at_boundary)


def trapezoid_plan(method: str, y: float, accel: float, cruise: float, rho: float, t_o: float = 0.0,
                   at_boundary: bool = False) -> TransitPlan:
    return TransitPlan(method, y, rho, t_o, Trapezoid(accel, cruise, rho), 2.0 * accel * cruise, cruise, accel,
                       at_boundary)


def fo3_profile(rho: float, y: float, t_o: float = 0.0, method: str = "FO3", at_boundary: bool = False) -> TransitPlan:
    """First-order imitation with ramps of rho/3, the energy optimum for a trapezoid at fixed rho."""
    v = 1.5 * y / rho
    return trapezoid_plan(method, y, 3.0 * v / rho, v, rho, t_o, at_boundary)


def fo1_cruise(y: float, u_f1: float, v_m1: float) -> float:
    if y >= 4.0 * v_m1 * v_m1 / u_f1:
        return (y * u_f1 - math.sqrt(y * y * u_f1 * u_f1 - 4.0 * v_m1 * v_m1 * y * u_f1)) / (2.0 * v_m1)
    return math.sqrt(y * u_f1)


def fo1_edge_profile(y: float, u_f1: float, v_m1: float, t_o: float = 0.0) -> TransitPlan:
    """Fixed acceleration magnitude and fixed mean speed; short edges fall back to a triangle."""
    v = fo1_cruise(y, u_f1, v_m1)
    rho = max(y / v_m1, 2.0 * math.sqrt(y / u_f1))
    return trapezoid_plan("FO1", y, u_f1, v, rho, t_o)


def fo1_params(edge_lengths: Iterable[float], u_so_max: float, v_so_max: float) -> tuple[float, float]:
    """(u_F1, v_m1): the largest common mean speed that keeps every cruise speed within v_so_max."""
    ys = sorted(edge_lengths)
    if not ys:
        raise ValueError("no edges")
    if u_so_max <= 0.0 or v_so_max <= 0.0:
        raise ValueError("calibration maxima must be positive")
    u, v = u_so_max, v_so_max
    qual = [y for y in ys if y >= v * v / u]
    if not qual:
        v = math.sqrt(ys[0] * u)
        qual = ys
    v_m1 = min(y * u * v / (v * v + y * u) for y in qual)
    return u, v_m1


def fo2_params(edge_lengths: Iterable[float], u_so_max: float, v_so_max: float) -> float:
    ys = list(edge_lengths)
    if not ys:
        raise ValueError("no edges")
    return min(math.sqrt(2.0 * min(ys) * u_so_max) / 3.0, 2.0 * v_so_max / 3.0)


def fo2_edge_profile(y: float, v_m2: float, t_o: float = 0.0) -> TransitPlan:
    return fo3_profile(y / v_m2, y, t_o, method="FO2")


# ---------------------------------------------------------------------------
# velocity- and acceleration-bounded second-order profiles


def sov_shape(y: float, v_bar: float, beta: float) -> tuple[float, float, float]:
    """(t1, rho, energy) of the velocity-bounded profile for 0 < beta <= 3y/(2 v_bar)."""
    t_v = 1.5 * y / v_bar
    s = math.sqrt(max(0.0, 1.0 - beta / t_v))
    t1 = 0.5 * beta * (1.0 - s)
    rho = beta + (2.0 * t_v / 3.0) * s**3
    energy = 12.0 * y * y / beta**3 * (1.0 - s**3)
    return t1, rho, energy


def sov_plan(y: float, v_bar: float, beta: float, t_o: float = 0.0, at_boundary: bool = False) -> TransitPlan:
    t1, rho, energy = sov_shape(y, v_bar, beta)
    prof = SoVComposite(beta, t1, rho - t1, rho, y)
    return TransitPlan("SOV", y, rho, t_o, prof, energy, v_bar, 6.0 * y / beta**2, at_boundary)


def soa_shape(y: float, u_bar: float, beta: float) -> tuple[float, float, float, float]:
    """(v_switch, t1, rho, energy) of the acceleration-bounded profile.

    The middle ramp takes u from u_bar to -u_bar at slope -2*beta, lasting
    u_bar/beta; v_switch is the speed at the two switching times.
    """
    g = u_bar / beta
    v = 0.5 * u_bar * (math.sqrt(g * g / 3.0 + 4.0 * y / u_bar) - g)
    t1 = v / u_bar
    rho = 2.0 * t1 + g
    energy = 2.0 * u_bar * v + u_bar**3 / (3.0 * beta)
    return v, t1, rho, energy


def soa_beta_min(y: float, u_bar: float) -> float:
    """Smallest ramp slope parameter: below it the bounded phases vanish."""
    return math.sqrt(u_bar**3 / (6.0 * y))


def soa_plan(y: float, u_bar: float, beta: float, t_o: float = 0.0, at_boundary: bool = False) -> TransitPlan:
    v, t1, rho, energy = soa_shape(y, u_bar, beta)
    prof = SoAComposite(beta, t1, rho - t1, rho, u_bar)
    v_peak = v + u_bar * u_bar / (4.0 * beta)
    return TransitPlan("SOA", y, rho, t_o, prof, energy, v_peak, u_bar, at_boundary)


def fov_energy(y: float, v_bar: float, rho: float) -> float:
    return 2.0 * v_bar**3 / (v_bar * rho - y)


def fov_plan(y: float, v_bar: float, rho: float, t_o: float = 0.0, at_boundary: bool = False) -> TransitPlan:
    u = v_bar * v_bar / (v_bar * rho - y)
    return trapezoid_plan("FOV", y, u, v_bar, rho, t_o, at_boundary)


def foa_cruise(y: float, u_bar: float, rho: float) -> float:
    # rationalised, with the radicand factored so the triangle limit is exact
    r0 = 2.0 * math.sqrt(y / u_bar)
    return 2.0 * y / (rho + math.sqrt(max(0.0, (rho - r0) * (rho + r0))))


def foa_energy(y: float, u_bar: float, rho: float) -> float:
    return 2.0 * u_bar * foa_cruise(y, u_bar, rho)


def foa_plan(y: float, u_bar: float, rho: float, t_o: float = 0.0, at_boundary: bool = False) -> TransitPlan:
    return trapezoid_plan("FOA", y, u_bar, foa_cruise(y, u_bar, rho), rho, t_o, at_boundary)


# ---------------------------------------------------------------------------
# transit-time search


@dataclass(frozen=True)
class RootResult:
    rho: float
    at_boundary: bool


def _geomspace(lo: float, hi: float, n: int) -> list[float]:
    if hi <= lo:
        return [lo]
    pts = list(np.geomspace(lo, hi, n))
    pts[0], pts[-1] = lo, hi
    return pts


def transversal_root(vf: ValueFunction, c: float, rho_max: float | None = None, lo: float = RHO_EPS,
                     n_scan: int = 24, n_refine: int = 8) -> RootResult:
    """Minimise c/(3 rho^3) + phi(rho), i.e. solve rho^4 phi'(rho) = c, over (lo, rho_max].

    Each case piece of phi is scanned for sign changes of the residual, and
    scan intervals that change sign are subdivided before bracketing.  Every
    root and every piece endpoint is a candidate, and the best one wins.
    """
    hi = vf.H if rho_max is None else min(rho_max, vf.H)
    if hi <= lo:
        raise InfeasibleError("no room for a transit")

    def g(r: float) -> float:
        return r**4 * vf.derivative(r) - c

    def cost(r: float) -> float:
        return c / (3.0 * r**3) + vf.value(r)

    cands: list[tuple[float, bool]] = [(lo, True), (hi, True)]
    for a, b, _ in vf.pieces(lo, hi):
        if b - a <= 0.0:
            continue
        # geometric points resolve small rho, uniform ones the far end of the piece
        grid = sorted(set(_geomspace(a, b, n_scan)) | set(np.linspace(a, b, n_scan).tolist()))
        vals = [g(r) for r in grid]
        fine_x, fine_v = [grid[0]], [vals[0]]
        for k in range(len(grid) - 1):
            if (vals[k] < 0.0) != (vals[k + 1] < 0.0):
                # a sign change may hide several roots close together; look inside
                sub = np.linspace(grid[k], grid[k + 1], n_refine + 1)[1:-1].tolist()
                fine_x += sub
                fine_v += [g(r) for r in sub]
            fine_x.append(grid[k + 1])
            fine_v.append(vals[k + 1])
        for k in range(len(fine_x) - 1):
            if fine_v[k] < 0.0 <= fine_v[k + 1]:
                if fine_v[k + 1] == 0.0:
                    r = fine_x[k + 1]
                else:
                    r = brentq(g, fine_x[k], fine_x[k + 1], xtol=1e-15 * fine_x[k + 1], rtol=8.9e-16, maxiter=200)
                cands.append((r, False))
        if a > lo:
            cands.append((a, False))
        if b < hi:
            cands.append((b, False))
    best = min(cands, key=lambda rc: (cost(rc[0]), rc[0]))
    return RootResult(best[0], best[1])


def so_transit_time(vf: ValueFunction, alpha: float, y: float, rho_max: float | None = None) -> RootResult:
    if y <= 0.0:
        raise ValueError("segment length must be positive")
    return transversal_root(vf, 36.0 * alpha * y * y, rho_max)


def fo3_transit_time(vf: ValueFunction, alpha: float, y: float, rho_max: float | None = None) -> RootResult:
    if y <= 0.0:
        raise ValueError("segment length must be positive")
    return transversal_root(vf, 40.5 * alpha * y * y, rho_max)


def _minimize_1d(f: Callable[[float], float], lo: float, hi: float, n: int = 48,
                 breaks: Sequence[float] = ()) -> tuple[float, float]:
    """Global-ish minimum of f on [lo, hi]: scan, then bounded Brent around the best samples."""
    grid = sorted(set(list(np.linspace(lo, hi, n)) + [b for b in breaks if lo < b < hi]))
    vals = [f(x) for x in grid]
    order = sorted(range(len(grid)), key=lambda k: vals[k])
    best_x, best_f = grid[order[0]], vals[order[0]]
    for k in order[:3]:
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        if b - a <= 0.0:
            continue
        res = minimize_scalar(f, bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, abs(b)), "maxiter": 500})
        if res.fun < best_f:
            best_x, best_f = float(res.x), float(res.fun)
    return best_x, best_f


def _piece_breaks(vf: ValueFunction, lo: float, hi: float) -> list[float]:
    return [a for a, _, _ in vf.pieces(lo, hi)][1:]


# ---------------------------------------------------------------------------
# per-method optimisation


@dataclass(frozen=True)
class MethodParams:
    method: str
    alpha: float
    v_bar: float | None = None
    u_bar: float | None = None
    u_f1: float | None = None
    v_m1: float | None = None
    v_m2: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", canonical_method(self.method))
        if self.alpha < 0.0:
            raise ValueError("energy weight must be nonnegative")
        for name in ("v_bar", "u_bar", "u_f1", "v_m1", "v_m2"):
            val = getattr(self, name)
            if val is not None and val <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.method in ("SOV", "FOV") and self.v_bar is None:
            raise ValueError(f"{self.method} needs v_bar")
        if self.method in ("SOA", "FOA") and self.u_bar is None:
            raise ValueError(f"{self.method} needs u_bar")
        if self.method == "FO1" and (self.u_f1 is None or self.v_m1 is None):
            raise ValueError("FO1 needs u_f1 and v_m1")
        if self.method == "FO2" and self.v_m2 is None:
            raise ValueError("FO2 needs v_m2")


@dataclass(frozen=True)
class TransitChoice:
    plan: TransitPlan
    sensing: SensingSolution
    J_sH: float
    J_eH: float
    J_H: float
    score: float


def sov_transit(vf: ValueFunction, alpha: float, y: float, v_bar: float, rho_max: float | None = None,
                t_o: float = 0.0) -> TransitPlan:
    if v_bar <= 0.0:
        raise ValueError("velocity bound must be positive")
    hi = vf.H if rho_max is None else min(rho_max, vf.H)
    base = so_transit_time(vf, alpha, y, hi)
    if 1.5 * y / base.rho <= v_bar:
        return so_profile(base.rho, y, t_o, at_boundary=base.at_boundary)
    t_v = 1.5 * y / v_bar
    if y / v_bar >= hi:
        raise InfeasibleError("velocity bound makes the segment unreachable within the horizon")
    # bounded part: beta in (0, t_v]; rho(beta) increases from y/v_bar to t_v
    b_hi = t_v if t_v <= hi else brentq(lambda b: sov_shape(y, v_bar, b)[1] - hi, 1e-12 * t_v, t_v, xtol=1e-14 * t_v)
    b_lo = 1e-9 * t_v

    def f_beta(b: float) -> float:
        _, r, e = sov_shape(y, v_bar, b)
        return alpha * e + vf.value(min(r, hi))

    b_star, f_star = _minimize_1d(f_beta, b_lo, b_hi)
    choice = sov_plan(y, v_bar, b_star, t_o, at_boundary=b_star in (b_lo, b_hi) and b_hi < t_v)
    if t_v < hi:
        tail = transversal_root(vf, 36.0 * alpha * y * y, hi, lo=t_v)
        f_tail = alpha * so_energy(y, tail.rho) + vf.value(tail.rho)
        if f_tail < f_star:
            return so_profile(tail.rho, y, t_o, method="SOV", at_boundary=tail.at_boundary)
    return choice


def soa_transit(vf: ValueFunction, alpha: float, y: float, u_bar: float, rho_max: float | None = None,
                t_o: float = 0.0) -> TransitPlan:
    if u_bar <= 0.0:
        raise ValueError("acceleration bound must be positive")
    hi = vf.H if rho_max is None else min(rho_max, vf.H)
    base = so_transit_time(vf, alpha, y, hi)
    if 6.0 * y / base.rho**2 <= u_bar:
        return so_profile(base.rho, y, t_o, at_boundary=base.at_boundary)
    rho_free = math.sqrt(6.0 * y / u_bar)
    if 2.0 * math.sqrt(y / u_bar) >= hi:
        raise InfeasibleError("acceleration bound makes the segment unreachable within the horizon")
    # parametrise by gamma = 1/beta in (0, 1/beta_min]; rho decreases as gamma -> 0
    g_max = 1.0 / soa_beta_min(y, u_bar)
    g_min = 1e-9 * g_max
    if soa_shape(y, u_bar, 1.0 / g_max)[2] > hi:
        g_max = brentq(lambda g: soa_shape(y, u_bar, 1.0 / g)[2] - hi, g_min, g_max, xtol=1e-14 * g_max)

    def f_gamma(g: float) -> float:
        _, _, r, e = soa_shape(y, u_bar, 1.0 / g)
        return alpha * e + vf.value(min(r, hi))

    g_star, f_star = _minimize_1d(f_gamma, g_min, g_max)
    choice = soa_plan(y, u_bar, 1.0 / g_star, t_o)
    if rho_free < hi:
        tail = transversal_root(vf, 36.0 * alpha * y * y, hi, lo=rho_free)
        f_tail = alpha * so_energy(y, tail.rho) + vf.value(tail.rho)
        if f_tail < f_star:
            return so_profile(tail.rho, y, t_o, method="SOA", at_boundary=tail.at_boundary)
    return choice


def fov_transit(vf: ValueFunction, alpha: float, y: float, v_bar: float, rho_max: float | None = None,
                t_o: float = 0.0) -> TransitPlan:
    if v_bar <= 0.0:
        raise ValueError("velocity bound must be positive")
    hi = vf.H if rho_max is None else min(rho_max, vf.H)
    base = fo3_transit_time(vf, alpha, y, hi)
    if 1.5 * y / base.rho <= v_bar:
        return fo3_profile(base.rho, y, t_o, at_boundary=base.at_boundary)
    r_lo = y / v_bar
    if r_lo >= hi:
        raise InfeasibleError("velocity bound makes the segment unreachable within the horizon")
    r_free = min(1.5 * y / v_bar, hi)
    lo = r_lo * (1 + 1e-9)

    def f(r: float) -> float:
        return alpha * fov_energy(y, v_bar, r) + vf.value(r)

    r_star, f_star = _minimize_1d(f, lo, r_free, breaks=_piece_breaks(vf, lo, r_free))
    choice = fov_plan(y, v_bar, r_star, t_o)
    if 1.5 * y / v_bar < hi:
        tail = transversal_root(vf, 40.5 * alpha * y * y, hi, lo=1.5 * y / v_bar)
        if alpha * fo3_energy(y, tail.rho) + vf.value(tail.rho) < f_star:
            return fo3_profile(tail.rho, y, t_o, method="FOV", at_boundary=tail.at_boundary)
    return choice


def foa_transit(vf: ValueFunction, alpha: float, y: float, u_bar: float, rho_max: float | None = None,
                t_o: float = 0.0) -> TransitPlan:
    if u_bar <= 0.0:
        raise ValueError("acceleration bound must be positive")
    hi = vf.H if rho_max is None else min(rho_max, vf.H)
    base = fo3_transit_time(vf, alpha, y, hi)
    if 4.5 * y / base.rho**2 <= u_bar:
        return fo3_profile(base.rho, y, t_o, at_boundary=base.at_boundary)
    r_lo = 2.0 * math.sqrt(y / u_bar)
    if r_lo >= hi:
        raise InfeasibleError("acceleration bound makes the segment unreachable within the horizon")
    r_free_exact = math.sqrt(4.5 * y / u_bar)
    r_free = min(r_free_exact, hi)

    def f(r: float) -> float:
        return alpha * foa_energy(y, u_bar, r) + vf.value(r)

    r_star, f_star = _minimize_1d(f, r_lo, r_free, breaks=_piece_breaks(vf, r_lo, r_free))
    choice = foa_plan(y, u_bar, r_star, t_o)
    if r_free_exact < hi:
        tail = transversal_root(vf, 40.5 * alpha * y * y, hi, lo=r_free_exact)
        if alpha * fo3_energy(y, tail.rho) + vf.value(tail.rho) < f_star:
            return fo3_profile(tail.rho, y, t_o, method="FOA", at_boundary=tail.at_boundary)
    return choice


def optimize_transit(params: MethodParams, vf: ValueFunction, y: float, t_o: float = 0.0,
                     rho_max: float | None = None) -> TransitChoice:
    """Pick the transit plan for one neighbour and the dwell solution it implies."""
    m, alpha = params.method, params.alpha
    hi = vf.H if rho_max is None else min(rho_max, vf.H)
    if m == "SO":
        root = so_transit_time(vf, alpha, y, hi)
        plan = so_profile(root.rho, y, t_o, at_boundary=root.at_boundary)
    elif m == "FO3":
        root = fo3_transit_time(vf, alpha, y, hi)
        plan = fo3_profile(root.rho, y, t_o, at_boundary=root.at_boundary)
    elif m == "FO1":
        plan = fo1_edge_profile(y, params.u_f1, params.v_m1, t_o)
    elif m == "FO2":
        plan = fo2_edge_profile(y, params.v_m2, t_o)
    elif m == "SOV":
        plan = sov_transit(vf, alpha, y, params.v_bar, hi, t_o)
    elif m == "SOA":
        plan = soa_transit(vf, alpha, y, params.u_bar, hi, t_o)
    elif m == "FOV":
        plan = fov_transit(vf, alpha, y, params.v_bar, hi, t_o)
    else:
        plan = foa_transit(vf, alpha, y, params.u_bar, hi, t_o)
    if plan.rho > hi * (1 + 1e-12):
        raise InfeasibleError(f"fixed transit time {plan.rho} exceeds the horizon {hi}")
    sens = vf.solve(plan.rho)
    J_eH = plan.energy
    J_H = alpha * J_eH + sens.J
    # the first fixed-speed baseline ignores energy when ranking neighbours
    score = sens.J if m == "FO1" else J_H
    return TransitChoice(plan, sens, sens.J, J_eH, J_H, score)

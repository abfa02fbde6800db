"""Optimal dwell times over a planning horizon for a fixed transit time rho.

The horizon is: stay at the current target i (active time tau_i while R_i
falls, then idle time taubar_i holding it at zero), travel to neighbour j for
rho, then stay at j (tau_j active, taubar_j idle).  The mean neighbourhood
uncertainty over the horizon is a ratio of a quadratic and a linear function
of the dwell times, so its optimum over a polygon can be found exactly by
enumerating vertices and stationary points.

The departure-only form (tau_i = taubar_i = 0) has a five-branch closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

SNAP_TOL = 1e-12


class InfeasibleError(ValueError):
    """Transit time leaves no room in the planning horizon."""


@dataclass(frozen=True)
class NeighborhoodSnapshot:
    """Frozen view of target i and its (effective) neighbours at solve time."""

    t_s: float
    i: int
    H: float
    A: Mapping[int, float]
    B: Mapping[int, float]
    R: Mapping[int, float]

    def __post_init__(self) -> None:
        if self.i not in self.A:
            raise ValueError("snapshot must include the current target")
        if self.H <= 0.0:
            raise ValueError("planning horizon must be positive")
        for m in self.A:
            if not 0.0 < self.A[m] < self.B[m]:
                raise ValueError(f"target {m}: need 0 < A < B")
            if self.R[m] < 0.0:
                raise ValueError(f"target {m}: negative uncertainty")

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(sorted(self.A))

    @property
    def A_bar(self) -> float:
        return math.fsum(self.A.values())

    @property
    def R_bar(self) -> float:
        return math.fsum(self.R.values())


@dataclass(frozen=True)
class SensingSolution:
    tau_i: float
    tau_i_bar: float
    tau_j: float
    tau_j_bar: float
    J: float
    case: object
    rho: float

    @property
    def dwell_i(self) -> float:
        return self.tau_i + self.tau_i_bar

    @property
    def horizon(self) -> float:
        return self.tau_i + self.tau_i_bar + self.rho + self.tau_j + self.tau_j_bar


def _check_rho(snap: NeighborhoodSnapshot, rho: float) -> None:
    if not rho > 0.0:
        raise ValueError(f"transit time must be positive, got {rho}")
    if rho > snap.H * (1 + 1e-12):
        raise InfeasibleError(f"transit time {rho} exceeds planning horizon {snap.H}")


# ---------------------------------------------------------------------------
# departure-only form


@dataclass(frozen=True)
class _DepartAggregates:
    A_bar: float
    R_bar: float
    A_j: float
    B_j: float
    R_j: float

    @classmethod
    def of(cls, snap: NeighborhoodSnapshot, j: int) -> "_DepartAggregates":
        if j == snap.i or j not in snap.A:
            raise ValueError(f"target {j} is not a neighbour in the snapshot")
        return cls(snap.A_bar, snap.R_bar, snap.A[j], snap.B[j], snap.R[j])


def _depart_cost(g: _DepartAggregates, rho: float, tau: float, tbar: float) -> tuple[float, float, float]:
    """Return (numerator, denominator, J) of the mean uncertainty for dwell (tau, tbar) at j."""
    Aj_bar = g.A_bar - g.A_j
    Rj_bar = g.R_bar - g.R_j
    c1 = 0.5 * (g.A_bar - g.B_j)
    c2 = 0.5 * Aj_bar
    c3 = Aj_bar
    c4 = g.R_bar + g.A_bar * rho
    c5 = Rj_bar + Aj_bar * rho
    c6 = 0.5 * rho * (2.0 * g.R_bar + g.A_bar * rho)
    num = c1 * tau * tau + c2 * tbar * tbar + c3 * tau * tbar + c4 * tau + c5 * tbar + c6
    den = rho + tau + tbar
    return num, den, num / den


def depart_thresholds(snap: NeighborhoodSnapshot, j: int, rho: float) -> dict[str, float]:
    """The switching quantities of the departure-only solution (D1, D2, D3, Dbar1, Dbar2)."""
    g = _DepartAggregates.of(snap, j)
    return _thresholds(g, snap.H, rho)


def _thresholds(g: _DepartAggregates, H: float, rho: float) -> dict[str, float]:
    D3 = (g.R_j + g.A_j * rho) / (g.B_j - g.A_j)
    D2 = min(D3, H - rho)
    D1 = g.A_bar * rho / (g.B_j - g.A_bar) if g.B_j > g.A_bar else math.inf
    s = rho + D3
    Aj_bar = g.A_bar - g.A_j
    rad = ((g.B_j - g.A_j) * s * s - g.B_j * rho * rho) / Aj_bar
    Dbar1 = math.sqrt(rad) - s if rad >= 0.0 else -s
    Dbar2 = H - rho - D3
    return {"D1": D1, "D2": D2, "D3": D3, "Dbar1": Dbar1, "Dbar2": Dbar2}


def _depart_branch(g: _DepartAggregates, H: float, rho: float) -> tuple[int, float, float]:
    """Return (case, tau_j, taubar_j).

    On [0, D3] the cost of active time has no interior minimum, and once j is
    empty the cost of idle time is minimised at Dbar1 clipped to the horizon,
    so the optimum is the best of three candidates.  Ties go to the later case.
    """
    d = _thresholds(g, H, rho)
    best = (1, 0.0, 0.0)
    best_J = _depart_cost(g, rho, 0.0, 0.0)[2]
    if d["D2"] < d["D3"]:
        cand = (2, d["D2"], 0.0)
    else:
        s = rho + d["D3"]
        if g.A_bar >= g.B_j * (1.0 - rho * rho / (s * s)):
            cand = (3, d["D3"], 0.0)
        elif d["Dbar1"] <= d["Dbar2"]:
            cand = (4, d["D3"], d["Dbar1"])
        else:
            cand = (5, d["D3"], d["Dbar2"])
    J = _depart_cost(g, rho, cand[1], cand[2])[2]
    if J <= best_J:
        return cand
    return best


def rhcp3_dwell(snap: NeighborhoodSnapshot, j: int, rho: float) -> SensingSolution:
    """Closed-form dwell at j when leaving i immediately."""
    _check_rho(snap, rho)
    g = _DepartAggregates.of(snap, j)
    case, tau, tbar = _depart_branch(g, snap.H, rho)
    J = _depart_cost(g, rho, tau, tbar)[2]
    return SensingSolution(0.0, 0.0, tau, tbar, J, case, rho)


def rhcp3_objective(snap: NeighborhoodSnapshot, j: int, rho: float, tau_j: float, tau_j_bar: float) -> float:
    return _depart_cost(_DepartAggregates.of(snap, j), rho, tau_j, tau_j_bar)[2]


def _depart_derivative(g: _DepartAggregates, H: float, rho: float) -> float:
    case, tau, tbar = _depart_branch(g, H, rho)
    if case == 1:
        return 0.5 * g.A_bar
    a = g.A_j / (g.B_j - g.A_j)
    if case == 2:
        dtau, dtbar = -1.0, 0.0
    elif case == 3:
        dtau, dtbar = a, 0.0
    elif case == 4:
        s = rho + tau
        ds = 1.0 + a
        Aj_bar = g.A_bar - g.A_j
        root = math.sqrt(((g.B_j - g.A_j) * s * s - g.B_j * rho * rho) / Aj_bar)
        dtau = a
        dtbar = ((g.B_j - g.A_j) * s * ds - g.B_j * rho) / (Aj_bar * root) - ds
    else:
        dtau, dtbar = a, -1.0 - a
    Aj_bar = g.A_bar - g.A_j
    num, den, _ = _depart_cost(g, rho, tau, tbar)
    n_rho = g.A_bar * tau + Aj_bar * tbar + g.R_bar + g.A_bar * rho
    n_tau = (g.A_bar - g.B_j) * tau + Aj_bar * tbar + g.R_bar + g.A_bar * rho
    n_tbar = Aj_bar * tbar + Aj_bar * tau + (g.R_bar - g.R_j) + Aj_bar * rho
    dnum = n_rho + n_tau * dtau + n_tbar * dtbar
    dden = 1.0 + dtau + dtbar
    return (dnum * den - num * dden) / (den * den)


# ---------------------------------------------------------------------------
# full form: dwell at i, transit, dwell at j


def rhcp1_coefficients(snap: NeighborhoodSnapshot, j: int, rho: float) -> tuple[float, ...]:
    """The fifteen coefficients C1..C15 of the rational horizon cost (index 0 unused)."""
    i = snap.i
    Ab, Rb = snap.A_bar, snap.R_bar
    Ai_b, Aj_b = Ab - snap.A[i], Ab - snap.A[j]
    Aij_b = Ai_b - snap.A[j]
    Ri_b, Rj_b = Rb - snap.R[i], Rb - snap.R[j]
    Bi, Bj = snap.B[i], snap.B[j]
    return (
        0.0,
        0.5 * (Ab - Bi),
        0.5 * Ai_b,
        0.5 * (Ab - Bj),
        0.5 * Aj_b,
        Ai_b,
        Ab - Bi,
        Aj_b - Bi,
        Ai_b,
        Aij_b,
        Aj_b,
        Rb + (Ab - Bi) * rho,
        Ri_b + Ai_b * rho,
        Rb + Ab * rho,
        Rj_b + Aj_b * rho,
        0.5 * rho * (2.0 * Rb + Ab * rho),
    )


def rhcp1_objective(snap: NeighborhoodSnapshot, j: int, rho: float, tau_i: float, tau_i_bar: float,
                    tau_j: float, tau_j_bar: float) -> float:
    den = tau_i + tau_i_bar + rho + tau_j + tau_j_bar
    if den <= 0.0:
        raise ValueError("horizon length must be positive")
    C = rhcp1_coefficients(snap, j, rho)
    ti, tbi, tj, tbj = tau_i, tau_i_bar, tau_j, tau_j_bar
    num = (C[1] * ti * ti + C[2] * tbi * tbi + C[3] * tj * tj + C[4] * tbj * tbj
           + C[5] * ti * tbi + C[6] * ti * tj + C[7] * ti * tbj + C[8] * tbi * tj + C[9] * tbi * tbj
           + C[10] * tj * tbj + C[11] * ti + C[12] * tbi + C[13] * tj + C[14] * tbj + C[15])
    return num / den


def _quad_matrix(C: tuple[float, ...]) -> list[list[float]]:
    return [
        [C[1], 0.5 * C[5], 0.5 * C[6], 0.5 * C[7]],
        [0.5 * C[5], C[2], 0.5 * C[8], 0.5 * C[9]],
        [0.5 * C[6], 0.5 * C[8], C[3], 0.5 * C[10]],
        [0.5 * C[7], 0.5 * C[9], 0.5 * C[10], C[4]],
    ]


@dataclass
class _Region:
    """Dwell vector x = P z + q over a polygon in z given by a.z <= c rows.

    Rows 0, 1, 2 are z1 >= 0, z2 >= 0 and the horizon budget; further rows are
    region specific.  Each row also carries dc/drho, and dq holds dq/drho.
    """

    name: str
    P: list[list[float]]
    q: list[float]
    dq: list[float]
    rows: list[tuple[float, float, float, float]]
    M: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass
class _Candidate:
    J: float
    z: tuple[float, float]
    region: _Region
    active: tuple[int, ...]
    num: float
    den: float


class _DwellProblem:
    """Exact minimiser of the horizon cost for a fixed neighbour j, as a function of rho."""

    def __init__(self, snap: NeighborhoodSnapshot, j: int, pin_active: bool):
        if j == snap.i or j not in snap.A:
            raise ValueError(f"target {j} is not a neighbour in the snapshot")
        self.snap, self.j, self.pin = snap, j, pin_active
        i = snap.i
        self.Ab, self.Rb = snap.A_bar, snap.R_bar
        self.Ai_b = self.Ab - snap.A[i]
        self.Aj_b = self.Ab - snap.A[j]
        self.Bi = snap.B[i]
        Aj, Bj = snap.A[j], snap.B[j]
        self.a = Aj / (Bj - Aj)
        self.Rj, self.Aj, self.Bj = snap.R[j], Aj, Bj
        self.Di = 0.0 if pin_active else snap.R[i] / (snap.B[i] - snap.A[i])
        C0 = rhcp1_coefficients(snap, j, 0.0)
        self.Q = _quad_matrix(C0)
        self._static_cache: dict[str, tuple] = {}

    def _regions(self, rho: float) -> list[_Region]:
        a, Di = self.a, self.Di
        d0 = (self.Rj + self.Aj * rho) / (self.Bj - self.Aj)
        S = self.snap.H - rho
        out = []
        if Di > 0.0:
            out.append(_Region("active-active", [[1, 0], [0, 0], [0, 1], [0, 0]], [0, 0, 0, 0], [0, 0, 0, 0],
                               [(-1, 0, 0, 0), (0, -1, 0, 0), (1, 1, S, -1), (1, 0, Di, 0), (-a, 1, d0, a)]))
            out.append(_Region("active-idle", [[1, 0], [0, 0], [a, 0], [0, 1]], [0, 0, d0, 0], [0, 0, a, 0],
                               [(-1, 0, 0, 0), (0, -1, 0, 0), (1 + a, 1, S - d0, -1 - a), (1, 0, Di, 0)]))
        out.append(_Region("idle-active", [[0, 0], [1, 0], [0, 1], [0, 0]], [Di, 0, 0, 0], [0, 0, 0, 0],
                           [(-1, 0, 0, 0), (0, -1, 0, 0), (1, 1, S - Di, -1), (-a, 1, d0 + a * Di, a)]))
        out.append(_Region("idle-idle", [[0, 0], [1, 0], [a, 0], [0, 1]], [Di, 0, d0 + a * Di, 0], [0, 0, a, 0],
                           [(-1, 0, 0, 0), (0, -1, 0, 0), (1 + a, 1, S - Di - d0 - a * Di, -1 - a)]))
        for r in out:
            r.M = self._static(r)[0]
        return out

    def _static(self, r: _Region):
        """rho-independent pieces of a region: (M, P'Q, column sums of P), cached by name."""
        hit = self._static_cache.get(r.name)
        if hit is None:
            Q, P = self.Q, r.P
            PtQ = [[sum(P[k][u] * Q[k][l] for k in range(4)) for l in range(4)] for u in range(2)]
            m = [[sum(PtQ[u][l] * P[l][v] for l in range(4)) for v in range(2)] for u in range(2)]
            lz = [P[0][u] + P[1][u] + P[2][u] + P[3][u] for u in range(2)]
            hit = ((m[0][0], m[0][1], m[1][1]), PtQ, lz)
            self._static_cache[r.name] = hit
        return hit

    def _linear_terms(self, rho: float) -> tuple[list[float], float]:
        Rb, Ab = self.Rb, self.Ab
        snap, i, j = self.snap, self.snap.i, self.j
        c = [Rb + (Ab - self.Bi) * rho, Rb - snap.R[i] + self.Ai_b * rho, Rb + Ab * rho,
             Rb - snap.R[j] + self.Aj_b * rho]
        return c, 0.5 * rho * (2.0 * Rb + Ab * rho)

    def _region_form(self, r: _Region, rho: float):
        """Coefficients of N(z) = z'Mz + n.z + n0 and L(z) = l.z + l0."""
        Q, P, q = self.Q, r.P, r.q
        _, PtQ, l = self._static(r)
        c, c15 = self._linear_terms(rho)
        n = []
        for u in range(2):
            a, b = PtQ[u], P
            n.append(2.0 * (a[0] * q[0] + a[1] * q[1] + a[2] * q[2] + a[3] * q[3])
                     + b[0][u] * c[0] + b[1][u] * c[1] + b[2][u] * c[2] + b[3][u] * c[3])
        n0 = c15
        for k in range(4):
            if q[k] != 0.0:
                Qk = Q[k]
                n0 += q[k] * (Qk[0] * q[0] + Qk[1] * q[1] + Qk[2] * q[2] + Qk[3] * q[3] + c[k])
        l0 = rho + q[0] + q[1] + q[2] + q[3]
        return n, n0, l, l0

    def solve(self, rho: float) -> _Candidate:
        best: _Candidate | None = None
        for r in self._regions(rho):
            cand = self._solve_region(r, rho)
            if cand is not None and (best is None or cand.J < best.J):
                best = cand
        if best is None:
            raise InfeasibleError(f"no feasible dwell for transit time {rho}")
        return best

    def _solve_region(self, r: _Region, rho: float) -> _Candidate | None:
        poly = _polygon(r.rows)
        if not poly:
            return None
        n, n0, l, l0 = self._region_form(r, rho)
        m11, m12, m22 = r.M

        def ratio(z1: float, z2: float) -> tuple[float, float, float]:
            num = m11 * z1 * z1 + 2 * m12 * z1 * z2 + m22 * z2 * z2 + n[0] * z1 + n[1] * z2 + n0
            den = l[0] * z1 + l[1] * z2 + l0
            return num / den, num, den

        best: _Candidate | None = None

        def offer(z1: float, z2: float, active: tuple[int, ...]) -> None:
            nonlocal best
            J, num, den = ratio(z1, z2)
            if best is None or J < best.J:
                best = _Candidate(J, (z1, z2), r, active, num, den)

        k = len(poly)
        for idx in range(k):
            (p, lab_in), (pn, lab_out) = poly[idx - 1], poly[idx]
            offer(pn[0], pn[1], tuple(sorted({lab_in, lab_out})))
        for idx in range(k):
            (p0, lab), (p1, _) = poly[idx], poly[(idx + 1) % k]
            d = (p1[0] - p0[0], p1[1] - p0[1])
            if abs(d[0]) + abs(d[1]) <= 1e-15:
                continue
            a2 = m11 * d[0] * d[0] + 2 * m12 * d[0] * d[1] + m22 * d[1] * d[1]
            a1 = 2 * (m11 * p0[0] * d[0] + m12 * (p0[0] * d[1] + p0[1] * d[0]) + m22 * p0[1] * d[1]) \
                + n[0] * d[0] + n[1] * d[1]
            _, a0, b0 = ratio(p0[0], p0[1])
            b1 = l[0] * d[0] + l[1] * d[1]
            for t in _quadratic_roots(a2 * b1, 2 * a2 * b0, a1 * b0 - a0 * b1):
                if 0.0 < t < 1.0:
                    offer(p0[0] + t * d[0], p0[1] + t * d[1], (lab,))
        det = m11 * m22 - m12 * m12
        if abs(det) > 1e-14 * (m11 * m11 + m22 * m22 + m12 * m12 + 1e-300):
            # stationarity 2Mz + n = lambda*l gives z affine in lambda
            inv = (m22 / (2 * det), -m12 / (2 * det), m11 / (2 * det))
            u = (inv[0] * l[0] + inv[1] * l[1], inv[1] * l[0] + inv[2] * l[1])
            w = (-(inv[0] * n[0] + inv[1] * n[1]), -(inv[1] * n[0] + inv[2] * n[1]))

            def quad(x, y):
                return m11 * x[0] * y[0] + m12 * (x[0] * y[1] + x[1] * y[0]) + m22 * x[1] * y[1]

            e2 = quad(u, u) - (l[0] * u[0] + l[1] * u[1])
            e1 = 2 * quad(u, w) + n[0] * u[0] + n[1] * u[1] - (l[0] * w[0] + l[1] * w[1]) - l0
            e0 = quad(w, w) + n[0] * w[0] + n[1] * w[1] + n0
            for lam in _quadratic_roots(e2, e1, e0):
                z = (lam * u[0] + w[0], lam * u[1] + w[1])
                if all(a1_ * z[0] + a2_ * z[1] < c_ - 1e-12 * (1 + abs(c_)) for a1_, a2_, c_, _ in r.rows):
                    offer(z[0], z[1], ())
        return best

    def to_solution(self, cand: _Candidate, rho: float) -> SensingSolution:
        r, z = cand.region, cand.z
        x = [r.P[k][0] * z[0] + r.P[k][1] * z[1] + r.q[k] for k in range(4)]
        scale = max(1.0, self.snap.H)
        x = [0.0 if abs(v) <= SNAP_TOL * scale else v for v in x]
        if self.Di > 0.0 and abs(x[0] - self.Di) <= 1e-12 * max(1.0, self.Di):
            x[0] = self.Di
        return SensingSolution(x[0], x[1], x[2], x[3], cand.J, (r.name, cand.active), rho)

    def derivative(self, cand: _Candidate, rho: float) -> float | None:
        """dJ*/drho by the envelope argument; None when the active set is degenerate."""
        r, z = cand.region, cand.z
        Q, P, q, dq = self.Q, r.P, r.q, r.dq
        x = [P[k][0] * z[0] + P[k][1] * z[1] + q[k] for k in range(4)]
        c, _ = self._linear_terms(rho)
        dc = [self.Ab - self.Bi, self.Ai_b, self.Ab, self.Aj_b]
        dc15 = self.Rb + self.Ab * rho
        grad_x = [2.0 * sum(Q[k][l] * x[l] for l in range(4)) + c[k] for k in range(4)]
        dN = sum(dc[k] * x[k] for k in range(4)) + dc15 + sum(grad_x[k] * dq[k] for k in range(4))
        dL = 1.0 + sum(dq)
        N, L = cand.num, cand.den
        dF = (dN * L - N * dL) / (L * L)
        gz = [sum(grad_x[k] * P[k][u] for k in range(4)) for u in range(2)]
        lz = [sum(P[k][u] for k in range(4)) for u in range(2)]
        gF = [(gz[u] * L - N * lz[u]) / (L * L) for u in range(2)]
        act = cand.active
        if len(act) == 0:
            return dF
        if len(act) == 1:
            a1, a2, _, cprime = r.rows[act[0]]
            return dF + (gF[0] * a1 + gF[1] * a2) * cprime / (a1 * a1 + a2 * a2)
        if len(act) == 2:
            (a1, a2, _, c1p), (b1, b2, _, c2p) = r.rows[act[0]], r.rows[act[1]]
            det = a1 * b2 - a2 * b1
            if abs(det) < 1e-12:
                return None
            dz1 = (c1p * b2 - a2 * c2p) / det
            dz2 = (a1 * c2p - c1p * b1) / det
            return dF + gF[0] * dz1 + gF[1] * dz2
        return None


def _quadratic_roots(a: float, b: float, c: float) -> list[float]:
    scale = abs(a) + abs(b) + abs(c)
    if scale == 0.0:
        return []
    if abs(a) <= 1e-14 * scale:
        return [-c / b] if abs(b) > 1e-14 * scale else []
    disc = b * b - 4 * a * c
    if disc < 0.0:
        return []
    sq = math.sqrt(disc)
    qq = -0.5 * (b + math.copysign(sq, b))
    roots = [qq / a]
    if qq != 0.0:
        roots.append(c / qq)
    return roots


def _polygon(rows: list[tuple[float, float, float, float]]):
    """Clip the base triangle by the extra rows; return [(vertex, label of outgoing edge)]."""
    w1, w2, S, _ = rows[2]
    if S < -1e-12 * (1 + abs(S)):
        return []
    S = max(S, 0.0)
    if S == 0.0:
        return [((0.0, 0.0), 0)]
    poly = [((0.0, 0.0), 1), ((S / w1, 0.0), 2), ((0.0, S / w2), 0)]
    for lab in range(3, len(rows)):
        a1, a2, c, _ = rows[lab]
        tol = 1e-12 * (1 + abs(c))
        out = []
        k = len(poly)
        for idx in range(k):
            (p, plab), (pn, _) = poly[idx], poly[(idx + 1) % k]
            fp = a1 * p[0] + a2 * p[1] - c
            fq = a1 * pn[0] + a2 * pn[1] - c
            if fp <= tol:
                out.append((p, plab))
                if fq > tol and fp < -tol:
                    t = fp / (fp - fq)
                    out.append(((p[0] + t * (pn[0] - p[0]), p[1] + t * (pn[1] - p[1])), lab))
                elif fq > tol:
                    out[-1] = (p, lab)
            elif fq <= tol:
                if fq < -tol:
                    t = fp / (fp - fq)
                    out.append(((p[0] + t * (pn[0] - p[0]), p[1] + t * (pn[1] - p[1])), plab))
        poly = out
        if not poly:
            return []
    return poly


def _dwell_solve(snap: NeighborhoodSnapshot, j: int, rho: float, pin_active: bool) -> SensingSolution:
    _check_rho(snap, rho)
    prob = _DwellProblem(snap, j, pin_active)
    return prob.to_solution(prob.solve(rho), rho)


def rhcp1_dwell(snap: NeighborhoodSnapshot, j: int, rho: float, pin_active: bool = False) -> SensingSolution:
    """Optimal (tau_i, taubar_i, tau_j, taubar_j) at transit time rho.

    Active time never exceeds the time to empty a target, and idle time only
    follows a completed active phase, so the cost equals the true integral of
    the neighbourhood uncertainty.  pin_active=True forces tau_i = 0.
    """
    return _dwell_solve(snap, j, rho, pin_active)


def rhcp2_dwell(snap: NeighborhoodSnapshot, j: int, rho: float) -> SensingSolution:
    """Dwell optimum when target i is already empty (tau_i = 0)."""
    if snap.R[snap.i] > 1e-9:
        raise ValueError("the idle-start form requires an empty current target")
    return _dwell_solve(snap, j, rho, True)


# ---------------------------------------------------------------------------
# value functions J*(rho)


def _case_breaks(case_at: Callable[[float], object], lo: float, hi: float, n: int = 96) -> list[tuple[float, float, object]]:
    """Split [lo, hi] into maximal pieces of constant case by scanning and bisection."""
    pts = {lo + (hi - lo) * k / n for k in range(n + 1)}
    if lo > 0.0:
        pts |= {lo * (hi / lo) ** (k / n) for k in range(n + 1)}
    grid = sorted(pts)
    grid[0], grid[-1] = lo, hi
    cases = [case_at(r) for r in grid]
    pieces = []
    start, cur = lo, cases[0]
    for k in range(1, len(grid)):
        if cases[k] != cur:
            a, b = grid[k - 1], grid[k]
            while b - a > 1e-13 * max(1.0, b):
                mid = 0.5 * (a + b)
                if case_at(mid) == cur:
                    a = mid
                else:
                    b = mid
            pieces.append((start, b, cur))
            start, cur = b, cases[k]
    pieces.append((start, hi, cur))
    return pieces


class ValueFunction:
    """J*(rho) for one (snapshot, neighbour, form), with derivative and case pieces."""

    form: str

    def __init__(self, snap: NeighborhoodSnapshot, j: int):
        self.snap, self.j = snap, j
        self.H = snap.H

    def solve(self, rho: float) -> SensingSolution:
        raise NotImplementedError

    def value(self, rho: float) -> float:
        return self.solve(rho).J

    def derivative(self, rho: float) -> float:
        raise NotImplementedError

    def case(self, rho: float) -> object:
        return self.solve(rho).case

    def pieces(self, lo: float, hi: float) -> list[tuple[float, float, object]]:
        raise NotImplementedError


class DepartValueFunction(ValueFunction):
    form = "RHCP3"

    def __init__(self, snap: NeighborhoodSnapshot, j: int):
        super().__init__(snap, j)
        self._g = _DepartAggregates.of(snap, j)

    def solve(self, rho: float) -> SensingSolution:
        return rhcp3_dwell(self.snap, self.j, rho)

    def value(self, rho: float) -> float:
        _, tau, tbar = _depart_branch(self._g, self.H, rho)
        return _depart_cost(self._g, rho, tau, tbar)[2]

    def derivative(self, rho: float) -> float:
        return _depart_derivative(self._g, self.H, rho)

    def case(self, rho: float) -> int:
        return _depart_branch(self._g, self.H, rho)[0]

    def pieces(self, lo: float, hi: float) -> list[tuple[float, float, object]]:
        return _case_breaks(self.case, lo, hi)


class DwellValueFunction(ValueFunction):
    """Numerical J*(rho) for the forms that also choose dwell at the current target."""

    def __init__(self, snap: NeighborhoodSnapshot, j: int, pin_active: bool):
        super().__init__(snap, j)
        self.form = "RHCP2" if pin_active else "RHCP1"
        self._prob = _DwellProblem(snap, j, pin_active)
        self._cache: dict[float, _Candidate] = {}

    def _cand(self, rho: float) -> _Candidate:
        c = self._cache.get(rho)
        if c is None:
            _check_rho(self.snap, rho)
            c = self._prob.solve(rho)
            self._cache[rho] = c
        return c

    def solve(self, rho: float) -> SensingSolution:
        return self._prob.to_solution(self._cand(rho), rho)

    def value(self, rho: float) -> float:
        return self._cand(rho).J

    def case(self, rho: float) -> object:
        c = self._cand(rho)
        return (c.region.name, c.active)

    def derivative(self, rho: float) -> float:
        d = self._prob.derivative(self._cand(rho), rho)
        if d is not None:
            return d
        h = 1e-5 * rho
        hi = min(rho + h, self.H)
        lo = rho - h
        return (self.value(hi) - self.value(lo)) / (hi - lo)

    def pieces(self, lo: float, hi: float) -> list[tuple[float, float, object]]:
        # one numerical piece; the transit search scans for kinks itself
        return [(lo, hi, None)]


def value_fn(snap: NeighborhoodSnapshot, j: int, form: str) -> ValueFunction:
    if form == "RHCP3":
        return DepartValueFunction(snap, j)
    if form == "RHCP1":
        return DwellValueFunction(snap, j, pin_active=False)
    if form == "RHCP2":
        return DwellValueFunction(snap, j, pin_active=True)
    raise ValueError(f"unknown problem form {form!r}")

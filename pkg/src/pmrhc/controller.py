"""Event-driven receding-horizon controller for a team of agents on a target graph.

Agents decide only at events.  At each decision an agent solves one problem per
available neighbour (dwell here, travel, dwell there), keeps the cheapest, and
executes it until the next event that concerns it.  The World owns the clock,
the target states and the event queue; handle_event is the only mutator.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum

from . import targets as tg
from .geometry import NetworkGraph
from .sensing import InfeasibleError, NeighborhoodSnapshot, SensingSolution, value_fn
from .transit import MethodParams, TransitPlan, optimize_transit

R_ZERO_TOL = 1e-9


class EventKind(IntEnum):
    # value doubles as the processing priority at equal timestamps
    EMPTY_REACHED = 0
    ACTIVE_DONE = 1
    IDLE_DONE = 2
    ARRIVAL = 3
    DEPARTURE = 4
    COVERING = 5
    UNCOVERING = 6


KIND_NAMES = {
    EventKind.EMPTY_REACHED: "EmptyReached",
    EventKind.ACTIVE_DONE: "ActiveDone",
    EventKind.IDLE_DONE: "IdleDone",
    EventKind.ARRIVAL: "Arrival",
    EventKind.DEPARTURE: "Departure",
    EventKind.COVERING: "Covering",
    EventKind.UNCOVERING: "Uncovering",
}


@dataclass(order=True)
class Event:
    time: float
    kind: EventKind
    agent: int
    seq: int
    target: int = field(default=-1, compare=False)
    gen: int = field(default=0, compare=False)


class Mode(Enum):
    ACTIVE = "active"
    IDLE = "idle"
    WAITING = "waiting"
    TRANSIT = "transit"


class WaitForUncovering(Exception):
    """No neighbour is available; the agent holds position until one is released."""


@dataclass(frozen=True)
class Decision:
    form: str
    t_s: float
    i: int
    j: int
    sensing: SensingSolution
    plan: TransitPlan
    J_sH: float
    J_eH: float
    J_H: float

    @property
    def t_o(self) -> float:
        return self.plan.t_o


@dataclass
class AgentState:
    id: int
    mode: Mode
    target: int
    until: float | None = None
    plan: TransitPlan | None = None
    edge: tuple[int, int] | None = None
    heading: float = 0.0
    decision: Decision | None = None
    gen: int = 0


def classify_rhcp(trigger: EventKind, R_i: float, mode: Mode | None = None) -> str:
    """Which problem form an event calls for at a dwelling agent."""
    if mode is Mode.TRANSIT:
        raise RuntimeError("agents in transit do not re-plan")
    if trigger == EventKind.IDLE_DONE:
        return "RHCP3"
    if trigger == EventKind.ACTIVE_DONE:
        return "RHCP2" if R_i <= 0.0 else "RHCP3"
    if trigger in (EventKind.ARRIVAL, EventKind.COVERING, EventKind.UNCOVERING):
        return "RHCP1" if R_i > 0.0 else "RHCP2"
    raise ValueError(f"event {trigger!r} does not trigger a decision")


def solve_decision(form: str, snap: NeighborhoodSnapshot, graph: NetworkGraph, params: MethodParams,
                   neighbors: list[int] | tuple[int, ...] | None = None) -> Decision:
    """Solve the horizon problem for each available neighbour and return the best decision.

    Ties go to the lowest target id.
    """
    i = snap.i
    cand = sorted(neighbors if neighbors is not None else [m for m in snap.A if m != i])
    best: Decision | None = None
    best_score = math.inf
    for j in cand:
        vf = value_fn(snap, j, form)
        try:
            if form == "RHCP3":
                t_o = snap.t_s
                choice = optimize_transit(params, vf, graph.length(i, j), t_o)
            else:
                # departure time depends on the dwell, which depends on rho
                choice = optimize_transit(params, vf, graph.length(i, j), snap.t_s)
                t_o = snap.t_s + choice.sensing.dwell_i
        except InfeasibleError:
            continue
        if choice.score < best_score:
            best_score = choice.score
            best = Decision(form, snap.t_s, i, j, choice.sensing, choice.plan.shifted(t_o), choice.J_sH,
                            choice.J_eH, choice.J_H)
    if best is None:
        raise WaitForUncovering(f"no available neighbour at target {i}")
    return best


@dataclass
class TransitRecord:
    agent: int
    edge: tuple[int, int]
    plan: TransitPlan


@dataclass
class World:
    graph: NetworkGraph
    params: MethodParams
    T: float
    H: float
    placements: dict[int, int]
    t: float = 0.0
    J_s_integral: float = 0.0
    events_log: list[dict] = field(default_factory=list)
    decisions: list[Decision] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(set(self.placements.values())) != len(self.placements):
            raise ValueError("agents must start on distinct targets")
        g = self.graph
        self.targets = {i: tg.initial_state(t.R0, t.A, t.B) for i, t in g.targets.items()}
        self.agents: dict[int, AgentState] = {}
        self.covered: dict[int, int] = {}
        self.target_gen: dict[int, int] = {i: 0 for i in g.targets}
        self.queue: list[Event] = []
        self._seq = 0
        self.transits: list[TransitRecord] = []
        self.dwells: dict[int, list[tuple[int, float, float | None]]] = {}
        self.visits: dict[int, int] = {i: 0 for i in g.targets}
        self.r_history: dict[int, list[tuple[float, float, float]]] = {}
        for a, i in sorted(self.placements.items()):
            seg = next((s for (p, _), s in sorted(g.edges.items()) if p == i), None)
            heading = seg.heading(seg.p_o) if seg is not None else 0.0
            self.agents[a] = AgentState(a, Mode.WAITING, i, heading=heading)
            self.covered[i] = a
            self._set_occupied(i, True)
            self.dwells[a] = []
            self._push(0.0, EventKind.ARRIVAL, a, i)
        for i, s in self.targets.items():
            self.r_history[i] = [(0.0, s.R, s.slope)]

    # -- bookkeeping -----------------------------------------------------
    def _push(self, time: float, kind: EventKind, agent: int, target: int = -1, gen: int = 0) -> None:
        self._seq += 1
        heapq.heappush(self.queue, Event(time, kind, agent, self._seq, target, gen))

    def _log(self, kind: str, agent: int | None, target: int | None, **detail) -> None:
        self.events_log.append({"t": self.t, "kind": kind, "agent": agent, "target": target, "detail": detail})

    def _set_occupied(self, i: int, occ: bool) -> None:
        t = self.graph.targets[i]
        self.targets[i] = tg.set_occupied(self.targets[i], t.A, t.B, occ)
        self.target_gen[i] += 1

    def advance_to(self, t: float) -> None:
        dt = t - self.t
        if dt < 0.0:
            raise RuntimeError(f"event at {t} precedes clock {self.t}")
        if dt > 0.0:
            for i, s in self.targets.items():
                tt = self.graph.targets[i]
                self.J_s_integral += tg.advance_cost(s, tt.A, tt.B, dt)
                self.targets[i] = tg.advance(s, tt.A, tt.B, dt)
        self.t = t

    def _record_targets(self) -> None:
        for i, s in self.targets.items():
            hist = self.r_history[i]
            last_t, last_R, last_slope = hist[-1]
            expect = last_R + last_slope * (self.t - last_t)
            if s.slope != last_slope or abs(s.R - expect) > 1e-12 * max(1.0, abs(s.R)):
                if hist[-1][0] == self.t:
                    hist[-1] = (self.t, s.R, s.slope)
                else:
                    hist.append((self.t, s.R, s.slope))

    def occupancy(self) -> dict[int, int]:
        occ = {i: 0 for i in self.targets}
        for ag in self.agents.values():
            if ag.mode is not Mode.TRANSIT:
                occ[ag.target] += 1
        return occ

    # -- decisions -------------------------------------------------------
    def available_neighbors(self, a: int, i: int) -> list[int]:
        return [j for j in self.graph.neighbors(i) if self.covered.get(j, a) == a]

    def snapshot(self, a: int, i: int) -> tuple[NeighborhoodSnapshot, list[int]]:
        nbrs = self.available_neighbors(a, i)
        members = [i] + nbrs
        g = self.graph.targets
        snap = NeighborhoodSnapshot(
            self.t, i, self.H,
            {m: g[m].A for m in members},
            {m: g[m].B for m in members},
            {m: self.targets[m].R for m in members},
        )
        return snap, nbrs

    def _decide(self, a: int, trigger: EventKind) -> None:
        ag = self.agents[a]
        i = ag.target
        R_i = self.targets[i].R
        form = classify_rhcp(trigger, R_i, ag.mode)
        ag.gen += 1
        snap, nbrs = self.snapshot(a, i)
        try:
            dec = solve_decision(form, snap, self.graph, self.params, nbrs)
        except WaitForUncovering:
            ag.decision = None
            if form == "RHCP1":
                tt = self.graph.targets[i]
                ag.mode, ag.until = Mode.ACTIVE, self.t + tg.time_to_empty(self.targets[i], tt.A, tt.B)
                self._push(ag.until, EventKind.ACTIVE_DONE, a, i, ag.gen)
            else:
                ag.mode, ag.until = Mode.WAITING, None
            self._log("Wait", a, i, form=form)
            return
        self.decisions.append(dec)
        ag.decision = dec
        self._log("Decision", a, i, form=form, j=dec.j, rho=dec.plan.rho, tau_i=dec.sensing.tau_i,
                  tau_i_bar=dec.sensing.tau_i_bar, tau_j=dec.sensing.tau_j, tau_j_bar=dec.sensing.tau_j_bar,
                  J_H=dec.J_H)
        if form == "RHCP1":
            ag.mode, ag.until = Mode.ACTIVE, self.t + dec.sensing.tau_i
            self._push(ag.until, EventKind.ACTIVE_DONE, a, i, ag.gen)
        elif form == "RHCP2":
            ag.mode, ag.until = Mode.IDLE, self.t + dec.sensing.tau_i_bar
            self._push(ag.until, EventKind.IDLE_DONE, a, i, ag.gen)
        else:
            self._depart(a, dec)

    def _depart(self, a: int, dec: Decision) -> None:
        ag = self.agents[a]
        i, j = dec.i, dec.j
        plan = dec.plan.shifted(self.t)
        seg = self.graph.edges[(i, j)]
        self._set_occupied(i, False)
        self._close_dwell(a)
        del self.covered[i]
        self.covered[j] = a
        ag.mode, ag.plan, ag.edge, ag.until = Mode.TRANSIT, plan, (i, j), plan.t_f
        ag.heading = seg.heading(seg.p_o)
        ag.target = j
        self.transits.append(TransitRecord(a, (i, j), plan))
        self._log("Departure", a, i, to=j, rho=plan.rho, energy=plan.energy, method=plan.method)
        ag.gen += 1
        self._push(plan.t_f, EventKind.ARRIVAL, a, j, ag.gen)
        if len(self.agents) >= 2:
            self._push(self.t, EventKind.COVERING, a, j)
            self._push(self.t, EventKind.UNCOVERING, a, i)

    def _close_dwell(self, a: int) -> None:
        d = self.dwells[a]
        if d and d[-1][2] is None:
            d[-1] = (d[-1][0], d[-1][1], self.t)

    # -- event dispatch --------------------------------------------------
    def handle_event(self, ev: Event) -> None:
        self.advance_to(ev.time)
        kind = ev.kind
        if kind == EventKind.EMPTY_REACHED:
            if ev.gen == self.target_gen[ev.target]:
                s = self.targets[ev.target]
                self.targets[ev.target] = tg.TargetState(0.0, 0.0, True, s.last_event_time)
                self._log("EmptyReached", ev.agent, ev.target)
        elif kind == EventKind.ARRIVAL:
            ag = self.agents[ev.agent]
            if ev.gen != ag.gen:
                return
            j = ev.target
            if ag.mode is Mode.TRANSIT:
                self._log("TransitDone", ev.agent, j)
            ag.mode, ag.plan, ag.edge = Mode.WAITING, None, None
            self._set_occupied(j, True)
            self.visits[j] += 1
            self.dwells[ev.agent].append((j, self.t, None))
            self._log("Arrival", ev.agent, j, R=self.targets[j].R)
            tt = self.graph.targets[j]
            tte = tg.time_to_empty(self.targets[j], tt.A, tt.B)
            if tte is not None and tte > 0.0:
                self._push(self.t + tte, EventKind.EMPTY_REACHED, ev.agent, j, self.target_gen[j])
            self._decide(ev.agent, EventKind.ARRIVAL)
        elif kind in (EventKind.ACTIVE_DONE, EventKind.IDLE_DONE):
            ag = self.agents[ev.agent]
            if ev.gen != ag.gen:
                return
            i = ag.target
            s = self.targets[i]
            if kind == EventKind.ACTIVE_DONE and 0.0 < s.R <= R_ZERO_TOL * max(1.0, self.graph.targets[i].B):
                self.targets[i] = tg.TargetState(0.0, 0.0, True, s.last_event_time)
            self._log(KIND_NAMES[kind], ev.agent, i, R=self.targets[i].R)
            self._decide(ev.agent, kind)
        elif kind in (EventKind.COVERING, EventKind.UNCOVERING):
            j = ev.target
            self._log(KIND_NAMES[kind], ev.agent, j)
            for b, ag in sorted(self.agents.items()):
                if b == ev.agent or ag.mode is Mode.TRANSIT:
                    continue
                if j in self.graph.neighbors(ag.target):
                    self._decide(b, kind)
        self._record_targets()
        self._check_invariants()

    def _check_invariants(self) -> None:
        for i, n in self.occupancy().items():
            if n > 1:
                raise RuntimeError(f"target {i} shared by {n} agents at t={self.t}")
        for i, s in self.targets.items():
            if s.R < 0.0:
                raise RuntimeError(f"negative uncertainty at target {i}")

    def step(self) -> bool:
        """Process the next event strictly before T; return False when none is left."""
        if not self.queue or self.queue[0].time >= self.T:
            return False
        self.handle_event(heapq.heappop(self.queue))
        return True

    def finish(self) -> None:
        self.advance_to(self.T)
        self._record_targets()
        for a in self.agents:
            self._close_dwell(a)

"""Piecewise-linear target uncertainty dynamics.

R grows at A while a target is unattended and falls at B - A while an agent
dwells on it, saturating at zero.  Between events the slope is constant, so
every update and every cost integral is closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class TargetState:
    R: float
    slope: float
    occupied: bool = False
    last_event_time: float = 0.0

    def __post_init__(self) -> None:
        if self.R < 0.0:
            raise ValueError(f"negative uncertainty {self.R}")


def rate(R: float, A: float, B: float, occupied: bool) -> float:
    """Slope of R given occupancy; zero when an attended target is already empty."""
    if not occupied:
        return A
    if R > 0.0:
        return A - B
    return 0.0


def initial_state(R0: float, A: float, B: float, occupied: bool = False, t: float = 0.0) -> TargetState:
    return TargetState(R0, rate(R0, A, B, occupied), occupied, t)


def set_occupied(state: TargetState, A: float, B: float, occupied: bool) -> TargetState:
    return replace(state, occupied=occupied, slope=rate(state.R, A, B, occupied))


def advance(state: TargetState, A: float, B: float, dt: float) -> TargetState:
    """Exact state after dt with occupancy held fixed; clamps at zero if emptied."""
    if dt < 0.0:
        raise ValueError(f"negative time step {dt}")
    t = state.last_event_time + dt
    if not state.occupied:
        return TargetState(state.R + A * dt, A, False, t)
    if state.R <= 0.0:
        return TargetState(0.0, 0.0, True, t)
    R = state.R + (A - B) * dt
    if R <= 0.0:
        return TargetState(0.0, 0.0, True, t)
    return TargetState(R, A - B, True, t)


def time_to_empty(state: TargetState, A: float, B: float) -> float | None:
    if state.R <= 0.0:
        return 0.0
    if not state.occupied:
        return None
    return state.R / (B - A)


def interval_cost(R0: float, slope: float, dt: float) -> float:
    """Integral of R over an interval of length dt on which R has constant slope."""
    return 0.5 * dt * (2.0 * R0 + slope * dt)


def advance_cost(state: TargetState, A: float, B: float, dt: float) -> float:
    """Integral of R over [0, dt] from state, splitting at the zero crossing if there is one."""
    if dt < 0.0:
        raise ValueError(f"negative time step {dt}")
    if state.occupied and state.R > 0.0:
        t0 = state.R / (B - A)
        if t0 < dt:
            return interval_cost(state.R, A - B, t0)
    s = rate(state.R, A, B, state.occupied)
    return interval_cost(state.R, s, dt)

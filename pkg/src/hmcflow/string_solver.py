"""Closed relativistic string in the plane, evolved by method of lines.

The string X(t, u) obeys

    |X_u|^2 X_tt - 2 <X_t, X_u> X_tu + (|X_t|^2 - 1) X_uu = 0

which is solved for X_tt without assuming the orthogonal gauge
<X_t, X_u> = 0; the gauge and the time-like margin are monitored instead.
u-derivatives are spectral on a uniform periodic grid, time stepping is
RK4.

Step size. Writing a = |X_u|^2, b = <V, X_u>, c = |V|^2 - 1 (V = X_t), the
characteristic speeds in u are (-b +- sqrt(b^2 - ac)) / a. The step is

    dt = cfl * du / max_j max((|b| + sqrt(b^2 - ac)) / a, |V| / |X_u|)

The second term caps how far a node moves relative to the local spacing,
which matters near collapse where the characteristic speed stays O(1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .errors import (ContractViolation, DegenerateParametrization,
                     InvalidConfig, NumericalFailure, TimelikeViolation)
from .geometry import deriv_theta

__all__ = [
    "StringState",
    "StringConfig",
    "StringRecord",
    "StringTrajectory",
    "StringTermination",
    "make_string_initial",
    "string_rhs",
    "string_dt",
    "string_step",
    "string_evolve",
    "gauge_residual",
    "timelike_margin",
]


class StringTermination(str, Enum):
    REACHED_T_END = "reached_t_end"
    COLLAPSE = "collapse_detected"
    TIMELIKE_LOST = "timelike_lost"
    DEGENERATE = "degenerate_parametrization"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class StringState:
    """Positions X and velocities V (both shape (m, 2)) at time t."""

    t: float
    X: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        if self.X.shape != self.V.shape or self.X.ndim != 2 or self.X.shape[1] != 2:
            raise ContractViolation("X and V must both have shape (m, 2)")
        m = self.X.shape[0]
        if m < 16 or m % 2:
            raise ContractViolation(f"m must be an even integer >= 16, got {m}")

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.m


@dataclass(frozen=True)
class StringConfig:
    shape: str = "circle"
    shape_params: dict = field(default_factory=lambda: {"r0": 1.0})
    vn: float = 0.0
    m: int = 64
    cfl: float = 0.25
    t_end: float = 1.0
    diameter_min: float = 1e-3
    record_every: int = 1

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise InvalidConfig(f"cfl must lie in (0, 1], got {self.cfl!r}")
        if not self.t_end > 0.0:
            raise InvalidConfig(f"t_end must be > 0, got {self.t_end!r}")
        if not self.diameter_min > 0.0:
            raise InvalidConfig("diameter_min must be positive")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise InvalidConfig("record_every must be an integer >= 1")
        if int(self.m) != self.m or self.m < 16 or self.m % 2:
            raise InvalidConfig(f"m must be an even integer >= 16, got {self.m!r}")

    def initial_state(self) -> StringState:
        return make_string_initial(self.shape, self.shape_params, int(self.m),
                                   self.vn)


@dataclass(frozen=True)
class StringRecord:
    t: float
    mean_radius: float
    diameter: float
    gauge_residual: float
    timelike_margin: float
    min_speed_u: float


@dataclass
class StringTrajectory:
    config: StringConfig
    records: list[StringRecord]
    snapshots: list[StringState]
    termination: StringTermination
    t_final: float
    steps: int = 0
    message: str = ""


def make_string_initial(shape: str, params, m: int, vn: float = 0.0) -> StringState:
    """Circle(r0) or ellipse(a, b) with velocity vn along the outward normal.

    A purely normal velocity satisfies the orthogonal gauge exactly.
    """
    if not abs(vn) < 1.0:
        raise TimelikeViolation(f"|vn| = {abs(vn)!r} >= 1")
    u = 2.0 * math.pi * np.arange(m) / m
    params = dict(params)
    if shape == "circle":
        a = b = float(params["r0"])
    elif shape == "ellipse":
        a, b = float(params["a"]), float(params["b"])
    else:
        raise InvalidConfig(f"unknown string shape {shape!r}")
    if not (a > 0.0 and b > 0.0):
        raise InvalidConfig("string radii must be positive")
    X = np.column_stack([a * np.cos(u), b * np.sin(u)])
    # outward normal of a counter-clockwise curve: (y_u, -x_u)/|X_u|
    xu, yu = -a * np.sin(u), b * np.cos(u)
    norm = np.hypot(xu, yu)
    V = vn * np.column_stack([yu / norm, -xu / norm])
    return StringState(0.0, X, V)


def _du(arr, order=1):
    return np.column_stack([deriv_theta(arr[:, 0], order),
                            deriv_theta(arr[:, 1], order)])


# |X_u| below this fraction of its maximum counts as a vanishing tangent;
# spectral derivatives never return an exact zero
IMMERSION_TOL = 1e-10


def _accel(X, V):
    Xu = _du(X)
    speed = np.hypot(Xu[:, 0], Xu[:, 1])
    bad = np.flatnonzero(~(speed > IMMERSION_TOL * np.max(speed)))
    if bad.size:
        j = int(bad[0])
        raise DegenerateParametrization(
            f"|X_u| = {speed[j]:.3e} vanishes at node {j}", index=j)
    Xuu = _du(X, 2)
    Vu = _du(V)
    out = np.empty_like(X)
    # component arrays must be contiguous for the compiled kernel
    cols = [np.ascontiguousarray(c) for c in
            (V[:, 0], V[:, 1], Xu[:, 0], Xu[:, 1], Vu[:, 0], Vu[:, 1],
             Xuu[:, 0], Xuu[:, 1])]
    ox, oy = np.empty(len(X)), np.empty(len(X))
    bad = kernels.string_accel(*cols, ox, oy)
    if bad >= 0:
        raise DegenerateParametrization(
            f"|X_u| vanished at node {bad}", index=bad)
    out[:, 0], out[:, 1] = ox, oy
    return out


def string_rhs(state: StringState):
    """(X_t, V_t) for the string equation."""
    return state.V.copy(), _accel(state.X, state.V)


def gauge_residual(state: StringState) -> float:
    """max_j |<V_j, (X_u)_j>|."""
    Xu = _du(state.X)
    return float(np.max(np.abs(np.sum(state.V * Xu, axis=1))))


def timelike_margin(state: StringState) -> float:
    """min_j of -[(|V|^2 - 1)|X_u|^2 - <V, X_u>^2]; positive means time-like."""
    Xu = _du(state.X)
    a = np.sum(Xu * Xu, axis=1)
    b = np.sum(state.V * Xu, axis=1)
    c = np.sum(state.V * state.V, axis=1) - 1.0
    return float(np.min(b * b - a * c))


def _diameter(X):
    diff = X[:, None, :] - X[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))


def string_dt(state: StringState, cfl: float) -> float:
    Xu = _du(state.X)
    a = np.sum(Xu * Xu, axis=1)
    b = np.sum(state.V * Xu, axis=1)
    c = np.sum(state.V * state.V, axis=1) - 1.0
    disc = np.maximum(b * b - a * c, 0.0)
    char = (np.abs(b) + np.sqrt(disc)) / a
    drift = np.sqrt(np.sum(state.V * state.V, axis=1) / a)
    speed = float(np.max(np.maximum(char, drift)))
    if not (speed > 0.0 and math.isfinite(speed)):
        raise NumericalFailure(f"bad string speed bound {speed!r}")
    return cfl * state.spacing / speed


def string_step(state: StringState, dt: float) -> StringState:
    X, V = state.X, state.V
    half = 0.5 * dt
    a1 = _accel(X, V)
    X2, V2 = X + half * V, V + half * a1
    a2 = _accel(X2, V2)
    X3, V3 = X + half * V2, V + half * a2
    a3 = _accel(X3, V3)
    X4, V4 = X + dt * V3, V + dt * a3
    a4 = _accel(X4, V4)
    sixth = dt / 6.0
    Xn = X + sixth * (V + 2.0 * V2 + 2.0 * V3 + V4)
    Vn = V + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    if not (np.all(np.isfinite(Xn)) and np.all(np.isfinite(Vn))):
        raise NumericalFailure(f"non-finite string state at t={state.t + dt!r}")
    return StringState(state.t + dt, Xn, Vn)


def _record(state: StringState) -> StringRecord:
    Xu = _du(state.X)
    return StringRecord(
        t=float(state.t),
        mean_radius=float(np.mean(np.hypot(state.X[:, 0], state.X[:, 1]))),
        diameter=_diameter(state.X),
        gauge_residual=gauge_residual(state),
        timelike_margin=timelike_margin(state),
        min_speed_u=float(np.min(np.hypot(Xu[:, 0], Xu[:, 1]))),
    )


def string_evolve(initial: StringState | StringConfig, cfl: float | None = None,
                  t_end: float | None = None, record_every: int = 1,
                  diameter_min: float = 1e-3,
                  gauge_tol: float = 1e-12) -> StringTrajectory:
    """Evolve a string until t_end, collapse, or loss of an invariant."""
    if isinstance(initial, StringConfig):
        cfg = initial
        state = cfg.initial_state()
    else:
        cfg = StringConfig(shape="given", shape_params={}, m=initial.m,
                           cfl=cfl if cfl is not None else 0.25,
                           t_end=t_end if t_end is not None else 1.0,
                           diameter_min=diameter_min,
                           record_every=record_every)
        state = initial
    if cfl is None:
        cfl = cfg.cfl
    if t_end is None:
        t_end = cfg.t_end
    if gauge_residual(state) > gauge_tol * max(1.0, _diameter(state.X)):
        raise ContractViolation("initial data violates the orthogonal gauge")
    if not timelike_margin(state) > 0.0:
        raise TimelikeViolation("initial data is not time-like")

    records = [_record(state)]
    snaps = [state]
    steps = 0
    term = None
    message = ""
    while term is None:
        try:
            dt = string_dt(state, cfl)
            hit_end = state.t + dt >= t_end
            if hit_end:
                dt = t_end - state.t
            new = string_step(state, dt)
        except DegenerateParametrization as exc:
            term, message = StringTermination.DEGENERATE, str(exc)
            break
        except NumericalFailure as exc:
            term, message = StringTermination.NUMERICAL_FAILURE, str(exc)
            break
        if hit_end:
            new = StringState(float(t_end), new.X, new.V)
        state = new
        steps += 1
        rec = _record(state)
        # near collapse 1 - |V|^2 ~ R^2 and the margin ~ R^4 sinks below the
        # time-step error; treat loss there as the collapse it announces
        if rec.diameter <= cfg.diameter_min or (
                not rec.timelike_margin > 0.0
                and rec.diameter <= 10.0 * cfg.diameter_min):
            term = StringTermination.COLLAPSE
        elif not rec.timelike_margin > 0.0:
            term = StringTermination.TIMELIKE_LOST
        elif not rec.min_speed_u > 0.0:
            term = StringTermination.DEGENERATE
        elif hit_end:
            term = StringTermination.REACHED_T_END
        if term is not None or steps % cfg.record_every == 0:
            records.append(rec)
            snaps.append(state)
    return StringTrajectory(cfg, records, snaps, term, state.t, steps, message)

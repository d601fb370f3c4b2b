"""Method-of-lines integration of the support-function equation.

The flow is integrated as the first-order system

    S_tau = P
    P_tau = (P_theta^2 - 1) / (S_thth + S) + d P

on the periodic theta grid (d <= 0 is the dissipation constant, d = 0 the
undamped flow), starting from S = h, P = -f. Time stepping is classical RK4
with dt from the characteristic speeds k P_theta +- k, bounded above by
k (|P_theta| + 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import kernels
from .diagnostics import DiagnosticsRecord, record
from .errors import (ContractViolation, HyperbolicityLost, InvalidConfig,
                     NotApplicable, NumericalFailure)
from .geometry import (SupportProfile, ThetaGrid, deriv_theta, make_initial,
                       radius_of_curvature, width_max)

__all__ = [
    "Termination",
    "SupportState",
    "FlowConfig",
    "Trajectory",
    "CollapseEstimate",
    "rhs",
    "max_char_speed",
    "cfl_dt",
    "step",
    "evolve",
    "evolve_lockstep",
    "estimate_collapse_time",
]

MAX_STEPS = 5_000_000


class Termination(str, Enum):
    REACHED_T_END = "reached_t_end"
    COLLAPSE = "collapse_detected"
    BLOWUP = "blowup_detected"
    HYPERBOLICITY_LOST = "hyperbolicity_lost"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SupportState:
    """S and P = S_tau sampled on the grid at time t."""

    grid: ThetaGrid
    t: float
    s: np.ndarray
    p: np.ndarray

    def validate(self, stage: int = 5) -> None:
        if not (np.all(np.isfinite(self.s)) and np.all(np.isfinite(self.p))):
            raise NumericalFailure(
                f"non-finite state at t={self.t!r} (stage {stage})", stage)
        v = radius_of_curvature(self.s)
        bad = np.flatnonzero(~(v > 0.0))
        if bad.size:
            j = int(bad[0])
            raise HyperbolicityLost(
                f"S_thth + S = {v[j]:.3e} at node {j}, t={self.t!r} "
                f"(stage {stage})", stage, j)

    @property
    def profile(self) -> SupportProfile:
        return SupportProfile(self.grid, self.s)


@dataclass(frozen=True)
class FlowConfig:
    shape: str = "circle"
    shape_params: dict = field(default_factory=lambda: {"r0": 1.0})
    velocity: str = "constant"
    velocity_params: dict = field(default_factory=lambda: {"f0": 0.0})
    n: int = 128
    cfl: float = 0.5
    d: float = 0.0
    t_end: float = 10.0
    k_max_limit: float = 1e4
    width_min: float = 1e-3
    record_every: int = 1
    dealias: bool = False

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise InvalidConfig(f"cfl must lie in (0, 1], got {self.cfl!r}")
        if not self.d <= 0.0:
            raise InvalidConfig(f"dissipation d must be <= 0, got {self.d!r}")
        if not self.t_end > 0.0:
            raise InvalidConfig(f"t_end must be > 0, got {self.t_end!r}")
        if not (self.k_max_limit > 0.0 and self.width_min > 0.0):
            raise InvalidConfig("k_max_limit and width_min must be positive")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise InvalidConfig(
                f"record_every must be an integer >= 1, got {self.record_every!r}")
        if int(self.n) != self.n or self.n < 16 or self.n % 2:
            raise InvalidConfig(f"n must be an even integer >= 16, got {self.n!r}")

    @property
    def grid(self) -> ThetaGrid:
        return ThetaGrid(int(self.n))

    def initial_state(self) -> SupportState:
        prof, vel = make_initial(self.shape, self.shape_params, self.grid,
                                 self.velocity, self.velocity_params)
        return SupportState(self.grid, 0.0, prof.s.copy(), -vel.f)


@dataclass
class Trajectory:
    config: FlowConfig
    records: list[DiagnosticsRecord]
    snapshots: list[SupportState]
    termination: Termination
    t_final: float
    steps: int = 0
    message: str = ""

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)


def _dealias(v):
    n = len(v)
    vh = np.fft.rfft(v)
    vh[n // 3 + 1:] = 0.0
    return np.fft.irfft(vh, n)


def _rhs(s, p, d, dealias=False, stage=0):
    s_thth = deriv_theta(s, 2)
    p_th = deriv_theta(p, 1)
    pdot = np.empty_like(s)
    bad = kernels.support_accel(s, s_thth, p, p_th, float(d), pdot)
    if bad >= 0:
        v = s_thth[bad] + s[bad]
        if not np.isfinite(v):
            raise NumericalFailure(f"non-finite radius of curvature at node "
                                   f"{bad} (stage {stage})", stage)
        raise HyperbolicityLost(
            f"S_thth + S = {v:.3e} at node {bad} (stage {stage})", stage, bad)
    if dealias:
        pdot = _dealias(pdot)
    return p, pdot


def rhs(state: SupportState, d: float = 0.0, dealias: bool = False):
    """Time derivatives (S_tau, P_tau) of the semi-discrete system."""
    sdot, pdot = _rhs(state.s, state.p, d, dealias)
    return sdot.copy(), pdot


def max_char_speed(state: SupportState) -> float:
    s_thth = deriv_theta(state.s, 2)
    p_th = deriv_theta(state.p, 1)
    speed = kernels.max_char_speed(state.s, s_thth, p_th)
    if not (speed > 0.0 and math.isfinite(speed)):
        # positive radius everywhere gives a finite positive speed
        state.validate()
        raise NumericalFailure(f"bad characteristic speed {speed!r}")
    return float(speed)


def cfl_dt(state: SupportState, cfl: float) -> float:
    if not 0.0 < cfl <= 1.0:
        raise ContractViolation(f"cfl must lie in (0, 1], got {cfl!r}")
    return cfl * state.grid.spacing / max_char_speed(state)


def step(state: SupportState, dt: float, d: float = 0.0,
         dealias: bool = False) -> SupportState:
    """One classical RK4 step; the result is validated before returning."""
    if not dt > 0.0:
        raise ContractViolation(f"dt must be > 0, got {dt!r}")
    s, p = state.s, state.p
    half = 0.5 * dt
    k1s, k1p = _rhs(s, p, d, dealias, 1)
    s2, p2 = s + half * k1s, p + half * k1p
    _finite(s2, p2, 2)
    k2s, k2p = _rhs(s2, p2, d, dealias, 2)
    s3, p3 = s + half * k2s, p + half * k2p
    _finite(s3, p3, 3)
    k3s, k3p = _rhs(s3, p3, d, dealias, 3)
    s4, p4 = s + dt * k3s, p + dt * k3p
    _finite(s4, p4, 4)
    k4s, k4p = _rhs(s4, p4, d, dealias, 4)
    sixth = dt / 6.0
    s_new = s + sixth * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    p_new = p + sixth * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    new = SupportState(state.grid, state.t + dt, s_new, p_new)
    new.validate(stage=5)
    return new


def _finite(s, p, stage):
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(p))):
        raise NumericalFailure(f"non-finite stage input (stage {stage})", stage)


class _Run:
    """Mutable bookkeeping for one evolving flow."""

    def __init__(self, config: FlowConfig):
        self.config = config
        self.state = config.initial_state()
        self.state.validate(stage=0)
        self.records = [record(self.state, config.d)]
        self.snapshots = [self.state]
        self.steps = 0
        self.termination: Termination | None = None
        self.message = ""
        if self.state.t >= config.t_end:
            self.termination = Termination.REACHED_T_END

    @property
    def done(self) -> bool:
        return self.termination is not None

    def proposed_dt(self) -> float:
        return cfl_dt(self.state, self.config.cfl)

    def advance(self, dt: float) -> None:
        cfg = self.config
        hit_end = self.state.t + dt >= cfg.t_end
        if hit_end:
            dt = cfg.t_end - self.state.t
        try:
            new = step(self.state, dt, cfg.d, cfg.dealias)
        except HyperbolicityLost as exc:
            self._stop(Termination.HYPERBOLICITY_LOST, str(exc))
            return
        except NumericalFailure as exc:
            self._stop(Termination.NUMERICAL_FAILURE, str(exc))
            return
        if hit_end:
            new = replace(new, t=float(cfg.t_end))
        self.state = new
        self.steps += 1
        v = radius_of_curvature(new.s)
        k_max = 1.0 / float(np.min(v))
        width = width_max(new.s)
        term = None
        if width <= cfg.width_min or (k_max >= cfg.k_max_limit
                                      and width <= 10.0 * cfg.width_min):
            term = Termination.COLLAPSE
        elif k_max >= cfg.k_max_limit:
            term = Termination.BLOWUP
        elif hit_end:
            term = Termination.REACHED_T_END
        elif self.steps >= MAX_STEPS:
            term = Termination.NUMERICAL_FAILURE
            self.message = f"step budget {MAX_STEPS} exhausted"
        if term is not None or self.steps % cfg.record_every == 0:
            self._record()
        if term is not None:
            self.termination = term

    def _record(self):
        if self.records and self.state.t <= self.records[-1].t:
            return
        self.records.append(record(self.state, self.config.d))
        self.snapshots.append(self.state)

    def _stop(self, term, message):
        # last valid state closes the series
        self._record()
        self.termination = term
        self.message = message

    def trajectory(self) -> Trajectory:
        return Trajectory(self.config, self.records, self.snapshots,
                          self.termination, self.state.t, self.steps,
                          self.message)

    def proposal_or_stop(self):
        try:
            return self.proposed_dt()
        except HyperbolicityLost as exc:
            self._stop(Termination.HYPERBOLICITY_LOST, str(exc))
        except NumericalFailure as exc:
            self._stop(Termination.NUMERICAL_FAILURE, str(exc))
        return None


def evolve(config: FlowConfig) -> Trajectory:
    """Integrate from the configured initial data until a stop criterion.

    Runtime stops (collapse, blow-up, loss of hyperbolicity, NaN) are
    reported in ``Trajectory.termination``; only bad configs raise.
    """
    run = _Run(config)
    while not run.done:
        dt = run.proposal_or_stop()
        if dt is None:
            break
        run.advance(dt)
    return run.trajectory()


def evolve_lockstep(*configs: FlowConfig) -> list[Trajectory]:
    """Evolve several flows with a shared time step.

    While two or more runs are active each step uses the smallest CFL step
    among them, so all active runs record at identical times. Runs that
    outlive the others continue with their own step.
    """
    if len({c.n for c in configs}) > 1:
        raise ContractViolation("lockstep runs must share the grid size")
    runs = [_Run(c) for c in configs]
    while True:
        active = [r for r in runs if not r.done]
        if not active:
            break
        proposals = [r.proposal_or_stop() for r in active]
        active = [r for r, dt in zip(active, proposals) if dt is not None]
        if not active:
            break
        dt = min(dt for dt in proposals if dt is not None)
        for r in active:
            r.advance(dt)
    return [r.trajectory() for r in runs]


class CollapseEstimate(NamedTuple):
    time: float
    uncertainty: float
    from_width: float
    from_length: float


def _quadratic_root(t, y):
    """Root of the least-squares quadratic through (t, y) just after t[-1]."""
    t0 = t[-1]
    c2, c1, c0 = np.polyfit(t - t0, y, 2)
    roots = np.roots([c2, c1, c0]) if c2 != 0.0 else np.array([-c0 / c1])
    real = roots[np.abs(roots.imag) <= 1e-12 * (1.0 + np.abs(roots.real))].real
    # y decreases toward zero: take the nearest real root past the data
    span = t[-1] - t[0]
    ahead = real[real >= -span]
    if ahead.size:
        return t0 + float(ahead[np.argmin(np.abs(ahead))])
    c1, c0 = np.polyfit(t[-2:] - t0, y[-2:], 1)
    return t0 - c0 / c1


def estimate_collapse_time(traj: Trajectory) -> CollapseEstimate:
    """Extrapolate the collapse time from the last four records.

    Quadratic fits of width_max(t) and L(t) are each continued to zero;
    the estimate is their midpoint and the uncertainty half their spread.
    """
    if traj.termination != Termination.COLLAPSE:
        raise NotApplicable(
            f"trajectory terminated with {traj.termination.value}, "
            "not a collapse")
    if len(traj.records) < 4:
        raise NotApplicable("need at least 4 records to extrapolate")
    tail = traj.records[-4:]
    t = np.array([r.t for r in tail])
    t_w = _quadratic_root(t, np.array([r.width for r in tail]))
    t_l = _quadratic_root(t, np.array([r.L for r in tail]))
    return CollapseEstimate(0.5 * (t_w + t_l), 0.5 * abs(t_w - t_l), t_w, t_l)

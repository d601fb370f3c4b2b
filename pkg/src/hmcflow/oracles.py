"""Radially symmetric reference solutions.

A circle of radius R(t) centred at the origin stays a circle under both the
curvature flow and the string equation, which reduce to scalar ODEs:

    flow:    R'' = -1/R + d R'
    string:  R'' = (R'^2 - 1) / R

Both are integrated with an adaptive Dormand-Prince 5(4) pair (see
``kernels.radial_dp54``). Integration halts at R = 1e-6 r0, where the
remaining time to R = 0 is added in closed form from the first integrals

    flow (d = 0):  R'^2/2 + ln R = const
    string:        (1 - R'^2) / R^2 = const

``collapse_time_quadrature`` evaluates the flow collapse time directly
from the energy integral and serves as an independent cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

from . import kernels
from .errors import NotApplicable, TimelikeViolation

__all__ = [
    "RadialSolution",
    "circle_flow",
    "collapse_time_quadrature",
    "string_circle",
    "string_collapse_quadrature",
    "flow_energy",
    "string_invariant",
    "STOP_FRACTION",
]

STOP_FRACTION = 1e-6
RTOL = 1e-12
ATOL = 1e-12


@dataclass(frozen=True)
class RadialSolution:
    times: np.ndarray
    R: np.ndarray
    Rdot: np.ndarray
    collapse_time: Optional[float] = None
    steps: int = 0

    def at_end(self):
        return float(self.R[-1]), float(self.Rdot[-1])


def flow_energy(R, Rdot):
    return 0.5 * np.asarray(Rdot) ** 2 + np.log(R)


def string_invariant(R, Rdot):
    return (1.0 - np.asarray(Rdot) ** 2) / np.asarray(R) ** 2


def _flow_tail(r_s, rd_s):
    # integral_0^{r_s} dR / sqrt(2 (E - ln R)) with E - ln r_s = rd_s^2 / 2
    return r_s * math.sqrt(math.pi / 2.0) * float(special.erfcx(abs(rd_s) / math.sqrt(2.0)))


def _string_tail(r_s, rd_s):
    c = (1.0 - rd_s * rd_s) / (r_s * r_s)
    if c <= 0.0:
        return r_s
    root = math.sqrt(c)
    return math.asin(min(1.0, root * r_s)) / root


def _integrate(kind, d, r0, r1, t_end, max_steps):
    if t_end is None:
        t_end = math.inf
    h0 = 1e-3 * r0
    ts, rs, rds, event, steps = kernels.radial_dp54(
        kind, float(d), float(r0), float(r1), float(t_end), RTOL, ATOL,
        STOP_FRACTION * r0, h0, int(max_steps))
    return ts, rs, rds, bool(event), int(steps)


def circle_flow(r0: float, r1: float = 0.0, d: float = 0.0,
                t_end: float | None = None,
                max_steps: int = 10_000_000) -> RadialSolution:
    """Radius of a circle evolving under the (dissipative) flow.

    ``r1`` is the initial radial velocity, so an inward normal speed f0
    corresponds to r1 = -f0. With ``t_end=None`` the solution runs to
    collapse.
    """
    if not r0 > 0.0:
        raise ValueError(f"r0 must be > 0, got {r0!r}")
    ts, rs, rds, event, steps = _integrate(kernels.FLOW, d, r0, r1, t_end,
                                           max_steps)
    collapse = None
    if event:
        collapse = float(ts[-1]) + _flow_tail(float(rs[-1]), float(rds[-1]))
    return RadialSolution(ts, rs, rds, collapse, steps)


def collapse_time_quadrature(r0: float, r1: float = 0.0) -> float:
    """Flow collapse time for r1 <= 0 (d = 0) from the energy integral.

    T = int_0^{r0} dR / sqrt(r1^2 - 2 ln(R/r0)). Substituting
    R = r0 exp(-z^2) removes the endpoint singularity:
    T = r0 int_0^inf 2 z exp(-z^2) / sqrt(r1^2 + 2 z^2) dz.
    """
    if not r0 > 0.0:
        raise ValueError(f"r0 must be > 0, got {r0!r}")
    if r1 > 0.0:
        raise NotApplicable("r1 > 0: the radius first grows; use circle_flow")
    if r1 == 0.0:
        # integrand reduces to sqrt(2) exp(-z^2)
        def f(z):
            return math.sqrt(2.0) * math.exp(-z * z)
    else:
        def f(z):
            return 2.0 * z * math.exp(-z * z) / math.sqrt(r1 * r1 + 2.0 * z * z)
    val, _ = integrate.quad(f, 0.0, math.inf, epsabs=1e-15, epsrel=1e-13,
                            limit=200)
    return r0 * val


def string_circle(r0: float, r1: float = 0.0, t_end: float | None = None,
                  max_steps: int = 10_000_000) -> RadialSolution:
    """Radius of a circular string, R'' = (R'^2 - 1)/R, |R'| < 1."""
    if not r0 > 0.0:
        raise ValueError(f"r0 must be > 0, got {r0!r}")
    if not abs(r1) < 1.0:
        raise TimelikeViolation(f"|r1| = {abs(r1)!r} >= 1: the string would "
                                "move at or above light speed")
    ts, rs, rds, event, steps = _integrate(kernels.STRING, 0.0, r0, r1, t_end,
                                           max_steps)
    collapse = None
    if event:
        collapse = float(ts[-1]) + _string_tail(float(rs[-1]), float(rds[-1]))
    return RadialSolution(ts, rs, rds, collapse, steps)


def string_collapse_quadrature(r0: float, r1: float = 0.0) -> float:
    """String collapse time for r1 <= 0 from its first integral.

    With C = (1 - r1^2)/r0^2, R' = -sqrt(1 - C R^2) and
    T = int_0^{r0} dR / sqrt(1 - C R^2), evaluated by quadrature.
    """
    if r1 > 0.0:
        raise NotApplicable("r1 > 0: use string_circle")
    # R = r0 sin(phi): 1 - C R^2 = cos^2 + r1^2 sin^2, bounded away from 0/0
    def f(phi):
        c, s = math.cos(phi), math.sin(phi)
        return r0 * c / math.sqrt(c * c + r1 * r1 * s * s)
    val, _ = integrate.quad(f, 0.0, math.pi / 2.0, epsabs=1e-15, epsrel=1e-13,
                            limit=200)
    return val

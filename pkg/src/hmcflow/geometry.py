"""Convex curves described by their support function on a normal-angle grid.

A strictly convex closed curve is parameterized by the angle theta of its
outward normal (cos theta, sin theta). Its support function S(theta) is the
distance from the origin to the tangent line with that normal, and
everything else follows from S:

    x = S cos(theta) - S_theta sin(theta)
    y = S sin(theta) + S_theta cos(theta)
    1/k = S_thth + S   (radius of curvature, also ds/dtheta)

Derivatives are spectral on the uniform periodic grid and integrals use the
trapezoid rule, which is spectrally accurate for smooth periodic data.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import ContractViolation, HyperbolicityLost, InvalidConfig

__all__ = [
    "ThetaGrid",
    "SupportProfile",
    "VelocityProfile",
    "CurveSample",
    "deriv_theta",
    "radius_of_curvature",
    "curvature",
    "reconstruct",
    "length",
    "area",
    "width_max",
    "make_initial",
    "SHAPES",
    "VELOCITIES",
]

SHAPES = ("circle", "ellipse", "perturbed")
VELOCITIES = ("constant", "cosine")


@dataclass(frozen=True)
class ThetaGrid:
    """Uniform periodic grid theta_j = 2 pi j / n, j = 0..n-1."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16 or self.n % 2:
            raise ContractViolation(
                f"grid size must be an even integer >= 16, got {self.n!r}")

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.spacing * np.arange(self.n)


@dataclass(frozen=True)
class SupportProfile:
    grid: ThetaGrid
    s: np.ndarray

    def __post_init__(self):
        _check_len(self.s, self.grid.n)
        if not np.all(np.isfinite(self.s)):
            raise ContractViolation("support samples must be finite")


@dataclass(frozen=True)
class VelocityProfile:
    """Initial inward normal speed f(theta) >= 0."""

    grid: ThetaGrid
    f: np.ndarray

    def __post_init__(self):
        _check_len(self.f, self.grid.n)
        if np.any(self.f < 0.0):
            raise InvalidConfig("initial normal speed must be >= 0")


@dataclass(frozen=True)
class CurveSample:
    grid: ThetaGrid
    x: np.ndarray
    y: np.ndarray
    k: np.ndarray


def _check_len(values, n):
    if np.ndim(values) != 1 or len(values) != n:
        raise ContractViolation(
            f"expected {n} samples, got shape {np.shape(values)}")


def _samples(p) -> np.ndarray:
    if isinstance(p, SupportProfile):
        return p.s
    return np.asarray(p, dtype=float)


def deriv_theta(values, order: int = 1, grid: ThetaGrid | None = None):
    """Spectral derivative d/dtheta (order 1) or d^2/dtheta^2 (order 2).

    Exact for trigonometric polynomials whose highest mode is below n/2.
    The Nyquist mode is dropped for the first derivative, as usual for
    even n.
    """
    v = np.asarray(values, dtype=float)
    if grid is not None:
        _check_len(v, grid.n)
    n = v.shape[-1]
    if v.ndim != 1 or n < 2 or n % 2:
        raise ContractViolation(
            f"deriv_theta needs a 1-d array of even length, got {v.shape}")
    if order not in (1, 2):
        raise ContractViolation(f"order must be 1 or 2, got {order!r}")
    vh = np.fft.rfft(v)
    modes = np.arange(n // 2 + 1, dtype=float)
    if order == 1:
        mult = 1j * modes
        mult[-1] = 0.0
    else:
        mult = -modes * modes
    return np.fft.irfft(vh * mult, n)


def radius_of_curvature(p) -> np.ndarray:
    """S_thth + S at every node (= 1/k = ds/dtheta)."""
    s = _samples(p)
    return deriv_theta(s, 2) + s


def curvature(p) -> np.ndarray:
    """k_j = 1/(S_thth + S)(theta_j); raises HyperbolicityLost if any <= 0."""
    v = radius_of_curvature(p)
    bad = np.flatnonzero(~(v > 0.0))
    if bad.size:
        j = int(bad[0])
        raise HyperbolicityLost(
            f"S_thth + S = {v[j]:.3e} <= 0 at node {j}; curve is not "
            "strictly convex", index=j)
    return 1.0 / v


def reconstruct(p: SupportProfile) -> CurveSample:
    s = _samples(p)
    grid = p.grid if isinstance(p, SupportProfile) else ThetaGrid(len(s))
    k = curvature(s)
    s_th = deriv_theta(s, 1)
    c, sn = np.cos(grid.nodes), np.sin(grid.nodes)
    return CurveSample(grid, s * c - s_th * sn, s * sn + s_th * c, k)


def length(p) -> float:
    """Perimeter as the integral of ds/dtheta = S_thth + S.

    The same integral equals the integral of S alone (the S_thth part
    integrates to zero over a period); both are computed and compared.
    """
    s = _samples(p)
    h = 2.0 * math.pi / len(s)
    via_radius = h * float(np.sum(radius_of_curvature(s)))
    via_support = h * float(np.sum(s))
    if abs(via_radius - via_support) > 1e-10 * max(abs(via_support), 1e-300):
        raise ContractViolation(
            f"length self-check failed: {via_radius!r} vs {via_support!r}")
    return via_radius


def area(p) -> float:
    """Enclosed area, (1/2) integral of S (S_thth + S) dtheta."""
    s = _samples(p)
    h = 2.0 * math.pi / len(s)
    return 0.5 * h * float(np.sum(s * radius_of_curvature(s)))


def width_max(p) -> float:
    """Largest distance between parallel support lines, max S(t) + S(t+pi)."""
    s = _samples(p)
    n = len(s)
    if n % 2:
        raise ContractViolation("width needs an even grid")
    return float(np.max(s + np.roll(s, -(n // 2))))


def make_initial(shape: str, params: Mapping[str, float], grid: ThetaGrid,
                 velocity: str = "constant",
                 velocity_params: Mapping[str, float] | None = None):
    """Sample an initial support function and inward normal speed.

    shape: circle(r0) | ellipse(a, b) | perturbed(r0, eps, m), where the
    perturbed curve has S = r0 + eps cos(m theta).
    velocity: constant(f0) | cosine(f0, amp, mode), f = f0 + amp cos(mode theta).

    The solver starts from S_tau = -f, so f >= 0 means the curve starts out
    moving inward.
    """
    th = grid.nodes
    params = dict(params)
    if shape == "circle":
        r0 = _positive(params, "r0", shape)
        s = np.full(grid.n, r0)
    elif shape == "ellipse":
        a = _positive(params, "a", shape)
        b = _positive(params, "b", shape)
        s = np.sqrt((a * np.cos(th)) ** 2 + (b * np.sin(th)) ** 2)
    elif shape == "perturbed":
        r0 = _positive(params, "r0", shape)
        eps = float(params["eps"])
        m = params["m"]
        if int(m) != m or m < 0:
            raise InvalidConfig(f"perturbed: mode m must be a non-negative "
                                f"integer, got {m!r}")
        m = int(m)
        if 2 * m >= grid.n:
            raise InvalidConfig(f"perturbed: mode {m} is not resolved on "
                                f"n={grid.n}")
        # min radius of curvature is r0 - |eps|(m^2-1); S > 0 needs r0 > |eps|
        factor = max(m * m - 1, 1)
        margin = r0 - abs(eps) * factor
        if not margin > 0.0:
            raise InvalidConfig(
                f"perturbed: convexity margin {r0:g} - {factor}*{abs(eps):g} "
                f"= {margin:g} is not > 0")
        s = r0 + eps * np.cos(m * th)
    else:
        raise InvalidConfig(f"unknown initial shape {shape!r}; "
                            f"expected one of {SHAPES}")

    vp = dict(velocity_params or {})
    if velocity == "constant":
        f = np.full(grid.n, float(vp.get("f0", 0.0)))
        slope = 0.0
    elif velocity == "cosine":
        f0 = float(vp.get("f0", 0.0))
        amp = float(vp.get("amp", 0.0))
        mode = vp.get("mode", 1)
        if int(mode) != mode or mode < 0:
            raise InvalidConfig(f"cosine velocity: mode must be a "
                                f"non-negative integer, got {mode!r}")
        f = f0 + amp * np.cos(int(mode) * th)
        slope = abs(amp) * int(mode)
    else:
        raise InvalidConfig(f"unknown velocity kind {velocity!r}; "
                            f"expected one of {VELOCITIES}")
    if np.any(f < 0.0):
        raise InvalidConfig(
            f"initial normal speed must be >= 0 everywhere (min {f.min():g})")
    if slope >= 1.0:
        warnings.warn(
            f"max |f_theta| = {slope:g} >= 1: the initial data is outside "
            "the light cone |S_theta_tau| < 1", RuntimeWarning, stacklevel=2)

    v = radius_of_curvature(s)
    if not np.all(v > 0.0):
        raise InvalidConfig("initial support function is not strictly convex "
                            f"on the grid (min S_thth + S = {v.min():g})")
    return SupportProfile(grid, s), VelocityProfile(grid, f)


def _positive(params, key, shape):
    try:
        value = float(params[key])
    except KeyError:
        raise InvalidConfig(f"{shape}: missing parameter {key!r}") from None
    if not value > 0.0:
        raise InvalidConfig(f"{shape}: {key} must be > 0, got {value!r}")
    return value

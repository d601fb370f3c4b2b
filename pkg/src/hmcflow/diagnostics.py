"""Monitored scalars and identity residuals along a trajectory.

Each record carries the geometric scalars of one state plus the right-hand
sides of the length/area evolution identities evaluated on that state.
``finalize_residuals`` then differences L(t) and A(t) across records and
stores how far the differenced derivatives are from those identities.
With dissipation d the identities pick up the extra terms coming from
S_tt = (S_theta_t^2 - 1) k + d S_t; at d = 0 they are

    dL/dt     = int S_t
    d2L/dt2   = int (S_theta_t^2 - 1) k
    dA/dt     = int S_t / k
    d2A/dt2   = -2 pi + int S_t^2
    d3A/dt3   = 2 int (S_theta_t^2 - 1) k S_t
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import ContractViolation, NotApplicable, TooFewRecords
from .geometry import deriv_theta, radius_of_curvature

if TYPE_CHECKING:
    from .solver import SupportState, Trajectory

__all__ = [
    "DiagnosticsRecord",
    "RESIDUAL_FIELDS",
    "CSV_COLUMNS",
    "record",
    "fd_weights",
    "finalize_residuals",
    "curvature_pde_residual",
    "containment",
    "containment_violations",
    "common_record_times",
]

TWO_PI = 2.0 * math.pi

RESIDUAL_FIELDS = (
    "dL_dt_residual",
    "d2L_dt2_residual",
    "dA_dt_residual",
    "d2A_dt2_residual",
    "d3A_dt3_residual",
    "curvature_pde_residual",
)

CSV_COLUMNS = (
    "t", "L", "A", "k_min", "k_max", "grad_bound", "conv_margin", "width",
    "isoper",
) + RESIDUAL_FIELDS

CONTAINMENT_TOL = 1e-10


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    L: float
    A: float
    k_min: float
    k_max: float
    grad_bound: float
    conv_margin: float
    width: float
    isoper: float
    # identity right-hand sides evaluated on the state
    dL_dt_identity: float
    d2L_dt2_identity: float
    dA_dt_identity: float
    d2A_dt2_identity: float
    d3A_dt3_identity: float
    # filled in by finalize_residuals; None means absent (boundary record)
    dL_dt_residual: Optional[float] = None
    d2L_dt2_residual: Optional[float] = None
    dA_dt_residual: Optional[float] = None
    d2A_dt2_residual: Optional[float] = None
    d3A_dt3_residual: Optional[float] = None
    curvature_pde_residual: Optional[float] = None

    def as_row(self):
        return [getattr(self, name) for name in CSV_COLUMNS]


def record(state: "SupportState", d: float = 0.0) -> DiagnosticsRecord:
    s, p = state.s, state.p
    h = state.grid.spacing
    v = radius_of_curvature(s)
    if not np.all(v > 0.0):
        raise ContractViolation(f"record: state at t={state.t!r} is not "
                                "strictly convex")
    k = 1.0 / v
    p_th = deriv_theta(p, 1)
    L = h * float(np.sum(v))
    A = 0.5 * h * float(np.sum(s * v))
    int_p = h * float(np.sum(p))
    int_p_over_k = h * float(np.sum(p * v))
    accel = (p_th * p_th - 1.0) * k + d * p  # S_tt
    d2A = -TWO_PI + h * float(np.sum(p * p)) + d * int_p_over_k
    return DiagnosticsRecord(
        t=float(state.t),
        L=L,
        A=A,
        k_min=float(np.min(k)),
        k_max=float(np.max(k)),
        grad_bound=float(np.max(np.abs(p_th))),
        conv_margin=float(np.min(v)),
        width=float(np.max(s + np.roll(s, -(len(s) // 2)))),
        isoper=L * L / (2.0 * TWO_PI * A),
        dL_dt_identity=int_p,
        d2L_dt2_identity=h * float(np.sum(accel)),
        dA_dt_identity=int_p_over_k,
        d2A_dt2_identity=d2A,
        d3A_dt3_identity=2.0 * h * float(np.sum(p * accel)) + d * d2A,
    )


def fd_weights(times, t0: float, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at t0.

    Exact for polynomials of degree < len(times), valid on non-uniform
    nodes. Offsets are scaled before solving to keep the Vandermonde
    system well conditioned.
    """
    x = np.asarray(times, dtype=float) - t0
    m = len(x)
    if order >= m:
        raise ContractViolation(f"{m} nodes cannot give derivative {order}")
    scale = float(np.max(np.abs(x)))
    if scale == 0.0:
        raise ContractViolation("stencil nodes coincide")
    xs = x / scale
    vander = np.vander(xs, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vander, rhs) / scale ** order


def finalize_residuals(traj: "Trajectory") -> "Trajectory":
    """Return a copy of ``traj`` with the identity residuals filled in.

    Interior records get centered estimates (3 nodes for first and second
    derivatives, 5 for d3A/dt3); records without enough neighbours keep
    None. The residual is |differenced - identity|.

    The final record closes the run (a clipped step to t_end or the step
    that triggered termination) and so sits off the recording cadence. It
    never enters a stencil: a short last interval would make the centered
    differences only first order.
    """
    recs = traj.records
    n = len(recs)
    if n < 5:
        raise TooFewRecords(f"need at least 5 records, have {n}")
    t = np.array([r.t for r in recs])
    L = np.array([r.L for r in recs])
    A = np.array([r.A for r in recs])
    d = traj.config.d
    out = list(recs)
    last = n - 2  # last record usable as a stencil member
    for i in range(1, last):
        sl = slice(i - 1, i + 2)
        w1 = fd_weights(t[sl], t[i], 1)
        w2 = fd_weights(t[sl], t[i], 2)
        r = recs[i]
        upd = dict(
            dL_dt_residual=abs(float(w1 @ L[sl]) - r.dL_dt_identity),
            d2L_dt2_residual=abs(float(w2 @ L[sl]) - r.d2L_dt2_identity),
            dA_dt_residual=abs(float(w1 @ A[sl]) - r.dA_dt_identity),
            d2A_dt2_residual=abs(float(w2 @ A[sl]) - r.d2A_dt2_identity),
            curvature_pde_residual=_pde_residual(traj, i, d),
        )
        if 2 <= i <= last - 2:
            sl5 = slice(i - 2, i + 3)
            w3 = fd_weights(t[sl5], t[i], 3)
            upd["d3A_dt3_residual"] = abs(float(w3 @ A[sl5])
                                          - r.d3A_dt3_identity)
        out[i] = replace(r, **upd)
    return replace(traj, records=out)


def _pde_residual(traj, i, d):
    snaps = traj.snapshots
    tt = np.array([snaps[j].t for j in (i - 1, i, i + 1)])
    ks = [1.0 / radius_of_curvature(snaps[j].s) for j in (i - 1, i, i + 1)]
    w2 = fd_weights(tt, tt[1], 2)
    k_tt = w2[0] * ks[0] + w2[1] * ks[1] + w2[2] * ks[2]
    st = snaps[i]
    k = ks[1]
    p = st.p
    p_th = deriv_theta(p, 1)
    k_th = deriv_theta(k, 1)
    k_thth = deriv_theta(k, 2)
    k_t = -k * k * (deriv_theta(p, 2) + p)
    k_tht = deriv_theta(k_t, 1)
    rhs = (k * k * (1.0 - p_th * p_th) * k_thth
           + 2.0 * k * p_th * k_tht
           + 4.0 * k * k * p_th * p * k_th
           - 4.0 * k * p * k_t
           + (p_th * p_th + 1.0 - 2.0 * p * p) * k ** 3
           + d * k_t)
    return float(np.max(np.abs(k_tt - rhs)))


def curvature_pde_residual(traj: "Trajectory", index: int,
                           d: float | None = None) -> float:
    """Max-norm residual of the curvature evolution equation at a record.

    k_tt comes from a three-record difference; k_t, k_theta_t and all
    theta derivatives are evaluated on the stored state. As in
    ``finalize_residuals`` the final record is not used as a neighbour.
    """
    n = len(traj.snapshots)
    if not 1 <= index <= n - 3:
        raise NotApplicable(f"index {index} has no on-cadence neighbours on "
                            f"both sides (records 0..{n - 1})")
    if d is None:
        d = traj.config.d
    return _pde_residual(traj, index, d)


def containment(outer: "SupportState", inner: "SupportState") -> bool:
    """True when the inner convex body lies inside the outer one."""
    if outer.grid != inner.grid:
        raise ContractViolation("containment needs states on the same grid")
    return bool(np.all(inner.s <= outer.s + CONTAINMENT_TOL))


def containment_violations(outer: "Trajectory", inner: "Trajectory"):
    """(t, max(S_inner - S_outer)) at every common record time that fails."""
    by_time = {snap.t: snap for snap in outer.snapshots}
    bad = []
    for snap in inner.snapshots:
        other = by_time.get(snap.t)
        if other is not None and not containment(other, snap):
            bad.append((snap.t, float(np.max(snap.s - other.s))))
    return bad


def common_record_times(a: "Trajectory", b: "Trajectory"):
    return sorted({s.t for s in a.snapshots} & {s.t for s in b.snapshots})


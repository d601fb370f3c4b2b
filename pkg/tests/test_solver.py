import math

import numpy as np
import pytest

from hmcflow import oracles
from hmcflow.errors import (ContractViolation, HyperbolicityLost, InvalidConfig,
                            NotApplicable)
from hmcflow.geometry import ThetaGrid
from hmcflow.solver import (FlowConfig, SupportState, Termination, cfl_dt,
                            estimate_collapse_time, evolve, evolve_lockstep,
                            max_char_speed, rhs, step)

SQRT_PI_2 = math.sqrt(math.pi / 2)


def state(s, p, n=64):
    g = ThetaGrid(n)
    return SupportState(g, 0.0, np.broadcast_to(np.asarray(s, float), (n,)).copy(),
                        np.broadcast_to(np.asarray(p, float), (n,)).copy())


def test_rhs_unit_circle_at_rest():
    sd, pd = rhs(state(1.0, 0.0))
    assert np.all(sd == 0.0)
    assert np.allclose(pd, -1.0, atol=1e-15)


def test_rhs_dissipative_balance():
    _, pd = rhs(state(2.0, -0.5), d=-1.0)
    assert np.max(np.abs(pd)) < 1e-15


def test_rhs_elliptic_profile():
    g = ThetaGrid(64)
    st = SupportState(g, 0.0, 1 + 0.1 * np.cos(2 * g.nodes), np.zeros(64))
    _, pd = rhs(st)
    assert pd[0] == pytest.approx(-10 / 7, rel=1e-12)


def test_rhs_raises_when_not_convex():
    g = ThetaGrid(64)
    st = SupportState(g, 0.0, 1 + 0.4 * np.cos(2 * g.nodes), np.zeros(64))
    with pytest.raises(HyperbolicityLost):
        rhs(st)


@pytest.mark.parametrize("s,expected", [(1.0, 1.0), (2.0, 0.5)])
def test_max_char_speed_circles(s, expected):
    assert max_char_speed(state(s, 0.0)) == pytest.approx(expected)


def test_cfl_dt_examples():
    assert cfl_dt(state(1.0, 0.0), 0.5) == pytest.approx(0.0490874, abs=1e-7)
    assert cfl_dt(state(2.0, 0.0), 0.5) == pytest.approx(0.0981748, abs=1e-7)
    g = ThetaGrid(128)
    st = SupportState(g, 0.0, 1 + 0.1 * np.cos(2 * g.nodes), np.zeros(128))
    assert max_char_speed(st) == pytest.approx(10 / 7, rel=1e-12)
    assert cfl_dt(st, 0.9) == pytest.approx(0.0309251, abs=1e-7)
    with pytest.raises(ContractViolation):
        cfl_dt(st, 1.5)


def test_single_step_matches_taylor_and_oracle():
    new = step(state(1.0, 0.0), 1e-3)
    assert new.t == 1e-3
    assert np.allclose(new.s, 1 - 0.5e-6, atol=1e-12)
    assert np.allclose(new.p, -1e-3, atol=1e-9)
    assert np.ptp(new.s) == 0.0
    ref = oracles.circle_flow(1.0, 0.0, 0.0, t_end=1e-3)
    assert abs(new.s[0] - ref.R[-1]) < 1e-15 * 10


def test_single_dissipative_step_matches_oracle():
    new = step(state(1.0, 0.0), 1e-3, d=-1.0)
    ref = oracles.circle_flow(1.0, 0.0, -1.0, t_end=1e-3)
    assert abs(new.s[0] - ref.R[-1]) < 1e-14
    assert abs(new.p[0] - ref.Rdot[-1]) < 1e-13


def test_step_consistency():
    g = ThetaGrid(64)
    st0 = SupportState(g, 0.0, 1 + 0.05 * np.cos(3 * g.nodes), -0.2 * np.ones(64))
    errs = [np.max(np.abs(step(st0, h).s - st0.s)) for h in (1e-3, 1e-4)]
    assert errs[1] < errs[0] / 5


def test_step_rejects_nonpositive_dt():
    with pytest.raises(ContractViolation):
        step(state(1.0, 0.0), 0.0)


def test_config_validation():
    for kw in ({"cfl": 0.0}, {"cfl": 1.1}, {"d": 0.5}, {"t_end": 0.0},
               {"width_min": -1.0}, {"record_every": 0}, {"n": 30 + 1}):
        with pytest.raises(InvalidConfig):
            FlowConfig(**kw)


def test_circle_stays_spatially_constant_and_tracks_oracle():
    tr = evolve(FlowConfig(n=64, t_end=0.8 * SQRT_PI_2,
                           velocity_params={"f0": 0.0}))
    assert tr.termination == Termination.REACHED_T_END
    ref = oracles.circle_flow(1.0, 0.0, 0.0, t_end=tr.t_final).R[-1]
    for snap in tr.snapshots:
        assert np.ptp(snap.s) < 1e-12
    assert abs(tr.snapshots[-1].s[0] - ref) < 1e-6


def test_circle_collapse_time():
    tr = evolve(FlowConfig(n=128))
    assert tr.termination == Termination.COLLAPSE
    assert tr.records[-1].width <= 1e-3
    est = estimate_collapse_time(tr)
    assert est.time == pytest.approx(SQRT_PI_2, abs=1e-3)


def test_circle_radius_two_scales():
    tr = evolve(FlowConfig(shape_params={"r0": 2.0}, n=64))
    assert tr.termination == Termination.COLLAPSE
    assert estimate_collapse_time(tr).time == pytest.approx(2 * SQRT_PI_2,
                                                            abs=2e-3)


def test_initial_inward_speed_collapses_earlier():
    tr = evolve(FlowConfig(n=64, velocity_params={"f0": 1.0}))
    est = estimate_collapse_time(tr)
    ref = oracles.collapse_time_quadrature(1.0, -1.0)
    assert est.time < SQRT_PI_2
    assert est.time == pytest.approx(ref, abs=1e-4)


def test_estimate_rejects_non_collapse():
    tr = evolve(FlowConfig(n=64, t_end=0.1))
    with pytest.raises(NotApplicable):
        estimate_collapse_time(tr)


def test_records_strictly_increasing_and_cadence():
    tr = evolve(FlowConfig(n=64, t_end=0.5, record_every=3))
    t = tr.times()
    assert np.all(np.diff(t) > 0)
    assert t[-1] == 0.5
    assert len(tr.records) == len(tr.snapshots)
    assert len(tr.records) == tr.steps // 3 + 1 + (tr.steps % 3 != 0)


def test_determinism():
    cfg = FlowConfig(shape="perturbed",
                     shape_params={"r0": 1, "eps": 0.05, "m": 3}, n=64,
                     t_end=0.3)
    a, b = evolve(cfg), evolve(cfg)
    assert np.array_equal(a.snapshots[-1].s, b.snapshots[-1].s)
    assert a.records == b.records


def test_hyperbolicity_loss_is_reported():
    with pytest.warns(RuntimeWarning):
        cfg = FlowConfig(velocity="cosine",
                         velocity_params={"f0": 0.5, "amp": 0.5, "mode": 8},
                         n=64)
        tr = evolve(cfg)
    assert tr.termination == Termination.HYPERBOLICITY_LOST
    assert "stage" in tr.message
    assert tr.t_final < 0.1


def test_blowup_vs_collapse_classification():
    # curvature reaches the limit while the body is still wide
    tr = evolve(FlowConfig(shape="perturbed",
                           shape_params={"r0": 1, "eps": 0.05, "m": 3},
                           velocity_params={"f0": 0.2}, n=64))
    assert tr.termination == Termination.BLOWUP
    assert tr.records[-1].k_max >= 1e4
    assert tr.records[-1].width > 1e-2


def test_monotone_shrinking_for_inward_speed():
    tr = evolve(FlowConfig(shape="ellipse", shape_params={"a": 1.2, "b": 1.0},
                           velocity_params={"f0": 0.1}, n=64, t_end=1.0))
    S = np.array([s.s for s in tr.snapshots])
    assert np.all(np.diff(S, axis=0) <= 1e-12)


def test_lockstep_shares_times():
    a, b = evolve_lockstep(FlowConfig(n=64, t_end=0.5),
                           FlowConfig(n=64, t_end=0.5, shape_params={"r0": 0.5}))
    assert np.array_equal(a.times(), b.times())
    with pytest.raises(ContractViolation):
        evolve_lockstep(FlowConfig(n=64), FlowConfig(n=128))

import math

import numpy as np
import pytest

from scaleqsl.core import ConfigError, Custom, NumericalError, TonksGirardeau
from scaleqsl.ermakov import analytic_tof, solve_ermakov
from scaleqsl.experiment import (
    DATA_TARGETS,
    MeasuredSeries,
    SolverSettings,
    discretized_derivative,
    metrics_from_data,
    propagate_all,
    propagate_uncertainty,
    run_protocol,
    sweep,
    tqd_sweep,
)
from scaleqsl.metrics import bures_angle, fidelity, tqd_excess_bures
from scaleqsl.protocols import constant_protocol, linear_ramp, sta_protocol

ONE = Custom(value=1.0)


def sta_series(m, s_b=0.0, tau=10.0):
    tr = solve_ermakov(sta_protocol(1, 1 / 16, tau), num_nodes=m + 1)
    return MeasuredSeries(tr.t, tr.b, np.full(m + 1, s_b), tr.omega_sq)


def test_run_protocol_examples():
    rep = run_protocol(ONE, constant_protocol(1, 10), SolverSettings(num_nodes=101))
    np.testing.assert_allclose(rep.fidelity, 1.0)
    np.testing.assert_allclose(rep.gamma_cum, 0.0, atol=1e-10)
    assert rep.delta_l == 0
    assert run_protocol(ONE, linear_ramp(1, 1 / 16, 10)).b_tau < 4
    rep = run_protocol(ONE, sta_protocol(1, 1 / 16, 10))
    assert rep.b_tau == pytest.approx(4, abs=1e-6)
    assert rep.meta["system"] == {"kind": "custom", "sigma2": 1.0}
    assert rep.meta["protocol"]["kind"] == "sta"


def test_run_protocol_adds_context():
    from scaleqsl.protocols import LinearRamp

    class Pinch(LinearRamp):
        def _w2(self, t):
            return 1e30

    with pytest.raises(NumericalError, match="linear protocol"):
        run_protocol(ONE, Pinch(1.0, 0.5, 1.0), SolverSettings(num_nodes=5))


def test_sweep_rows_follow_values():
    vals = [20.0, 5.0, 10.0]
    res = sweep(ONE, "linear", "tau", vals, settings=SolverSettings(num_nodes=401))
    assert res.values == tuple(vals)
    assert [r.value for r in res.rows] == vals
    for v, row in zip(vals, res.rows):
        rep = run_protocol(ONE, linear_ramp(1, 1 / 16, v), SolverSettings(num_nodes=401))
        assert row.b_tau == rep.b_tau and row.delta_l == rep.delta_l
    assert np.all(res.column("gamma_tau") >= res.column("bures_tau"))


def test_parallel_sweep_is_identical():
    kw = dict(settings=SolverSettings(num_nodes=201))
    serial = sweep(ONE, "sta", "omega_f", [0.5, 0.25, 0.1], **kw)
    parallel = sweep(ONE, "sta", "omega_f", [0.5, 0.25, 0.1], jobs=3, **kw)
    assert serial.rows == parallel.rows


def test_sweep_records_failures():
    res = sweep(ONE, "linear", "omega_f", [0.5, -0.1, 0.25], settings=SolverSettings(num_nodes=101))
    assert [r.ok for r in res.rows] == [True, False, True]
    assert "omega_f" in res.rows[1].error
    assert math.isnan(res.rows[1].gamma_tau)
    assert len(res.failed) == 1


def test_sweep_sigma2_axis():
    res = sweep(ONE, "linear", "sigma2", [0.5, 1, 2, 8], settings=SolverSettings(num_nodes=201))
    d = res.column("delta_l")
    assert np.all(np.diff(d) > 0)


@pytest.mark.parametrize("args", [("warp", "tau", [1.0]), ("linear", "x", [1.0]), ("linear", "tau", []),
                                  ("linear", "tau", [math.nan])])
def test_sweep_rejects(args):
    with pytest.raises(ConfigError):
        sweep(ONE, *args)


def test_tqd_sweep():
    res = tqd_sweep(1.0, [1 / 16, 0.5, 1.0, 2.0])
    assert res.rows[0].delta_l == pytest.approx(tqd_excess_bures(1 / 16, 1.0), abs=1e-14)
    assert res.rows[2].delta_l == 0
    assert all(r.delta_l >= 0 for r in res.rows)


def test_discretized_derivative_examples():
    t = np.linspace(0, 1, 11)
    s = MeasuredSeries(t, np.ones(11), np.zeros(11))
    np.testing.assert_array_equal(discretized_derivative(s), 0.0)
    s = MeasuredSeries(t, 1 + t, np.zeros(11))
    np.testing.assert_allclose(discretized_derivative(s)[:-1], 1.0, rtol=1e-12)
    t = np.linspace(0, 10, 1001)
    b, bd = analytic_tof(1, t)
    err = np.abs(discretized_derivative(MeasuredSeries(t, b, np.zeros_like(t))) - bd)
    assert err.max() < 2e-2


def test_closed_loop_sta():
    sim = run_protocol(ONE, sta_protocol(1, 1 / 16, 10))
    rep = metrics_from_data(ONE, sta_series(2000))
    assert rep.gamma_tau == pytest.approx(sim.gamma_tau, rel=1e-2)
    assert rep.quadrature == "trapezoid"
    assert rep.meta["bound_violated"] is False


def test_convergence_is_first_order():
    exact = run_protocol(ONE, sta_protocol(1, 1 / 16, 10)).gamma_tau
    e1 = abs(metrics_from_data(ONE, sta_series(250)).gamma_tau - exact)
    e2 = abs(metrics_from_data(ONE, sta_series(500)).gamma_tau - exact)
    assert 1.6 < e1 / e2 < 2.4


def test_two_sample_series():
    s = MeasuredSeries([0.0, 1.0], [1.0, 1.5], [0.0, 0.0], [1.0, 0.5])
    rep = metrics_from_data(ONE, s)
    # one trapezoid panel with the same forward difference 0.5 at both nodes
    e0 = (1 + 1 + 0.25) / 2
    rate0 = math.sqrt(e0**2 - 1)
    w = math.sqrt(0.5)
    e1 = (1 / 1.5**2 + 0.5 * 1.5**2 + 0.25) / 2
    rate1 = math.sqrt(e1**2 - w**2)
    assert rep.gamma_tau == pytest.approx(0.5 * (rate0 + rate1), rel=1e-12)


def test_tof_series_reproduces_fidelity():
    t = np.linspace(0, 10, 101)
    b, _ = analytic_tof(1, t)
    s = MeasuredSeries(t, b, np.zeros_like(t), np.zeros_like(t))
    rep = metrics_from_data(TonksGirardeau(n=2), s)
    bd = discretized_derivative(s)
    np.testing.assert_allclose(rep.fidelity, fidelity(b, bd, 2.0), rtol=1e-12)
    np.testing.assert_allclose(rep.bures, bures_angle(fidelity(b, bd, 2.0)), atol=1e-12)


def test_bound_violation_is_flagged():
    # a coarse grid with a large jump: one trapezoid panel underestimates gamma
    s = MeasuredSeries([0.0, 0.05], [1.0, 0.85], [0.0, 0.0], [2.19, 1.28])
    with pytest.warns(UserWarning, match="below the Bures angle"):
        rep = metrics_from_data(ONE, s)
    assert rep.delta_l < 0 and rep.meta["bound_violated"]


def test_measured_series_validation():
    t = np.linspace(0, 1, 4)
    with pytest.raises(ConfigError):
        MeasuredSeries(t[:1], [1.0], [0.0])
    with pytest.raises(ConfigError):
        MeasuredSeries(t, [1, 1, 0, 1], np.zeros(4))
    with pytest.raises(ConfigError):
        MeasuredSeries(t, np.ones(4), [0, 0, -1, 0])
    with pytest.raises(ConfigError):
        MeasuredSeries([0, 0.1, 0.5, 1.0], np.ones(4), np.zeros(4))
    with pytest.raises(ConfigError):
        MeasuredSeries(t + 1, np.ones(4), np.zeros(4))
    with pytest.raises(ConfigError):
        metrics_from_data(ONE, MeasuredSeries(t, np.ones(4), np.zeros(4)))
    with pytest.warns(UserWarning, match="b\\(0\\)"):
        MeasuredSeries(t, [1.5, 1, 1, 1], np.full(4, 0.01))


def test_propagation_identity_and_zero():
    s = sta_series(200, 0.01)
    value, sx = propagate_uncertainty(ONE, s, "b_tau")
    assert value == s.b[-1]
    assert sx == pytest.approx(0.01, rel=1e-8)
    value, sx = propagate_uncertainty(ONE, sta_series(200, 0.0), "bures_tau")
    assert sx == 0.0
    value, sx = propagate_uncertainty(ONE, s, lambda b: b[100] ** 2)
    assert sx == pytest.approx(2 * s.b[100] * 0.01, rel=1e-6)
    with pytest.raises(ConfigError):
        propagate_uncertainty(ONE, s, "nonsense")


def test_propagation_bures_against_direct_formula():
    # bures_tau depends on b_{M-1} and b_M only; compare with a hand-derived gradient
    s = sta_series(200, 1e-3)
    h = s.step
    m = s.b.size - 1

    def bures_of(bm1, bm):
        bd = (bm - bm1) / h
        return bures_angle(fidelity(bm, bd, 1.0))

    eps = 1e-7
    g1 = (bures_of(s.b[m - 1] + eps, s.b[m]) - bures_of(s.b[m - 1] - eps, s.b[m])) / (2 * eps)
    g2 = (bures_of(s.b[m - 1], s.b[m] + eps) - bures_of(s.b[m - 1], s.b[m] - eps)) / (2 * eps)
    _, sx = propagate_uncertainty(ONE, s, "bures_tau")
    assert sx == pytest.approx(1e-3 * math.hypot(g1, g2), rel=1e-4)


def test_bures_is_local():
    s = sta_series(100, 0.0)
    base = metrics_from_data(ONE, s).bures
    b = s.b.copy()
    b[10] *= 1.01
    pert = metrics_from_data(ONE, MeasuredSeries(s.t, b, s.s_b, s.omega_sq)).bures
    changed = np.flatnonzero(pert != base)
    assert set(changed) <= {9, 10, 11}


def test_error_growth_refinement_within_20_percent():
    # First-order sensitivities telescope, so the linearized s_gamma falls
    # roughly like M^-1/2 and changes by 30-40% per doubling. Kept at the
    # stated tolerance; see the README section on uncertainty propagation.
    _, s1 = propagate_uncertainty(ONE, sta_series(200, 0.01), "gamma_tau")
    _, s2 = propagate_uncertainty(ONE, sta_series(400, 0.01), "gamma_tau")
    assert abs(s2 / s1 - 1) < 0.2


def test_error_does_not_grow_with_refinement():
    sx = [propagate_uncertainty(ONE, sta_series(m, 0.01), "gamma_tau")[1] for m in (100, 200, 400, 800)]
    assert all(b <= a for a, b in zip(sx, sx[1:]))


def test_propagate_all():
    out = propagate_all(ONE, sta_series(100, 0.0))
    assert set(out) == set(DATA_TARGETS)
    assert all(v["s"] == 0 for v in out.values())

"""
Acceptance criteria. Each test prints one ``[PASS]``/``[FAIL]`` line with the
measured quantity and the tolerance, then asserts it.

Run alone with ``pytest tests/test_acceptance.py -v`` or as a script.
"""

import math
from pathlib import Path

import numpy as np
import pytest

from scaleqsl.core import Custom
from scaleqsl.ermakov import adiabatic_scaling, analytic_tof, solve_ermakov
from scaleqsl.experiment import MeasuredSeries, propagate_uncertainty, run_protocol, sweep
from scaleqsl.metrics import (
    qsl_report,
    squeezing_moments,
    tqd_energy_variance,
    tqd_excess_bures,
    tqd_excess_bures_series,
    tqd_gamma,
)
from scaleqsl.protocols import (
    linear_ramp,
    sta_protocol,
    sta_scaling_factor,
    tabulated_protocol,
    tof_protocol,
    tqd_reference,
)
from scaleqsl.quadrature import simpson

README = Path(__file__).resolve().parents[1] / "README.md"


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}: {detail}")
        return ok

    return emit


def test_01_tqd_excess_bures(verdict):
    d = tqd_excess_bures(1 / 16, 1.0)
    ok = abs(d - 0.305) <= 0.001
    assert verdict(1, "TQD excess Bures angle at x=1/16", ok, f"{d:.6f} vs 0.305 +- 0.001")


def test_02_tof_analytic(verdict):
    tr = solve_ermakov(tof_protocol(1.0, 10.0))
    err = float(np.max(np.abs(tr.b - analytic_tof(1.0, tr.t)[0])))
    assert verdict(2, "time of flight vs sqrt(1+t^2)", err < 1e-8, f"max |db| = {err:.2e} < 1e-8")


def test_03_sta_round_trip(verdict):
    tr = solve_ermakov(sta_protocol(1.0, 1 / 16, 10.0))
    b, _, _ = sta_scaling_factor(tr.t, 10.0, 4.0)
    err = float(np.max(np.abs(tr.b - b)))
    eb, ebd = abs(tr.b[-1] - 4), abs(tr.bdot[-1])
    ok = err < 1e-7 and eb < 1e-7 and ebd < 1e-7
    detail = f"max |db| = {err:.2e}, |b(tau)-4| = {eb:.2e}, |bdot(tau)| = {ebd:.2e} (all < 1e-7)"
    assert verdict(3, "STA round trip", ok, detail)


def _random_protocol(rng):
    kind = rng.choice(["linear", "sta", "tabulated"])
    x = float(rng.uniform(0.05, 2.0))
    tau = float(rng.uniform(1.0, 100.0))
    if kind == "linear":
        return linear_ramp(1.0, x, tau)
    if kind == "sta":
        return sta_protocol(1.0, x, tau)
    knots = np.linspace(0, tau, int(rng.integers(3, 9)))
    w2 = np.concatenate([[1.0], rng.uniform(0.02, 3.0, knots.size - 1)])
    return tabulated_protocol(np.column_stack([knots, w2]))


def test_04_mandelstam_tamm_bound(verdict):
    rng = np.random.default_rng(20240601)
    worst = math.inf
    for _ in range(50):
        p = _random_protocol(rng)
        s2 = float(rng.uniform(0.5, 100.0))
        rep = qsl_report(solve_ermakov(p), s2, strict=False)
        worst = min(worst, float(np.min(rep.gamma_cum[1:] - rep.bures[1:])))
    ok = worst + 1e-9 >= 0
    detail = f"min of gamma - L over 50 protocols and all nodes t > 0 = {worst:.3e} (>= -1e-9)"
    assert verdict(4, "gamma(t) >= L(t)", ok, detail)


def test_05_tqd_path_length(verdict):
    worst = 0.0
    for x in (1 / 16, 1 / 4, 4.0):
        for s2 in (1.0, 2.5):
            tr = adiabatic_scaling(tqd_reference(1.0, x, 10.0))
            gamma = simpson(np.sqrt(tqd_energy_variance(tr.b, tr.bdot, s2)), tr.t[1])
            exact = tqd_gamma(x, s2)
            worst = max(worst, abs(gamma / exact - 1))
    ok = worst < 1e-6
    assert verdict(5, "TQD path length closed form", ok, f"max rel err = {worst:.2e} < 1e-6")


def test_06_adiabatic_asymptote(verdict):
    rep = run_protocol(Custom(value=1.0), linear_ramp(1.0, 0.5, 1000.0))
    target = 0.5 * math.log(2)
    rel = rep.gamma_tau / target - 1
    ok = abs(rel) <= 0.05
    detail = f"gamma(tau) = {rep.gamma_tau:.5f} vs (sigma/2) log 2 = {target:.5f}, rel {rel:+.2%} (|.| <= 5%)"
    assert verdict(6, "linear ramp adiabatic limit", ok, detail)


def test_07_fig1d_shape(verdict):
    taus = [5, 10, 20, 50, 100, 500]
    spec = Custom(value=1.0)
    lin = sweep(spec, "linear", "tau", taus).column("delta_l")
    sta = sweep(spec, "sta", "tau", taus).column("delta_l")
    lin_up = bool(np.all(np.diff(lin) >= 0))
    sta_down = bool(np.all(np.diff(sta) <= 0))
    near = abs(lin[-1] - 0.305) <= 0.01
    ok = lin_up and sta_down and near
    detail = (
        f"linear nondecreasing={lin_up}, STA nonincreasing={sta_down}, "
        f"linear dL(500) = {lin[-1]:.4f} vs 0.305 +- 0.01 ({'ok' if near else 'out'}); "
        f"linear {np.round(lin, 4).tolist()}, STA {np.round(sta, 4).tolist()}"
    )
    assert verdict(7, "excess Bures angle vs tau", ok, detail)


def test_08_squeezing_moments(verdict):
    worst_first, worst_rel = 0.0, 0.0
    for s2 in (0.5, 12.5, 7.5):
        first, second = squeezing_moments(s2, step=1e-4)
        worst_first = max(worst_first, abs(first))
        worst_rel = max(worst_rel, abs(second / s2 - 1))
    ok = worst_first <= 1e-8 and worst_rel < 1e-6
    detail = f"max |<C>| = {worst_first:.1e} (<= 1e-8), max rel err <C^2> = {worst_rel:.1e} (< 1e-6)"
    assert verdict(8, "squeezing moments", ok, detail)


def _gamma_oracle(b, h, omega_sq):
    """Path length written out independently: forward differences, E^2 - omega^2, trapezoid."""
    bd = np.empty_like(b)
    bd[..., :-1] = np.diff(b, axis=-1) / h
    bd[..., -1] = bd[..., -2]
    e = (1 / b**2 + omega_sq * b**2 + bd**2) / 2
    rate = np.sqrt(np.clip(e**2 - omega_sq, 0, None))
    return h * (rate.sum(axis=-1) - 0.5 * (rate[..., 0] + rate[..., -1]))


def test_09_error_propagation(verdict):
    m, s_b = 200, 0.01
    tr = solve_ermakov(sta_protocol(1.0, 1 / 16, 10.0), num_nodes=m + 1)
    series = MeasuredSeries(tr.t, tr.b, np.full(m + 1, s_b), tr.omega_sq)
    _, s_lin = propagate_uncertainty(Custom(value=1.0), series, "gamma_tau")
    rng = np.random.default_rng(7)
    samples = tr.b + s_b * rng.standard_normal((10_000, m + 1))
    s_mc = float(np.std(_gamma_oracle(samples, series.step, tr.omega_sq), ddof=1))
    rel = s_lin / s_mc - 1
    ok = abs(rel) <= 0.10
    detail = f"linearized s_gamma = {s_lin:.5f}, Monte Carlo = {s_mc:.5f}, rel {rel:+.1%} (|.| <= 10%)"
    assert verdict(9, "uncertainty propagation vs Monte Carlo", ok, detail)


def test_10_fig2_properties(verdict):
    xs = np.concatenate([np.logspace(-3, 3, 601), [1.0]])
    sig = (0.5, 1.0, 2.0, 8.0)
    nonneg = all(np.all(tqd_excess_bures(xs, s) >= 0) for s in sig)
    near_one = max(float(tqd_excess_bures(x, s)) for s in sig for x in (1 - 1e-3, 1 + 1e-3))
    vanishes = near_one < 1e-8 and all(tqd_excess_bures(1.0, s) == 0 for s in sig)
    increasing = all(
        np.all(np.diff([tqd_excess_bures(x, s) for s in sig]) > 0) for x in (0.1, 0.5, 2.0)
    )
    ok = nonneg and vanishes and increasing
    detail = f">= 0: {nonneg}; max dL at |x-1| = 1e-3: {near_one:.1e}; increasing in sigma2: {increasing}"
    assert verdict(10, "excess Bures angle properties", ok, detail)


def test_11_series_discrepancy(verdict):
    exact = tqd_excess_bures(0.99, 1.0)
    series = tqd_excess_bures_series(0.99, 1.0)
    documented = README.is_file() and "Series expansion near x = 1" in README.read_text(encoding="utf-8")
    ok = exact < 1e-5 and abs(series - 0.01) < 1e-3 and documented
    detail = f"exact dL(0.99) = {exact:.2e} (< 1e-5), series = {series:.5f}, documented in README: {documented}"
    assert verdict(11, "series expansion vs exact form", ok, detail)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))

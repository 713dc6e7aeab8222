"""Acceptance gate: every headline behavior at its pinned tolerance.

Scenario criteria (1-6) run the shipped default timeline: 1.2 s at
dt = 20 us, a 2 kW / 0.8 pf inductive load connected at 0.4 s and removed
at 0.8 s on top of the 6 kW base load.  Criteria 7-12 are property checks
that need no full scenario.  Each test prints one pass line.
"""

import dataclasses
import math

import numpy as np
import pytest

import vsgsim
from vsgsim.config import default_config, solve_duty
from vsgsim.control import SwingState, swing_step
from vsgsim.analysis import MeasurementWindow, thd
from vsgsim.plant import rk4
from vsgsim.runner import emit, run_scenario
from vsgsim.transforms import ThreePhase, abc_to_dq0, dq0_to_abc
from vsgsim.ynetwork import boost_factor

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def default_run():
    return run_scenario(default_config())


@pytest.fixture(scope="module")
def lossy_run():
    base = default_config()
    system = dataclasses.replace(base.system, loss_r=0.2)
    cfg = vsgsim.validate(system, base.control, base.scenario)
    return run_scenario(cfg)


def _window_mask(out, w, t_from=None):
    t0 = w.t_start if t_from is None else t_from
    return (out.time >= t0) & (out.time <= w.t_end)


def test_c01_load_step_power_tracking(default_run):
    targets = {"pre_step": 6000.0, "during_step": 8000.0, "post_step": 6000.0}
    assert [w.label for w in default_run.windows] == list(targets)
    for w in default_run.windows:
        target = targets[w.label]
        rel = abs(w.metrics.p_active - target) / target
        assert rel < 0.05, f"{w.label}: P={w.metrics.p_active:.1f} W off by {rel:.2%}"
    got = ", ".join(f"{w.metrics.p_active:.0f}" for w in default_run.windows)
    print(f"[PASS] criterion 1: window powers {got} W within 5% of 6000/8000/6000")


def test_c02_frequency_hold(default_run):
    f = default_run.channels["f_est"]
    worst = float(np.max(np.abs(f - 60.0)))
    assert worst <= 0.5, f"|f - 60| reached {worst:.3f} Hz"
    tails = []
    for w in default_run.windows:
        mask = _window_mask(default_run, w, t_from=w.t_end - 0.05)
        tail = float(np.max(np.abs(f[mask] - 60.0)))
        tails.append(tail)
        assert tail <= 0.05, f"{w.label} tail deviation {tail:.4f} Hz"
    print(
        f"[PASS] criterion 2: |f-60| <= {worst:.3f} Hz overall, "
        f"window tails {['%.4f' % t for t in tails]} Hz <= 0.05"
    )


def test_c03_voltage_thd(default_run):
    values = [w.metrics.thd for w in default_run.windows]
    assert all(v < 0.05 for v in values)
    print(f"[PASS] criterion 3: PCC voltage THD {['%.2e' % v for v in values]} < 5%")


def test_c04_dc_link_boost(default_run):
    cfg = default_config()
    expected = boost_factor(
        cfg.system.duty_d, cfg.system.k_winding, cfg.system.p_winding
    ) * cfg.system.v_dc
    assert math.isclose(cfg.system.duty_d, solve_duty(1.2, 1.0, 1.0), rel_tol=1e-12)
    means = []
    for w in default_run.windows:
        mask = _window_mask(default_run, w)
        mean = float(np.mean(default_run.channels["v_c2"][mask]))
        means.append(mean)
        assert abs(mean - expected) / expected < 0.01
    print(
        f"[PASS] criterion 4: steady v_c2 {['%.2f' % m for m in means]} V "
        f"within 1% of {expected:.1f} V"
    )


def test_c05_continuous_input_current(default_run):
    cfg = default_config()
    bound = cfg.system.v_dc / cfg.system.source_l * cfg.scenario.dt
    steps = np.abs(np.diff(default_run.channels["i_in"]))
    worst = float(np.max(steps))
    assert worst <= bound * (1.0 + 1e-12)
    print(
        f"[PASS] criterion 5: max |di_in| = {worst:.4f} A per step "
        f"<= slope bound {bound:.4f} A"
    )


def test_c06_efficiency(default_run, lossy_run):
    for w in default_run.windows:
        assert abs(w.metrics.efficiency - 1.0) <= 1e-3, (
            f"lossless {w.label}: eff={w.metrics.efficiency:.5f}"
        )
    eff = {w.label: w.metrics.efficiency for w in lossy_run.windows}
    assert eff["during_step"] < eff["pre_step"]
    assert eff["during_step"] < eff["post_step"]
    assert all(v < 1.0 for v in eff.values())
    print(
        "[PASS] criterion 6: lossless efficiency = 1 +/- 0.1% per window; "
        f"with series loss eff falls with load "
        f"({eff['pre_step']:.4f} -> {eff['during_step']:.4f} -> {eff['post_step']:.4f})"
    )


def test_c07_park_round_trip_bulk():
    rng = np.random.default_rng(2024)
    n = 100_000
    xs = rng.uniform(-500.0, 500.0, size=(n, 3))
    thetas = rng.uniform(-20.0, 20.0, size=n)
    worst = 0.0
    for (a, b, c), theta in zip(xs, thetas):
        x = ThreePhase(a, b, c)
        back = dq0_to_abc(abc_to_dq0(x, theta), theta)
        err = max(abs(u - v) for u, v in zip(x, back)) / max(1.0, abs(a), abs(b), abs(c))
        if err > worst:
            worst = err
    assert worst < 1e-9
    print(f"[PASS] criterion 7: round-trip error over 1e5 random pairs = {worst:.2e} < 1e-9")


def test_c08_swing_fixed_point_random():
    rng = np.random.default_rng(99)
    f_ref = 60.0
    worst = 0.0
    for _ in range(20):
        j = rng.uniform(0.05, 5.0)
        d = rng.uniform(1.0, 100.0)
        dp = rng.uniform(200.0, 2e4) * rng.choice([-1.0, 1.0])
        expected = dp / (TWO_PI * f_ref * d)
        tau = j / d
        dt = tau / 400.0
        s = SwingState(omega_star=TWO_PI * f_ref)
        for _ in range(round(12.0 * tau / dt)):
            s = swing_step(s, dp, 0.0, j, d, f_ref, TWO_PI * f_ref, dt)
        rel = abs(s.delta_omega - expected) / abs(expected)
        worst = max(worst, rel)
    assert worst < 1e-3
    print(f"[PASS] criterion 8: swing fixed point within {worst:.2e} over 20 draws")


def test_c09_thd_oracles():
    n = 16384
    k = np.arange(n)
    pure = MeasurementWindow(np.sin(TWO_PI * 8 * k / n), float(n), 8.0)
    v_pure = thd(pure)
    assert v_pure < 1e-12

    third = MeasurementWindow(
        np.sin(TWO_PI * 8 * k / n) + 0.1 * np.sin(TWO_PI * 24 * k / n), float(n), 8.0
    )
    v_third = thd(third)
    assert abs(v_third - 0.1000) < 1e-6

    square = MeasurementWindow(np.sign(np.sin(TWO_PI * (k + 0.5) / n)), float(n), 1.0)
    v_square = thd(square, n_harmonics=4000)
    assert abs(v_square - 0.4834) < 1e-3
    print(
        f"[PASS] criterion 9: THD oracles {v_pure:.1e} / {v_third:.7f} / {v_square:.5f}"
    )


def test_c10_rk4_order():
    def integrate(n):
        y, dt = np.array([1.0]), 1.0 / n
        for _ in range(n):
            y = rk4(lambda x: -x, y, dt)
        return abs(y[0] - math.exp(-1.0))

    ratio = integrate(10) / integrate(20)
    assert 14.0 <= ratio <= 18.0
    print(f"[PASS] criterion 10: RK4 halving error ratio = {ratio:.2f} in [14, 18]")


def test_c11_boost_duty_round_trip():
    rng = np.random.default_rng(123)
    worst = 0.0
    for b in np.concatenate([np.linspace(1.0, 5.0, 81), rng.uniform(1.0, 5.0, 200)]):
        k = rng.uniform(1e-3, 5.0)
        p = rng.uniform(1e-3, 5.0)
        d = solve_duty(float(b), k, p)
        rel = abs(boost_factor(d, k, p) - b) / b
        worst = max(worst, rel)
    assert worst < 1e-9
    print(f"[PASS] criterion 11: gain/duty round trip error = {worst:.2e} < 1e-9")


def test_c12_determinism(tmp_path):
    base = default_config()
    scenario = dataclasses.replace(base.scenario, t_end=0.1, events=())
    cfg = vsgsim.validate(base.system, base.control, scenario)
    digests = []
    for tag in ("first", "second"):
        out = run_scenario(cfg, decimation=2)
        emit(out, tmp_path / f"{tag}.csv", tmp_path / f"{tag}.json")
        digests.append((tmp_path / f"{tag}.csv").read_bytes())
    assert digests[0] == digests[1]
    print(f"[PASS] criterion 12: identical configs give byte-identical CSV "
          f"({len(digests[0])} bytes)")

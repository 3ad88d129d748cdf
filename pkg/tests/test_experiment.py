import math

import numpy as np
import pytest

from sagnac_switch.engine import SwitchConfig, pass_times
from sagnac_switch.experiment import (CALIBRATED_DARK_RATE, CALIBRATED_PAIR_RATE, DetectorModel,
                                      FitError, RunPlan, SourceModel, expected_rate,
                                      extinction_ratio_db, fit_fringe, run_delay_scan,
                                      run_voltage_sweep, simulate_window, stream, sweep_visibility,
                                      visibility)

NO_DARK = DetectorModel(dark_rate=0.0)
LOSS = 10 ** -0.5


def test_silent_detectors_count_nothing():
    det = DetectorModel(efficiency=0.0, dark_rate=0.0)
    assert simulate_window((1.0, 0.0), SourceModel(1e4), det, 1.0, stream(1, 0, 0, 0)) == (0, 0)


def test_window_rate_matches_binomial():
    q = 0.15 * LOSS
    n = 1e6
    c1, c2 = simulate_window((LOSS, 0.0), SourceModel(n), NO_DARK, 1.0, stream(5, 0, 0, 0))
    sigma = math.sqrt(q * (1 - q) / n)
    assert q == pytest.approx(0.04743, abs=1e-5)
    assert abs(c1 / n - q) <= 4 * sigma
    assert c2 == 0


def test_window_is_deterministic_per_stream():
    args = ((0.3, 0.2), SourceModel(), DetectorModel(), 10.0)
    assert simulate_window(*args, stream(9, 0, 3, 4)) == simulate_window(*args, stream(9, 0, 3, 4))
    assert simulate_window(*args, stream(9, 0, 3, 4)) != simulate_window(*args, stream(9, 0, 3, 5))


def test_window_rejects_bad_probabilities():
    for probs in ((-0.1, 0.5), (0.7, 0.6)):
        with pytest.raises(ValueError):
            simulate_window(probs, SourceModel(), DetectorModel(), 1.0, stream(1, 0, 0, 0))


def test_ungated_darks_scale_with_time():
    det = DetectorModel(efficiency=0.0, dark_rate=1000.0, paired_with_trigger=False)
    c1, c2 = simulate_window((1.0, 0.0), SourceModel(0.0), det, 10.0, stream(2, 0, 0, 0))
    assert abs(c1 - 1e4) < 5 * 100 and abs(c2 - 1e4) < 5 * 100


def test_source_and_detector_validation():
    with pytest.raises(ValueError):
        SourceModel(-1.0)
    with pytest.raises(ValueError):
        SourceModel(100.0, trigger_rate=50.0)
    assert SourceModel(100.0, trigger_rate=400.0).heralding == 0.25
    with pytest.raises(ValueError):
        DetectorModel(efficiency=1.5)
    with pytest.raises(ValueError):
        DetectorModel(gate_width=0.0)
    with pytest.raises(ValueError):
        RunPlan(repetitions=0)
    with pytest.raises(ValueError):
        RunPlan(input_state="Q")


def test_sweep_shape_and_fringe():
    r = run_voltage_sweep(RunPlan())
    assert len(r.settings) == 17 and r.settings[0] == 0.0 and r.settings[-1] == 8.0
    c1 = np.array(r.mean_c1)
    assert int(np.argmin(c1)) == 8
    assert c1[-1] > 0.9 * c1[0]
    assert r.p1_analytic[8] == pytest.approx(0.0, abs=1e-15)
    assert r.p1_analytic[0] == 1.0


def test_counts_agree_with_probabilities_dark_free():
    # 20 x 1 s at 5000 heralds/s: 1e5 heralds per voltage
    plan = RunPlan(repetitions=20, integration_time=1.0, seed=3)
    source = SourceModel(5000.0)
    r = run_voltage_sweep(plan, source, NO_DARK)
    n = 5000.0 * 20
    for p1, m1 in zip(r.p1_analytic, r.mean_c1):
        q = p1 * 0.15 * LOSS
        sigma = math.sqrt(max(q * (1 - q), 1e-300) / n)
        assert abs(m1 * 20 / n - q) <= 4 * sigma + 1e-15


def test_parallel_equals_serial():
    plan = RunPlan(repetitions=5, integration_time=2.0, redraw_kl=True, timing_jitter=1e-9)
    assert run_voltage_sweep(plan, workers=4) == run_voltage_sweep(plan, workers=1)


def test_seed_changes_counts():
    a = run_voltage_sweep(RunPlan(seed=1, repetitions=2))
    b = run_voltage_sweep(RunPlan(seed=2, repetitions=2))
    assert a.mean_c1 != b.mean_c1


def test_delay_scan_window():
    cfg = SwitchConfig()
    t_cw, t_ccw = pass_times(cfg)
    plan = RunPlan(repetitions=2, integration_time=1.0)
    far = run_delay_scan([-80e-9, 200e-9], 4.0, plan, cfg)
    assert far.phi_cw == (0.0, 0.0) and far.phi_ccw == (0.0, 0.0)
    assert min(far.mean_c1) > 15
    on = run_delay_scan([t_cw - 10e-9], 4.0, plan, cfg)
    assert on.phi_cw[0] == pytest.approx(math.pi)
    assert on.p1_analytic[0] == pytest.approx(0.0, abs=1e-15)
    assert on.mean_c1[0] < 3


def test_delay_scan_extremum_width():
    cfg = SwitchConfig()
    t_cw, _ = pass_times(cfg)
    delays = [round((-60 + k) * 1e-9, 15) for k in range(80)]
    r = run_delay_scan(delays, 4.0, RunPlan(repetitions=1, integration_time=0.1), cfg)
    dips = [d for d, p in zip(delays, r.p1_analytic) if p < 0.5]
    width = (dips[-1] - dips[0]) * 1e9 + 1
    assert width == pytest.approx(32, abs=1)
    assert dips[0] <= t_cw < dips[-1] + 1e-9


@pytest.mark.parametrize("c1, c2, v", [(100, 0, 1.0), (50, 50, 0.0), (83.39, 1.0, 0.9763)])
def test_visibility(c1, c2, v):
    assert visibility(c1, c2) == pytest.approx(v, abs=1e-4)


def test_visibility_needs_counts():
    with pytest.raises(ValueError):
        visibility(0, 0)


@pytest.mark.parametrize("v, db", [(0.0, 0.0), (0.9763, 19.21), (0.5, 10 * math.log10(3))])
def test_extinction(v, db):
    assert extinction_ratio_db(v) == pytest.approx(db, abs=0.01)


def test_extinction_limits():
    assert extinction_ratio_db(1.0) == math.inf
    assert extinction_ratio_db(-1.0) == -math.inf
    with pytest.raises(ValueError):
        extinction_ratio_db(1.2)


def test_sweep_visibility_noiseless_is_one():
    v, se = sweep_visibility([100.0, 0.0], [0.0, 100.0])
    assert v == 1.0 and se is None


def test_visibility_error_matches_scatter():
    vs, ses = [], []
    for k in range(40):
        r = run_voltage_sweep(RunPlan(seed=500 + k))
        vs.append(r.visibility)
        ses.append(r.visibility_stderr)
    assert np.std(vs, ddof=1) == pytest.approx(np.mean(ses), rel=0.35)


def _fringe(v, v_pi, s, b):
    return s * np.cos(np.pi * v / (2 * v_pi)) ** 2 + b


def test_fit_noiseless():
    v = np.arange(0, 8.01, 0.5)
    fit = fit_fringe(v, _fringe(v, 4.0, 250.0, 0.0))
    assert fit.v_pi == pytest.approx(4.0, abs=1e-3)
    assert fit.visibility == pytest.approx(1.0, abs=1e-9)


def test_fit_with_floor():
    v = np.arange(0, 8.01, 0.5)
    s, b = 250.0, 3.0
    fit = fit_fringe(v, _fringe(v, 3.3, s, b))
    assert fit.v_pi == pytest.approx(3.3, abs=1e-6)
    assert fit.visibility == pytest.approx(s / (s + 2 * b), abs=1e-9)
    assert fit.offset == pytest.approx(b, abs=1e-6)


def test_fit_monte_carlo_within_one_percent():
    fit = run_voltage_sweep(RunPlan()).fit
    assert fit.v_pi == pytest.approx(4.0, rel=0.01)


def test_fit_degenerate():
    with pytest.raises(FitError):
        fit_fringe(np.arange(0, 8.01, 0.5), np.full(17, 40.0))
    with pytest.raises(FitError):
        fit_fringe([0, 1, 2], [1, 2, 3])


def test_more_darks_lower_the_fitted_visibility():
    fitted = []
    for rate in (0.0, 2e3, 6e3, 2e4, 6e4):
        r = run_voltage_sweep(RunPlan(seed=8), detectors=DetectorModel(dark_rate=rate))
        fitted.append(r.fit.visibility)
    assert all(a > b for a, b in zip(fitted, fitted[1:]))


def test_expected_rate():
    cfg = SwitchConfig()
    assert expected_rate(SourceModel(0.0), DetectorModel(dark_rate=1e4, gate_width=1e-7), cfg) == 0.0
    ungated = DetectorModel(dark_rate=50.0, paired_with_trigger=False)
    assert expected_rate(SourceModel(0.0), ungated, cfg) == 50.0
    assert expected_rate(SourceModel(529.3), NO_DARK, cfg) == pytest.approx(25.1, abs=0.01)
    doubled = DetectorModel(efficiency=0.3, dark_rate=0.0)
    assert expected_rate(SourceModel(529.3), doubled, cfg) == pytest.approx(
        2 * expected_rate(SourceModel(529.3), NO_DARK, cfg))


def test_calibration_constants():
    assert CALIBRATED_PAIR_RATE == pytest.approx(25.1 / (0.15 * LOSS))
    s = 0.15 * LOSS
    b = CALIBRATED_DARK_RATE * 100e-9
    assert s / (s + 2 * b) == pytest.approx(0.9763, abs=1e-12)

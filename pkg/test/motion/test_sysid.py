"""
Tests for model identification
"""

from pathlib import Path

import numpy as np
import pytest
from scipy import signal

from kinonav.core.exceptions import (
    DataError,
    InvalidParamsError,
    ParseError,
    UnidentifiableRegimeError,
    UnsortedTimestampsError,
)
from kinonav.core.model import DEFAULT_PARAMS, VelocityCommand
from kinonav.core.utility import derive_rng
from kinonav.motion.sysid import (
    AxisSamples,
    IdentifiedModel,
    TrajectoryLog,
    adjust_damping,
    central_diff,
    differentiate,
    extract_saturations,
    fit_regime,
    identify,
    partition_regimes,
    read_params,
    rise_time,
    smooth,
    step_script,
    synthesize_log,
    synthesize_logs,
)

AXIS_FIELDS = ("f_up", "zeta_up", "f_down", "zeta_down")


@pytest.fixture(scope="module")
def step_logs() -> list[TrajectoryLog]:
    """Noiseless logs of the default model: the action table in order, then two shuffled visits"""
    rng = derive_rng(1, "sysid-test")
    return synthesize_logs([step_script(), step_script(rng), step_script(rng)], DEFAULT_PARAMS)


def _model(f: float, zeta: float) -> IdentifiedModel:
    linear = DEFAULT_PARAMS.linear.model_copy(update={"f_up": f, "zeta_up": zeta, "f_down": f, "zeta_down": zeta})
    return IdentifiedModel(
        params=DEFAULT_PARAMS.model_copy(update={"linear": linear}),
        residuals={},
        sample_counts={},
    )


def test_smooth_constant_signal():
    """
    Test a constant signal is unchanged, ends included
    :return: None
    """
    np.testing.assert_allclose(smooth(np.full(50, 2.5)), 2.5)


def test_smooth_impulse_gives_hann_weights():
    """
    Test an impulse response is the normalized Hann window
    :return: None
    """
    impulse = np.zeros(41)
    impulse[20] = 1.0
    weights = signal.windows.hann(21, sym=True)
    np.testing.assert_allclose(smooth(impulse)[10:31], weights / weights.sum(), atol=1e-12)


@pytest.mark.parametrize(("a", "b"), [(1.0, 1.0), (2.5, -0.75), (-3.0, 0.0)])
def test_smooth_is_linear(a, b):
    """
    Test smoothing a weighted sum equals the weighted sum of the smoothed signals, ends included
    :return: None
    """
    rng = np.random.default_rng(11)
    x, y = rng.normal(size=80), rng.normal(size=80)
    np.testing.assert_allclose(smooth(a * x + b * y), a * smooth(x) + b * smooth(y), atol=1e-12)


@pytest.mark.parametrize("window", [4, 1, 61])
def test_smooth_bad_window_raises(window):
    """
    Test even, tiny and too long windows are rejected
    :return: None
    """
    with pytest.raises(DataError):
        smooth(np.zeros(50), window)


def test_central_diff_ramp():
    """
    Test differences are exact on a ramp
    :return: None
    """
    t = np.cumsum(np.full(20, 0.01))
    np.testing.assert_allclose(central_diff(2.0 * t, t), 2.0)


def test_central_diff_constant():
    """
    Test a constant signal has zero derivative
    :return: None
    """
    t = np.arange(10) * 0.01
    np.testing.assert_allclose(central_diff(np.ones(10), t), 0.0)


@pytest.mark.parametrize("c", [0.5, -2.0, 7.0])
def test_central_diff_twice_on_quadratic(c):
    """
    Test differencing c * t^2 twice on a uniform grid gives the constant 2c at the samples it still covers
    :return: None
    """
    t = np.arange(40) * 0.05
    first = central_diff(c * t**2, t)
    second = central_diff(first, t[1:-1])
    assert len(second) == len(t) - 4
    np.testing.assert_allclose(second, 2.0 * c, rtol=1e-9, atol=1e-9)


def test_central_diff_sine():
    """
    Test the derivative of a sine at 100 Hz
    :return: None
    """
    t = np.arange(1000) * 0.01
    np.testing.assert_allclose(central_diff(np.sin(t), t), np.cos(t[1:-1]), atol=1e-4)


def test_central_diff_unsorted_raises():
    """
    Test non monotone timestamps are rejected
    :return: None
    """
    with pytest.raises(UnsortedTimestampsError):
        central_diff([0.0, 1.0, 2.0], [0.0, 0.2, 0.1])


def test_partition_regimes():
    """
    Test samples are split by the sign of delta * vel
    :return: None
    """
    up, down = partition_regimes([1.0, -1.0], [1.0, 1.0])
    assert up.tolist() == [0]
    assert down.tolist() == [1]


def test_partition_regimes_zero_product_dropped():
    """
    Test a zero product belongs to neither regime
    :return: None
    """
    up, down = partition_regimes([0.5], [0.0])
    assert up.size == 0
    assert down.size == 0


def test_fit_regime_exact_samples():
    """
    Test exact samples of the ODE recover its parameters
    :return: None
    """
    rng = derive_rng(1, "fit")
    delta = rng.uniform(-1, 1, 200)
    acc = rng.uniform(-2, 2, 200)
    jerk = 9.0 * delta - 2.0 * 0.7 * 3.0 * acc
    f, zeta, rms = fit_regime(delta, acc, jerk)
    assert f == pytest.approx(3.0, abs=1e-6)
    assert zeta == pytest.approx(0.7, abs=1e-6)
    assert rms == pytest.approx(0.0, abs=1e-9)


def test_fit_regime_noisy_samples():
    """
    Test noisy jerk still recovers the parameters within 5%
    :return: None
    """
    rng = derive_rng(1, "fit-noise")
    delta = rng.uniform(-1, 1, 2000)
    acc = rng.uniform(-2, 2, 2000)
    jerk = 9.0 * delta - 4.2 * acc + rng.normal(0.0, 0.01, 2000)
    f, zeta, _ = fit_regime(delta, acc, jerk)
    assert f == pytest.approx(3.0, rel=0.05)
    assert zeta == pytest.approx(0.7, rel=0.05)


def test_fit_regime_zero_delta_is_unidentifiable():
    """
    Test a design without excitation is rank deficient
    :return: None
    """
    with pytest.raises(UnidentifiableRegimeError) as exc_info:
        fit_regime(np.zeros(10), np.linspace(-1, 1, 10), np.zeros(10), "linear/up")
    assert exc_info.value.regime == "linear/up"


def test_extract_saturations_peak():
    """
    Test the velocity extrema are the sample extrema
    :return: None
    """
    vel = np.array([0.1, 0.5, 0.98, 0.7])
    samples = AxisSamples(
        delta=1.0 - vel,
        vel=vel,
        acc=np.array([1.0, 0.5, 0.0, -0.5]),
        jerk=np.zeros(4),
        usable=np.ones(4, dtype=bool),
    )
    saturation = extract_saturations(samples)
    assert saturation.vel_max == 0.98
    assert saturation.vel_min == 0.1
    assert saturation.acc_up_max == 1.0


def test_extract_saturations_pure_rotation():
    """
    Test a log without linear motion gives zero linear limits
    :return: None
    """
    log = synthesize_log([VelocityCommand(0.0, 2.0), VelocityCommand(0.0, -1.0)], DEFAULT_PARAMS)
    saturation = extract_saturations(differentiate(log, "linear"))
    assert saturation.vel_max == 0.0
    assert saturation.vel_min == 0.0


def test_extract_saturations_empty_raises():
    """
    Test empty input is rejected
    :return: None
    """
    empty = np.zeros(0)
    with pytest.raises(DataError):
        extract_saturations(AxisSamples(empty, empty, empty, empty, np.zeros(0, dtype=bool)))


def test_identify_recovers_default_model(step_logs):
    """
    Test identification from logs of the default model recovers its 8 parameters within 5%
    :return: None
    """
    model = identify(step_logs)
    for axis in ("linear", "angular"):
        identified = getattr(model.params, axis)
        expected = getattr(DEFAULT_PARAMS, axis)
        for name in AXIS_FIELDS:
            assert getattr(identified, name) == pytest.approx(getattr(expected, name), rel=0.05), f"{axis}.{name}"
    assert set(model.residuals) == {"linear/up", "linear/down", "angular/up", "angular/down"}
    assert all(count > 0 for count in model.sample_counts.values())


def test_identify_recovers_velocity_limits(step_logs):
    """
    Test the saturating script recovers the velocity limits within 2%
    :return: None
    """
    params = identify(step_logs).params
    assert params.linear.vel_max == pytest.approx(1.0, rel=0.02)
    assert params.linear.vel_min == pytest.approx(0.0, abs=0.02)
    assert params.angular.vel_max == pytest.approx(3.0, rel=0.02)
    assert params.angular.vel_min == pytest.approx(-3.0, rel=0.02)


def test_identify_is_order_independent(step_logs):
    """
    Test the log order does not change the result
    :return: None
    """
    assert identify(step_logs) == identify(step_logs[::-1])


def test_identify_with_odometry_noise():
    """
    Test noisy logs still identify the model within 15%
    :return: None
    """
    rng = derive_rng(1, "sysid-noise")
    logs = synthesize_logs(
        [step_script(), step_script(rng), step_script(rng)],
        DEFAULT_PARAMS,
        noise_std=0.005,
        rng=rng,
    )
    model = identify(logs)
    for axis in ("linear", "angular"):
        for name in AXIS_FIELDS:
            expected = getattr(getattr(DEFAULT_PARAMS, axis), name)
            assert getattr(getattr(model.params, axis), name) == pytest.approx(expected, rel=0.15), f"{axis}.{name}"


def test_identify_constant_command_raises():
    """
    Test a log at steady state cannot be identified and names the regime
    :return: None
    """
    t = np.arange(200) * 0.01
    log = TrajectoryLog.from_columns(t, np.zeros(200), np.zeros(200), np.zeros(200), np.zeros(200))
    with pytest.raises(UnidentifiableRegimeError, match="linear/up"):
        identify([log])


def test_identify_without_logs_raises():
    """
    Test an empty log list is rejected
    :return: None
    """
    with pytest.raises(DataError):
        identify([])


def test_differentiate_short_log_raises():
    """
    Test a log shorter than two windows is rejected
    :return: None
    """
    t = np.arange(30) * 0.01
    log = TrajectoryLog.from_columns(t, *(np.zeros(30) for _ in range(4)))
    with pytest.raises(DataError):
        differentiate(log, "linear")


def test_rise_time_decreases_with_frequency():
    """
    Test a faster system rises faster
    :return: None
    """
    assert rise_time(6.0, 0.7) == pytest.approx(rise_time(3.0, 0.7) / 2.0, rel=1e-3)


def test_adjust_damping_fixed_point():
    """
    Test a model already at the target damping keeps its frequencies
    :return: None
    """
    adjusted = adjust_damping(_model(3.0, 0.7))
    assert adjusted.params.linear.f_up == pytest.approx(3.0, rel=0.01)
    assert adjusted.params.angular.f_down == pytest.approx(DEFAULT_PARAMS.angular.f_down, rel=0.01)


def test_adjust_damping_underdamped_raises_frequency():
    """
    Test an underdamped fit needs a higher frequency at the target damping
    :return: None
    """
    adjusted = adjust_damping(_model(3.0, 0.3))
    assert adjusted.params.linear.zeta_up == 0.7
    assert adjusted.params.linear.f_up > 3.0
    assert rise_time(adjusted.params.linear.f_up, 0.7) == pytest.approx(rise_time(3.0, 0.3), rel=1e-3)


def test_adjust_damping_overdamped_lowers_frequency():
    """
    Test an overdamped fit needs a lower frequency at the target damping
    :return: None
    """
    adjusted = adjust_damping(_model(3.0, 1.2))
    assert adjusted.params.linear.zeta_down == 0.7
    assert adjusted.params.linear.f_down < 3.0


def test_adjust_damping_non_positive_target_raises():
    """
    Test a non positive damping target is rejected
    :return: None
    """
    with pytest.raises(InvalidParamsError):
        adjust_damping(_model(3.0, 0.7), 0.0)


def test_log_csv_round_trip(tmp_path: Path):
    """
    Test a log survives the CSV file bit for bit
    :return: None
    """
    log = synthesize_log([VelocityCommand(0.3, 1.0)], DEFAULT_PARAMS, hold=1.0)
    path = tmp_path / "log.csv"
    log.write_csv(path)
    assert TrajectoryLog.read_csv(path).fingerprint() == log.fingerprint()


def test_read_csv_empty_file_raises(tmp_path: Path):
    """
    Test an empty file is a parse error
    :return: None
    """
    path = tmp_path / "empty.csv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(ParseError):
        TrajectoryLog.read_csv(path)


def test_read_csv_bad_row_reports_line(tmp_path: Path):
    """
    Test a non numeric value is reported with its line number
    :return: None
    """
    path = tmp_path / "bad.csv"
    path.write_text("t,v_cmd,w_cmd,v_meas,w_meas\n0,0,0,0,0\n0.01,0,zero,0,0\n", encoding="utf-8")
    with pytest.raises(ParseError) as exc_info:
        TrajectoryLog.read_csv(path)
    assert exc_info.value.line == 3


def test_model_file_round_trip(tmp_path: Path):
    """
    Test the model file keeps parameters and fit metadata
    :return: None
    """
    model = IdentifiedModel(
        params=DEFAULT_PARAMS,
        residuals={"linear/up": 0.01, "angular/down": 0.02},
        sample_counts={"linear/up": 120, "angular/down": 80},
    )
    path = tmp_path / "model.txt"
    model.write(path)
    assert IdentifiedModel.read(path) == model
    assert read_params(path) == DEFAULT_PARAMS
    assert "meta.residual_lin_up = 0.01" in path.read_text(encoding="utf-8")

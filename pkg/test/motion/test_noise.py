"""
Tests for the odometry and absolute localization noise models
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from kinonav.core.model import Pose, PoseDelta
from kinonav.core.utility import derive_rng
from kinonav.motion.noise import (
    AbsLocNoiseParams,
    AbsoluteLocalizer,
    OdometryIntegrator,
    OdomNoiseParams,
    PoseEstimate,
    integrate_odometry,
    next_fix_delay,
    sample_abs_fix,
    sample_odometry_noise,
)

SAMPLES = 100_000
NOISELESS_ODOM = OdomNoiseParams(mean=(0.0, 0.0), cov=((0.0, 0.0), (0.0, 0.0)))
NOISELESS_FIX = AbsLocNoiseParams(sigma=(0.0, 0.0, 0.0))


def test_noiseless_odometry_composes_step():
    """
    Test zero noise reproduces the true step
    :return: None
    """
    estimate = integrate_odometry(PoseEstimate(), PoseDelta(forward=1.0), NOISELESS_ODOM, derive_rng(0, "odom"))
    assert (estimate.x, estimate.y, estimate.theta) == pytest.approx((1.0, 0.0, 0.0))
    assert estimate.valid


def test_odometry_mean_drift():
    """
    Test the forward noise has mean 0.01 per step
    :return: None
    """
    samples = sample_odometry_noise(OdomNoiseParams(), derive_rng(0, "odom-mean"), SAMPLES)
    assert abs(samples[:, 0].mean() - 0.01) < 4 * 0.01 / math.sqrt(SAMPLES)
    assert abs(samples[:, 1].mean()) < 4 * math.sqrt(1e-3) / math.sqrt(SAMPLES)


def test_odometry_covariance():
    """
    Test the empirical covariance matches the configured one within 5%
    :return: None
    """
    samples = sample_odometry_noise(OdomNoiseParams(), derive_rng(0, "odom-cov"), SAMPLES)
    np.testing.assert_allclose(np.cov(samples.T), [[1e-4, 1e-4], [1e-4, 1e-3]], rtol=0.05)


def test_odometry_drift_accumulates_without_motion():
    """
    Test a biased robot at rest drifts forward by the mean step every step, linearly in the step count
    :return: None
    """
    integrator = OdometryIntegrator(OdomNoiseParams(mean=(0.01, 0.0), cov=((0.0, 0.0), (0.0, 0.0))), derive_rng(0, "o"))
    for step in range(1, 101):
        integrator.advance(PoseDelta())
        assert integrator.estimate.x == pytest.approx(0.01 * step)
    assert integrator.estimate.y == pytest.approx(0.0, abs=1e-12)


@pytest.mark.slow
def test_odometry_variance_grows_linearly_with_steps():
    """
    Test the dead reckoning error of a robot at rest is a random walk: its variance grows linearly with the number of
    steps, at the configured per step variance
    :return: None
    """
    per_step = np.array([1e-4, 1e-6])
    params = OdomNoiseParams(mean=(0.0, 0.0), cov=((per_step[0], 0.0), (0.0, per_step[1])))
    block, blocks, trials = 100, 100, 100
    # (x, theta) every 100 steps of 100 independent walks, starting point included
    walks = np.zeros((trials, blocks + 1, 2))
    for trial in range(trials):
        integrator = OdometryIntegrator(params, derive_rng(3, "odom-walk", trial))
        for index in range(1, blocks + 1):
            for _ in range(block):
                integrator.advance(PoseDelta())
            walks[trial, index] = (integrator.estimate.x, integrator.estimate.theta)

    steps, per_step_variances, counts = [], [], []
    for stride in (1, 10, 100):
        # disjoint stretches of stride * block steps, each an independent sample of the walk after that many steps
        increments = (walks[:, stride::stride] - walks[:, :-stride:stride]).reshape(-1, 2)
        steps.append(stride * block)
        per_step_variances.append((increments**2).mean(axis=0) / (stride * block))
        counts.append(len(increments))

    variances = np.array(per_step_variances)
    weights = np.array(counts, dtype=float)
    slope = weights @ variances / weights.sum()
    np.testing.assert_allclose(slope, per_step, rtol=0.08)
    for count, variance in zip(counts, variances, strict=True):
        np.testing.assert_allclose(variance, per_step, rtol=4.0 * np.sqrt(2.0 / count))
    for column in range(2):
        exponent = np.polyfit(np.log(steps), np.log(variances[:, column] * np.array(steps)), 1)[0]
        assert exponent == pytest.approx(1.0, abs=0.15)


def test_non_psd_covariance_raises():
    """
    Test an indefinite covariance is rejected at construction
    :return: None
    """
    with pytest.raises(ValidationError):
        OdomNoiseParams(cov=((1e-4, 1e-2), (1e-2, 1e-4)))


def test_asymmetric_covariance_raises():
    """
    Test an asymmetric covariance is rejected
    :return: None
    """
    with pytest.raises(ValidationError):
        OdomNoiseParams(cov=((1e-4, 0.0), (1e-5, 1e-3)))


def test_noiseless_fix_is_exact():
    """
    Test zero sigmas return the true pose
    :return: None
    """
    pose = Pose(1.0, 2.0, 0.5)
    fix = sample_abs_fix(pose, NOISELESS_FIX, derive_rng(0, "fix"))
    assert fix.pose == pose


def test_fix_variance():
    """
    Test per component variances match the defaults within 5%
    :return: None
    """
    rng = derive_rng(0, "fix-var")
    fixes = np.array([sample_abs_fix(Pose(), AbsLocNoiseParams(), rng).pose.as_tuple() for _ in range(SAMPLES)])
    np.testing.assert_allclose(fixes.var(axis=0), [0.03, 0.03, 0.05], rtol=0.05)


def test_fix_variance_does_not_grow_with_time():
    """
    Test fixes taken late in a long run are as accurate as early ones
    :return: None
    """
    params = AbsLocNoiseParams()
    localizer = AbsoluteLocalizer(params, derive_rng(0, "fix-time"))
    truth = Pose(2.0, -1.0, 0.5)
    localizer.reset(truth)
    errors = []
    for _ in range(20_000):
        if localizer.advance(truth):
            estimate = localizer.estimate
            errors.append((estimate.x - truth.x, estimate.y - truth.y, estimate.theta - truth.theta))
    errors_array = np.array(errors)
    half = len(errors_array) // 2
    early = errors_array[:half].var(axis=0)
    late = errors_array[half:].var(axis=0)
    expected = np.square(params.sigma)
    assert half > 800
    np.testing.assert_allclose(early, expected, rtol=0.2)
    np.testing.assert_allclose(late, expected, rtol=0.2)
    assert np.all(late / early < 1.35)


def test_fixes_are_independent():
    """
    Test consecutive fixes are uncorrelated
    :return: None
    """
    rng = derive_rng(0, "fix-corr")
    xs = np.array([sample_abs_fix(Pose(), AbsLocNoiseParams(), rng).x for _ in range(SAMPLES)])
    assert abs(np.corrcoef(xs[:-1], xs[1:])[0, 1]) < 0.02


def test_fix_delay_fixed_period():
    """
    Test equal bounds always give the same delay
    :return: None
    """
    rng = derive_rng(0, "delay")
    params = AbsLocNoiseParams(period_lo=10, period_hi=10)
    assert {next_fix_delay(params, rng) for _ in range(100)} == {10}


def test_fix_delay_uniform():
    """
    Test the default delays are uniform over 8..12
    :return: None
    """
    rng = derive_rng(0, "delay-uniform")
    delays = np.array([next_fix_delay(AbsLocNoiseParams(), rng) for _ in range(SAMPLES)])
    assert delays.min() == 8
    assert delays.max() == 12
    for value in range(8, 13):
        assert np.mean(delays == value) == pytest.approx(0.2, abs=0.01)


def test_fix_period_bounds_validated():
    """
    Test an inverted period range is rejected
    :return: None
    """
    with pytest.raises(ValidationError):
        AbsLocNoiseParams(period_lo=12, period_hi=8)


def test_localizer_age_and_refresh():
    """
    Test the age counts decision steps and resets on a new fix
    :return: None
    """
    params = AbsLocNoiseParams(sigma=(0.0, 0.0, 0.0), period_lo=3, period_hi=3)
    localizer = AbsoluteLocalizer(params, derive_rng(0, "l"))
    localizer.reset(Pose(0.0, 0.0, 0.0))
    assert localizer.age == 0
    assert not localizer.advance(Pose(1.0, 0.0, 0.0))
    assert not localizer.advance(Pose(2.0, 0.0, 0.0))
    assert localizer.age == 2
    assert localizer.estimate.x == 0.0
    assert localizer.advance(Pose(3.0, 0.0, 0.0))
    assert localizer.age == 0
    assert localizer.estimate.x == 3.0


def test_localizer_starts_invalid():
    """
    Test no estimate exists before the first fix
    :return: None
    """
    assert not AbsoluteLocalizer(AbsLocNoiseParams(), derive_rng(0, "l")).estimate.valid

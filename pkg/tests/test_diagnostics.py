"""Diagnostics tests: decomposition identities, regret, and rate fitting."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from interpnn.config import EstimatorConfig
from interpnn.core import Dataset, LogInterpolated, Uniform, compute_weights
from interpnn.diagnostics import (
    RateFit,
    bias_variance,
    excess_risk,
    fit_rate,
    kth_distance_scaling,
    pointwise_regret,
)
from interpnn.neighbors import build_index, query_knn

# ---------------------------------------------------------------------------
# fit_rate
# ---------------------------------------------------------------------------


def test_fit_rate_recovers_exact_power_law():
    xs = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
    ys = 3.0 * xs**0.5
    fit = fit_rate(list(zip(xs, ys)))
    assert fit.slope == pytest.approx(0.5, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert len(fit.points) == 5


def test_fit_rate_constant_metric():
    fit = fit_rate([(1.0, 2.0), (2.0, 2.0), (4.0, 2.0)])
    assert fit.slope == pytest.approx(0.0, abs=1e-15)
    assert fit.r_squared == 1.0


def test_fit_rate_noisy_line_r_squared_below_one():
    rng = np.random.default_rng(0)
    xs = np.array([1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
    ys = 5.0 * xs**-1.0 * np.exp(rng.normal(0, 0.05, size=xs.size))
    fit = fit_rate(list(zip(xs, ys)))
    assert fit.slope == pytest.approx(-1.0, abs=0.1)
    assert 0.9 < fit.r_squared < 1.0


def test_fit_rate_validation():
    with pytest.raises(ValueError):
        fit_rate([(1.0, 1.0), (2.0, 2.0)])
    with pytest.raises(ValueError):
        fit_rate([(1.0, 1.0), (2.0, -1.0), (3.0, 1.0)])
    with pytest.raises(ValueError):
        fit_rate([(0.0, 1.0), (2.0, 1.0), (3.0, 1.0)])
    with pytest.raises(ValueError):
        fit_rate([(2.0, 1.0), (2.0, 2.0), (2.0, 3.0)])  # undefined slope


# ---------------------------------------------------------------------------
# pointwise_regret / excess_risk
# ---------------------------------------------------------------------------


def test_pointwise_regret_hand_values():
    eta = np.array([0.8, 0.8, 0.3, 0.5])
    preds = np.array([0, 1, 1, 1])
    got = pointwise_regret(eta, preds)
    np.testing.assert_allclose(got, [0.6, 0.0, 0.4, 0.0])


def test_pointwise_regret_zero_for_optimal_rule():
    rng = np.random.default_rng(1)
    eta = rng.uniform(0, 1, size=500)
    assert pointwise_regret(eta, eta >= 0.5).sum() == 0.0


def test_pointwise_regret_validates_eta():
    with pytest.raises(ValueError):
        pointwise_regret(np.array([1.2]), np.array([1]))
    with pytest.raises(ValueError):
        pointwise_regret(np.array([np.nan]), np.array([1]))


def classification_fixture(rng, n=80):
    x = rng.uniform(-2, 2, size=(n, 2))
    eta = 1.0 / (1.0 + np.exp(-x.sum(axis=1)))
    y = (rng.uniform(size=n) < eta).astype(float)
    return Dataset(x, y, task="classification"), lambda pts: 1.0 / (
        1.0 + np.exp(-pts.sum(axis=1))
    )


def test_excess_risk_matches_direct_recomputation():
    rng = np.random.default_rng(2)
    ds, eta = classification_fixture(rng)
    pts = rng.uniform(-2, 2, size=(60, 2))
    config = EstimatorConfig(k=7, scheme=LogInterpolated(2.0), task="classification")
    got = excess_risk(eta, ds, pts, config)

    index = build_index(ds, config.backend)
    eta_vals = eta(pts)
    total = 0.0
    for r in range(pts.shape[0]):
        q = query_knn(index, pts[r], 7)
        w = compute_weights(config.scheme, q).weights
        pred = int(float(w @ ds.responses[q.indices]) >= 0.5)
        if pred != int(eta_vals[r] >= 0.5):
            total += abs(1.0 - 2.0 * eta_vals[r])
    assert got == total / pts.shape[0]


def test_excess_risk_zero_when_labels_are_bayes():
    # Noiseless labels plus an interpolating scheme reproduce the optimal
    # rule exactly at the training points.
    rng = np.random.default_rng(3)
    x = rng.uniform(-2, 2, size=(50, 2))
    eta_fn = lambda pts: 1.0 / (1.0 + np.exp(-pts.sum(axis=1)))
    y = (eta_fn(x) >= 0.5).astype(float)
    ds = Dataset(x, y, task="classification")
    config = EstimatorConfig(k=1, scheme=LogInterpolated(2.0), task="classification")
    assert excess_risk(eta_fn, ds, x, config) == 0.0


def test_excess_risk_task_validation():
    rng = np.random.default_rng(4)
    ds, eta = classification_fixture(rng)
    reg_ds = Dataset(ds.features, rng.standard_normal(ds.n))
    pts = rng.uniform(-1, 1, size=(5, 2))
    good = EstimatorConfig(k=3, scheme=Uniform(), task="classification")
    with pytest.raises(ValueError):
        excess_risk(eta, reg_ds, pts, good)
    with pytest.raises(ValueError):
        excess_risk(eta, ds, pts, EstimatorConfig(k=3, scheme=Uniform()))


# ---------------------------------------------------------------------------
# bias_variance
# ---------------------------------------------------------------------------


def regression_setup(rng, n=40):
    x = rng.uniform(0, 1, size=(n, 1))
    truth = lambda pts: np.sin(3.0 * pts[:, 0])
    y = truth(x) + rng.normal(0, 0.3, size=n)
    return Dataset(x, y), truth


def test_bias_variance_matches_manual_average():
    rng = np.random.default_rng(5)
    ds, truth = regression_setup(rng)
    pts = rng.uniform(0, 1, size=(25, 1))
    config = EstimatorConfig(k=6, scheme=LogInterpolated(2.0))
    rep = bias_variance(truth, ds, pts, config, alpha=1.0)

    index = build_index(ds, config.backend)
    bias_acc, var_acc, mse_acc = [], [], []
    for r in range(pts.shape[0]):
        q = query_knn(index, pts[r], 6)
        w = compute_weights(config.scheme, q).weights
        bias_acc.append(float(w @ q.distances) ** 2)
        resid = ds.responses[q.indices] - truth(ds.features[q.indices])
        var_acc.append(float(w**2 @ resid**2))
        mse_acc.append((float(w @ ds.responses[q.indices]) - truth(pts[r : r + 1])[0]) ** 2)
    assert rep.bias_proxy == pytest.approx(np.mean(bias_acc), rel=1e-12)
    assert rep.variance_proxy == pytest.approx(np.mean(var_acc), rel=1e-12)
    assert rep.mse == pytest.approx(np.mean(mse_acc), rel=1e-12)
    assert rep.alpha == 1.0


def test_bias_variance_tradeoff_direction():
    # Interpolated weights put more mass on close neighbors: smaller bias
    # proxy, larger variance proxy than the classical average.
    rng = np.random.default_rng(6)
    ds, truth = regression_setup(rng, n=60)
    pts = rng.uniform(0, 1, size=(40, 1))
    uni = bias_variance(truth, ds, pts, EstimatorConfig(k=10, scheme=Uniform()), 1.0)
    log = bias_variance(
        truth, ds, pts, EstimatorConfig(k=10, scheme=LogInterpolated(2.0)), 1.0
    )
    assert log.bias_proxy < uni.bias_proxy
    assert log.variance_proxy > uni.variance_proxy


def test_bias_variance_interpolation_gives_zero_mse_at_training_points():
    rng = np.random.default_rng(7)
    x = rng.uniform(0, 1, size=(30, 1))
    truth = lambda pts: pts[:, 0] ** 2
    ds = Dataset(x, truth(x))  # noiseless responses
    config = EstimatorConfig(k=5, scheme=LogInterpolated(2.0))
    rep = bias_variance(truth, ds, x, config, alpha=1.0)
    assert rep.mse == pytest.approx(0.0, abs=1e-24)
    uni = bias_variance(truth, ds, x, EstimatorConfig(k=5, scheme=Uniform()), 1.0)
    assert uni.mse > 1e-6


def test_bias_variance_validation():
    rng = np.random.default_rng(8)
    ds, truth = regression_setup(rng, n=10)
    pts = rng.uniform(0, 1, size=(3, 1))
    with pytest.raises(ValueError):
        bias_variance(truth, ds, pts, EstimatorConfig(k=3, scheme=Uniform()), alpha=0.0)
    with pytest.raises(ValueError):
        bias_variance(truth, ds, pts, EstimatorConfig(k=10, scheme=Uniform()), alpha=1.0)
    with pytest.raises(ValueError):
        bias_variance(truth, ds, np.zeros((0, 1)), EstimatorConfig(k=2, scheme=Uniform()), 1.0)


# ---------------------------------------------------------------------------
# kth-distance moment scaling
# ---------------------------------------------------------------------------


def square_ball_measure(r):
    """Area of the disk of radius r centered at (1/2, 1/2) inside the unit square."""
    if r <= 0.5:
        return math.pi * r * r
    if r >= math.sqrt(0.5):
        return 1.0
    seg = r * r * math.acos(0.5 / r) - 0.5 * math.sqrt(r * r - 0.25)
    return math.pi * r * r - 4.0 * seg


def center_kth_moment_oracle(n, k, alpha=1.0):
    """E ||X_(k) - x||**(2 alpha) at x = (1/2, 1/2) for n uniform points.

    Uses P(D_(k) > r) = P(Binomial(n, mu(B(x, r))) <= k - 1) and integrates
    the tail formula for the 2 alpha moment.
    """

    def tail(r):
        return 2.0 * alpha * r ** (2.0 * alpha - 1.0) * float(
            stats.binom.cdf(k - 1, n, square_ball_measure(r))
        )

    val, _ = integrate.quad(tail, 0.0, math.sqrt(0.5), limit=200)
    return val


def test_center_kth_moment_matches_binomial_oracle():
    rng = np.random.default_rng(9)
    n, k, reps = 1024, 32, 300
    center = np.array([0.5, 0.5])
    acc = np.empty(reps)
    for rep in range(reps):
        pts = rng.uniform(0, 1, size=(n, 2))
        d2 = ((pts - center) ** 2).sum(axis=1)
        acc[rep] = np.partition(d2, k - 1)[k - 1]
    mc = acc.mean()
    oracle = center_kth_moment_oracle(n, k, alpha=1.0)
    sem = acc.std(ddof=1) / math.sqrt(reps)
    assert abs(mc - oracle) < max(4.0 * sem, 0.02 * oracle)


def test_kth_distance_scaling_slope_near_two_alpha_over_d():
    gen = lambda size, rng: rng.uniform(0, 1, size=(size, 2))
    fit = kth_distance_scaling(
        gen,
        n_grid=[256, 1024, 4096],
        k_rule=lambda n: max(1, math.ceil(math.sqrt(n))),
        alpha=1.0,
        repetitions=3,
        rng_seed=0,
    )
    assert fit.slope == pytest.approx(1.0, abs=0.3)
    assert fit.r_squared > 0.95


def test_kth_distance_scaling_deterministic():
    gen = lambda size, rng: rng.uniform(0, 1, size=(size, 1))
    args = dict(n_grid=[64, 128, 256], k_rule=lambda n: 4, alpha=0.5, repetitions=2, rng_seed=11)
    a = kth_distance_scaling(gen, **args)
    b = kth_distance_scaling(gen, **args)
    assert a == b
    assert isinstance(a, RateFit)


def test_kth_distance_scaling_validation():
    gen = lambda size, rng: rng.uniform(0, 1, size=(size, 1))
    with pytest.raises(ValueError):
        kth_distance_scaling(gen, [64, 128], lambda n: 1, 1.0, 1, 0)
    with pytest.raises(ValueError):
        kth_distance_scaling(gen, [64, 128, 128], lambda n: 1, 1.0, 1, 0)
    with pytest.raises(ValueError):
        kth_distance_scaling(gen, [64, 128, 256], lambda n: 0, 1.0, 1, 0)
    with pytest.raises(ValueError):
        kth_distance_scaling(gen, [64, 128, 256], lambda n: 1, -1.0, 1, 0)
    with pytest.raises(ValueError):
        kth_distance_scaling(gen, [64, 128, 256], lambda n: 1, 1.0, 0, 0)

"""Error decomposition and convergence-rate diagnostics.

``bias_variance`` Monte Carlo-averages the two halves of the pointwise
error decomposition for a weighted neighbor estimate,

    bias proxy      (sum_i W_i ||X_(i) - x||**alpha)**2
    variance proxy   sum_i W_i**2 (Y_(i) - eta(X_(i)))**2,

which bound the systematic and the noise part of the squared error for an
alpha-Holder target.  ``excess_risk`` evaluates the plug-in classifier's
regret against the optimal rule through the exact identity

    E[risk - optimal risk] = mean |1 - 2 eta(x)| 1{predicted != optimal},

available whenever the conditional class probability eta is known in closed
form.  ``kth_distance_scaling`` and ``fit_rate`` both estimate power-law
exponents from log-log least squares: the former checks that the k-th
neighbor distance obeys E||X_(k) - x||**(2 alpha) ~ (k/n)**(2 alpha / d),
the latter fits metric-versus-n decay curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .config import EstimatorConfig
from .core import CLASSIFICATION, compute_weights
from .core import Dataset
from .neighbors import build_index, query_knn
from .seeding import child_rng

__all__ = [
    "BiasVarianceReport",
    "RateFit",
    "bias_variance",
    "excess_risk",
    "pointwise_regret",
    "kth_distance_scaling",
    "fit_rate",
]


@dataclass(frozen=True)
class BiasVarianceReport:
    """Monte Carlo averages of the error decomposition at a fixed k."""

    bias_proxy: float
    variance_proxy: float
    mse: float
    alpha: float


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through (log x, log metric) points."""

    slope: float
    intercept: float
    r_squared: float
    points: tuple[tuple[float, float], ...]


def bias_variance(
    truth: Callable[[np.ndarray], np.ndarray],
    dataset: Dataset,
    test_points: np.ndarray,
    config: EstimatorConfig,
    alpha: float,
) -> BiasVarianceReport:
    """Average the decomposition proxies and the squared error over test points.

    Parameters
    ----------
    truth : callable
        Vectorized regression function; maps an (m, d) array to the (m,)
        array of noiseless response values eta.
    dataset : Dataset
        Training data the estimator runs on.
    test_points : ndarray of shape (m, d)
        Query locations for the Monte Carlo average.
    config : EstimatorConfig
        Supplies k, the weighting scheme, and the search backend.
    alpha : float
        Smoothness exponent used in the bias proxy; must be positive.
    """
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    pts = np.asarray(test_points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("test_points must be a nonempty (m, d) array")
    if not 1 <= config.k <= dataset.n - 1:
        raise ValueError(
            f"config.k must satisfy 1 <= k <= n-1 = {dataset.n - 1}, got {config.k}"
        )
    index = build_index(dataset, config.backend)
    eta_test = np.asarray(truth(pts), dtype=np.float64)

    bias_terms = np.empty(pts.shape[0])
    var_terms = np.empty(pts.shape[0])
    sq_errors = np.empty(pts.shape[0])
    for r in range(pts.shape[0]):
        q = query_knn(index, pts[r], config.k)
        w = compute_weights(config.scheme, q).weights
        bias_terms[r] = float(w @ q.distances**alpha) ** 2
        resid = dataset.responses[q.indices] - truth(dataset.features[q.indices])
        var_terms[r] = float(w**2 @ resid**2)
        sq_errors[r] = (float(w @ dataset.responses[q.indices]) - eta_test[r]) ** 2
    return BiasVarianceReport(
        bias_proxy=float(np.mean(bias_terms)),
        variance_proxy=float(np.mean(var_terms)),
        mse=float(np.mean(sq_errors)),
        alpha=float(alpha),
    )


def pointwise_regret(eta_values: np.ndarray, predictions: np.ndarray) -> np.ndarray:
    """|1 - 2 eta| where the prediction disagrees with the optimal label, else 0."""
    eta = np.asarray(eta_values, dtype=np.float64)
    if (eta < 0).any() or (eta > 1).any() or not np.isfinite(eta).all():
        raise ValueError("eta values must lie in [0, 1]")
    optimal = eta >= 0.5
    disagree = np.asarray(predictions).astype(bool) != optimal
    return np.abs(1.0 - 2.0 * eta) * disagree


def excess_risk(
    eta: Callable[[np.ndarray], np.ndarray],
    dataset: Dataset,
    test_points: np.ndarray,
    config: EstimatorConfig,
) -> float:
    """Mean classification regret of the plug-in rule at the test points.

    Requires the closed-form conditional class probability eta; the result
    is exactly mean(|1 - 2 eta(x)| 1{predicted label != optimal label}) and
    is zero precisely when the classifier matches the optimal rule on every
    test point (up to ties, which carry zero regret weight only when
    eta = 1/2 exactly).
    """
    if dataset.task != CLASSIFICATION or config.task != CLASSIFICATION:
        raise ValueError("excess_risk requires classification data and config")
    pts = np.asarray(test_points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("test_points must be a nonempty (m, d) array")
    if not 1 <= config.k <= dataset.n - 1:
        raise ValueError(
            f"config.k must satisfy 1 <= k <= n-1 = {dataset.n - 1}, got {config.k}"
        )
    index = build_index(dataset, config.backend)
    eta_vals = np.asarray(eta(pts), dtype=np.float64)
    preds = np.empty(pts.shape[0], dtype=bool)
    for r in range(pts.shape[0]):
        q = query_knn(index, pts[r], config.k)
        w = compute_weights(config.scheme, q).weights
        preds[r] = float(w @ dataset.responses[q.indices]) >= 0.5
    return float(np.mean(pointwise_regret(eta_vals, preds)))


def kth_distance_scaling(
    dataset_generator: Callable[[int, np.random.Generator], np.ndarray],
    n_grid: Sequence[int],
    k_rule: Callable[[int], int],
    alpha: float,
    repetitions: int,
    rng_seed: int,
    n_queries: int = 128,
) -> RateFit:
    """Fit the power law of the k-th neighbor distance moment against k/n.

    For each n the metric E||X_(k) - x||**(2 alpha) is Monte Carlo-averaged
    over fresh training draws and fresh query points from the same
    generator, then a line is fitted through (log(k/n), log metric).  For a
    d-dimensional distribution with comparable upper and lower density
    bounds the slope approaches 2 alpha / d.

    ``dataset_generator(size, rng)`` must return a (size, d) float array.
    """
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    ns = [int(n) for n in n_grid]
    if len(ns) < 3:
        raise ValueError("need at least 3 grid points to fit a rate")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_grid must be strictly increasing")

    points = []
    for i, n in enumerate(ns):
        k = int(k_rule(n))
        if not 1 <= k <= n:
            raise ValueError(f"k_rule({n}) = {k} outside [1, {n}]")
        acc = 0.0
        for rep in range(repetitions):
            rng = child_rng(rng_seed, i, rep)
            train = np.asarray(dataset_generator(n, rng), dtype=np.float64)
            queries = np.asarray(dataset_generator(n_queries, rng), dtype=np.float64)
            d2 = ((queries[:, None, :] - train[None, :, :]) ** 2).sum(axis=2)
            kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
            acc += float(np.mean(np.sqrt(kth) ** (2.0 * alpha)))
        points.append((k / n, acc / repetitions))
    return fit_rate(points)


def fit_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """Ordinary least squares on (log x, log metric) pairs.

    Needs at least 3 points with positive coordinates and at least two
    distinct x values; a constant metric fits a zero-slope line with
    r_squared defined as 1.
    """
    if len(points) < 3:
        raise ValueError(f"need at least 3 points, got {len(points)}")
    xs = np.array([p[0] for p in points], dtype=np.float64)
    ys = np.array([p[1] for p in points], dtype=np.float64)
    if (xs <= 0).any() or (ys <= 0).any() or not (np.isfinite(xs).all() and np.isfinite(ys).all()):
        raise ValueError("rate fitting needs positive finite coordinates")
    lx, ly = np.log(xs), np.log(ys)
    vx = lx - lx.mean()
    sxx = float(vx @ vx)
    if sxx == 0.0:
        raise ValueError("all x values coincide; the slope is undefined")
    slope = float(vx @ (ly - ly.mean())) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    sst = float(((ly - ly.mean()) ** 2).sum())
    r_squared = 1.0 if sst == 0.0 else 1.0 - float((resid**2).sum()) / sst
    return RateFit(
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        points=tuple(zip(lx.tolist(), ly.tolist())),
    )

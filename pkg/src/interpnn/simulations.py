"""Synthetic scenarios and the reproducible sweep harness.

Five scenarios cover the regimes the estimator is meant to probe:

* ``model1``   X uniform on [-3, 3]**10; the target is the posterior of a
  unit-variance Gaussian location pair, which reduces to the logistic
  function of sum(x) - 5; noise is Student t with 5 degrees of freedom.
* ``model2``   X standard normal in 5 dimensions; y = (sum x)**2 + N(0, 1).
* ``gaussian`` Binary labels with class-conditional laws N(0, I_5) and
  N(gamma * 1, I_5), mixed with equal probability.  The conditional class
  probability is logistic(gamma * sum(x) - 5 gamma**2 / 2) and the optimal
  risk is Phi(-gamma * sqrt(5) / 2).
* ``toy``      30-ish equispaced one-dimensional design points on [-5, 25]
  with three switchable targets: pure noise, a noiseless parabola, and a
  shifted parabola with heavy noise.
* ``rate``     X uniform on [0, 1]**d with a separable sawtooth target of
  Holder exponent alpha, rough at every scale so the worst-case smoothness
  actually binds.

``sweep`` runs the train/evaluate loop: every repetition draws fresh
training and test sets from per-repetition seed streams, runs one neighbor
search per test point at k_max + 1, and reads off the metric for every k
by truncating that search.  Results are deterministic functions of the
base seed, independent of thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .core import (
    CLASSIFICATION,
    REGRESSION,
    Dataset,
    WeightScheme,
    estimates_all_k,
    proxies_all_k,
)
from .diagnostics import pointwise_regret
from .neighbors import BruteForce, SearchBackend, build_index, knn_matrix
from .seeding import stream_seed

__all__ = [
    "ScenarioSpec",
    "SweepRow",
    "SweepResult",
    "generate",
    "generate_test",
    "feature_sampler",
    "draw_student_t5",
    "bayes_risk_gaussian",
    "sweep",
    "sweep_grid",
]

VARIANTS = ("model1", "model2", "gaussian", "toy", "rate")
TOY_TRUTHS = ("zero", "square", "shifted-square")

MODEL1_DIM = 10
MODEL2_DIM = 5
GAUSSIAN_DIM = 5
TOY_LOW, TOY_HIGH = -5.0, 25.0
TOY_TEST_LOW, TOY_TEST_HIGH = 0.0, 20.0
TOY_NOISE_SCALE = 5.0

# Rate-scenario target: a lacunary sum of sawtooth waves, one per octave
# from RATE_CELL down, so the function is rough at every scale a neighbor
# radius can reach and the Holder class genuinely binds.  The noise level
# keeps the bias/variance trade-off at an interior k across desk-scale n.
RATE_CELL = 0.5
RATE_SCALES = 5
RATE_NOISE_SD = 0.2

_MASK64 = (1 << 64) - 1

# Row budget for one all-k profile chunk, keeps temporaries ~tens of MB.
_CHUNK_ENTRIES = 2_000_000


@dataclass(frozen=True)
class ScenarioSpec:
    """Which scenario to draw, at what size, from which seed."""

    variant: str
    n: int = 256
    seed: int = 0
    gamma: float | None = None
    truth: str | None = None
    alpha: float | None = None
    d: int | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown scenario variant {self.variant!r}")
        if self.n < 4:
            raise ValueError(f"n must be >= 4, got {self.n}")
        if not isinstance(self.seed, int):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")
        if self.variant == "gaussian":
            if self.gamma is None or not (math.isfinite(self.gamma) and self.gamma > 0):
                raise ValueError("gaussian scenario requires gamma > 0")
        if self.variant == "toy" and self.truth not in TOY_TRUTHS:
            raise ValueError(f"toy scenario requires truth in {TOY_TRUTHS}")
        if self.variant == "rate":
            if self.alpha is None or not (0 < self.alpha <= 1):
                raise ValueError("rate scenario requires alpha in (0, 1]")
            if self.d is None or self.d < 1:
                raise ValueError("rate scenario requires dimension d >= 1")

    @property
    def dim(self) -> int:
        return {
            "model1": MODEL1_DIM,
            "model2": MODEL2_DIM,
            "gaussian": GAUSSIAN_DIM,
            "toy": 1,
            "rate": self.d or 1,
        }[self.variant]


def _expit(z: np.ndarray) -> np.ndarray:
    # Overflow-free logistic via tanh.
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def draw_student_t5(rng: np.random.Generator, size: int | None = None):
    """Student t draws with 5 degrees of freedom, built from 6 normals each.

    Returns Z / sqrt(V / 5) where Z is standard normal and V is the sum of
    5 squared standard normals; a float for size=None, else a (size,) array.
    """
    shape = () if size is None else (int(size),)
    z = rng.standard_normal(shape)
    v = (rng.standard_normal(shape + (5,)) ** 2).sum(axis=-1)
    out = z / np.sqrt(v / 5.0)
    return float(out) if size is None else out


def bayes_risk_gaussian(gamma: float, d: int = GAUSSIAN_DIM) -> float:
    """Optimal misclassification risk Phi(-gamma * sqrt(d) / 2)."""
    return 0.5 * math.erfc(gamma * math.sqrt(d) / (2.0 * math.sqrt(2.0)))


def _model1_truth(pts: np.ndarray) -> np.ndarray:
    return _expit(pts.sum(axis=1) - MODEL1_DIM / 2.0)


def _model2_truth(pts: np.ndarray) -> np.ndarray:
    return pts.sum(axis=1) ** 2


def _gaussian_truth(gamma: float) -> Callable[[np.ndarray], np.ndarray]:
    def eta(pts: np.ndarray) -> np.ndarray:
        return _expit(gamma * pts.sum(axis=1) - GAUSSIAN_DIM * gamma**2 / 2.0)

    return eta


def _toy_truth(truth: str) -> Callable[[np.ndarray], np.ndarray]:
    def f(pts: np.ndarray) -> np.ndarray:
        x = pts[:, 0]
        if truth == "zero":
            return np.zeros_like(x)
        if truth == "square":
            return x**2
        return (x - 10.0) ** 2 / 8.0

    return f


def _toy_responses(eta: np.ndarray, truth: str, rng: np.random.Generator) -> np.ndarray:
    if truth == "square":
        return eta.copy()
    scale = 1.0 if truth == "zero" else TOY_NOISE_SCALE
    return eta + scale * rng.standard_normal(eta.size)


def _rate_truth(alpha: float, d: int) -> Callable[[np.ndarray], np.ndarray]:
    def f(pts: np.ndarray) -> np.ndarray:
        # Sum over octaves of the distance to the nearest kink of that
        # scale, raised to alpha.  Each term is Holder-alpha with constant
        # 1, so the sum is Holder-alpha; halving the cell width per octave
        # keeps kinks inside every neighborhood radius the sweep visits.
        total = np.zeros(pts.shape[0])
        w = RATE_CELL
        for _ in range(RATE_SCALES):
            frac = pts / w
            saw = w * np.abs(frac - np.round(frac))
            total += (saw**alpha).sum(axis=1)
            w /= 2.0
        return total

    return f


def generate(spec: ScenarioSpec) -> tuple[Dataset, Callable[[np.ndarray], np.ndarray]]:
    """Draw one dataset and return it with the scenario's noiseless target.

    The returned callable maps an (m, d) point array to the (m,) array of
    conditional means (conditional class-1 probabilities for ``gaussian``).
    Identical specs always produce identical datasets.
    """
    rng = np.random.default_rng(spec.seed & _MASK64)
    n = spec.n
    if spec.variant == "model1":
        x = rng.uniform(-3.0, 3.0, size=(n, MODEL1_DIM))
        truth = _model1_truth
        y = truth(x) + draw_student_t5(rng, n)
        return Dataset(x, y, REGRESSION), truth
    if spec.variant == "model2":
        x = rng.standard_normal((n, MODEL2_DIM))
        truth = _model2_truth
        y = truth(x) + rng.standard_normal(n)
        return Dataset(x, y, REGRESSION), truth
    if spec.variant == "gaussian":
        labels = rng.integers(0, 2, size=n).astype(np.float64)
        x = rng.standard_normal((n, GAUSSIAN_DIM)) + spec.gamma * labels[:, None]
        return Dataset(x, labels, CLASSIFICATION), _gaussian_truth(spec.gamma)
    if spec.variant == "toy":
        x = np.linspace(TOY_LOW, TOY_HIGH, n)[:, None]
        truth = _toy_truth(spec.truth)
        y = _toy_responses(truth(x), spec.truth, rng)
        return Dataset(x, y, REGRESSION), truth
    # rate
    x = rng.random((n, spec.d))
    truth = _rate_truth(spec.alpha, spec.d)
    y = truth(x) + RATE_NOISE_SD * rng.standard_normal(n)
    return Dataset(x, y, REGRESSION), truth


def feature_sampler(spec: ScenarioSpec):
    """The scenario's feature marginal as a ``(size, rng) -> (size, d)`` sampler."""
    if spec.variant == "model1":
        return lambda size, rng: rng.uniform(-3.0, 3.0, size=(size, MODEL1_DIM))
    if spec.variant == "model2":
        return lambda size, rng: rng.standard_normal((size, MODEL2_DIM))
    if spec.variant == "gaussian":
        gamma = spec.gamma

        def draw(size, rng):
            labels = rng.integers(0, 2, size=size).astype(np.float64)
            return rng.standard_normal((size, GAUSSIAN_DIM)) + gamma * labels[:, None]

        return draw
    if spec.variant == "toy":
        return lambda size, rng: rng.uniform(TOY_LOW, TOY_HIGH, size=(size, 1))
    d = spec.d

    return lambda size, rng: rng.random((size, d))


def generate_test(spec: ScenarioSpec, size: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw evaluation features and responses for a scenario.

    Matches the training distribution except for ``toy``, whose fixed
    design grid runs past the evaluation window: there the test points are
    drawn uniformly on [0, 20], away from the boundary of the design.
    Sizes below the scenario minimum draw a larger batch and truncate.
    """
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    if spec.variant == "toy":
        rng = np.random.default_rng(seed & _MASK64)
        x = rng.uniform(TOY_TEST_LOW, TOY_TEST_HIGH, size=(size, 1))
        y = _toy_responses(_toy_truth(spec.truth)(x), spec.truth, rng)
        return x, y
    ds, _ = generate(replace(spec, n=max(size, 4), seed=seed))
    return ds.features[:size], ds.responses[:size]


@dataclass(frozen=True)
class SweepRow:
    """One metric observation: a (n, k, scheme, repetition) cell."""

    n: int
    k: int
    scheme: str
    repetition: int
    metric_name: str
    metric_value: float
    bias_proxy: float | None = None
    variance_proxy: float | None = None


@dataclass(frozen=True)
class SweepResult:
    """All sweep rows plus the per-(n, scheme) optimum of the primary metric."""

    rows: tuple[SweepRow, ...]
    optimal_k: dict[tuple[int, str], int]
    optimal_metric: dict[tuple[int, str], float]


def _resolve_k_grid(k_grid, n: int) -> list[int]:
    if k_grid is None:
        ks = list(range(1, n // 2 + 1))
    elif callable(k_grid):
        ks = [int(k) for k in k_grid(n)]
    else:
        ks = [int(k) for k in k_grid]
    ks = sorted(set(ks))
    if not ks:
        raise ValueError("k grid is empty")
    if ks[0] < 1 or ks[-1] > n - 1:
        raise ValueError(f"k grid must lie within [1, n-1] = [1, {n - 1}]")
    return ks


def _sweep_one_rep(
    spec: ScenarioSpec,
    schemes: Sequence[WeightScheme],
    k_list: list[int],
    repetitions_seed: int,
    test_size: int,
    alpha: float,
    backend: SearchBackend,
    rep: int,
) -> list[SweepRow]:
    train_seed = stream_seed(repetitions_seed, 0)
    test_seed = stream_seed(repetitions_seed, 1)
    train, truth = generate(replace(spec, seed=train_seed))
    test_x, test_y = generate_test(spec, test_size, test_seed)

    k_max = k_list[-1]
    index = build_index(train, backend)
    idx_mat, dist_mat = knn_matrix(index, test_x, k_max + 1)
    eta_test = truth(test_x)
    classification = train.task == CLASSIFICATION
    eta_train = None if classification else truth(train.features)

    m = test_x.shape[0]
    n_schemes = len(schemes)
    sq_sum = np.zeros((n_schemes, k_max))
    bias_sum = np.zeros((n_schemes, k_max))
    var_sum = np.zeros((n_schemes, k_max))
    regret_sum = np.zeros((n_schemes, k_max))
    mis_sum = np.zeros((n_schemes, k_max))

    chunk = max(1, _CHUNK_ENTRIES // (k_max + 1))
    for start in range(0, m, chunk):
        stop = min(m, start + chunk)
        d = dist_mat[start:stop]
        nb = idx_mat[start:stop, :k_max]
        y_sel = train.responses[nb]
        eta_sel = None if classification else eta_train[nb]
        for si, scheme in enumerate(schemes):
            est = estimates_all_k(d, y_sel, scheme)
            if classification:
                ghat = est >= 0.5
                regret_sum[si] += pointwise_regret(eta_test[start:stop, None], ghat).sum(axis=0)
                actual = (test_y[start:stop] == 1.0)[:, None]
                mis_sum[si] += (ghat != actual).sum(axis=0)
            else:
                sq_sum[si] += ((est - eta_test[start:stop, None]) ** 2).sum(axis=0)
                bias, var = proxies_all_k(d, y_sel, eta_sel, alpha, scheme)
                bias_sum[si] += bias.sum(axis=0)
                var_sum[si] += var.sum(axis=0)

    rows: list[SweepRow] = []
    for si, scheme in enumerate(schemes):
        label = str(scheme)
        for k in k_list:
            col = k - 1
            if classification:
                rows.append(
                    SweepRow(spec.n, k, label, rep, "excess_risk", regret_sum[si, col] / m)
                )
                rows.append(
                    SweepRow(
                        spec.n, k, label, rep, "misclassification_rate", mis_sum[si, col] / m
                    )
                )
            else:
                rows.append(
                    SweepRow(
                        spec.n,
                        k,
                        label,
                        rep,
                        "mse",
                        sq_sum[si, col] / m,
                        bias_proxy=bias_sum[si, col] / m,
                        variance_proxy=var_sum[si, col] / m,
                    )
                )
    return rows


def sweep(
    spec: ScenarioSpec,
    schemes: Sequence[WeightScheme],
    k_grid=None,
    repetitions: int = 10,
    test_size: int = 1000,
    base_seed: int = 0,
    *,
    alpha: float = 1.0,
    backend: SearchBackend | None = None,
    threads: int = 1,
) -> SweepResult:
    """Monte Carlo sweep over k and schemes at the scenario's sample size.

    Every repetition draws a fresh training set and a fresh test set from
    seed streams derived from ``base_seed``, searches neighbors once per
    test point at max(k_grid) + 1, and evaluates each (scheme, k) on the
    truncated search.  Regression rows carry the mean squared error against
    the noiseless target plus the bias and variance proxies at ``alpha``;
    classification rows carry the excess risk and the test
    misclassification rate.  The optimum per scheme minimizes the
    repetition-averaged primary metric, ties resolving to the smaller k.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    if test_size < 1:
        raise ValueError(f"test_size must be >= 1, got {test_size}")
    if not schemes:
        raise ValueError("need at least one weight scheme")
    k_list = _resolve_k_grid(k_grid, spec.n)
    backend = BruteForce() if backend is None else backend

    def run(rep: int) -> list[SweepRow]:
        return _sweep_one_rep(
            spec, schemes, k_list, stream_seed(base_seed, rep), test_size, alpha, backend, rep
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_rep = list(pool.map(run, range(repetitions)))
    else:
        per_rep = [run(rep) for rep in range(repetitions)]

    rows: list[SweepRow] = [row for rep_rows in per_rep for row in rep_rows]
    primary = "excess_risk" if spec.variant == "gaussian" else "mse"
    k_pos = {k: i for i, k in enumerate(k_list)}
    curves = {str(s): np.zeros(len(k_list)) for s in schemes}
    for row in rows:
        if row.metric_name == primary:
            curves[row.scheme][k_pos[row.k]] += row.metric_value
    optimal_k: dict[tuple[int, str], int] = {}
    optimal_metric: dict[tuple[int, str], float] = {}
    for scheme in schemes:
        label = str(scheme)
        curve = curves[label] / repetitions
        best = int(np.argmin(curve))  # first minimum, so ties pick smaller k
        optimal_k[(spec.n, label)] = k_list[best]
        optimal_metric[(spec.n, label)] = float(curve[best])
    return SweepResult(tuple(rows), optimal_k, optimal_metric)


def sweep_grid(
    spec: ScenarioSpec,
    n_grid: Sequence[int],
    schemes: Sequence[WeightScheme],
    k_grid=None,
    repetitions: int = 10,
    test_size: int = 1000,
    base_seed: int = 0,
    *,
    alpha: float = 1.0,
    backend: SearchBackend | None = None,
    threads: int = 1,
) -> SweepResult:
    """Run ``sweep`` at every n in the grid and merge the results.

    Each sample size gets its own child seed stream, so enlarging the grid
    never perturbs the results at the other sizes.
    """
    if not n_grid:
        raise ValueError("n grid is empty")
    rows: list[SweepRow] = []
    optimal_k: dict[tuple[int, str], int] = {}
    optimal_metric: dict[tuple[int, str], float] = {}
    for i, n in enumerate(n_grid):
        result = sweep(
            replace(spec, n=int(n)),
            schemes,
            k_grid,
            repetitions,
            test_size,
            stream_seed(base_seed, i),
            alpha=alpha,
            backend=backend,
            threads=threads,
        )
        rows.extend(result.rows)
        optimal_k.update(result.optimal_k)
        optimal_metric.update(result.optimal_metric)
    return SweepResult(tuple(rows), optimal_k, optimal_metric)

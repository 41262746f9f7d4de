"""Neighbor weighting schemes and the interpolated regression estimator.

The estimator predicts at a query point x by averaging the responses of the
k nearest training points with data-dependent weights

    w_i = phi(d_i / b) / sum_j phi(d_j / b),    i = 1..k,

where d_1 <= ... <= d_k are the neighbor distances and b is the distance to
the (k+1)-th neighbor, so every ratio lies in (0, 1].  A weight function phi
that diverges as its argument shrinks to zero makes the fit interpolate: a
query that coincides with a training point receives that point's response
exactly.  For those diverging schemes the zero-distance case is handled by
an explicit rule rather than a limit, splitting all weight equally over the
zero-distance neighbors.  The constant scheme keeps the classical 1/k split
everywhere and therefore does not interpolate.

Three weight functions are provided:

* ``Uniform``          phi(t) = 1, classical k-NN averaging (no interpolation);
* ``LogInterpolated``  phi(t) = 1 - c log(t), singular but integrable enough
  that exp(s * phi(T)) keeps a finite mean for small s when T has a bounded
  density on (0, 1];
* ``PowerInterpolated`` phi(t) = t**(-kappa), whose exponential moment is
  infinite for every s > 0.

``mgf_bound`` reports E[exp(s * phi(T))] for T uniform on (0, 1], the
quantity that separates the last two regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Uniform",
    "LogInterpolated",
    "PowerInterpolated",
    "WeightScheme",
    "Dataset",
    "NeighborQuery",
    "WeightVector",
    "phi",
    "compute_weights",
    "estimate",
    "classify",
    "mgf_bound",
    "estimates_all_k",
    "proxies_all_k",
]

REGRESSION = "regression"
CLASSIFICATION = "classification"

# Tolerance for the simplex check on a normalized weight vector.
WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Uniform:
    """Constant weighting phi(t) = 1; every neighbor counts 1/k."""

    def __str__(self) -> str:
        return "uniform"


@dataclass(frozen=True)
class LogInterpolated:
    """Logarithmic weighting phi(t) = 1 - c * log(t) with c > 0.

    Diverges as t -> 0 slowly enough that the scheme keeps finite
    exponential moments for s * c < 1 (see ``mgf_bound``).
    """

    c: float = 2.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValueError(f"LogInterpolated requires c > 0, got {self.c!r}")

    def __str__(self) -> str:
        return f"log:{self.c:g}"


@dataclass(frozen=True)
class PowerInterpolated:
    """Polynomial weighting phi(t) = t ** (-kappa) with kappa > 0.

    The divergence at zero is strong enough that exp(s * phi(T)) has
    infinite mean for every s > 0.  kappa has no universal default; callers
    must choose it for their dimension.
    """

    kappa: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError(
                f"PowerInterpolated requires kappa > 0, got {self.kappa!r}"
            )

    def __str__(self) -> str:
        return f"power:{self.kappa:g}"


WeightScheme = Union[Uniform, LogInterpolated, PowerInterpolated]


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix plus response vector.

    Parameters
    ----------
    features : ndarray of shape (n, d)
        Finite float features, n >= 2, d >= 1.
    responses : ndarray of shape (n,)
        Finite float responses.  For the classification task every value
        must be exactly 0.0 or 1.0.
    task : str
        Either ``"regression"`` or ``"classification"``.
    """

    features: np.ndarray
    responses: np.ndarray
    task: str = REGRESSION

    def __post_init__(self) -> None:
        feats = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        resp = np.ascontiguousarray(np.asarray(self.responses, dtype=np.float64))
        if feats.ndim != 2:
            raise ValueError(f"features must be 2-d, got shape {feats.shape}")
        n, d = feats.shape
        if n < 2:
            raise ValueError(f"need at least 2 rows, got {n}")
        if d < 1:
            raise ValueError("need at least 1 feature column")
        if resp.shape != (n,):
            raise ValueError(
                f"responses shape {resp.shape} does not match {n} feature rows"
            )
        if not np.isfinite(feats).all():
            raise ValueError("features contain non-finite values")
        if not np.isfinite(resp).all():
            raise ValueError("responses contain non-finite values")
        if self.task not in (REGRESSION, CLASSIFICATION):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == CLASSIFICATION:
            bad = (resp != 0.0) & (resp != 1.0)
            if bad.any():
                row = int(np.argmax(bad))
                raise ValueError(
                    f"classification responses must be 0 or 1; row {row} "
                    f"has {resp[row]!r}"
                )
        feats.flags.writeable = False
        resp.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "responses", resp)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class NeighborQuery:
    """Result of an exact k-nearest-neighbor search at one query point.

    ``indices`` and ``distances`` are aligned and sorted by (distance,
    training-row index) ascending.  ``boundary_distance`` is the distance to
    the (k+1)-th neighbor and normalizes the weight-function arguments; it
    is zero only when every stored distance is zero.
    """

    indices: np.ndarray
    distances: np.ndarray
    boundary_distance: float

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=np.int64)
        dist = np.asarray(self.distances, dtype=np.float64)
        if idx.ndim != 1 or dist.shape != idx.shape or idx.size == 0:
            raise ValueError("indices and distances must be aligned 1-d arrays")
        if len(np.unique(idx)) != idx.size:
            raise ValueError("neighbor indices must be distinct")
        if not np.isfinite(dist).all() or (dist < 0).any():
            raise ValueError("distances must be finite and nonnegative")
        if (np.diff(dist) < 0).any():
            raise ValueError("distances must be nondecreasing")
        b = float(self.boundary_distance)
        if not math.isfinite(b) or b < 0:
            raise ValueError(f"boundary_distance must be finite and >= 0, got {b}")
        if (dist > b).any():
            raise ValueError("every neighbor distance must be <= boundary_distance")
        if b == 0.0 and dist[-1] != 0.0:
            raise ValueError("zero boundary_distance requires all-zero distances")
        idx.flags.writeable = False
        dist.flags.writeable = False
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "distances", dist)
        object.__setattr__(self, "boundary_distance", b)

    @property
    def k(self) -> int:
        return self.indices.size


@dataclass(frozen=True)
class WeightVector:
    """Convex weights aligned with a NeighborQuery's neighbor order."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-d array")
        if (w < 0).any() or not np.isfinite(w).all():
            raise ValueError("weights must be finite and nonnegative")
        if abs(float(w.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def k(self) -> int:
        return self.weights.size


def phi(scheme: WeightScheme, t):
    """Evaluate the weight function on normalized distances in (0, 1].

    Parameters
    ----------
    scheme : WeightScheme
    t : float or ndarray
        Normalized distance(s); every entry must lie in (0, 1].

    Returns
    -------
    float or ndarray
        phi(t), always >= 1 and finite on the legal domain.
    """
    arr = np.asarray(t, dtype=np.float64)
    if arr.size == 0 or (arr <= 0).any() or (arr > 1).any() or not np.isfinite(arr).all():
        raise ValueError("phi argument must lie in (0, 1]")
    if isinstance(scheme, Uniform):
        out = np.ones_like(arr)
    elif isinstance(scheme, LogInterpolated):
        out = 1.0 - scheme.c * np.log(arr)
    elif isinstance(scheme, PowerInterpolated):
        out = arr ** (-scheme.kappa)
    else:
        raise TypeError(f"unknown weight scheme {scheme!r}")
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out)
    return out


def compute_weights(scheme: WeightScheme, query: NeighborQuery) -> WeightVector:
    """Turn neighbor distances into convex estimator weights.

    Distances are normalized by ``query.boundary_distance`` and passed
    through the scheme's phi; the weights are the phi values divided by
    their accumulated sum.  For the diverging schemes exact matches
    short-circuit phi entirely: if any neighbor distance is zero, all
    weight is split equally over the zero-distance neighbors and every
    other neighbor gets weight zero.  Uniform keeps the classical 1/k
    split in every case, so it averages straight over an exact match
    instead of reproducing it.

    Returns
    -------
    WeightVector
        Weights aligned with ``query.indices``; nonincreasing in distance.
    """
    dist = query.distances
    if isinstance(scheme, Uniform):
        return WeightVector(np.full(dist.size, 1.0 / dist.size))
    zero = dist == 0.0
    if zero.any():
        w = np.zeros(dist.size, dtype=np.float64)
        w[zero] = 1.0 / int(zero.sum())
        return WeightVector(w)
    # boundary_distance > 0 here because distances are positive and bounded
    # above by it; ratios therefore fall in (0, 1].
    ratios = dist / query.boundary_distance
    vals = phi(scheme, ratios)
    return WeightVector(vals / vals.sum())


def estimate(dataset: Dataset, query: NeighborQuery, scheme: WeightScheme) -> float:
    """Weighted-average prediction; a convex combination of neighbor responses."""
    if query.indices.max() >= dataset.n:
        raise ValueError("query indices exceed the dataset")
    w = compute_weights(scheme, query).weights
    return float(w @ dataset.responses[query.indices])


def classify(dataset: Dataset, query: NeighborQuery, scheme: WeightScheme) -> int:
    """Plug-in label: 1 when the weighted average is >= 1/2, else 0.

    The dataset must carry the classification task; the tie at exactly 1/2
    resolves to class 1.
    """
    if dataset.task != CLASSIFICATION:
        raise ValueError("classify requires a classification dataset")
    return int(estimate(dataset, query, scheme) >= 0.5)


def mgf_bound(scheme: WeightScheme, s: float) -> float:
    """E[exp(s * phi(T))] for T uniform on (0, 1], or inf when divergent.

    Closed forms: Uniform gives e**s; LogInterpolated gives
    e**s / (1 - s*c) when s*c < 1 and inf otherwise; PowerInterpolated is
    inf for every s > 0 because the integrand blows up faster than any
    integrable rate near zero.
    """
    if not (math.isfinite(s) and s > 0):
        raise ValueError(f"s must be a finite positive real, got {s!r}")
    if isinstance(scheme, Uniform):
        return math.exp(s)
    if isinstance(scheme, LogInterpolated):
        if s * scheme.c >= 1.0:
            return math.inf
        return math.exp(s) / (1.0 - s * scheme.c)
    if isinstance(scheme, PowerInterpolated):
        return math.inf
    raise TypeError(f"unknown weight scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Whole-profile evaluation: estimator values for every truncation k at once.
#
# A sorted distance row d_1 <= ... <= d_{kmax+1} supports the estimate for
# every k in 1..kmax, with column k acting as the normalizing boundary.  All
# three schemes reduce to running sums along the row:
#
#   uniform   w_i = 1/k
#   log       phi(d_i/b_k) = (1 - c log d_i) + c log b_k, affine in a per-k
#             offset, so numerator and denominator split into two cumsums
#   power     phi(d_i/b_k) = d_i**-kappa * b_k**kappa and the b_k factor
#             cancels in the normalization
#
# Rows containing zero distances are routed through the exact-match rule
# instead (zeros sort first, so the rule applies at every k).  Uniform is
# exempt: the classical average has no exact-match rule.
# ---------------------------------------------------------------------------


def _check_profile_inputs(distances: np.ndarray, *aligned: np.ndarray) -> int:
    d = distances
    if d.ndim != 2 or d.shape[1] < 2:
        raise ValueError("distances must be (m, k_max+1) with k_max >= 1")
    k_max = d.shape[1] - 1
    for arr in aligned:
        if arr.shape != (d.shape[0], k_max):
            raise ValueError("aligned arrays must have shape (m, k_max)")
    return k_max


def _exact_match_profile(d: np.ndarray, vals: np.ndarray, power: int = 1) -> np.ndarray:
    """Equal-split running means over the zero-distance prefix of each row.

    Returns cumsum(vals)_min(k, m0) / min(k, m0)**power where m0 counts the
    zero-distance neighbors of the row.
    """
    k_max = d.shape[1] - 1
    ks = np.arange(1, k_max + 1)
    m0 = (d[:, :k_max] == 0.0).sum(axis=1)
    eff = np.minimum(ks[None, :], m0[:, None])
    cum = np.cumsum(vals, axis=1)
    return np.take_along_axis(cum, eff - 1, axis=1) / eff.astype(np.float64) ** power


def estimates_all_k(
    distances: np.ndarray, neighbor_responses: np.ndarray, scheme: WeightScheme
) -> np.ndarray:
    """Estimates for every k = 1..k_max from one sorted neighbor profile.

    Parameters
    ----------
    distances : ndarray of shape (m, k_max + 1)
        Row-sorted nondecreasing neighbor distances; column j holds the
        (j+1)-th nearest distance.
    neighbor_responses : ndarray of shape (m, k_max)
        Responses aligned with the first k_max distance columns.
    scheme : WeightScheme

    Returns
    -------
    ndarray of shape (m, k_max)
        Column k-1 equals the k-neighbor estimate for each row, identical
        (up to accumulated rounding) to running ``estimate`` per k.
    """
    d = np.asarray(distances, dtype=np.float64)
    y = np.asarray(neighbor_responses, dtype=np.float64)
    k_max = _check_profile_inputs(d, y)
    m = d.shape[0]
    ks = np.arange(1, k_max + 1, dtype=np.float64)

    if isinstance(scheme, Uniform):
        return np.cumsum(y, axis=1) / ks

    out = np.empty((m, k_max), dtype=np.float64)
    zero_rows = d[:, 0] == 0.0
    live = ~zero_rows

    if zero_rows.any():
        out[zero_rows] = _exact_match_profile(d[zero_rows], y[zero_rows])
    if not live.any():
        return out

    dl, yl = d[live], y[live]
    if isinstance(scheme, LogInterpolated):
        c = scheme.c
        a = 1.0 - c * np.log(dl[:, :k_max])
        b = c * np.log(dl[:, 1:])
        num = np.cumsum(a * yl, axis=1) + b * np.cumsum(yl, axis=1)
        den = np.cumsum(a, axis=1) + b * ks
        out[live] = num / den
    elif isinstance(scheme, PowerInterpolated):
        # Normalize by the nearest distance so the running sums stay in
        # (0, 1] per term and cannot overflow.
        u = np.exp(-scheme.kappa * (np.log(dl[:, :k_max]) - np.log(dl[:, :1])))
        out[live] = np.cumsum(u * yl, axis=1) / np.cumsum(u, axis=1)
    else:
        raise TypeError(f"unknown weight scheme {scheme!r}")
    return out


def proxies_all_k(
    distances: np.ndarray,
    neighbor_responses: np.ndarray,
    neighbor_truth: np.ndarray,
    alpha: float,
    scheme: WeightScheme,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row bias and variance proxies for every k = 1..k_max.

    The bias proxy at k is (sum_i w_i d_i**alpha)**2 and the variance proxy
    is sum_i w_i**2 (y_i - eta(x_i))**2, with w the scheme weights for that
    truncation.  Shapes follow ``estimates_all_k``; ``neighbor_truth`` holds
    eta evaluated at the neighbor training points.

    Returns
    -------
    (bias, variance) : pair of ndarray of shape (m, k_max)
    """
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    d = np.asarray(distances, dtype=np.float64)
    y = np.asarray(neighbor_responses, dtype=np.float64)
    eta = np.asarray(neighbor_truth, dtype=np.float64)
    k_max = _check_profile_inputs(d, y, eta)
    m = d.shape[0]
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    res2 = (y - eta) ** 2

    if isinstance(scheme, Uniform):
        da = d[:, :k_max] ** alpha
        bias_u = (np.cumsum(da, axis=1) / ks) ** 2
        var_u = np.cumsum(res2, axis=1) / ks**2
        return bias_u, var_u

    bias = np.empty((m, k_max), dtype=np.float64)
    var = np.empty((m, k_max), dtype=np.float64)
    zero_rows = d[:, 0] == 0.0
    live = ~zero_rows

    if zero_rows.any():
        dz = d[zero_rows]
        # Zero-distance neighbors contribute d**alpha = 0 to the bias sum.
        bias[zero_rows] = 0.0
        var[zero_rows] = _exact_match_profile(dz, res2[zero_rows], power=2)
    if not live.any():
        return bias, var

    dl = d[live]
    r2 = res2[live]
    da = dl[:, :k_max] ** alpha
    if isinstance(scheme, LogInterpolated):
        c = scheme.c
        a = 1.0 - c * np.log(dl[:, :k_max])
        b = c * np.log(dl[:, 1:])
        den = np.cumsum(a, axis=1) + b * ks
        num_bias = np.cumsum(a * da, axis=1) + b * np.cumsum(da, axis=1)
        bias[live] = (num_bias / den) ** 2
        num_var = (
            np.cumsum(a**2 * r2, axis=1)
            + 2.0 * b * np.cumsum(a * r2, axis=1)
            + b**2 * np.cumsum(r2, axis=1)
        )
        var[live] = num_var / den**2
    elif isinstance(scheme, PowerInterpolated):
        u = np.exp(-scheme.kappa * (np.log(dl[:, :k_max]) - np.log(dl[:, :1])))
        su = np.cumsum(u, axis=1)
        bias[live] = (np.cumsum(u * da, axis=1) / su) ** 2
        var[live] = np.cumsum(u**2 * r2, axis=1) / su**2
    else:
        raise TypeError(f"unknown weight scheme {scheme!r}")
    return bias, var

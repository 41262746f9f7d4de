"""Interpolated nearest-neighbor regression and classification.

The estimator averages the k nearest responses with weights that grow as a
neighbor's distance shrinks, so the fit passes through the training data
while still averaging away noise.  Submodules: ``core`` (schemes and the
estimator), ``neighbors`` (exact search backends), ``diagnostics``
(bias/variance and rate checks), ``simulations`` (synthetic scenarios and
the sweep harness), ``data_io`` (CSV handling), and ``cli``.
"""

from .config import EstimatorConfig
from .core import (
    CLASSIFICATION,
    REGRESSION,
    Dataset,
    LogInterpolated,
    NeighborQuery,
    PowerInterpolated,
    Uniform,
    WeightScheme,
    WeightVector,
    classify,
    compute_weights,
    estimate,
    mgf_bound,
    phi,
)
from .data_io import CsvSchema, SplitSpec, load_csv, split_normalize, write_results, write_summary
from .diagnostics import (
    BiasVarianceReport,
    RateFit,
    bias_variance,
    excess_risk,
    fit_rate,
    kth_distance_scaling,
)
from .neighbors import (
    BruteForce,
    FittedIndex,
    KdTree,
    SearchBackend,
    build_index,
    query_batch,
    query_knn,
)
from .simulations import (
    ScenarioSpec,
    SweepResult,
    SweepRow,
    bayes_risk_gaussian,
    draw_student_t5,
    generate,
    sweep,
    sweep_grid,
)

__version__ = "0.1.0"

__all__ = [
    "EstimatorConfig",
    "CLASSIFICATION",
    "REGRESSION",
    "Dataset",
    "LogInterpolated",
    "NeighborQuery",
    "PowerInterpolated",
    "Uniform",
    "WeightScheme",
    "WeightVector",
    "classify",
    "compute_weights",
    "estimate",
    "mgf_bound",
    "phi",
    "CsvSchema",
    "SplitSpec",
    "load_csv",
    "split_normalize",
    "write_results",
    "write_summary",
    "BiasVarianceReport",
    "RateFit",
    "bias_variance",
    "excess_risk",
    "fit_rate",
    "kth_distance_scaling",
    "BruteForce",
    "FittedIndex",
    "KdTree",
    "SearchBackend",
    "build_index",
    "query_batch",
    "query_knn",
    "ScenarioSpec",
    "SweepResult",
    "SweepRow",
    "bayes_risk_gaussian",
    "draw_student_t5",
    "generate",
    "sweep",
    "sweep_grid",
    "__version__",
]

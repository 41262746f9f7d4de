"""Bundled estimator settings shared by the diagnostics and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import CLASSIFICATION, REGRESSION, WeightScheme
from .neighbors import BruteForce, SearchBackend

__all__ = ["EstimatorConfig"]


@dataclass(frozen=True)
class EstimatorConfig:
    """Number of neighbors, weighting scheme, backend, and task."""

    k: int
    scheme: WeightScheme
    backend: SearchBackend = field(default_factory=BruteForce)
    task: str = REGRESSION

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.task not in (REGRESSION, CLASSIFICATION):
            raise ValueError(f"unknown task {self.task!r}")

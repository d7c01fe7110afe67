"""Dimension reduction of ilr coordinates into mediator components."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameterError, ShapeError
from .pca import pca_fit, pca_transform
from .umap import UmapConfig, umap_embed


class ReductionStrategy(enum.Enum):
    UMAP = "umap"
    PCA_THEN_UMAP = "pca-umap"
    PCA_FULL = "pca-full"
    PCA_80 = "pca80"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            choices = ", ".join(s.value for s in cls)
            raise InvalidParameterError(f"unknown strategy {value!r}; choose from {choices}") from None


@dataclass
class EmbeddingMatrix:
    values: np.ndarray
    strategy: ReductionStrategy

    @property
    def n_components(self):
        return self.values.shape[1]


def reduce(ilr_data, strategy=ReductionStrategy.UMAP, n_components=2, seed=0, umap_config=None):
    """Reduce an ``n x (p - 1)`` ilr matrix to mediator components.

    ``n_components`` applies to the UMAP strategies; the PCA strategies pick
    their own count from the variance threshold (1.0 or 0.8). ``umap_config``
    overrides UMAP settings other than the component count and seed.
    """
    X = np.asarray(ilr_data, dtype=float)
    if X.ndim != 2:
        raise ShapeError("ilr data must be 2-D")
    strategy = ReductionStrategy.parse(strategy)
    n, d = X.shape
    cap = min(n, d)

    if strategy in (ReductionStrategy.PCA_FULL, ReductionStrategy.PCA_80):
        threshold = 1.0 if strategy is ReductionStrategy.PCA_FULL else 0.8
        model = pca_fit(X, variance_threshold=threshold)
        return EmbeddingMatrix(pca_transform(model, X), strategy)

    if not 1 <= n_components <= cap:
        raise InvalidParameterError(f"n_components must lie in [1, {cap}], got {n_components}")
    base = umap_config or UmapConfig()
    cfg = UmapConfig(
        n_components=int(n_components),
        n_neighbors=base.n_neighbors,
        min_dist=base.min_dist,
        n_epochs=base.n_epochs,
        seed=int(seed),
    )
    if strategy is ReductionStrategy.PCA_THEN_UMAP:
        X = pca_transform(pca_fit(X, n_components=cap), X)
    return EmbeddingMatrix(umap_embed(X, cfg), strategy)

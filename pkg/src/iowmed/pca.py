"""Principal component analysis by SVD of the centred data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameterError, RankZeroError, ShapeError

# relative singular-value cutoff below which a component carries no variance
_RANK_TOL = 1e-10


@dataclass
class PcaModel:
    loadings: np.ndarray  # (d, k), orthonormal columns
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    column_means: np.ndarray

    @property
    def n_components(self):
        return self.loadings.shape[1]


def pca_fit(X, n_components=None, variance_threshold=None):
    """Fit principal axes to ``X``.

    Exactly one of ``n_components`` (an integer in ``[1, min(n, d)]``) or
    ``variance_threshold`` (in ``(0, 1]``) must be given. A threshold keeps
    the smallest number of components whose cumulative explained variance
    ratio reaches it; zero-variance directions are never kept.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError("PCA input must be 2-D")
    n, d = X.shape
    if n < 2:
        raise InvalidParameterError("PCA needs at least two rows")
    if (n_components is None) == (variance_threshold is None):
        raise InvalidParameterError("give exactly one of n_components or variance_threshold")

    means = X.mean(axis=0)
    Xc = X - means
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    if s.size == 0 or s[0] <= 0 or s[0] < _RANK_TOL * max(1.0, np.abs(X).max()):
        raise RankZeroError("all rows are identical; no variance to decompose")
    rank = int(np.sum(s > _RANK_TOL * s[0]))
    var = s**2 / (n - 1)
    ratio = var / var.sum()

    if n_components is not None:
        if int(n_components) != n_components or not 1 <= n_components <= min(n, d):
            raise InvalidParameterError(f"n_components must lie in [1, {min(n, d)}], got {n_components}")
        k = int(n_components)
    else:
        if not 0 < variance_threshold <= 1:
            raise InvalidParameterError(f"variance threshold must lie in (0, 1], got {variance_threshold}")
        cumulative = np.cumsum(ratio[:rank])
        k = int(np.searchsorted(cumulative, variance_threshold - 1e-12) + 1)
        k = min(k, rank)

    # deterministic sign: largest-magnitude loading of each axis is positive
    loadings = vt[:k].T.copy()
    flip = np.sign(loadings[np.argmax(np.abs(loadings), axis=0), np.arange(k)])
    flip[flip == 0] = 1.0
    loadings *= flip
    return PcaModel(loadings, var[:k], ratio[:k], means)


def pca_transform(model: PcaModel, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.column_means.shape[0]:
        raise ShapeError(f"expected {model.column_means.shape[0]} columns, got shape {X.shape}")
    return (X - model.column_means) @ model.loadings

"""A compact, deterministic UMAP.

The fuzzy graph uses exact nearest neighbours (``n_neighbors`` counts the
point itself, so each point has ``n_neighbors - 1`` graph neighbours). The
layout starts from a seeded uniform draw on ``[-10, 10]`` and is optimised
by the usual edge-sampling SGD with negative sampling; every random number
comes from a seeded splitmix64 stream, so the output depends only on the
input and the seed.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse
from scipy.optimize import curve_fit
from scipy.spatial.distance import cdist

from .exceptions import InvalidParameterError, NumericalFailure, ShapeError

_BISECT_TOL = 1e-6
_BISECT_ITER = 200
NEGATIVE_SAMPLE_RATE = 5
REPULSION_STRENGTH = 1.0
INIT_SCALE = 10.0


@dataclass(frozen=True)
class UmapConfig:
    n_components: int = 2
    n_neighbors: int | None = None  # None -> min(15, n - 1)
    min_dist: float = 0.1
    n_epochs: int = 200
    seed: int = 0

    def resolved_neighbors(self, n):
        k = min(15, n - 1) if self.n_neighbors is None else self.n_neighbors
        if not 2 <= k < n:
            raise InvalidParameterError(f"n_neighbors must satisfy 2 <= k < n = {n}, got {k}")
        return k

    def __post_init__(self):
        if self.n_components < 1:
            raise InvalidParameterError("n_components must be >= 1")
        if self.n_epochs < 1:
            raise InvalidParameterError("n_epochs must be >= 1")
        if self.min_dist < 0:
            raise InvalidParameterError("min_dist must be non-negative")


def exact_knn(X, k):
    """Indices and distances of the ``k`` nearest points, self first.

    Ties are broken by row index.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise InvalidParameterError(f"k must lie in [1, {n}], got {k}")
    d = cdist(X, X)
    np.fill_diagonal(d, -1.0)
    idx = np.argsort(d, axis=1, kind="stable")[:, :k]
    dist = np.take_along_axis(d, idx, axis=1)
    dist[:, 0] = 0.0
    return idx, dist


@numba.njit(cache=True)
def _smooth_knn_dist(distances, target):
    n, m = distances.shape
    sigmas = np.empty(n)
    rhos = np.zeros(n)
    for i in range(n):
        row = distances[i]
        for j in range(m):
            if row[j] > 0.0:
                rhos[i] = row[j]
                break
        lo = 0.0
        hi = np.inf
        mid = 1.0
        for _ in range(_BISECT_ITER):
            psum = 0.0
            for j in range(m):
                d = row[j] - rhos[i]
                if d > 0.0:
                    psum += np.exp(-d / mid)
                else:
                    psum += 1.0
            if abs(psum - target) < _BISECT_TOL:
                break
            if psum > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                if hi == np.inf:
                    mid *= 2.0
                else:
                    mid = (lo + hi) / 2.0
        sigmas[i] = max(mid, 1e-300)
    return sigmas, rhos


def smooth_knn_dist(distances, k):
    """Per-point bandwidths ``sigma`` and local connectivities ``rho``.

    ``distances`` holds each point's distances to its ``k - 1`` graph
    neighbours in ascending order. ``sigma_i`` is found by bisection so that
    ``sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k)``.
    """
    distances = np.ascontiguousarray(distances, dtype=float)
    return _smooth_knn_dist(distances, float(np.log2(k)))


def fuzzy_knn_graph(X, n_neighbors):
    """Symmetric fuzzy membership graph as a CSR matrix.

    Directed memberships ``exp(-max(0, d_ij - rho_i) / sigma_i)`` are merged
    with the probabilistic union ``a + b - a b``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError("input must be 2-D")
    n = X.shape[0]
    if not 2 <= n_neighbors < n:
        raise InvalidParameterError(f"n_neighbors must satisfy 2 <= k < n = {n}, got {n_neighbors}")
    idx, dist = exact_knn(X, n_neighbors)
    nbr_idx, nbr_dist = idx[:, 1:], dist[:, 1:]
    sigmas, rhos = smooth_knn_dist(nbr_dist, n_neighbors)
    vals = np.exp(-np.maximum(nbr_dist - rhos[:, None], 0.0) / sigmas[:, None])
    rows = np.repeat(np.arange(n), n_neighbors - 1)
    A = scipy.sparse.csr_matrix((vals.ravel(), (rows, nbr_idx.ravel())), shape=(n, n))
    At = A.T.tocsr()
    G = (A + At - A.multiply(At)).tocsr()
    G.eliminate_zeros()
    G.sort_indices()
    return G


@functools.lru_cache(maxsize=32)
def fit_ab(min_dist, spread=1.0):
    """Curve parameters ``a, b`` of ``1 / (1 + a d^(2b))`` for a given ``min_dist``."""

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    xv = np.linspace(0, spread * 3, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))
    (a, b), _ = curve_fit(curve, xv, yv)
    return float(a), float(b)


def _epochs_per_sample(weights, n_epochs):
    n_samples = n_epochs * (weights / weights.max())
    result = np.full(weights.shape[0], -1.0)
    result[n_samples > 0] = float(n_epochs) / n_samples[n_samples > 0]
    return result


@numba.njit(cache=True)
def _next_rand(state):
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def _clip(v):
    if v > 4.0:
        return 4.0
    if v < -4.0:
        return -4.0
    return v


@numba.njit(cache=True)
def _optimize_layout(emb, head, tail, epochs_per_sample, n_epochs, a, b, gamma, neg_rate, state):
    n_vertices, dim = emb.shape
    n_edges = head.shape[0]
    epochs_per_negative = epochs_per_sample / neg_rate
    next_sample = epochs_per_sample.copy()
    next_negative = epochs_per_negative.copy()
    nv = np.uint64(n_vertices)
    for epoch in range(n_epochs):
        alpha = 1.0 - epoch / n_epochs
        for i in range(n_edges):
            if next_sample[i] > epoch:
                continue
            j = head[i]
            k = tail[i]
            dist_sq = 0.0
            for d in range(dim):
                diff = emb[j, d] - emb[k, d]
                dist_sq += diff * diff
            if dist_sq > 0.0:
                coeff = -2.0 * a * b * dist_sq ** (b - 1.0) / (a * dist_sq**b + 1.0)
            else:
                coeff = 0.0
            for d in range(dim):
                g = _clip(coeff * (emb[j, d] - emb[k, d]))
                emb[j, d] += g * alpha
                emb[k, d] -= g * alpha
            next_sample[i] += epochs_per_sample[i]

            n_neg = int((epoch - next_negative[i]) / epochs_per_negative[i])
            for _ in range(n_neg):
                k = np.int64(_next_rand(state) % nv)
                dist_sq = 0.0
                for d in range(dim):
                    diff = emb[j, d] - emb[k, d]
                    dist_sq += diff * diff
                if dist_sq > 0.0:
                    coeff = 2.0 * gamma * b / ((0.001 + dist_sq) * (a * dist_sq**b + 1.0))
                elif j == k:
                    continue
                else:
                    coeff = 0.0
                for d in range(dim):
                    if coeff > 0.0:
                        g = _clip(coeff * (emb[j, d] - emb[k, d]))
                    else:
                        g = 4.0
                    emb[j, d] += g * alpha
            next_negative[i] += n_neg * epochs_per_negative[i]
    return emb


def umap_embed(X, cfg: UmapConfig = UmapConfig()):
    """Embed the rows of ``X`` into ``cfg.n_components`` dimensions.

    Returns an ``n x c`` array; identical input and seed give a bit-identical
    result.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError("input must be 2-D")
    n = X.shape[0]
    k = cfg.resolved_neighbors(n)
    graph = fuzzy_knn_graph(X, k).tocoo()
    graph.data[graph.data < graph.data.max() / float(cfg.n_epochs)] = 0.0
    graph.eliminate_zeros()

    seeds = np.random.SeedSequence(cfg.seed).generate_state(2, dtype=np.uint64)
    rng = np.random.default_rng(int(seeds[0]))
    emb = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(n, cfg.n_components))
    state = np.array([seeds[1]], dtype=np.uint64)
    a, b = fit_ab(float(cfg.min_dist))
    emb = _optimize_layout(
        emb,
        graph.row.astype(np.int64),
        graph.col.astype(np.int64),
        _epochs_per_sample(graph.data, cfg.n_epochs),
        int(cfg.n_epochs),
        a,
        b,
        REPULSION_STRENGTH,
        float(NEGATIVE_SAMPLE_RATE),
        state,
    )
    if not np.all(np.isfinite(emb)):
        raise NumericalFailure("UMAP layout produced non-finite coordinates")
    return emb

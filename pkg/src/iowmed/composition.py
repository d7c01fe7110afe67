"""Compositional transforms for taxa count tables.

Counts are moved onto the simplex with a constant pseudocount and closure,
then into Euclidean space with the isometric log-ratio (ilr) transform built
from a sequential binary partition of the taxa. Natural logs throughout.

Partitions use 0-based taxon indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DomainError, InvalidParameterError, InvalidPartitionError, ShapeError

Contrast = tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class CountMatrix:
    """Labelled ``n x p`` table of non-negative taxa counts."""

    values: np.ndarray
    sample_ids: tuple[str, ...] = field(default=())
    taxa_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ShapeError(f"count matrix must be 2-D, got {values.ndim}-D")
        n, p = values.shape
        if n < 1 or p < 2:
            raise ShapeError(f"count matrix needs n >= 1 and p >= 2, got {n} x {p}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DomainError("counts must be finite and non-negative")
        sample_ids = tuple(self.sample_ids) or tuple(f"S{i + 1}" for i in range(n))
        taxa_ids = tuple(self.taxa_ids) or tuple(f"T{j + 1}" for j in range(p))
        if len(sample_ids) != n or len(taxa_ids) != p:
            raise ShapeError("label counts do not match the matrix shape")
        if len(set(sample_ids)) != n:
            raise InvalidParameterError("duplicate sample ids")
        if len(set(taxa_ids)) != p:
            raise InvalidParameterError("duplicate taxa ids")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sample_ids", sample_ids)
        object.__setattr__(self, "taxa_ids", taxa_ids)

    @property
    def shape(self):
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, CountMatrix):
            return NotImplemented
        return (
            self.sample_ids == other.sample_ids
            and self.taxa_ids == other.taxa_ids
            and np.array_equal(self.values, other.values)
        )


def impute_pseudocount(counts, pseudo=0.5):
    """Replace zero entries by ``pseudo``; non-zero entries are untouched.

    Accepts a plain array or a :class:`CountMatrix` and returns the same kind.
    """
    if not pseudo > 0:
        raise InvalidParameterError(f"pseudocount must be positive, got {pseudo}")
    if isinstance(counts, CountMatrix):
        return CountMatrix(impute_pseudocount(counts.values, pseudo), counts.sample_ids, counts.taxa_ids)
    values = np.array(counts, dtype=float)
    values[values == 0] = pseudo
    return values


def close(values):
    """Divide each row by its sum so that rows lie on the unit simplex."""
    x = np.asarray(values, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("closure requires strictly positive entries")
    return x / x.sum(axis=-1, keepdims=True)


def geometric_mean(v):
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise DomainError("geometric mean of an empty vector")
    if np.any(~(v > 0)):
        raise DomainError("geometric mean requires strictly positive entries")
    return float(np.exp(np.mean(np.log(v))))


def _check_contrast(R, S):
    R = tuple(int(i) for i in R)
    S = tuple(int(i) for i in S)
    if not R or not S:
        raise InvalidPartitionError("balance subsets must be non-empty")
    if set(R) & set(S):
        raise InvalidPartitionError(f"balance subsets overlap: {sorted(set(R) & set(S))}")
    if len(set(R)) != len(R) or len(set(S)) != len(S):
        raise InvalidPartitionError("balance subsets contain repeated indices")
    return R, S


def ilr_balance(composition_row, R, S):
    """Balance between taxa subsets ``R`` and ``S`` of one composition.

    ``sqrt(r s / (r + s)) * log(g(x_R) / g(x_S))`` where ``g`` is the
    geometric mean and ``r``, ``s`` the subset sizes.
    """
    R, S = _check_contrast(R, S)
    x = np.asarray(composition_row, dtype=float)
    r, s = len(R), len(S)
    log_ratio = np.log(geometric_mean(x[list(R)])) - np.log(geometric_mean(x[list(S)]))
    return float(np.sqrt(r * s / (r + s)) * log_ratio)


def default_partition(p) -> tuple[Contrast, ...]:
    """Pivot partition: contrast ``k`` opposes taxon ``k`` to taxa ``k+1 .. p-1``."""
    if int(p) != p or p < 2:
        raise InvalidParameterError(f"partition needs p >= 2 taxa, got {p}")
    p = int(p)
    return tuple(((k,), tuple(range(k + 1, p))) for k in range(p - 1))


def validate_partition(partition: Sequence[Contrast], p: int) -> tuple[Contrast, ...]:
    """Check that ``partition`` is a sequential binary partition of ``range(p)``.

    The first contrast must split the whole set; every later contrast must
    split one of the groups produced earlier.
    """
    contrasts = tuple(_check_contrast(R, S) for R, S in partition)
    if len(contrasts) != p - 1:
        raise InvalidPartitionError(f"expected {p - 1} contrasts for {p} taxa, got {len(contrasts)}")
    groups = [frozenset(range(p))]
    for R, S in contrasts:
        union = frozenset(R) | frozenset(S)
        if union not in groups:
            raise InvalidPartitionError(f"contrast {R} vs {S} does not split an existing group")
        groups.remove(union)
        groups.extend((frozenset(R), frozenset(S)))
    return contrasts


def balance_basis(partition: Sequence[Contrast], p: int):
    """Return the ``(p - 1) x p`` orthonormal contrast matrix of a partition.

    Row ``k`` holds the log-coefficients of balance ``k`` so that
    ``log(x) @ basis.T`` gives the ilr coordinates.
    """
    contrasts = validate_partition(partition, p)
    basis = np.zeros((len(contrasts), p))
    for k, (R, S) in enumerate(contrasts):
        r, s = len(R), len(S)
        c = np.sqrt(r * s / (r + s))
        basis[k, list(R)] = c / r
        basis[k, list(S)] = -c / s
    return basis


def ilr_transform(comp, partition=None):
    """ilr coordinates of each row of a composition matrix.

    Parameters
    ----------
    comp : array_like, shape (n, p)
        Strictly positive rows. Closure is not required since balances are
        scale invariant.
    partition : sequence of (R, S), optional
        Sequential binary partition; defaults to :func:`default_partition`.

    Returns
    -------
    ndarray, shape (n, p - 1)
    """
    x = np.asarray(comp, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] < 2:
        raise ShapeError(f"expected an n x p matrix with p >= 2, got shape {x.shape}")
    p = x.shape[1]
    if partition is None:
        partition = default_partition(p)
    elif len(partition) != p - 1:
        raise ShapeError(f"partition has {len(partition)} contrasts but data has {p} taxa")
    if np.any(~(x > 0)):
        raise DomainError("ilr requires strictly positive entries")
    return np.log(x) @ balance_basis(partition, p).T


def clr_transform(comp):
    x = np.asarray(comp, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("clr requires strictly positive entries")
    logs = np.log(x)
    return logs - logs.mean(axis=-1, keepdims=True)


def aitchison_distance(a, b):
    """Euclidean distance between the clr images of two compositions."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(clr_transform(a) - clr_transform(b)))


def counts_to_ilr(counts, pseudo=0.5, partition=None):
    """Pseudocount, closure and ilr in one call; returns ``n x (p - 1)``."""
    values = counts.values if isinstance(counts, CountMatrix) else counts
    return ilr_transform(close(impute_pseudocount(values, pseudo)), partition)

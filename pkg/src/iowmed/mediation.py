"""Inverse-odds-weighted mediation test.

The total effect of a binary exposure comes from regressing the outcome on
the exposure and covariates. A logistic model of the exposure on the
mediator components and covariates gives inverse-odds weights (exposed
subjects get ``1 / odds``, unexposed subjects get 1); refitting the outcome
model with those case weights gives the direct effect. The indirect effect
is their difference, and its significance comes from re-running the weight
and refit steps with the mediator rows permuted.
"""
from __future__ import annotations

import enum
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .exceptions import (
    BootstrapFailure,
    DataError,
    InvalidParameterError,
    MediationTestFailure,
    NumericalError,
    ShapeError,
    WeightModelFailure,
    WrongLinkError,
)
from .glm import GlmFit, LinkFunction, design_matrix, fit_logistic, fit_ols, predict_odds
from .seeding import derive_seed

logger = logging.getLogger(__name__)


class OutcomeFamily(enum.Enum):
    CONTINUOUS = "continuous"
    DICHOTOMOUS = "dichotomous"

    @property
    def link(self):
        return LinkFunction.IDENTITY if self is OutcomeFamily.CONTINUOUS else LinkFunction.LOGIT

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidParameterError(f"unknown outcome family {value!r}") from None


@dataclass
class MediationInput:
    """Exposure, outcome, mediator components and optional covariates."""

    exposure: np.ndarray
    outcome: np.ndarray
    mediators: np.ndarray
    family: OutcomeFamily = OutcomeFamily.CONTINUOUS
    covariates: np.ndarray | None = None

    def __post_init__(self):
        self.family = OutcomeFamily.parse(self.family)
        self.exposure = np.asarray(self.exposure, dtype=float).ravel()
        self.outcome = np.asarray(self.outcome, dtype=float).ravel()
        U = np.asarray(self.mediators, dtype=float)
        self.mediators = U[:, None] if U.ndim == 1 else U
        n = self.exposure.shape[0]
        if self.covariates is None:
            self.covariates = np.empty((n, 0))
        else:
            X = np.asarray(self.covariates, dtype=float)
            self.covariates = X[:, None] if X.ndim == 1 else X
        if not (self.outcome.shape[0] == self.mediators.shape[0] == self.covariates.shape[0] == n):
            raise ShapeError("exposure, outcome, mediators and covariates must share n")
        if not np.all((self.exposure == 0) | (self.exposure == 1)):
            raise DataError("exposure must be coded 0/1")
        if self.family is OutcomeFamily.DICHOTOMOUS and not np.all((self.outcome == 0) | (self.outcome == 1)):
            raise DataError("dichotomous outcome must be coded 0/1")
        for name in ("outcome", "mediators", "covariates"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DataError(f"{name} contain non-finite values")

    @property
    def n(self):
        return self.exposure.shape[0]

    def outcome_design(self):
        return design_matrix(self.exposure, self.covariates)

    def subset(self, rows):
        return MediationInput(
            self.exposure[rows], self.outcome[rows], self.mediators[rows], self.family, self.covariates[rows]
        )


@dataclass
class MediationResult:
    beta1: float
    gamma1: float
    t_obs: float
    p_value: float
    B: int
    null_stats: np.ndarray = field(repr=False)
    n_failed_permutations: int
    seed: int
    smoothed: bool = False

    def as_record(self):
        """Flat key/value view used by the result file."""
        return {
            "beta1": self.beta1,
            "gamma1": self.gamma1,
            "t_obs": self.t_obs,
            "p_value": self.p_value,
            "B": self.B,
            "n_failed_permutations": self.n_failed_permutations,
            "seed": self.seed,
        }


def _fit_outcome(X, y, family, w=None):
    if family is OutcomeFamily.CONTINUOUS:
        return fit_ols(X, y, w)
    return fit_logistic(X, y, w)


def fit_total_effect(inp: MediationInput) -> GlmFit:
    """Outcome on intercept, exposure and covariates; coefficient 1 is the total effect."""
    return _fit_outcome(inp.outcome_design(), inp.outcome, inp.family)


def compute_iow_weights(inp: MediationInput, mediators=None):
    """Inverse odds of exposure for exposed subjects, 1 for the unexposed.

    ``mediators`` replaces ``inp.mediators`` (used by the permutation loop).
    """
    U = inp.mediators if mediators is None else mediators
    E = inp.exposure
    X = design_matrix(U, inp.covariates)
    try:
        fit = fit_logistic(X, E)
    except NumericalError as exc:
        raise WeightModelFailure(f"exposure model failed: {exc}") from exc
    w = np.ones_like(E)
    exposed = E == 1
    w[exposed] = 1.0 / predict_odds(fit, X[exposed])
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise WeightModelFailure("inverse odds weights are not finite and positive")
    return w


def fit_direct_effect(inp: MediationInput, weights) -> GlmFit:
    """Weighted outcome model; mediators do not enter, only the weights."""
    return _fit_outcome(inp.outcome_design(), inp.outcome, inp.family, weights)


def indirect_effect(total: GlmFit, direct: GlmFit) -> float:
    if total.link is not direct.link:
        raise WrongLinkError("total and direct fits use different links")
    return float(total.coefficients[1] - direct.coefficients[1])


def _direct_coef(inp, mediators):
    return float(fit_direct_effect(inp, compute_iow_weights(inp, mediators)).coefficients[1])


def permutation_p_value(null_stats, t_obs, smoothed=False):
    """Share of finite null statistics strictly exceeding ``|t_obs|`` in magnitude.

    NaN entries mark failed permutations and are dropped from both counts.
    ``smoothed`` switches to ``(1 + count) / (1 + B)``.
    """
    null_stats = np.asarray(null_stats, dtype=float)
    ok = null_stats[np.isfinite(null_stats)]
    if ok.size == 0:
        raise MediationTestFailure("every permutation failed")
    count = int(np.sum(np.abs(ok) > abs(t_obs)))
    if smoothed:
        return (1 + count) / (1 + ok.size)
    return count / ok.size


def _null_stats_chunk(inp, beta1, seed, indices):
    out = np.full(len(indices), np.nan)
    for pos, j in enumerate(indices):
        rng = np.random.default_rng(derive_seed(seed, j))
        perm = rng.permutation(inp.n)
        try:
            out[pos] = beta1 - _direct_coef(inp, inp.mediators[perm])
        except NumericalError:
            pass
    return out


def permutation_test(inp: MediationInput, B=1000, seed=0, smoothed=False, n_jobs=1) -> MediationResult:
    """Permutation test of the indirect effect.

    Each replicate ``j`` permutes the rows of the mediator matrix (exposure,
    outcome and covariates stay fixed) with a generator seeded from
    ``(seed, j)``, refits the weight and direct-effect models and records
    ``beta1 - gamma1``. Replicates whose models fail are stored as NaN,
    counted in ``n_failed_permutations`` and excluded from the p-value.
    Results do not depend on ``n_jobs``.
    """
    if int(B) != B or B < 1:
        raise InvalidParameterError(f"B must be a positive integer, got {B}")
    B = int(B)
    try:
        total = fit_total_effect(inp)
        direct = fit_direct_effect(inp, compute_iow_weights(inp))
    except NumericalError as exc:
        raise MediationTestFailure(f"models failed on the observed data: {exc}") from exc
    beta1 = float(total.coefficients[1])
    gamma1 = float(direct.coefficients[1])
    t_obs = beta1 - gamma1

    indices = np.arange(B)
    if n_jobs == 1:
        null_stats = _null_stats_chunk(inp, beta1, seed, indices)
    else:
        chunks = np.array_split(indices, n_jobs)
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            parts = pool.map(_null_stats_chunk, *zip(*[(inp, beta1, seed, c) for c in chunks]))
            null_stats = np.concatenate(list(parts))
    n_failed = int(np.sum(~np.isfinite(null_stats)))
    if n_failed:
        logger.debug("%d of %d permutations failed", n_failed, B)
    p = permutation_p_value(null_stats, t_obs, smoothed)
    return MediationResult(beta1, gamma1, t_obs, p, B, null_stats, n_failed, int(seed), smoothed)


@dataclass
class SobelResult:
    statistic: float
    p_value: float
    a: float  # exposure -> mediator
    b: float  # mediator -> outcome given exposure


def sobel_test(exposure, mediator, outcome):
    """Sobel test of a single continuous mediator with a continuous outcome."""
    E = np.asarray(exposure, dtype=float)
    M = np.asarray(mediator, dtype=float)
    Y = np.asarray(outcome, dtype=float)
    fm = fit_ols(design_matrix(E), M)
    fy = fit_ols(design_matrix(E, M), Y)
    a, se_a = fm.coefficients[1], fm.std_errors[1]
    b, se_b = fy.coefficients[2], fy.std_errors[2]
    se = np.sqrt(a**2 * se_b**2 + b**2 * se_a**2)
    z = float(a * b / se)
    return SobelResult(z, float(2 * stats.norm.sf(abs(z))), float(a), float(b))


@dataclass
class BootstrapResult:
    estimates: dict
    intervals: dict
    level: float
    n_boot: int
    samples: np.ndarray = field(repr=False)  # (n_boot, 3): beta1, gamma1, t


def _effects(inp):
    beta1 = fit_total_effect(inp).coefficients[1]
    gamma1 = fit_direct_effect(inp, compute_iow_weights(inp)).coefficients[1]
    return beta1, gamma1, beta1 - gamma1


def _usable(sample: MediationInput):
    E = sample.exposure
    if E.min() == E.max():
        return False
    if sample.family is OutcomeFamily.DICHOTOMOUS and sample.outcome.min() == sample.outcome.max():
        return False
    return True


def bootstrap_ci(inp: MediationInput, n_boot=1000, level=0.95, seed=0, max_retries=20):
    """Percentile bootstrap intervals for the total, direct and indirect effects.

    Resamples with a single exposure class (or a failing model) are redrawn
    up to ``max_retries`` times before giving up.
    """
    if n_boot < 100:
        raise InvalidParameterError("n_boot must be at least 100")
    if not 0 < level < 1:
        raise InvalidParameterError("level must lie in (0, 1)")
    try:
        point = _effects(inp)
    except NumericalError as exc:
        raise MediationTestFailure(f"models failed on the observed data: {exc}") from exc

    samples = np.empty((n_boot, 3))
    for b in range(n_boot):
        for attempt in range(max_retries + 1):
            rng = np.random.default_rng(derive_seed(seed, b, attempt))
            sample = inp.subset(rng.integers(0, inp.n, inp.n))
            if not _usable(sample):
                continue
            try:
                samples[b] = _effects(sample)
                break
            except NumericalError:
                continue
        else:
            raise BootstrapFailure(f"resample {b} stayed degenerate after {max_retries} retries")

    tail = (1 - level) / 2
    names = ("beta1", "gamma1", "t_obs")
    lo = np.quantile(samples, tail, axis=0)
    hi = np.quantile(samples, 1 - tail, axis=0)
    return BootstrapResult(
        estimates=dict(zip(names, map(float, point))),
        intervals={k: (float(l), float(h)) for k, l, h in zip(names, lo, hi)},
        level=level,
        n_boot=n_boot,
        samples=samples,
    )

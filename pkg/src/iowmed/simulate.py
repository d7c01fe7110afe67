"""Synthetic exposure / microbiome / outcome data.

Taxa follow a zero-inflated log-normal model. Each taxon draws its own
zero probability ~ U(0.3, 0.7), log mean ~ N(2, 1) and log sd ~ U(0.5, 1.5).
Half of the taxa (by default) respond to exposure with a shift of the log
mean; a random subset of those responders are the true mediators whose
standardised relative abundances drive the outcome.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .composition import CountMatrix
from .exceptions import DegenerateOutcomeError, InvalidParameterError
from .mediation import OutcomeFamily
from .seeding import derive_seed

MAX_RETRIES = 100

# stream keys for derive_seed(scenario.seed, key)
_EXPOSURE, _TAXA, _COUNTS, _OUTCOME = 1, 2, 3, 4


@dataclass(frozen=True)
class TaxonParams:
    zero_prob: float
    log_mean: float
    log_sd: float


@dataclass(frozen=True)
class SimScenario:
    n: int = 100
    p: int = 100
    t: int = 5
    mediator_outcome_effect: float = 1.0
    family: OutcomeFamily = OutcomeFamily.CONTINUOUS
    frac_assoc: float = 0.5
    exposure_mediator_effect: float = 3.0
    exposure_outcome_effect: float = 5.0
    null_scenario: bool = False
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", OutcomeFamily.parse(self.family))
        if self.n < 10:
            raise InvalidParameterError(f"n must be >= 10, got {self.n}")
        if self.p < 2:
            raise InvalidParameterError(f"p must be >= 2, got {self.p}")
        if not 0 < self.frac_assoc <= 1:
            raise InvalidParameterError("frac_assoc must lie in (0, 1]")
        if not 0 <= self.t <= self.n_associated:
            raise InvalidParameterError(f"t = {self.t} exceeds the {self.n_associated} associated taxa")
        if self.t == 0 and not self.null_scenario:
            raise InvalidParameterError("t must be positive outside the null scenario")
        effects = (self.mediator_outcome_effect, self.exposure_mediator_effect, self.exposure_outcome_effect)
        if not all(math.isfinite(e) for e in effects):
            raise InvalidParameterError("effects must be finite")

    @property
    def n_associated(self):
        return math.ceil(self.frac_assoc * self.p)


@dataclass
class SyntheticDataset:
    exposure: np.ndarray
    counts: CountMatrix
    outcome: np.ndarray
    true_mediator_ids: np.ndarray
    associated_ids: np.ndarray
    scenario: SimScenario = field(repr=False)


def simulate_exposure(n, seed):
    """Bernoulli(0.5) exposure, redrawn until both classes occur."""
    if n < 10:
        raise InvalidParameterError(f"n must be >= 10, got {n}")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_RETRIES):
        E = (rng.random(n) < 0.5).astype(float)
        if 0 < E.sum() < n:
            return E
    raise InvalidParameterError("could not draw a non-degenerate exposure")  # pragma: no cover


def draw_taxon_params(p, rng):
    return [
        TaxonParams(float(z), float(m), float(s))
        for z, m, s in zip(rng.uniform(0.3, 0.7, p), rng.normal(2.0, 1.0, p), rng.uniform(0.5, 1.5, p))
    ]


def simulate_microbiome(E, scenario: SimScenario):
    """Zero-inflated log-normal counts.

    Returns the count matrix and the sorted indices of exposure-associated
    taxa. Under ``null_scenario`` the associated taxa are still designated
    but their exposure shift is zero.
    """
    E = np.asarray(E, dtype=float)
    n, p = E.shape[0], scenario.p
    rng = np.random.default_rng(derive_seed(scenario.seed, _TAXA))
    params = draw_taxon_params(p, rng)
    associated = np.sort(rng.choice(p, size=scenario.n_associated, replace=False))

    zero_prob = np.array([tp.zero_prob for tp in params])
    log_mean = np.array([tp.log_mean for tp in params])
    log_sd = np.array([tp.log_sd for tp in params])
    effect = 0.0 if scenario.null_scenario else scenario.exposure_mediator_effect
    shift = np.zeros(p)
    shift[associated] = effect

    rng = np.random.default_rng(derive_seed(scenario.seed, _COUNTS))
    present = rng.random((n, p)) >= zero_prob
    log_abund = rng.normal(log_mean + np.outer(E, shift), log_sd)
    counts = np.where(present, np.round(np.exp(log_abund)), 0.0)
    return CountMatrix(counts), associated


def standardized_abundance(counts):
    """Per-taxon z-scores (sample sd) of row-closed relative abundances.

    All-zero rows stay zero; constant taxa map to zero.
    """
    x = np.asarray(counts, dtype=float)
    totals = x.sum(axis=1, keepdims=True)
    rel = np.divide(x, totals, out=np.zeros_like(x), where=totals > 0)
    sd = rel.std(axis=0, ddof=1)
    z = np.zeros_like(rel)
    ok = sd > 0
    z[:, ok] = (rel[:, ok] - rel[:, ok].mean(axis=0)) / sd[ok]
    return z


def simulate_outcome(E, counts, true_ids, scenario: SimScenario):
    """Outcome from exposure plus the summed z-scores of the true mediators.

    The linear predictor carries N(0, 1) noise. Continuous outcomes equal
    it; dichotomous outcomes are Bernoulli draws on the median-centred
    predictor, redrawn if only one class appears.
    """
    E = np.asarray(E, dtype=float)
    values = counts.values if isinstance(counts, CountMatrix) else np.asarray(counts, dtype=float)
    true_ids = np.asarray(true_ids, dtype=int)
    if true_ids.size == 0 and not scenario.null_scenario:
        raise InvalidParameterError("true mediator set is empty")
    signal = scenario.exposure_outcome_effect * E
    if true_ids.size:
        signal = signal + scenario.mediator_outcome_effect * standardized_abundance(values)[:, true_ids].sum(axis=1)

    rng = np.random.default_rng(derive_seed(scenario.seed, _OUTCOME))
    for _ in range(MAX_RETRIES):
        eta = signal + rng.normal(0.0, 1.0, E.shape[0])
        if scenario.family is OutcomeFamily.CONTINUOUS:
            return eta
        Y = (rng.random(E.shape[0]) < expit(eta - np.median(eta))).astype(float)
        if 0 < Y.sum() < Y.shape[0]:
            return Y
    raise DegenerateOutcomeError("dichotomous outcome stayed single-class")


def generate(scenario: SimScenario) -> SyntheticDataset:
    E = simulate_exposure(scenario.n, derive_seed(scenario.seed, _EXPOSURE))
    counts, associated = simulate_microbiome(E, scenario)
    rng = np.random.default_rng(derive_seed(scenario.seed, _TAXA, 1))
    true_ids = np.sort(rng.choice(associated, size=scenario.t, replace=False))
    Y = simulate_outcome(E, counts, true_ids, scenario)
    return SyntheticDataset(E, counts, Y, true_ids, associated, scenario)


def with_seed(scenario: SimScenario, seed: int) -> SimScenario:
    return replace(scenario, seed=int(seed))

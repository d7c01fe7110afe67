"""End-to-end analysis: counts -> ilr -> reduction -> permutation test."""
from __future__ import annotations

from .composition import counts_to_ilr
from .mediation import MediationInput, permutation_test
from .reduction import ReductionStrategy, reduce
from .seeding import derive_seed

# stream keys under the analysis seed
_REDUCE_STREAM, _PERMUTE_STREAM = 10, 11


def analyze(
    counts,
    exposure,
    outcome,
    family,
    covariates=None,
    strategy=ReductionStrategy.UMAP,
    n_components=2,
    pseudocount=0.5,
    B=1000,
    seed=0,
    n_jobs=1,
):
    """Run the full mediation test on a count table.

    Returns ``(result, embedding)`` where ``embedding`` holds the mediator
    components that entered the exposure model.
    """
    ilr = counts_to_ilr(counts, pseudocount)
    embedding = reduce(ilr, strategy, n_components, seed=derive_seed(seed, _REDUCE_STREAM))
    inp = MediationInput(exposure, outcome, embedding.values, family, covariates)
    result = permutation_test(inp, B=B, seed=derive_seed(seed, _PERMUTE_STREAM), n_jobs=n_jobs)
    result.seed = int(seed)
    return result, embedding

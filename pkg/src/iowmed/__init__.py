"""Mediation testing for compositional microbiome data via inverse odds weighting."""
from .composition import (
    CountMatrix,
    aitchison_distance,
    clr_transform,
    close,
    counts_to_ilr,
    default_partition,
    geometric_mean,
    ilr_balance,
    ilr_transform,
    impute_pseudocount,
)
from .glm import GlmFit, LinkFunction, fit_logistic, fit_ols, predict_linear, predict_odds
from .mediation import (
    MediationInput,
    MediationResult,
    OutcomeFamily,
    bootstrap_ci,
    compute_iow_weights,
    fit_direct_effect,
    fit_total_effect,
    indirect_effect,
    permutation_test,
    sobel_test,
)
from .pca import PcaModel, pca_fit, pca_transform
from .pipeline import analyze
from .reduction import EmbeddingMatrix, ReductionStrategy, reduce
from .simulate import SimScenario, SyntheticDataset, generate
from .umap import UmapConfig, fuzzy_knn_graph, umap_embed

__version__ = "0.1.0"

"""Causal analysis and early detection of the textual drivers of positive
community feedback: candidate pools, psycholinguistic featurization, risk
stratification with balance gating, fixed-effects logistic estimation with
cluster-robust inference, boosted-tree detection, and community
distinctiveness.
"""

__version__ = "0.1.0"

from .corpus import (
    BaselineCovariates,
    CandidatePool,
    Windows,
    Z_COLUMNS,
    build_candidate_pool,
    compute_baseline_covariates,
    label_outcomes,
)
from .distinct import compute_centroids, welch_t
from .evaluate import auc, prosociality_baseline, run_global_local
from .glm import cluster_robust_cov, fit_logit
from .inference import bh_fdr, effect_tables, newcomer_composition
from .pipeline import PipelineConfig, run_pipeline, run_stages
from .stratify import AdaBoostRisk, assign_deciles, gate_strata, smd
from .synth import GeneratorConfig, evaluate_recovery, generate_corpus

__all__ = [
    "__version__",
    "BaselineCovariates",
    "CandidatePool",
    "Windows",
    "Z_COLUMNS",
    "build_candidate_pool",
    "compute_baseline_covariates",
    "label_outcomes",
    "compute_centroids",
    "welch_t",
    "auc",
    "prosociality_baseline",
    "run_global_local",
    "cluster_robust_cov",
    "fit_logit",
    "bh_fdr",
    "effect_tables",
    "newcomer_composition",
    "PipelineConfig",
    "run_pipeline",
    "run_stages",
    "AdaBoostRisk",
    "assign_deciles",
    "gate_strata",
    "smd",
    "GeneratorConfig",
    "evaluate_recovery",
    "generate_corpus",
]

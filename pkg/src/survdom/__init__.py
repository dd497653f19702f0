"""Dominance testing for right-censored survival functions."""

__version__ = "0.1.0"

from .classical import Variant, WeightedLogRankTest, WLRResult, weighted_logrank
from .covariance import CovarianceModel, Grid, a_integral, build_grid, compute_tau, pooled_cov
from .datasets import ingest_csv, load_fixture
from .density import KMKernelDensity, default_bandwidth, km_kernel_density
from .dominance import (
    DominanceConfig,
    DominanceResult,
    SurvivalDominanceTest,
    delta_statistic,
    dominance_test,
)
from .estimators import (
    KaplanMeierEstimator,
    Observation,
    Status,
    StepCurve,
    SurvivalSample,
    censoring_km,
    empirical_observed_survival,
    km_fit,
    risk_table,
)
from .mvn import MvnResult, mc_sup_prob, mvn_upper_tail_sup
from .simulation import GAMMA_CASES, Scenario, rejection_table, run_replication

__all__ = [
    "__version__",
    "Variant",
    "WeightedLogRankTest",
    "WLRResult",
    "weighted_logrank",
    "CovarianceModel",
    "Grid",
    "a_integral",
    "build_grid",
    "compute_tau",
    "pooled_cov",
    "ingest_csv",
    "load_fixture",
    "KMKernelDensity",
    "default_bandwidth",
    "km_kernel_density",
    "DominanceConfig",
    "DominanceResult",
    "SurvivalDominanceTest",
    "delta_statistic",
    "dominance_test",
    "KaplanMeierEstimator",
    "Observation",
    "Status",
    "StepCurve",
    "SurvivalSample",
    "censoring_km",
    "empirical_observed_survival",
    "km_fit",
    "risk_table",
    "MvnResult",
    "mc_sup_prob",
    "mvn_upper_tail_sup",
    "GAMMA_CASES",
    "Scenario",
    "rejection_table",
    "run_replication",
]

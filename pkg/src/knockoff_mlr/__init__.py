"""Controlled feature selection with knockoffs and masked likelihood ratios.

The pipeline: build knockoff copies of the design, mask which column of each
pair is real, score every feature with a statistic whose sign is hidden from
the fitting procedure (the centerpiece is the masked likelihood ratio,
estimated by Gibbs sampling), and run the sequential filter to select a set
with finite-sample false discovery rate control.
"""

from .diagnostics import DecayReport, decay_check, sign_cov, w_display_transform
from .errors import (
    ConvergenceError,
    DataError,
    FeasibilityError,
    KnockoffMlrError,
)
from .filters import RejectionResult, fdp_power, psi_tau, sorted_sign_indicators, threshold
from .gibbs_mlr import (
    GibbsConfig,
    finalize_w,
    masked_loglik_fixed_x,
    mlr_fixed_x,
    mlr_group,
    mlr_model_x,
    mlr_probit,
    oracle_mlr,
)
from .knockoff_gen import (
    SMatrixSpec,
    build_knockoffs,
    fixed_x_knockoffs,
    gaussian_mx_knockoffs,
    group_s_block,
    s_equicorrelated,
    s_mvr,
)
from .lasso_stats import LassoFit, lasso_fit, lasso_path, lcd_statistic, lsm_statistic
from .model_core import (
    BasisSpec,
    BetaPrior,
    Dataset,
    FeatureStatVector,
    FixedValue,
    GibbsTrace,
    InvGammaPrior,
    KnockoffModel,
    MaskedDataset,
    PointMass,
    PriorConfig,
    SlabComponent,
    mask,
    sign_prob_from_w,
    standardize_columns,
    swap_columns,
)
from .sim_harness import (
    DesignSpec,
    ExperimentConfig,
    ExperimentResult,
    RepRecord,
    SignalSpec,
    brute_force_posterior,
    orient_probability,
    run_experiment,
    run_rep,
    sample_instance,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "BasisSpec",
    "BetaPrior",
    "ConvergenceError",
    "DataError",
    "Dataset",
    "DecayReport",
    "DesignSpec",
    "ExperimentConfig",
    "ExperimentResult",
    "FeasibilityError",
    "FeatureStatVector",
    "FixedValue",
    "GibbsConfig",
    "GibbsTrace",
    "InvGammaPrior",
    "KnockoffMlrError",
    "KnockoffModel",
    "LassoFit",
    "MaskedDataset",
    "PointMass",
    "PriorConfig",
    "RejectionResult",
    "RepRecord",
    "SMatrixSpec",
    "SignalSpec",
    "SlabComponent",
    "brute_force_posterior",
    "build_knockoffs",
    "decay_check",
    "fdp_power",
    "finalize_w",
    "fixed_x_knockoffs",
    "gaussian_mx_knockoffs",
    "group_s_block",
    "lasso_fit",
    "lasso_path",
    "lcd_statistic",
    "lsm_statistic",
    "mask",
    "masked_loglik_fixed_x",
    "mlr_fixed_x",
    "mlr_group",
    "mlr_model_x",
    "mlr_probit",
    "oracle_mlr",
    "orient_probability",
    "psi_tau",
    "run_experiment",
    "run_rep",
    "s_equicorrelated",
    "s_mvr",
    "sample_instance",
    "sign_cov",
    "sign_prob_from_w",
    "sorted_sign_indicators",
    "standardize_columns",
    "summarize",
    "swap_columns",
    "threshold",
    "w_display_transform",
]

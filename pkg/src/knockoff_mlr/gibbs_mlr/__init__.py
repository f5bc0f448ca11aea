"""Masked likelihood ratio statistics computed by Gibbs sampling."""

from .bases import CandidateBases, build_candidate_bases
from .common import GibbsConfig, GibbsState, finalize_w, split_rhat
from .fixed_x import (
    init_fixed_x_state,
    masked_loglik_fixed_x,
    mlr_fixed_x,
    update_sigma2_fixed_x,
    update_sign_beta_fixed_x,
)
from .model_x import (
    init_model_x_state,
    mlr_group,
    mlr_model_x,
    mlr_probit,
    resample_x_j,
    update_gamma_beta,
)
from .oracle import oracle_mlr

__all__ = [
    "CandidateBases",
    "GibbsConfig",
    "GibbsState",
    "build_candidate_bases",
    "finalize_w",
    "init_fixed_x_state",
    "init_model_x_state",
    "masked_loglik_fixed_x",
    "mlr_fixed_x",
    "mlr_group",
    "mlr_model_x",
    "mlr_probit",
    "oracle_mlr",
    "resample_x_j",
    "split_rhat",
    "update_gamma_beta",
    "update_sigma2_fixed_x",
]

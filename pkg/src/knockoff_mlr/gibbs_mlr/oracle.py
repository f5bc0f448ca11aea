"""Oracle masked likelihood ratio: coefficients pinned at their true values.

Used by the simulation harness as a power ceiling.  The fixed-X version is
closed form; the model-X version still needs a short assignment-only Gibbs
run because the units are coupled through the likelihood.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConvergenceError, DataError
from ..model_core import FeatureStatVector, MaskedDataset, PriorConfig, finalize_statistic
from . import _kernels
from .common import GibbsConfig, chain_seeds, finalize_w, pool_chains
from ..model_core import GibbsTrace

__all__ = ["oracle_mlr"]


def _oracle_fixed_x(masked: MaskedDataset, beta: np.ndarray, sigma2: float) -> FeatureStatVector:
    # sign posterior is coordinatewise: log odds = s_j beta_j |beta_tilde_j| / sigma2
    w_pub = masked.s * beta * masked.abs_beta_tilde / sigma2
    frame = masked.orient_stats(np.ones(w_pub.shape[0]))
    return finalize_statistic(
        frame * w_pub, "oracle", masked.seed, with_sign_prob=True, orientation=frame
    )


def _unit_fits(masked: MaskedDataset, beta: np.ndarray):
    n = masked.pair_a.shape[0]
    n_units = masked.n_units
    fa = np.zeros((n_units, n))
    fb = np.zeros((n_units, n))
    for u, g in enumerate(masked.groups):
        cols = list(g)
        fa[u] = masked.pair_a[:, cols] @ beta[cols]
        fb[u] = masked.pair_b[:, cols] @ beta[cols]
    qa = np.sum(fa * fa, axis=1)
    qb = np.sum(fb * fb, axis=1)
    return fa, fb, qa, qb


def oracle_mlr(
    masked: MaskedDataset,
    prior: PriorConfig,
    config: GibbsConfig = GibbsConfig(),
) -> FeatureStatVector:
    """MLR statistic under a point-mass prior at the true coefficients.

    ``prior.point_mass`` must be set.  Fixed-X data yields the closed form
    directly.  Model-X data runs the assignment-only sampler, Gaussian
    likelihood for continuous responses and logistic for binary ones (the
    harness generates binary responses from a logistic model).
    """
    if prior.point_mass is None:
        raise DataError("oracle_mlr needs prior.point_mass")
    beta = prior.point_mass.beta
    sigma2 = prior.point_mass.sigma2
    if beta.shape[0] != masked.p:
        raise DataError("point-mass beta length mismatch")

    if masked.kind == "fixed_x":
        return _oracle_fixed_x(masked, beta, sigma2)

    fa, fb, qa, qb = _unit_fits(masked, beta)
    per_chain = []
    for seed in chain_seeds(config):
        if masked.response_kind == "binary":
            eta, bits, status = _kernels.oracle_assignment_chain_logistic(
                fa, fb, np.ascontiguousarray(masked.y, dtype=np.float64),
                config.burn_in, config.n_sample, seed,
            )
        else:
            eta, bits, status = _kernels.oracle_assignment_chain_gaussian(
                fa, fb, qa, qb, np.ascontiguousarray(masked.y, dtype=np.float64),
                sigma2, config.burn_in, config.n_sample, seed,
            )
        if status != 0:
            raise ConvergenceError(f"oracle chain (seed {seed}) hit non-finite state")
        per_chain.append({"eta": eta, "bits": bits})

    pooled = pool_chains(per_chain)
    n_kept = pooled["eta"].shape[0]
    pub_indicator = (pooled["bits"] == 0).astype(np.uint8)
    trace = GibbsTrace(
        eta=masked.orient_stats(pooled["eta"]),
        sign_indicators=masked.orient_bits(pub_indicator),
        sigma2=np.full(n_kept, sigma2),
        tau2=np.zeros(n_kept),
        p0=np.zeros(n_kept),
        burn_in=config.burn_in,
        chain_ids=pooled["chain_ids"],
    )
    frame = masked.orient_stats(np.ones(masked.n_units))
    stat = finalize_w(trace, method="oracle", seed=masked.seed, orientation=frame)
    return stat

"""Fixed-X masked likelihood ratio sampler, masked likelihood, step ops."""

from __future__ import annotations

import numpy as np

from ..errors import ConvergenceError, DataError
from ..knockoff_gen import _chol_psd
from ..model_core import (
    FeatureStatVector,
    FixedValue,
    GibbsTrace,
    MaskedDataset,
    PriorConfig,
)
from . import _kernels
from .common import GibbsConfig, GibbsState, chain_seeds, check_mixing, finalize_w, pool_chains

__all__ = [
    "mlr_fixed_x",
    "masked_loglik_fixed_x",
    "init_fixed_x_state",
    "update_sign_beta_fixed_x",
    "update_sigma2_fixed_x",
]


def _check_fixed_x(masked: MaskedDataset, prior: PriorConfig) -> None:
    if masked.kind != "fixed_x":
        raise DataError("this sampler needs fixed-X masked data")
    if prior.point_mass is not None:
        raise DataError("point-mass priors belong to oracle_mlr")
    if prior.basis.kind != "identity":
        # the sufficient statistics are linear in beta; a nonlinear basis has
        # no representation on this side
        raise DataError("fixed-X sampler supports the identity basis only")


def _mixture_arrays(prior: PriorConfig):
    m = prior.n_slabs
    a_tau = np.ones(m)
    b_tau = np.ones(m)
    tau_fixed = np.full(m, -1.0)
    for i, slab in enumerate(prior.mixture):
        if isinstance(slab.variance, FixedValue):
            if slab.variance.value <= 0:
                raise DataError("pinned slab variance must be positive")
            tau_fixed[i] = slab.variance.value
        else:
            a_tau[i] = slab.variance.shape
            b_tau[i] = slab.variance.rate
    fw = prior.fixed_weights()
    if fw is not None:
        return a_tau, b_tau, tau_fixed, np.ones(m + 1), fw, 1
    conc = prior.weight_concentration()
    return a_tau, b_tau, tau_fixed, conc, np.full(m + 1, 1.0 / (m + 1)), 0


def _sigma_scalars(prior: PriorConfig):
    piece = prior.sigma2_prior
    if isinstance(piece, FixedValue):
        if piece.value <= 0:
            raise DataError("pinned sigma2 must be positive")
        return float(piece.value), 1.0, 1.0
    return -1.0, float(piece.shape), float(piece.rate)


def mlr_fixed_x(
    masked: MaskedDataset,
    prior: PriorConfig = PriorConfig(),
    config: GibbsConfig = GibbsConfig(),
) -> tuple[FeatureStatVector, GibbsTrace]:
    """Masked likelihood ratio statistic from fixed-X sufficient statistics.

    The sampler alternates the hidden contrast signs, a spike-plus-mixture
    coefficient refresh, and the conjugate hyperparameter updates, recording
    each coordinate's sign log odds.  Returns the statistic vector and the
    oriented trace.
    """
    _check_fixed_x(masked, prior)
    sigma = masked.sigma
    s = masked.s
    a_mat = sigma - np.diag(s) / 2.0
    l_a = _chol_psd(a_mat, "Sigma - S/2").T  # lower factor
    sig_diag = np.ascontiguousarray(np.diag(sigma))

    a_tau, b_tau, tau_fixed, conc, w_init, use_fixed_w = _mixture_arrays(prior)
    sig2_fixed, a_sig, b_sig = _sigma_scalars(prior)

    per_chain = []
    for seed in chain_seeds(config):
        eta, bits, sig2s, tau2s, p0s, status = _kernels.fixed_x_chain(
            masked.xi,
            masked.abs_beta_tilde,
            sig_diag,
            np.ascontiguousarray(a_mat),
            np.ascontiguousarray(l_a),
            s,
            a_tau,
            b_tau,
            tau_fixed,
            conc,
            w_init,
            use_fixed_w,
            sig2_fixed,
            a_sig,
            b_sig,
            1 if config.marginalize_beta_on_x_update else 0,
            config.burn_in,
            config.n_sample,
            seed,
        )
        if status != 0:
            raise ConvergenceError(f"fixed-X chain (seed {seed}) hit non-finite state")
        per_chain.append({"eta": eta, "bits": bits, "sigma2": sig2s, "tau2": tau2s, "p0": p0s})

    pooled = pool_chains(per_chain)
    check_mixing(pooled["eta"], pooled["chain_ids"])
    trace = GibbsTrace(
        eta=masked.orient_stats(pooled["eta"]),
        sign_indicators=masked.orient_bits(pooled["bits"].astype(np.uint8)),
        sigma2=pooled["sigma2"],
        tau2=pooled["tau2"],
        p0=pooled["p0"],
        burn_in=config.burn_in,
        chain_ids=pooled["chain_ids"],
    )
    frame = masked.orient_stats(np.ones(masked.xi.shape[0]))
    stat = finalize_w(trace, method="mlr", seed=masked.seed, orientation=frame)
    return stat, trace


def _logcosh(x: np.ndarray) -> np.ndarray:
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - np.log(2.0)


def masked_loglik_fixed_x(
    beta: np.ndarray, masked: MaskedDataset, sigma2: float = 1.0
) -> float:
    """Log density of the masked fixed-X view at coefficient vector beta.

    Up to beta-free constants:

        [beta' xi - beta' A beta / 2 - sum_j s_j beta_j^2 / 4] / sigma2
          + sum_j log cosh(s_j beta_j |beta_tilde_j| / (2 sigma2))

    with A = Sigma - diag(s)/2.  The hidden signs are summed out, which is
    what turns the sign-likelihood into the even log-cosh factor.
    """
    if masked.kind != "fixed_x":
        raise DataError("masked_loglik_fixed_x needs fixed-X masked data")
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != masked.xi.shape:
        raise DataError("beta length mismatch")
    if sigma2 <= 0:
        raise DataError("sigma2 must be positive")
    a_mat = masked.sigma - np.diag(masked.s) / 2.0
    quad = float(beta @ masked.xi) - 0.5 * float(beta @ a_mat @ beta)
    quad -= 0.25 * float(np.sum(masked.s * beta**2))
    even = float(np.sum(_logcosh(masked.s * beta * masked.abs_beta_tilde / (2.0 * sigma2))))
    return quad / sigma2 + even


# ---------------------------------------------------------------------------
# Reference single-step operations


def init_fixed_x_state(masked: MaskedDataset, prior: PriorConfig, seed: int = 0) -> GibbsState:
    """Fresh fixed-X sampler state with hyperparameters at means or pins."""
    _check_fixed_x(masked, prior)
    rng = np.random.default_rng(seed)
    p = masked.p
    m = prior.n_slabs

    def _init_val(piece):
        if isinstance(piece, FixedValue):
            return float(piece.value)
        return piece.rate / max(piece.shape - 1.0, 0.5)

    tau2_mix = np.array([_init_val(s.variance) for s in prior.mixture])
    fw = prior.fixed_weights()
    if fw is None:
        conc = prior.weight_concentration()
        weights = conc / conc.sum()
    else:
        weights = fw
    state = GibbsState(
        kind="fixed_x",
        rng=rng,
        sgn=np.where(rng.integers(0, 2, p) == 1, 1.0, -1.0),
        labels=np.zeros(p, dtype=np.int64),
        beta=np.zeros(p),
        sigma2=_init_val(prior.sigma2_prior),
        tau2_mix=tau2_mix,
        weights=weights,
    )
    state.v = np.zeros(p)
    return state


def _label_terms(h: float, j: int, state: GibbsState, masked: MaskedDataset) -> np.ndarray:
    sig2 = state.sigma2
    sjj = masked.sigma[j, j]
    out = np.empty(state.tau2_mix.shape[0] + 1)
    out[0] = np.log(max(state.weights[0], 1e-300))
    for i, t2 in enumerate(state.tau2_mix):
        denom = 1.0 + t2 * sjj / sig2
        out[i + 1] = (
            np.log(max(state.weights[i + 1], 1e-300))
            - 0.5 * np.log(denom)
            + t2 * h * h / (2.0 * sig2 * sig2 * denom)
        )
    return out


def update_sign_beta_fixed_x(
    state: GibbsState,
    masked: MaskedDataset,
    j: int,
    prior: PriorConfig,
    marginalize: bool = True,
) -> GibbsState:
    """One coordinate's sign, label and coefficient update; mutates state."""
    a_mat = masked.sigma - np.diag(masked.s) / 2.0
    bj = state.beta[j]
    u_j = masked.xi[j] - (state.v[j] - a_mat[j, j] * bj)
    d = 0.5 * masked.s[j] * masked.abs_beta_tilde[j]
    hp, hm = u_j + d, u_j - d

    if marginalize:
        from scipy.special import logsumexp

        eta = float(logsumexp(_label_terms(hp, j, state, masked))) - float(
            logsumexp(_label_terms(hm, j, state, masked))
        )
    else:
        eta = masked.s[j] * masked.abs_beta_tilde[j] * bj / state.sigma2

    s_new = 1.0 if state.rng.uniform() < 1.0 / (1.0 + np.exp(-eta)) else -1.0
    h = hp if s_new > 0 else hm

    lt = _label_terms(h, j, state, masked)
    probs = np.exp(lt - lt.max())
    probs /= probs.sum()
    lab = int(state.rng.choice(probs.shape[0], p=probs))
    if lab == 0:
        b_new = 0.0
    else:
        t2 = state.tau2_mix[lab - 1]
        prec = masked.sigma[j, j] / state.sigma2 + 1.0 / t2
        b_new = h / (state.sigma2 * prec) + state.rng.standard_normal() / np.sqrt(prec)

    state.labels[j] = lab
    state.sgn[j] = s_new
    state.v = state.v + a_mat[:, j] * (b_new - bj)
    state.beta[j] = b_new
    return state


def update_sigma2_fixed_x(
    state: GibbsState, masked: MaskedDataset, prior: PriorConfig
) -> GibbsState:
    """Conjugate inverse-gamma noise update from the masked sufficient stats."""
    if isinstance(prior.sigma2_prior, FixedValue):
        state.sigma2 = float(prior.sigma2_prior.value)
        return state
    a_mat = masked.sigma - np.diag(masked.s) / 2.0
    p = masked.p
    w = masked.xi - a_mat @ state.beta
    quad1 = float(w @ np.linalg.solve(a_mat, w))
    dev = state.sgn * masked.abs_beta_tilde - state.beta
    quad2 = float(np.sum(masked.s * dev**2))
    shape = prior.sigma2_prior.shape + p
    rate = prior.sigma2_prior.rate + 0.5 * (quad1 + 0.5 * quad2)
    state.sigma2 = rate / state.rng.gamma(shape)
    return state

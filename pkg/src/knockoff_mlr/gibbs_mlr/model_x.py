"""Model-X masked likelihood ratio sampler and its single-step operations."""

from __future__ import annotations

import numpy as np

from ..errors import ConvergenceError, DataError
from ..model_core import (
    FeatureStatVector,
    FixedValue,
    GibbsTrace,
    MaskedDataset,
    PriorConfig,
)
from . import _kernels
from .bases import CandidateBases, build_candidate_bases
from .common import GibbsConfig, GibbsState, chain_seeds, check_mixing, finalize_w, pool_chains

__all__ = [
    "mlr_model_x",
    "mlr_probit",
    "mlr_group",
    "init_model_x_state",
    "resample_x_j",
    "update_gamma_beta",
]


def _split_hyper(prior_piece, name: str) -> tuple[float, float, float]:
    """(fixed_value_or_-1, shape, rate) triple for a kernel argument set."""
    if isinstance(prior_piece, FixedValue):
        if prior_piece.value <= 0:
            raise DataError(f"pinned {name} must be positive")
        return float(prior_piece.value), 1.0, 1.0
    return -1.0, float(prior_piece.shape), float(prior_piece.rate)


def _sparsity_hyper(prior: PriorConfig) -> tuple[float, float, float]:
    sp = prior.sparsity_prior
    if isinstance(sp, FixedValue):
        return float(sp.value), 1.0, 1.0
    return -1.0, float(sp.a), float(sp.b)


def _check_model_x(masked: MaskedDataset, prior: PriorConfig) -> None:
    if masked.kind != "model_x":
        raise DataError("this sampler needs model-X masked data")
    if prior.point_mass is not None:
        raise DataError("point-mass priors belong to oracle_mlr")
    if prior.n_slabs != 1:
        raise DataError("the model-X sampler uses a single slab component")


def _unit_grams(bases: CandidateBases) -> tuple[np.ndarray, np.ndarray]:
    n_units = bases.n_units
    kmax = max(bases.block_size(u) for u in range(n_units))
    gram_a = np.zeros((n_units, kmax, kmax))
    gram_b = np.zeros((n_units, kmax, kmax))
    for u in range(n_units):
        o, o2 = bases.offsets[u], bases.offsets[u + 1]
        blk_a = bases.phi_a[:, o:o2]
        blk_b = bases.phi_b[:, o:o2]
        k = o2 - o
        gram_a[u, :k, :k] = blk_a.T @ blk_a
        gram_b[u, :k, :k] = blk_b.T @ blk_b
    return gram_a, gram_b


def _run_chains(
    masked: MaskedDataset,
    prior: PriorConfig,
    config: GibbsConfig,
    probit: bool,
) -> tuple[FeatureStatVector, GibbsTrace]:
    bases = build_candidate_bases(masked, prior.basis)
    gram_a, gram_b = _unit_grams(bases)
    phi_at = np.ascontiguousarray(bases.phi_a.T)
    phi_bt = np.ascontiguousarray(bases.phi_b.T)

    sig2_fixed, a_sig, b_sig = _split_hyper(prior.sigma2_prior, "sigma2")
    if probit:
        # the latent-utility scale is not identified; pin it
        sig2_fixed, a_sig, b_sig = 1.0, 1.0, 1.0
    tau2_fixed, a_tau, b_tau = _split_hyper(prior.mixture[0].variance, "tau2")
    p0_fixed, a0, b0 = _sparsity_hyper(prior)

    y = np.ascontiguousarray(masked.y, dtype=np.float64)
    per_chain = []
    for seed in chain_seeds(config):
        eta, bits, sig2s, tau2s, p0s, status = _kernels.model_x_chain(
            y,
            1 if probit else 0,
            phi_at,
            phi_bt,
            bases.offsets,
            gram_a,
            gram_b,
            1 if config.marginalize_beta_on_x_update else 0,
            sig2_fixed,
            a_sig,
            b_sig,
            tau2_fixed,
            a_tau,
            b_tau,
            p0_fixed,
            a0,
            b0,
            config.burn_in,
            config.n_sample,
            seed,
        )
        if status != 0:
            raise ConvergenceError(f"model-X chain (seed {seed}) hit non-finite state")
        per_chain.append({"eta": eta, "bits": bits, "sigma2": sig2s, "tau2": tau2s, "p0": p0s})

    pooled = pool_chains(per_chain)
    check_mixing(pooled["eta"], pooled["chain_ids"])
    # kernel bit 0 means the first public block holds the feature
    pub_indicator = (pooled["bits"] == 0).astype(np.uint8)
    trace = GibbsTrace(
        eta=masked.orient_stats(pooled["eta"]),
        sign_indicators=masked.orient_bits(pub_indicator),
        sigma2=pooled["sigma2"],
        tau2=pooled["tau2"],
        p0=pooled["p0"],
        burn_in=config.burn_in,
        chain_ids=pooled["chain_ids"],
    )
    frame = masked.orient_stats(np.ones(bases.n_units))
    stat = finalize_w(trace, method="mlr", seed=masked.seed, orientation=frame)
    return stat, trace


def mlr_model_x(
    masked: MaskedDataset,
    prior: PriorConfig = PriorConfig(),
    config: GibbsConfig = GibbsConfig(),
) -> tuple[FeatureStatVector, GibbsTrace]:
    """Masked likelihood ratio statistic for model-X masked data.

    Runs the block spike-and-slab assignment sampler (probit data
    augmentation when the response is binary) and collapses the recorded log
    likelihood ratios into W.  Returns the statistic vector together with the
    oriented trace for diagnostics.
    """
    _check_model_x(masked, prior)
    return _run_chains(masked, prior, config, probit=masked.response_kind == "binary")


def mlr_probit(
    masked: MaskedDataset,
    prior: PriorConfig = PriorConfig(),
    config: GibbsConfig = GibbsConfig(),
) -> tuple[FeatureStatVector, GibbsTrace]:
    """Binary-response variant; the latent-utility noise scale is pinned at 1."""
    _check_model_x(masked, prior)
    if masked.response_kind != "binary":
        raise DataError("mlr_probit needs a binary response")
    return _run_chains(masked, prior, config, probit=True)


def mlr_group(
    masked: MaskedDataset,
    prior: PriorConfig = PriorConfig(),
    config: GibbsConfig = GibbsConfig(),
) -> tuple[FeatureStatVector, GibbsTrace]:
    """Grouped variant: one W per swap unit of the masked partition."""
    _check_model_x(masked, prior)
    return _run_chains(masked, prior, config, probit=masked.response_kind == "binary")


# ---------------------------------------------------------------------------
# Reference single-step operations (plain numpy, used by the unit tests)


def init_model_x_state(masked: MaskedDataset, prior: PriorConfig, seed: int = 0) -> GibbsState:
    """Fresh sampler state with hyperparameters at prior means or pins."""
    _check_model_x(masked, prior)
    if masked.response_kind != "continuous":
        raise DataError("reference state covers the continuous-response sampler")
    bases = build_candidate_bases(masked, prior.basis)
    rng = np.random.default_rng(seed)
    n_units = bases.n_units

    def _init_val(piece):
        if isinstance(piece, FixedValue):
            return float(piece.value)
        return piece.rate / max(piece.shape - 1.0, 0.5)

    sp = prior.sparsity_prior
    p0 = float(sp.value) if isinstance(sp, FixedValue) else sp.a / (sp.a + sp.b)
    state = GibbsState(
        kind="model_x",
        rng=rng,
        bits=rng.integers(0, 2, n_units).astype(np.int8),
        gamma=np.zeros(n_units, dtype=np.int8),
        beta=np.zeros(int(bases.offsets[-1])),
        sigma2=_init_val(prior.sigma2_prior),
        tau2=_init_val(prior.mixture[0].variance),
        p0=p0,
        phi_a=bases.phi_a,
        phi_b=bases.phi_b,
        offsets=bases.offsets,
        y_work=np.array(masked.y, dtype=np.float64),
    )
    state.resid = _full_residual(state)
    return state


def _full_residual(state: GibbsState) -> np.ndarray:
    r = np.array(state.y_work)
    for u in range(state.offsets.shape[0] - 1):
        o, o2 = state.offsets[u], state.offsets[u + 1]
        cur = state.phi_a if state.bits[u] == 0 else state.phi_b
        r -= cur[:, o:o2] @ state.beta[o:o2]
    return r


def _slab_log_marginal(
    blk: np.ndarray, rt: np.ndarray, tau2: float, sig2: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """(log slab marginal, Q factor, phi' rt) for one candidate block."""
    w = blk.T @ rt
    q = np.eye(blk.shape[1]) + (tau2 / sig2) * (blk.T @ blk)
    lq = np.linalg.cholesky(q)
    alpha = np.linalg.solve(lq, w)
    log_slab = -np.log(np.diag(lq)).sum() + tau2 / (2.0 * sig2**2) * float(alpha @ alpha)
    return log_slab, lq, alpha


def resample_x_j(
    state: GibbsState,
    masked: MaskedDataset,
    j: int,
    prior: PriorConfig,
    marginalize: bool = True,
) -> GibbsState:
    """Redraw unit j's feature assignment from its conditional; mutates state.

    With ``marginalize`` the unit's (gamma, beta) block is integrated out of
    the two candidate likelihoods, otherwise the current coefficients are
    used directly.  The coefficient block is left untouched; call
    :func:`update_gamma_beta` afterwards to refresh it, as the sweep does.
    """
    o, o2 = int(state.offsets[j]), int(state.offsets[j + 1])
    cur = state.phi_a if state.bits[j] == 0 else state.phi_b
    rt = state.resid + cur[:, o:o2] @ state.beta[o:o2]
    blk_a = state.phi_a[:, o:o2]
    blk_b = state.phi_b[:, o:o2]

    if marginalize:
        log_slab_a, _, _ = _slab_log_marginal(blk_a, rt, state.tau2, state.sigma2)
        log_slab_b, _, _ = _slab_log_marginal(blk_b, rt, state.tau2, state.sigma2)
        lp0 = np.log(state.p0)
        l1m = np.log1p(-state.p0)
        eta = np.logaddexp(lp0, l1m + log_slab_a) - np.logaddexp(lp0, l1m + log_slab_b)
    else:
        bu = state.beta[o:o2]
        da = float(bu @ (blk_a.T @ rt))
        db = float(bu @ (blk_b.T @ rt))
        qa = float(bu @ (blk_a.T @ blk_a) @ bu)
        qb = float(bu @ (blk_b.T @ blk_b) @ bu)
        eta = (2.0 * (da - db) - (qa - qb)) / (2.0 * state.sigma2)

    take_a = state.rng.uniform() < 1.0 / (1.0 + np.exp(-eta))
    state.bits[j] = 0 if take_a else 1
    chosen = state.phi_a if take_a else state.phi_b
    state.resid = rt - chosen[:, o:o2] @ state.beta[o:o2]
    return state


def update_gamma_beta(
    state: GibbsState, masked: MaskedDataset, j: int, prior: PriorConfig
) -> GibbsState:
    """Redraw unit j's inclusion flag and coefficient block; mutates state."""
    o, o2 = int(state.offsets[j]), int(state.offsets[j + 1])
    chosen = state.phi_a if state.bits[j] == 0 else state.phi_b
    blk = chosen[:, o:o2]
    rt = state.resid + blk @ state.beta[o:o2]

    log_slab, lq, alpha = _slab_log_marginal(blk, rt, state.tau2, state.sigma2)
    lp0 = np.log(state.p0)
    l1m = np.log1p(-state.p0)
    p_spike = 1.0 / (1.0 + np.exp(-(lp0 - l1m - log_slab)))
    if state.rng.uniform() < p_spike:
        state.gamma[j] = 0
        state.beta[o:o2] = 0.0
        state.resid = rt
    else:
        state.gamma[j] = 1
        mean = np.linalg.solve(lq.T, (state.tau2 / state.sigma2) * alpha)
        noise = np.linalg.solve(lq.T, state.rng.standard_normal(o2 - o))
        draw = mean + np.sqrt(state.tau2) * noise
        state.beta[o:o2] = draw
        state.resid = rt - blk @ draw
    return state

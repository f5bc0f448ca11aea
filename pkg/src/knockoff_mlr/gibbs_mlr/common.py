"""Shared infrastructure for the masked likelihood ratio Gibbs samplers."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_expit, logsumexp

from ..errors import DataError
from ..model_core import FeatureStatVector, GibbsTrace, finalize_statistic

__all__ = ["GibbsConfig", "GibbsState", "chain_seeds", "finalize_w", "split_rhat", "pool_chains"]

_CHAIN_TAG = 0x67696273


@dataclass(frozen=True)
class GibbsConfig:
    """Run-length and reproducibility settings for one sampler invocation.

    ``n_sample`` kept iterations per chain after ``burn_in`` discarded ones;
    production runs should keep at least a few hundred.  Chains use disjoint
    seed-derived streams and are pooled in chain order.  With
    ``marginalize_beta_on_x_update`` (default) the feature-assignment update
    integrates the unit's coefficients out of the likelihood ratio, which
    lowers the Monte Carlo variance of the recorded log ratios.
    """

    n_sample: int = 2000
    burn_in: int = 500
    chains: int = 2
    seed: int = 0
    marginalize_beta_on_x_update: bool = True

    def __post_init__(self):
        if self.n_sample < 1:
            raise DataError("n_sample must be >= 1")
        if self.burn_in < 0:
            raise DataError("burn_in must be >= 0")
        if self.chains < 1:
            raise DataError("chains must be >= 1")


def chain_seeds(cfg: GibbsConfig) -> list[int]:
    """Disjoint per-chain integer seeds derived from (tag, seed, chain)."""
    out = []
    for c in range(cfg.chains):
        ss = np.random.SeedSequence([_CHAIN_TAG, int(cfg.seed) & 0x7FFFFFFF, c])
        out.append(int(ss.generate_state(1, dtype=np.uint64)[0] & 0x7FFFFFFF))
    return out


@dataclass
class GibbsState:
    """Mutable sampler state, exposed for the single-step update operations.

    Model-X fields: ``bits`` (0 means the first public block is currently
    assigned as the feature), ``gamma`` unit inclusion indicators, ``beta``
    the stacked basis coefficients, ``resid`` the residual under the current
    assignment, plus (sigma2, tau2, p0).  Fixed-X fields: ``sgn`` the current
    sign assignment of the whitened contrast, ``labels`` mixture labels,
    ``beta``, ``v = A beta``, slab variances ``tau2_mix`` and mixture
    ``weights``.
    """

    kind: str
    rng: np.random.Generator
    # model-X
    bits: np.ndarray | None = None
    gamma: np.ndarray | None = None
    beta: np.ndarray | None = None
    resid: np.ndarray | None = None
    y_work: np.ndarray | None = None
    sigma2: float = 1.0
    tau2: float = 1.0
    p0: float = 0.5
    phi_a: np.ndarray | None = None
    phi_b: np.ndarray | None = None
    offsets: np.ndarray | None = None
    # fixed-X
    sgn: np.ndarray | None = None
    labels: np.ndarray | None = None
    v: np.ndarray | None = None
    tau2_mix: np.ndarray | None = None
    weights: np.ndarray | None = None


def pool_chains(per_chain: list[dict[str, np.ndarray]]) -> dict[str, np.ndarray]:
    """Concatenate per-chain draw dictionaries in chain order with chain ids."""
    keys = per_chain[0].keys()
    pooled = {k: np.concatenate([c[k] for c in per_chain], axis=0) for k in keys}
    ids = np.concatenate(
        [np.full(c["eta"].shape[0], i, dtype=np.int64) for i, c in enumerate(per_chain)]
    )
    pooled["chain_ids"] = ids
    return pooled


def split_rhat(draws: np.ndarray, chain_ids: np.ndarray) -> float:
    """Split R-hat of a scalar series pooled over chains.

    Each chain is halved; returns the usual sqrt(var_plus / W) with 1.0 when
    the within variance vanishes and the halves agree, +inf when they do not.
    """
    chains = np.unique(chain_ids)
    halves = []
    for c in chains:
        x = draws[chain_ids == c]
        h = x.shape[0] // 2
        if h >= 2:
            halves.append(x[:h])
            halves.append(x[h : 2 * h])
    if len(halves) < 2:
        return 1.0
    hlen = min(len(h) for h in halves)
    mat = np.stack([h[:hlen] for h in halves])
    means = mat.mean(axis=1)
    within = mat.var(axis=1, ddof=1).mean()
    between = hlen * means.var(ddof=1)
    if within <= 0:
        return 1.0 if between <= 0 else np.inf
    var_plus = (hlen - 1) / hlen * within + between / hlen
    return float(np.sqrt(var_plus / within))


def check_mixing(eta: np.ndarray, chain_ids: np.ndarray, threshold: float = 1.2) -> float:
    """Warn when any unit's log-ratio series exceeds the split R-hat threshold."""
    worst = 0.0
    for u in range(eta.shape[1]):
        r = split_rhat(eta[:, u], chain_ids)
        if np.isfinite(r):
            worst = max(worst, r)
        else:
            worst = np.inf
            break
    if worst > threshold:
        warnings.warn(
            f"chains disagree: max split R-hat {worst:.3g} exceeds {threshold}",
            RuntimeWarning,
            stacklevel=3,
        )
    return worst


def finalize_w(
    trace: GibbsTrace,
    method: str = "mlr",
    seed: int = 0,
    orientation: np.ndarray | None = None,
) -> FeatureStatVector:
    """Collapse a trace into the masked likelihood ratio statistic vector.

    W_u = log sum_i sigmoid(eta_ui) - log sum_i sigmoid(-eta_ui), evaluated
    with log-sum-exp so extreme ratios stay finite.  Exact zero entries
    (e.g. identical column pairs) are epsilon-randomized, and the posterior
    sign probability sigmoid(|W|) is attached.  ``orientation`` relates the
    trace to the public masked frame so tie-breaks stay swap-equivariant.
    """
    eta = trace.eta
    log_pos = logsumexp(log_expit(eta), axis=0)
    log_neg = logsumexp(log_expit(-eta), axis=0)
    w = log_pos - log_neg
    return finalize_statistic(w, method, seed, with_sign_prob=True, orientation=orientation)

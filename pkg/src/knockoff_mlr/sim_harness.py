"""Simulation harness: designs, responses, exact small-case posteriors, driver.

The harness owns everything a study needs: covariance samplers, response
generators, an exact (enumeration-based) posterior for small instances that
the samplers are validated against, and a multiprocess experiment driver
with per-replicate deterministic seeding.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.special import expit, gammaln, logsumexp, roots_genlaguerre

from .errors import DataError
from .filters import fdp_power, threshold
from .gibbs_mlr import GibbsConfig, mlr_fixed_x, mlr_model_x, oracle_mlr
from .gibbs_mlr.bases import build_candidate_bases
from .knockoff_gen import SMatrixSpec, build_knockoffs
from .lasso_stats import lcd_statistic, lsm_statistic
from .model_core import (
    Dataset,
    FeatureStatVector,
    FixedValue,
    InvGammaPrior,
    MaskedDataset,
    PointMass,
    PriorConfig,
    mask,
)

__all__ = [
    "DesignSpec",
    "SignalSpec",
    "ExperimentConfig",
    "Instance",
    "RepRecord",
    "ExperimentResult",
    "ar1_correlation",
    "equicorrelated_correlation",
    "erdos_renyi_covariance",
    "sample_instance",
    "brute_force_posterior",
    "orient_probability",
    "run_rep",
    "run_experiment",
    "summarize",
]

_HARNESS_TAG = 0x73696D68


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class DesignSpec:
    """Row-covariance family for the simulated design.

    'ar1' uses inhomogeneous lag-one product correlations with the per-lag
    correlations drawn Beta(rho_shape_a, rho_shape_b) and capped; 'erdos_renyi'
    plants random signed off-diagonal entries, repairs positive definiteness
    by an eigenvalue shift, and rescales to a correlation matrix;
    'equicorrelated' has constant off-diagonal rho; 'identity' is independent
    coordinates.
    """

    kind: str = "ar1"
    rho_shape_a: float = 5.0
    rho_shape_b: float = 1.0
    rho_cap: float = 0.99
    edge_prob: float = 0.2
    rho: float = 0.5

    def __post_init__(self):
        if self.kind not in ("ar1", "erdos_renyi", "equicorrelated", "identity"):
            raise DataError(f"unknown design kind {self.kind!r}")
        if not 0.0 < self.rho_cap < 1.0:
            raise DataError("rho_cap must lie in (0, 1)")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise DataError("edge_prob must lie in [0, 1]")
        if not -1.0 < self.rho < 1.0:
            raise DataError("rho must lie in (-1, 1)")


@dataclass(frozen=True)
class SignalSpec:
    """Sparse signal and response family.

    Coefficients: 'uniform_sign' draws magnitudes on (amplitude/2, amplitude)
    with random signs; 'laplace' draws Laplace(scale=amplitude).  Responses:
    'linear' Gaussian noise, 'gam' cycles the active coordinates through
    centred sin / cos / square / cube transforms, 'logistic' draws Bernoulli
    with the linear index on the logit scale.
    """

    n_signal: int = 10
    amplitude: float = 0.5
    coef_dist: str = "uniform_sign"
    response: str = "linear"

    def __post_init__(self):
        if self.n_signal < 0:
            raise DataError("n_signal must be nonnegative")
        if self.amplitude <= 0:
            raise DataError("amplitude must be positive")
        if self.coef_dist not in ("uniform_sign", "laplace"):
            raise DataError(f"unknown coef_dist {self.coef_dist!r}")
        if self.response not in ("linear", "gam", "logistic"):
            raise DataError(f"unknown response {self.response!r}")


_KNOWN_STATISTICS = ("mlr", "lcd", "lsm", "oracle")


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one repeated experiment."""

    n: int
    p: int
    knockoff_kind: str = "model_x"
    design: DesignSpec = DesignSpec()
    signal: SignalSpec = SignalSpec()
    s_method: str = "mvr"
    statistics: tuple[str, ...] = ("mlr", "lcd")
    q: float = 0.2
    n_reps: int = 100
    seed: int = 0
    prior: PriorConfig = PriorConfig()
    gibbs: GibbsConfig = GibbsConfig()
    lambda_rule: str | None = None

    def __post_init__(self):
        if self.n < 2 or self.p < 1:
            raise DataError("need n >= 2 and p >= 1")
        if self.knockoff_kind not in ("model_x", "fixed_x"):
            raise DataError(f"unknown knockoff kind {self.knockoff_kind!r}")
        if self.knockoff_kind == "fixed_x":
            if self.n < 2 * self.p:
                raise DataError("fixed-X experiments need n >= 2p")
            if self.signal.response == "logistic":
                raise DataError("fixed-X knockoffs need a continuous response")
        for name in self.statistics:
            if name not in _KNOWN_STATISTICS:
                raise DataError(f"unknown statistic {name!r}")
        if not self.statistics:
            raise DataError("statistics must be non-empty")
        if "oracle" in self.statistics and self.signal.response == "gam":
            raise DataError("the oracle statistic needs a linear or logistic response")
        if not 0.0 < self.q <= 1.0:
            raise DataError("q must lie in (0, 1]")
        if self.n_reps < 1:
            raise DataError("n_reps must be >= 1")
        if self.signal.n_signal > self.p:
            raise DataError("n_signal cannot exceed p")
        if self.lambda_rule not in (None, "fixed_x", "cv"):
            raise DataError(f"unknown lambda rule {self.lambda_rule!r}")

    @property
    def knockoff_label(self) -> str:
        return f"{self.knockoff_kind}_{self.s_method}"


# ---------------------------------------------------------------------------
# Design covariance samplers


def _ar1_from_rhos(rhos: np.ndarray) -> np.ndarray:
    """Correlation matrix of an inhomogeneous lag-one chain with the given
    per-lag correlations; entry (i, j) is the product of the lags between."""
    rhos = np.asarray(rhos, dtype=np.float64)
    logr = np.concatenate([[0.0], np.cumsum(np.log(np.maximum(rhos, 1e-300)))])
    out = np.exp(-np.abs(logr[:, None] - logr[None, :]))
    # a zero lag anywhere between i and j makes the correlation exactly zero
    nz = np.concatenate([[0.0], np.cumsum(rhos == 0.0)])
    out[nz[:, None] != nz[None, :]] = 0.0
    return out


def ar1_correlation(
    p: int,
    rng: np.random.Generator,
    shape_a: float = 5.0,
    shape_b: float = 1.0,
    cap: float = 0.99,
    rhos: np.ndarray | None = None,
) -> np.ndarray:
    """Lag-one correlation matrix with Beta-distributed per-lag correlations.

    Passing `rhos` (length p-1, entries in [0, cap]) bypasses the draw; a
    constant vector rho gives the homogeneous matrix rho^|i-j|.
    """
    if p < 1:
        raise DataError("p must be >= 1")
    if p == 1:
        return np.eye(1)
    if rhos is None:
        rhos = np.minimum(rng.beta(shape_a, shape_b, p - 1), cap)
    else:
        rhos = np.asarray(rhos, dtype=np.float64)
        if rhos.shape != (p - 1,):
            raise DataError("rhos must have length p - 1")
        if (rhos < 0.0).any() or (rhos > cap).any():
            raise DataError("rhos entries must lie in [0, cap]")
    return _ar1_from_rhos(rhos)


def equicorrelated_correlation(p: int, rho: float) -> np.ndarray:
    if p < 1:
        raise DataError("p must be >= 1")
    if p > 1 and not -1.0 / (p - 1) < rho < 1.0:
        raise DataError("rho outside the positive-definite range for this p")
    return (1.0 - rho) * np.eye(p) + rho * np.ones((p, p))


def erdos_renyi_covariance(p: int, rng: np.random.Generator, edge_prob: float = 0.2) -> np.ndarray:
    m = np.zeros((p, p))
    iu = np.triu_indices(p, 1)
    present = rng.uniform(size=iu[0].size) < edge_prob
    vals = rng.uniform(0.1, 1.0, size=iu[0].size) * rng.choice([-1.0, 1.0], size=iu[0].size)
    m[iu] = np.where(present, vals, 0.0)
    m = m + m.T
    np.fill_diagonal(m, 1.0)
    lam = float(np.linalg.eigvalsh(m).min())
    if lam < 0.1:
        m += (0.1 - lam) * np.eye(p)
    d = np.sqrt(np.diag(m))
    m = m / np.outer(d, d)
    return (m + m.T) / 2.0


def _design_sigma(cfg: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    d = cfg.design
    if d.kind == "identity":
        return np.eye(cfg.p)
    if d.kind == "ar1":
        return ar1_correlation(cfg.p, rng, d.rho_shape_a, d.rho_shape_b, d.rho_cap)
    if d.kind == "equicorrelated":
        return equicorrelated_correlation(cfg.p, d.rho)
    return erdos_renyi_covariance(cfg.p, rng, d.edge_prob)


# ---------------------------------------------------------------------------
# Instance sampling


@dataclass(frozen=True)
class Instance:
    x: np.ndarray
    y: np.ndarray
    beta: np.ndarray
    sigma: np.ndarray
    signal: np.ndarray  # boolean mask of non-null coordinates


def _gam_response(x: np.ndarray, beta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # centred transforms under a standard normal marginal
    transforms = (
        np.sin,
        lambda v: np.cos(v) - np.exp(-0.5),
        lambda v: v**2 - 1.0,
        lambda v: v**3,
    )
    active = np.flatnonzero(beta)
    y = rng.standard_normal(x.shape[0])
    for rank, j in enumerate(active):
        y += beta[j] * transforms[rank % 4](x[:, j])
    return y


def sample_instance(cfg: ExperimentConfig, rep: int) -> Instance:
    """Draw one replicate's design, coefficients and response.

    The generator stream is a pure function of (cfg.seed, rep), so replicates
    rerun identically regardless of scheduling.
    """
    rng = np.random.default_rng([_HARNESS_TAG, cfg.seed & 0x7FFFFFFF, rep])
    sigma = _design_sigma(cfg, rng)
    lchol = np.linalg.cholesky(sigma + 1e-12 * np.eye(cfg.p))
    x = rng.standard_normal((cfg.n, cfg.p)) @ lchol.T

    beta = np.zeros(cfg.p)
    sig = cfg.signal
    if sig.n_signal > 0:
        idx = np.sort(rng.choice(cfg.p, size=sig.n_signal, replace=False))
        if sig.coef_dist == "uniform_sign":
            mags = rng.uniform(sig.amplitude / 2.0, sig.amplitude, sig.n_signal)
            beta[idx] = rng.choice([-1.0, 1.0], size=sig.n_signal) * mags
        else:
            beta[idx] = rng.laplace(0.0, sig.amplitude, sig.n_signal)

    if sig.response == "linear":
        y = x @ beta + rng.standard_normal(cfg.n)
    elif sig.response == "gam":
        y = _gam_response(x, beta, rng)
    else:
        y = rng.binomial(1, expit(x @ beta)).astype(np.float64)
    return Instance(x=x, y=y, beta=beta, sigma=sigma, signal=beta != 0)


# ---------------------------------------------------------------------------
# Exact posterior by enumeration (small instances)


def _require_fixed(piece, name: str) -> float:
    if not isinstance(piece, FixedValue):
        raise DataError(f"enumeration needs a pinned {name} (FixedValue)")
    if piece.value <= 0:
        raise DataError(f"pinned {name} must be positive")
    return float(piece.value)


def _sigma2_quadrature(piece, n_nodes: int = 80) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and log-weights for integrating a function of sigma2 against its
    prior: log E[f(sigma2)] = logsumexp(logw + log f(nodes)).

    A pinned value is a single unit-weight node.  An inverse-gamma prior is
    handled through the precision t = 1/sigma2 ~ Gamma(shape, rate=rate);
    substituting t = x / rate turns the expectation into a generalized
    Gauss-Laguerre integral with alpha = shape - 1, so nodes are rate / x_i
    and weights w_i / Gamma(shape).
    """
    if isinstance(piece, FixedValue):
        if piece.value <= 0:
            raise DataError("pinned sigma2 must be positive")
        return np.array([float(piece.value)]), np.array([0.0])
    if not isinstance(piece, InvGammaPrior):
        raise DataError("sigma2 prior must be FixedValue or InvGammaPrior")
    x, w = roots_genlaguerre(n_nodes, piece.shape - 1.0)
    keep = w > 0.0
    x, w = x[keep], w[keep]
    return piece.rate / x, np.log(w) - gammaln(piece.shape)


def _gauss_loglik_nodes(
    resid_sq: np.ndarray,
    coefs_sq: np.ndarray,
    d_sq: np.ndarray,
    dim: int,
    sig2_nodes: np.ndarray,
) -> np.ndarray:
    """Gaussian log-density of observations under cov = sigma2 I + U diag(d_sq) U^T,
    evaluated at each sigma2 node.

    resid_sq: (S,) squared norm of each observation minus its U-projection,
    coefs_sq: (S, k) squared U-coordinates, d_sq: (k,) spectrum of the
    low-rank part.  Returns an (S, n_nodes) array.
    """
    s2 = sig2_nodes[None, :]
    lam = sig2_nodes[:, None] + d_sq[None, :]  # (nodes, k)
    logdet = (dim - d_sq.size) * np.log(sig2_nodes) + np.sum(np.log(lam), axis=1)
    quad = resid_sq[:, None] / s2
    if d_sq.size:
        quad = quad + coefs_sq @ (1.0 / lam.T)
    return -0.5 * (dim * np.log(2.0 * np.pi) + logdet[None, :] + quad)


def _label_config_logprior(counts: np.ndarray, prior: PriorConfig) -> float:
    """Log prior mass of one spike/slab label configuration (counts given),
    with the mixture weights integrated out when they carry a prior."""
    fw = prior.fixed_weights()
    if fw is not None:
        with np.errstate(divide="ignore"):
            terms = counts * np.log(fw)
        terms = np.where(counts == 0, 0.0, terms)
        return float(np.sum(terms))
    conc = prior.weight_concentration()
    return float(
        gammaln(conc.sum())
        - gammaln(conc.sum() + counts.sum())
        + np.sum(gammaln(conc + counts) - gammaln(conc))
    )


def _brute_model_x(masked: MaskedDataset, prior: PriorConfig) -> np.ndarray:
    if masked.response_kind != "continuous":
        raise DataError("enumeration covers continuous responses only")
    n_units = masked.n_units
    y = masked.y
    n = y.shape[0]
    bases = build_candidate_bases(masked, prior.basis)

    if prior.point_mass is not None:
        beta = prior.point_mass.beta
        sig2 = prior.point_mass.sigma2
        if 2**n_units > 1 << 16:
            raise DataError("too many units to enumerate")
        fits_a = np.zeros((n_units, n))
        fits_b = np.zeros((n_units, n))
        for u, g in enumerate(masked.groups):
            cols = list(g)
            fits_a[u] = masked.pair_a[:, cols] @ beta[cols]
            fits_b[u] = masked.pair_b[:, cols] @ beta[cols]
        lws = []
        bit_rows = []
        for bits in product((0, 1), repeat=n_units):
            mean = np.zeros(n)
            for u, b in enumerate(bits):
                mean += fits_a[u] if b == 0 else fits_b[u]
            ll = -0.5 * np.sum((y - mean) ** 2) / sig2
            lws.append(ll)
            bit_rows.append(bits)
        lws = np.asarray(lws)
        bit_rows = np.asarray(bit_rows)
        total = logsumexp(lws)
        return np.array(
            [np.exp(logsumexp(lws[bit_rows[:, u] == 0]) - total) for u in range(n_units)]
        )

    if prior.n_slabs != 1:
        raise DataError("model-X enumeration covers a single slab component")
    sig2_nodes, logw = _sigma2_quadrature(prior.sigma2_prior)
    tau2 = _require_fixed(prior.mixture[0].variance, "tau2")
    if 4**n_units > 1 << 20:
        raise DataError("too many units to enumerate")

    yty = float(y @ y)
    lws = []
    bit_rows = []
    for bits in product((0, 1), repeat=n_units):
        blocks = []
        for u, b in enumerate(bits):
            o, o2 = bases.offsets[u], bases.offsets[u + 1]
            blk = bases.phi_a[:, o:o2] if b == 0 else bases.phi_b[:, o:o2]
            blocks.append(blk)
        for gammas in product((0, 1), repeat=n_units):
            act = [blocks[u] for u in range(n_units) if gammas[u] == 1]
            if act:
                u_mat, sing, _ = np.linalg.svd(np.hstack(act), full_matrices=False)
                coefs = u_mat.T @ y
                d_sq = tau2 * sing**2
                resid_sq = np.array([yty - float(coefs @ coefs)])
                coefs_sq = coefs[None, :] ** 2
            else:
                d_sq = np.empty(0)
                resid_sq = np.array([yty])
                coefs_sq = np.empty((1, 0))
            ll = _gauss_loglik_nodes(resid_sq, coefs_sq, d_sq, n, sig2_nodes)
            counts = np.array([n_units - sum(gammas), sum(gammas)], dtype=np.float64)
            lws.append(logsumexp(logw + ll[0]) + _label_config_logprior(counts, prior))
            bit_rows.append(bits)
    lws = np.asarray(lws)
    bit_rows = np.asarray(bit_rows)
    total = logsumexp(lws)
    return np.array(
        [np.exp(logsumexp(lws[bit_rows[:, u] == 0]) - total) for u in range(n_units)]
    )


def _brute_fixed_x(masked: MaskedDataset, prior: PriorConfig) -> np.ndarray:
    p = masked.p
    a_mat = masked.sigma - np.diag(masked.s) / 2.0
    ab = masked.abs_beta_tilde

    if prior.point_mass is not None:
        beta = prior.point_mass.beta
        sig2 = prior.point_mass.sigma2
        return expit(masked.s * beta * ab / sig2)

    sig2_nodes, logw = _sigma2_quadrature(prior.sigma2_prior)
    tau2s = np.array([_require_fixed(s.variance, "tau2") for s in prior.mixture])
    m = prior.n_slabs
    if (2 * (m + 1)) ** p > 1 << 20:
        raise DataError("too many configurations to enumerate")

    # noise cov = sigma2 * B with B fixed; whiten by chol(B) so every
    # configuration has cov = sigma2 I + low-rank and one spectrum serves
    # all sigma2 nodes
    b_mat = np.zeros((2 * p, 2 * p))
    b_mat[:p, :p] = a_mat
    b_mat[p:, p:] = np.diag(2.0 / masked.s)
    chol_b = cholesky(b_mat, lower=True)
    logdet_b = float(np.sum(np.log(np.diag(chol_b))))

    sign_rows = np.array(list(product((1.0, -1.0), repeat=p)))
    z_all = np.concatenate(
        [np.broadcast_to(masked.xi, (sign_rows.shape[0], p)), sign_rows * ab], axis=1
    )
    zw_all = solve_triangular(chol_b, z_all.T, lower=True).T
    zz_all = np.sum(zw_all**2, axis=1)

    lws = []
    for labels in product(range(m + 1), repeat=p):
        act = [j for j in range(p) if labels[j] > 0]
        if act:
            design = np.zeros((2 * p, len(act)))
            for col, j in enumerate(act):
                design[:p, col] = a_mat[:, j]
                design[p + j, col] = 1.0
            t_half = np.sqrt([tau2s[labels[j] - 1] for j in act])
            gw = solve_triangular(chol_b, design * t_half, lower=True)
            u_mat, sing, _ = np.linalg.svd(gw, full_matrices=False)
            coefs = zw_all @ u_mat
            coefs_sq = coefs**2
            d_sq = sing**2
            resid_sq = zz_all - np.sum(coefs_sq, axis=1)
        else:
            d_sq = np.empty(0)
            resid_sq = zz_all
            coefs_sq = np.empty((zz_all.size, 0))
        ll = _gauss_loglik_nodes(resid_sq, coefs_sq, d_sq, 2 * p, sig2_nodes)
        counts = np.bincount(np.asarray(labels), minlength=m + 1).astype(np.float64)
        lp_labels = _label_config_logprior(counts, prior)
        lws.append(logsumexp(logw[None, :] + ll, axis=1) + lp_labels - logdet_b)
    lws = np.stack(lws)  # (label configs, sign configs)
    total = logsumexp(lws)
    return np.array(
        [np.exp(logsumexp(lws[:, sign_rows[:, j] > 0]) - total) for j in range(p)]
    )


def brute_force_posterior(masked: MaskedDataset, prior: PriorConfig) -> np.ndarray:
    """Exact posterior by summing over every hidden configuration.

    Model-X: probability that the first public pair element is the feature,
    per unit.  Fixed-X: probability that the whitened contrast's hidden sign
    is positive, per coordinate.  Slab variances must be pinned; sigma2 may be
    pinned or keep its inverse-gamma prior (integrated by an 80-node
    Gauss-Laguerre rule over the precision).  Mixture weights may keep their
    prior; they integrate analytically.  Cost grows exponentially; intended
    for single-digit unit counts.
    """
    if masked.kind == "model_x":
        return _brute_model_x(masked, prior)
    return _brute_fixed_x(masked, prior)


def orient_probability(masked: MaskedDataset, prob_public: np.ndarray) -> np.ndarray:
    """Flip public-orientation probabilities into true-feature orientation."""
    return 0.5 + masked.orient_stats(np.asarray(prob_public, dtype=np.float64) - 0.5)


# ---------------------------------------------------------------------------
# Experiment driver


@dataclass(frozen=True)
class RepRecord:
    rep: int
    method: str
    knockoff: str
    n_rej: int
    fdp: float
    power: float
    seed: int
    runtime_ms: float | None = None
    # |rejected| / |truth|; kept in memory for summaries, not serialized
    normalized: float | None = None


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    records: tuple[RepRecord, ...]
    failures: tuple[tuple[int, str], ...] = ()


def _rep_seed(cfg: ExperimentConfig, rep: int) -> int:
    ss = np.random.SeedSequence([_HARNESS_TAG, cfg.seed & 0x7FFFFFFF, rep, 1])
    return int(ss.generate_state(1, dtype=np.uint64)[0] & 0x7FFFFFFF)


def _statistic_for(
    name: str,
    cfg: ExperimentConfig,
    masked: MaskedDataset,
    x: np.ndarray,
    x_tilde: np.ndarray,
    y: np.ndarray,
    beta_true: np.ndarray,
    seed: int,
) -> FeatureStatVector:
    response_kind = "binary" if cfg.signal.response == "logistic" else "continuous"
    if name == "mlr":
        gibbs = replace(cfg.gibbs, seed=seed)
        if cfg.knockoff_kind == "fixed_x":
            stat, _ = mlr_fixed_x(masked, cfg.prior, gibbs)
        else:
            stat, _ = mlr_model_x(masked, cfg.prior, gibbs)
        return stat
    if name == "oracle":
        prior = PriorConfig(point_mass=PointMass(beta=beta_true, sigma2=1.0))
        return oracle_mlr(masked, prior, replace(cfg.gibbs, seed=seed))
    if name == "lcd":
        rule = cfg.lambda_rule or ("fixed_x" if cfg.knockoff_kind == "fixed_x" else "cv")
        return lcd_statistic(x, x_tilde, y, rule=rule, seed=seed, response_kind=response_kind)
    return lsm_statistic(x, x_tilde, y, seed=seed, response_kind=response_kind)


def run_rep(cfg: ExperimentConfig, rep: int, with_timings: bool = False) -> list[RepRecord]:
    """Run one replicate end to end and score every configured statistic."""
    inst = sample_instance(cfg, rep)
    seed = _rep_seed(cfg, rep)
    response_kind = "binary" if cfg.signal.response == "logistic" else "continuous"

    if cfg.knockoff_kind == "fixed_x":
        norms = np.linalg.norm(inst.x, axis=0)
        if (norms <= 0).any():
            raise DataError("zero-norm design column")
        x_use = inst.x / norms
        beta_use = inst.beta * norms
        knock = build_knockoffs(
            x_use, "fixed_x", SMatrixSpec(method=cfg.s_method), seed=seed
        )
    else:
        x_use = inst.x
        beta_use = inst.beta
        knock = build_knockoffs(
            x_use, "model_x", SMatrixSpec(method=cfg.s_method), sigma=inst.sigma, seed=seed
        )

    dataset = Dataset(x=x_use, y=inst.y, response_kind=response_kind, standardize=False)
    masked = mask(dataset, knock, seed=seed)
    truth = np.flatnonzero(inst.signal)

    records = []
    for name in cfg.statistics:
        t0 = time.perf_counter()
        stat = _statistic_for(name, cfg, masked, x_use, knock.x_tilde, inst.y, beta_use, seed)
        elapsed = (time.perf_counter() - t0) * 1000.0
        rej = threshold(stat.w, cfg.q)
        card = fdp_power(rej.rejected, truth)
        records.append(
            RepRecord(
                rep=rep,
                method=name,
                knockoff=cfg.knockoff_label,
                n_rej=rej.n_rejected,
                fdp=card.fdp,
                power=card.power,
                seed=seed,
                runtime_ms=round(elapsed, 3) if with_timings else None,
                normalized=card.normalized,
            )
        )
    return records


def _rep_worker(cfg: ExperimentConfig, rep: int, with_timings: bool):
    try:
        return rep, run_rep(cfg, rep, with_timings), None
    except Exception as exc:  # noqa: BLE001 - reported to the caller
        return rep, [], f"{type(exc).__name__}: {exc}"


def run_experiment(
    cfg: ExperimentConfig,
    n_jobs: int | None = None,
    with_timings: bool = False,
) -> ExperimentResult:
    """Run every replicate, in parallel when n_jobs allows.

    Records come back sorted by (rep, statistic order), independent of
    worker scheduling.  Failed replicates are collected, not raised.
    """
    if n_jobs is None:
        env = os.environ.get("KNOCKOFF_MLR_THREADS", "")
        n_jobs = int(env) if env.isdigit() and int(env) > 0 else (os.cpu_count() or 1)
    n_jobs = max(1, min(n_jobs, cfg.n_reps))

    outcomes = []
    if n_jobs == 1:
        for rep in range(cfg.n_reps):
            outcomes.append(_rep_worker(cfg, rep, with_timings))
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(_rep_worker, cfg, rep, with_timings) for rep in range(cfg.n_reps)]
            for fut in futures:
                outcomes.append(fut.result())

    outcomes.sort(key=lambda t: t[0])
    records: list[RepRecord] = []
    failures: list[tuple[int, str]] = []
    for rep, recs, err in outcomes:
        if err is not None:
            failures.append((rep, err))
        records.extend(recs)
    return ExperimentResult(config=cfg, records=tuple(records), failures=tuple(failures))


def summarize(records, n_failed: int = 0) -> dict[str, dict[str, float]]:
    """Per-method means and standard errors of FDP, power, discoveries."""

    def _mean_se(vals: np.ndarray) -> tuple[float, float]:
        n = vals.shape[0]
        se = float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return float(vals.mean()), se

    by_method: dict[str, list[RepRecord]] = {}
    for rec in records:
        by_method.setdefault(rec.method, []).append(rec)
    out = {}
    for method, recs in by_method.items():
        fdp, se_fdp = _mean_se(np.array([r.fdp for r in recs]))
        power, se_power = _mean_se(np.array([r.power for r in recs]))
        norm_vals = np.array([r.normalized for r in recs if r.normalized is not None])
        entry = {
            "n": float(len(recs)),
            "n_failed": float(n_failed),
            "mean_fdp": fdp,
            "se_fdp": se_fdp,
            "mean_power": power,
            "se_power": se_power,
            "mean_rejected": float(np.mean([r.n_rej for r in recs])),
        }
        if norm_vals.size:
            mn, se = _mean_se(norm_vals)
            entry["mean_normalized"] = mn
            entry["se_normalized"] = se
        out[method] = entry
    return out

"""Model-X Gibbs sampler: single-site updates against quadrature and
closed-form oracles, end-to-end posterior agreement, probit variant, groups."""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import expit, logit
from scipy.stats import multivariate_normal

from knockoff_mlr import (
    Dataset,
    FixedValue,
    GibbsConfig,
    KnockoffModel,
    brute_force_posterior,
    build_knockoffs,
    mask,
    mlr_group,
    mlr_model_x,
    mlr_probit,
    orient_probability,
)
from knockoff_mlr.gibbs_mlr import finalize_w
from knockoff_mlr.gibbs_mlr._kernels import truncated_normal_batch
from knockoff_mlr.gibbs_mlr.common import check_mixing
from knockoff_mlr.gibbs_mlr.model_x import (
    _slab_log_marginal,
    init_model_x_state,
    resample_x_j,
    update_gamma_beta,
)
from knockoff_mlr.model_core import GibbsTrace

from conftest import model_x_case, pinned_prior


# ---------------------------------------------------------------------------
# finalize_w arithmetic


def _trace_from_eta(eta: np.ndarray) -> GibbsTrace:
    m, p = eta.shape
    return GibbsTrace(
        eta=eta,
        sign_indicators=np.zeros((m, p), dtype=np.uint8),
        sigma2=np.ones(m),
        tau2=np.ones(m),
        p0=np.full(m, 0.5),
        burn_in=0,
        chain_ids=np.zeros(m, dtype=np.int64),
    )


def test_finalize_w_single_sample_identity():
    trace = _trace_from_eta(np.array([[np.log(3.0)]]))
    stat = finalize_w(trace, seed=0)
    assert stat.w[0] == pytest.approx(np.log(3.0), abs=1e-14)
    assert stat.posterior_sign_prob[0] == pytest.approx(0.75, abs=1e-14)


def test_finalize_w_symmetric_trace_randomizes():
    stat = finalize_w(_trace_from_eta(np.zeros((10, 3))), seed=1)
    assert np.all(np.abs(stat.w) == 1e-8)


def test_finalize_w_antisymmetric_pair_cancels():
    stat = finalize_w(_trace_from_eta(np.array([[2.0], [-2.0]])), seed=2)
    # sum of sigmoids is symmetric, so W collapses to an epsilon tie-break
    assert np.abs(stat.w[0]) == 1e-8


def test_finalize_w_magnitude_identity():
    rng = np.random.default_rng(60)
    trace = _trace_from_eta(rng.standard_normal((200, 6)) * 2.0)
    stat = finalize_w(trace, seed=3)
    assert np.abs(np.abs(stat.w) - logit(stat.posterior_sign_prob)).max() < 1e-12


# ---------------------------------------------------------------------------
# resample_x_j against a 1-D quadrature oracle


def _quad_two_point_posterior(phi_a, phi_b, y, sigma2, tau2, p0):
    """P(feature = phi_a | D) by direct 1-D integration over the coefficient."""

    def log_marginal(phi):
        base = -0.5 * float(y @ y) / sigma2  # common factor exp-shifted out

        def integrand(b):
            r = y - phi * b
            return np.exp(
                -0.5 * float(r @ r) / sigma2
                - base
                - 0.5 * b * b / tau2
            ) / np.sqrt(2.0 * np.pi * tau2)

        slab, _ = quad(integrand, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12)
        return np.log(p0 + (1.0 - p0) * slab)

    la, lb = log_marginal(phi_a), log_marginal(phi_b)
    return 1.0 / (1.0 + np.exp(lb - la))


def test_resample_x_j_matches_quadrature():
    case = model_x_case(30, 1, seed=61, beta=np.array([0.8]))
    prior = pinned_prior(tau2=1.3, sigma2=1.0, sparsity=0.4)
    state = init_model_x_state(case.masked, prior, seed=5)
    want = _quad_two_point_posterior(
        state.phi_a[:, 0], state.phi_b[:, 0], case.y, 1.0, 1.3, 0.4
    )
    hits = 0
    n_draws = 20000
    for _ in range(n_draws):
        resample_x_j(state, case.masked, 0, prior)
        hits += int(state.bits[0] == 0)
    freq = hits / n_draws
    assert abs(freq - want) < 3.5 * np.sqrt(want * (1 - want) / n_draws) + 1e-3


def test_resample_x_j_symmetric_candidates_are_even_odds():
    case = model_x_case(30, 2, seed=62)
    prior = pinned_prior()
    state = init_model_x_state(case.masked, prior, seed=6)
    # identical candidate blocks: the two slab marginals coincide exactly
    state.phi_b = state.phi_a.copy()
    la, _, _ = _slab_log_marginal(state.phi_a[:, :1], state.resid, 1.0, 1.0)
    lb, _, _ = _slab_log_marginal(state.phi_b[:, :1], state.resid, 1.0, 1.0)
    assert la == lb


def test_resample_x_j_vanishing_slab_gives_even_odds():
    case = model_x_case(40, 3, seed=63)
    prior = pinned_prior(tau2=1e-300)
    state = init_model_x_state(case.masked, prior, seed=7)
    state.beta[:] = 0.0
    state.resid = np.array(case.masked.y, dtype=np.float64)
    for j in range(3):
        la, _, _ = _slab_log_marginal(state.phi_a[:, j : j + 1], state.resid, state.tau2, 1.0)
        lb, _, _ = _slab_log_marginal(state.phi_b[:, j : j + 1], state.resid, state.tau2, 1.0)
        assert la == pytest.approx(0.0, abs=1e-12)
        assert lb == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# update_gamma_beta


def test_update_gamma_beta_zero_slab_keeps_prior_odds():
    case = model_x_case(40, 2, seed=64)
    prior = pinned_prior(sparsity=0.3)
    state = init_model_x_state(case.masked, prior, seed=8)
    state.tau2 = 0.0
    log_slab, _, _ = _slab_log_marginal(state.phi_a[:, :1], state.resid, 0.0, state.sigma2)
    assert log_slab == 0.0  # spike probability collapses to p0 exactly
    hits = sum(
        int(update_gamma_beta(state, case.masked, 0, prior).gamma[0] == 0) for _ in range(8000)
    )
    assert abs(hits / 8000 - 0.3) < 3.5 * np.sqrt(0.3 * 0.7 / 8000)


def test_update_gamma_beta_orthogonal_residual_favors_spike():
    rng = np.random.default_rng(65)
    case = model_x_case(50, 1, seed=65)
    prior = pinned_prior(tau2=2.0, sparsity=0.5)
    state = init_model_x_state(case.masked, prior, seed=9)
    phi = state.phi_a[:, 0]
    r = rng.standard_normal(50)
    r -= phi * (phi @ r) / (phi @ phi)
    log_slab, _, _ = _slab_log_marginal(state.phi_a[:, :1], r, 2.0, 1.0)
    g = float(phi @ phi)
    assert log_slab == pytest.approx(-0.5 * np.log(1.0 + 2.0 * g), abs=1e-10)
    assert log_slab < 0.0


def test_slab_log_marginal_matches_gaussian_bayes_factor():
    # identity-basis scalar case: slab marginal equals the ratio of the
    # marginal Gaussian likelihood to the spike likelihood
    rng = np.random.default_rng(66)
    n = 12
    phi = rng.standard_normal(n)
    r = rng.standard_normal(n) * 1.4
    sigma2, tau2 = 0.8, 2.5
    log_slab, _, _ = _slab_log_marginal(phi[:, None], r, tau2, sigma2)
    spike = multivariate_normal(mean=np.zeros(n), cov=sigma2 * np.eye(n)).logpdf(r)
    slab = multivariate_normal(
        mean=np.zeros(n), cov=sigma2 * np.eye(n) + tau2 * np.outer(phi, phi)
    ).logpdf(r)
    assert log_slab == pytest.approx(slab - spike, abs=1e-10)


def test_update_gamma_beta_conditional_moments():
    case = model_x_case(30, 1, seed=67, beta=np.array([1.0]))
    prior = pinned_prior(tau2=1.5, sigma2=1.0, sparsity=0.2)
    state = init_model_x_state(case.masked, prior, seed=10)
    state.bits[0] = 0
    state.beta[:] = 0.0
    state.resid = np.array(case.masked.y, dtype=np.float64)
    phi = state.phi_a[:, 0]
    rt = state.resid.copy()
    g = float(phi @ phi)
    prec = g / 1.0 + 1.0 / 1.5
    mean_want = float(phi @ rt) / prec
    draws = []
    for _ in range(30000):
        state.beta[:] = 0.0
        state.resid = rt.copy()
        update_gamma_beta(state, case.masked, 0, prior)
        if state.gamma[0] == 1:
            draws.append(state.beta[0])
    draws = np.asarray(draws)
    assert draws.size > 1000
    se = 1.0 / np.sqrt(prec * draws.size)
    assert abs(draws.mean() - mean_want) < 4.0 * se
    assert abs(draws.var() - 1.0 / prec) < 5.0 * (1.0 / prec) / np.sqrt(draws.size)


# ---------------------------------------------------------------------------
# End-to-end sampler against exact enumeration


def test_mlr_model_x_matches_enumeration():
    case = model_x_case(40, 2, seed=68, beta=np.array([0.9, 0.0]))
    prior = pinned_prior(tau2=1.0, sigma2=1.0)
    cfg = GibbsConfig(n_sample=4000, burn_in=1000, chains=4, seed=11)
    stat, _ = mlr_model_x(case.masked, prior, cfg)
    exact = orient_probability(case.masked, brute_force_posterior(case.masked, prior))
    assert np.abs(expit(stat.w) - exact).max() < 0.02


def test_mlr_model_x_identical_pairs_all_tied():
    case = model_x_case(30, 3, seed=69)
    degenerate = KnockoffModel(
        x_tilde=case.x.copy(), sigma=case.sigma, s=np.ones(3), kind="model_x"
    )
    masked = mask(case.data, degenerate, seed=4)
    stat, trace = mlr_model_x(masked, pinned_prior(), GibbsConfig(200, 50, 1, seed=12))
    assert np.all(trace.eta == 0.0)
    assert len(set(np.abs(stat.w).tolist())) == 1  # equal magnitudes, tie-broken


def test_mlr_model_x_sparsity_recovery():
    rng = np.random.default_rng(70)
    n, p = 500, 20
    x = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[rng.choice(p, 6, replace=False)] = rng.choice([-1.0, 1.0], 6) * 0.6
    y = x @ beta + rng.standard_normal(n)
    model = build_knockoffs(x, "model_x", sigma=np.eye(p), seed=13)
    masked = mask(Dataset(x=x, y=y, standardize=False), model, seed=13)
    from knockoff_mlr import PriorConfig

    _, trace = mlr_model_x(masked, PriorConfig(), GibbsConfig(1500, 500, 2, seed=13))
    assert abs(trace.p0.mean() - 0.7) < 0.15


def test_mlr_model_x_rejects_wrong_kind():
    from knockoff_mlr import DataError
    from conftest import fixed_x_case

    case = fixed_x_case(40, 3, seed=71)
    with pytest.raises(DataError):
        mlr_model_x(case.masked, pinned_prior(), GibbsConfig(10, 0, 1, seed=0))


# ---------------------------------------------------------------------------
# Probit variant


def test_truncated_normal_half_normal_moment():
    draws = truncated_normal_batch(0.0, 100000, 77)
    assert (draws > 0).all()
    assert abs(draws.mean() - np.sqrt(2.0 / np.pi)) < 0.02 * np.sqrt(2.0 / np.pi)


def test_truncated_normal_deep_tail():
    draws = truncated_normal_batch(-8.0, 20000, 78)
    assert (draws > 0).all()
    assert np.isfinite(draws).all()
    # E[Z | Z > 8] for the standard normal is close to the hazard 8.12...
    assert abs((draws - (-8.0)).mean() - 8.0 - 0.1206) < 0.02


def test_mlr_probit_detects_strong_feature():
    case = model_x_case(300, 5, seed=72, beta=np.array([2.5, 0, 0, 0, 0.0]), response="binary")
    stat, _ = mlr_probit(case.masked, pinned_prior(tau2=4.0), GibbsConfig(1500, 500, 2, seed=14))
    assert stat.posterior_sign_prob[0] > 0.9
    assert stat.w[0] > 0


def test_mlr_model_x_dispatches_binary_to_probit():
    case = model_x_case(80, 3, seed=73, response="binary")
    cfg = GibbsConfig(300, 100, 1, seed=15)
    a, _ = mlr_model_x(case.masked, pinned_prior(), cfg)
    b, _ = mlr_probit(case.masked, pinned_prior(), cfg)
    assert np.array_equal(a.w, b.w)


# ---------------------------------------------------------------------------
# Groups


def test_mlr_group_singletons_identical_to_plain():
    case = model_x_case(50, 4, seed=74)
    cfg = GibbsConfig(400, 100, 2, seed=16)
    plain, _ = mlr_model_x(case.masked, pinned_prior(), cfg)
    grouped, _ = mlr_group(case.masked, pinned_prior(), cfg)
    assert np.array_equal(plain.w, grouped.w)


def test_mlr_group_pools_correlated_pair():
    rng = np.random.default_rng(75)
    p, n = 4, 250
    sigma = np.eye(p)
    sigma[0, 1] = sigma[1, 0] = 0.97
    x = rng.multivariate_normal(np.zeros(p), sigma, size=n)
    beta = np.array([0.5, 0.5, 0.0, 0.0])
    y = x @ beta + rng.standard_normal(n)
    data = Dataset(x=x, y=y, standardize=False)
    cfg = GibbsConfig(1500, 500, 2, seed=17)

    single = build_knockoffs(x, "model_x", sigma=sigma, seed=18)
    w_single, _ = mlr_model_x(mask(data, single, seed=18), pinned_prior(), cfg)

    grouped = build_knockoffs(x, "model_x", sigma=sigma, seed=18, groups=[[0, 1], [2], [3]])
    w_group, _ = mlr_group(mask(data, grouped, seed=18), pinned_prior(), cfg)

    assert w_group.w.shape == (3,)
    # pooling the near-duplicate pair concentrates the sign posterior
    assert w_group.posterior_sign_prob[0] > max(
        w_single.posterior_sign_prob[0], w_single.posterior_sign_prob[1]
    )
    assert w_group.w[0] > 0


# ---------------------------------------------------------------------------
# Mixing diagnostics


def test_check_mixing_warns_on_disagreement():
    rng = np.random.default_rng(76)
    eta = np.concatenate([rng.standard_normal(400), rng.standard_normal(400) + 8.0])
    ids = np.repeat([0, 1], 400)
    with pytest.warns(RuntimeWarning):
        rhat = check_mixing(eta[:, None], ids)
    assert rhat > 1.2


def test_check_mixing_quiet_when_agreeing():
    rng = np.random.default_rng(77)
    eta = rng.standard_normal((800, 2))
    ids = np.repeat([0, 1], 400)
    rhat = check_mixing(eta, ids)
    assert rhat < 1.1

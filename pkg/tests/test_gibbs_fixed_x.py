"""Fixed-X Gibbs sampler: masked likelihood identities, conjugate noise
update, enumeration agreement, oracle closed form, swap equivariance."""

import numpy as np
import pytest
from scipy.special import expit
from scipy.stats import invgamma, kstest, norm

from knockoff_mlr import (
    DataError,
    Dataset,
    FixedValue,
    GibbsConfig,
    InvGammaPrior,
    KnockoffModel,
    PointMass,
    PriorConfig,
    SlabComponent,
    brute_force_posterior,
    mask,
    masked_loglik_fixed_x,
    mlr_fixed_x,
    oracle_mlr,
    orient_probability,
    swap_columns,
)
from knockoff_mlr.gibbs_mlr.fixed_x import (
    _label_terms,
    init_fixed_x_state,
    update_sigma2_fixed_x,
    update_sign_beta_fixed_x,
)

from conftest import fixed_x_case, pinned_prior


# ---------------------------------------------------------------------------
# Masked log likelihood


def test_masked_loglik_zero_beta_is_zero():
    case = fixed_x_case(40, 3, seed=80)
    assert masked_loglik_fixed_x(np.zeros(3), case.masked) == 0.0


def test_masked_loglik_parity_when_xi_vanishes():
    # response orthogonal to the column sums x_j + x~_j makes xi = 0, so the
    # masked likelihood is even in beta
    case = fixed_x_case(40, 3, seed=81, beta=np.zeros(3))
    summed = case.x + case.model.x_tilde
    q, _ = np.linalg.qr(summed)
    y = case.y - q @ (q.T @ case.y)
    data = Dataset(x=case.x, y=y, standardize=False)
    masked = mask(data, case.model, seed=81)
    assert np.abs(masked.xi).max() < 1e-10
    rng = np.random.default_rng(81)
    for _ in range(5):
        beta = rng.standard_normal(3)
        assert masked_loglik_fixed_x(beta, masked) == pytest.approx(
            masked_loglik_fixed_x(-beta, masked), abs=1e-10
        )


def _sign_enumeration_loglik(beta, masked, sigma2=1.0):
    """log sum over hidden sign vectors of the joint Gaussian density.

    xi | beta ~ N(A beta, sigma2 A);  beta_tilde | beta ~ N(beta, 2 sigma2 S^-1),
    with the two blocks independent.  Returns the full log density, constants
    included, so differences across beta values are comparable.
    """
    p = beta.shape[0]
    a_mat = masked.sigma - np.diag(masked.s) / 2.0
    xi_part = -0.5 * float(
        (masked.xi - a_mat @ beta) @ np.linalg.solve(sigma2 * a_mat, masked.xi - a_mat @ beta)
    )
    xi_part -= 0.5 * (np.linalg.slogdet(2.0 * np.pi * sigma2 * a_mat)[1])
    total = None
    for mask_bits in range(2**p):
        signs = np.array([1.0 if (mask_bits >> j) & 1 == 0 else -1.0 for j in range(p)])
        bt = signs * masked.abs_beta_tilde
        var = 2.0 * sigma2 / masked.s
        part = float(norm.logpdf(bt, loc=beta, scale=np.sqrt(var)).sum())
        total = part if total is None else np.logaddexp(total, part)
    return xi_part + total


def test_masked_loglik_matches_sign_enumeration():
    case = fixed_x_case(50, 3, seed=82)
    rng = np.random.default_rng(82)
    betas = [rng.standard_normal(3) * s for s in (0.5, 1.0, 2.0)] + [np.zeros(3)]
    ours = np.array([masked_loglik_fixed_x(b, case.masked) for b in betas])
    brute = np.array([_sign_enumeration_loglik(b, case.masked) for b in betas])
    # agreement up to one common additive constant
    diffs = ours - brute
    assert np.abs(diffs - diffs[0]).max() < 1e-8


def test_masked_loglik_input_validation():
    case = fixed_x_case(40, 3, seed=83)
    with pytest.raises(DataError):
        masked_loglik_fixed_x(np.zeros(2), case.masked)
    with pytest.raises(DataError):
        masked_loglik_fixed_x(np.zeros(3), case.masked, sigma2=0.0)


# ---------------------------------------------------------------------------
# Conjugate noise update


def _scalar_masked(xi=1.0, ab=2.0):
    # p=1 instance with Sigma = 1, S = 1: x, x~ orthonormal in R^2
    x = np.array([[1.0], [0.0]])
    xt = np.array([[0.0], [1.0]])
    y = np.array([xi + ab / 2.0, xi - ab / 2.0])
    model = KnockoffModel(x_tilde=xt, sigma=np.array([[1.0]]), s=np.array([1.0]), kind="fixed_x")
    return mask(Dataset(x=x, y=y, standardize=False), model, seed=0)


def test_update_sigma2_scalar_rate_arithmetic():
    # beta = 0, |beta_tilde| = 2, xi = 1, A = 1/2: rate = b + (1/2)(2 + 2) = b + 2
    masked = _scalar_masked()
    assert masked.xi[0] == pytest.approx(1.0, abs=1e-12)
    assert masked.abs_beta_tilde[0] == pytest.approx(2.0, abs=1e-12)
    prior = PriorConfig(sigma2_prior=InvGammaPrior(3.0, 2.0))
    state = init_fixed_x_state(masked, prior, seed=0)
    state.beta[:] = 0.0
    state.v[:] = 0.0
    state.sgn[:] = 1.0
    draws = np.empty(40000)
    for i in range(draws.shape[0]):
        update_sigma2_fixed_x(state, masked, prior)
        draws[i] = state.sigma2
    # shape a + p = 4, rate b + 2 = 4
    assert kstest(draws, invgamma(4.0, scale=4.0).cdf).pvalue > 0.01


def test_update_sigma2_zero_quadratics_keeps_prior_rate():
    masked = _scalar_masked()
    prior = PriorConfig(sigma2_prior=InvGammaPrior(2.5, 1.5))
    state = init_fixed_x_state(masked, prior, seed=1)
    # beta = beta_tilde and xi = A beta: both quadratic forms vanish
    state.beta[:] = 2.0
    state.sgn[:] = 1.0
    state.v[:] = 0.5 * 2.0  # A beta with A = 1/2
    draws = np.empty(40000)
    for i in range(draws.shape[0]):
        update_sigma2_fixed_x(state, masked, prior)
        draws[i] = state.sigma2
    assert kstest(draws, invgamma(3.5, scale=1.5).cdf).pvalue > 0.01


def test_update_sigma2_pinned_prior_short_circuits():
    masked = _scalar_masked()
    prior = pinned_prior(sigma2=2.0)
    state = init_fixed_x_state(masked, prior, seed=2)
    state.sigma2 = 99.0
    update_sigma2_fixed_x(state, masked, prior)
    assert state.sigma2 == 2.0


# ---------------------------------------------------------------------------
# Label and sign updates


def test_label_terms_equal_slabs_follow_weights():
    masked = _scalar_masked()
    prior = PriorConfig(
        mixture=(
            SlabComponent(variance=FixedValue(1.0)),
            SlabComponent(variance=FixedValue(1.0)),
        ),
        sigma2_prior=FixedValue(1.0),
        sparsity_prior=FixedValue(0.2),
    )
    state = init_fixed_x_state(masked, prior, seed=3)
    state.weights = np.array([0.2, 0.3, 0.5])
    lt = _label_terms(1.7, 0, state, masked)
    # identical likelihood factors: slab posterior odds reduce to the weights
    assert lt[2] - lt[1] == pytest.approx(np.log(0.5 / 0.3), abs=1e-12)


def test_update_sign_beta_unmarginalized_odds():
    masked = _scalar_masked()
    prior = pinned_prior(tau2=1.0, sigma2=1.0, sparsity=0.5)
    state = init_fixed_x_state(masked, prior, seed=4)
    state.beta[:] = 0.7
    state.v[:] = 0.5 * 0.7
    # with beta frozen the sign odds are s * |beta_tilde| * beta / sigma2;
    # empirical frequency of the positive sign must match that sigmoid
    want = expit(1.0 * 2.0 * 0.7 / 1.0)
    hits = 0
    n_draws = 20000
    for _ in range(n_draws):
        state.beta[0] = 0.7
        state.v[0] = 0.35
        update_sign_beta_fixed_x(state, masked, 0, prior, marginalize=False)
        hits += int(state.sgn[0] > 0)
    freq = hits / n_draws
    assert abs(freq - want) < 3.5 * np.sqrt(want * (1 - want) / n_draws)


# ---------------------------------------------------------------------------
# End-to-end sampler against exact enumeration


def test_mlr_fixed_x_matches_enumeration_orthogonal():
    rng = np.random.default_rng(84)
    n, p = 40, 2
    q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    x = q[:, :p]
    beta = np.array([2.5, 0.0])
    y = x @ beta + rng.standard_normal(n)
    from knockoff_mlr import build_knockoffs

    model = build_knockoffs(x, "fixed_x", seed=19)
    masked = mask(Dataset(x=x, y=y, standardize=False), model, seed=19)
    prior = pinned_prior(tau2=1.0, sigma2=1.0)
    stat, _ = mlr_fixed_x(masked, prior, GibbsConfig(4000, 1000, 4, seed=19))
    exact = orient_probability(masked, brute_force_posterior(masked, prior))
    assert np.abs(expit(stat.w) - exact).max() < 0.02


def test_mlr_fixed_x_matches_enumeration_correlated():
    case = fixed_x_case(60, 3, seed=85, rho=0.6, beta=np.array([3.0, 0.0, -2.0]))
    prior = pinned_prior(tau2=1.0, sigma2=1.0)
    stat, _ = mlr_fixed_x(case.masked, prior, GibbsConfig(4000, 1000, 4, seed=20))
    exact = orient_probability(case.masked, brute_force_posterior(case.masked, prior))
    assert np.abs(expit(stat.w) - exact).max() < 0.02


def test_mlr_fixed_x_null_collapse_randomizes():
    # slab pinned to a vanishing variance and full spike weight: no signal
    # can be expressed, so every W is an epsilon tie-break
    case = fixed_x_case(40, 4, seed=86)
    prior = PriorConfig(
        mixture=(SlabComponent(variance=FixedValue(1e-12)),),
        sigma2_prior=FixedValue(1.0),
        sparsity_prior=FixedValue(1.0),
    )
    stat, trace = mlr_fixed_x(case.masked, prior, GibbsConfig(300, 100, 1, seed=21))
    assert np.abs(trace.eta).max() < 1e-6
    assert len(set(np.abs(stat.w).tolist())) == 1


def test_mlr_fixed_x_requires_identity_basis():
    from knockoff_mlr import BasisSpec

    case = fixed_x_case(40, 3, seed=87)
    prior = PriorConfig(basis=BasisSpec(kind="cubic_spline", knots=2))
    with pytest.raises(DataError):
        mlr_fixed_x(case.masked, prior, GibbsConfig(10, 0, 1, seed=0))


# ---------------------------------------------------------------------------
# Oracle


def test_oracle_null_truth_randomizes():
    case = fixed_x_case(40, 3, seed=88)
    prior = PriorConfig(point_mass=PointMass(beta=np.zeros(3), sigma2=1.0))
    stat = oracle_mlr(case.masked, prior)
    assert np.all(np.abs(stat.w) == 1e-8)


def test_oracle_fixed_x_closed_form_vs_sign_density():
    # P(hidden sign | D, beta) factorizes over coordinates with density
    # N(s_j |bt_j|; beta_j, 2 sigma2 / s_jj); the oracle W must match its logit
    case = fixed_x_case(50, 3, seed=89, beta=np.array([2.0, -1.0, 0.5]))
    sigma2 = 1.3
    prior = PriorConfig(point_mass=PointMass(beta=case.beta, sigma2=sigma2))
    stat = oracle_mlr(case.masked, prior)
    m = case.masked
    rev = m.reveal()
    var = 2.0 * sigma2 / m.s
    lp_plus = norm.logpdf(m.abs_beta_tilde, loc=case.beta, scale=np.sqrt(var))
    lp_minus = norm.logpdf(-m.abs_beta_tilde, loc=case.beta, scale=np.sqrt(var))
    w_truth_frame = lp_plus - lp_minus  # log odds that beta_tilde_j > 0
    signs = np.sign(rev.beta_tilde)
    want = signs * w_truth_frame  # oriented: positive iff observed sign is favored
    assert np.allclose(stat.w, want, atol=1e-10)


def test_oracle_model_x_matches_point_mass_enumeration():
    from conftest import model_x_case

    case = model_x_case(40, 2, seed=90, beta=np.array([1.2, 0.0]))
    prior = PriorConfig(point_mass=PointMass(beta=case.beta, sigma2=1.0))
    stat = oracle_mlr(case.masked, prior, GibbsConfig(4000, 500, 2, seed=22))
    exact = orient_probability(case.masked, brute_force_posterior(case.masked, prior))
    untied = np.abs(case.beta) > 0
    assert np.abs(expit(stat.w)[untied] - exact[untied]).max() < 0.02


# ---------------------------------------------------------------------------
# Swap equivariance (spot check; the acceptance suite fuzzes 100 sets)


def test_mlr_fixed_x_flip_sign_under_swap():
    case = fixed_x_case(60, 5, seed=91)
    prior = pinned_prior()
    cfg = GibbsConfig(300, 100, 2, seed=23)
    base, _ = mlr_fixed_x(case.masked, prior, cfg)

    j_set = [0, 2, 3]
    sx, sxt = swap_columns(case.x, case.model.x_tilde, j_set)
    swapped_model = KnockoffModel(
        x_tilde=sxt, sigma=case.model.sigma, s=case.model.s, kind="fixed_x"
    )
    masked2 = mask(Dataset(x=sx, y=case.y, standardize=False), swapped_model, seed=91)
    flipped, _ = mlr_fixed_x(masked2, prior, cfg)
    signs = np.ones(5)
    signs[j_set] = -1.0
    assert np.array_equal(flipped.w, signs * base.w)

"""Sequential selection filter, the count machinery, and scoring."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from knockoff_mlr import DataError, fdp_power, psi_tau, threshold
from knockoff_mlr.filters import sorted_sign_indicators

W_SIX = np.array([3.0, -2.5, 2.0, 1.5, -1.0, 0.5])


def _nonzero_w(rng, p):
    w = rng.standard_normal(p) * rng.lognormal(size=p)
    w[w == 0.0] = 1e-6
    return w


# ---------------------------------------------------------------------------
# threshold


def test_threshold_all_positive():
    res = threshold(np.array([1.0, 2.0, 3.0]), q=0.5)
    assert res.threshold == 1.0
    assert set(res.rejected.tolist()) == {0, 1, 2}


def test_threshold_all_negative_rejects_nothing():
    res = threshold(np.array([-1.0, -2.0, -3.0]), q=0.9)
    assert np.isinf(res.threshold)
    assert res.n_rejected == 0
    assert res.rejected.size == 0


def test_threshold_six_vector_example():
    res = threshold(W_SIX, q=1.0)
    assert res.threshold == 0.5
    assert set(res.rejected.tolist()) == {0, 2, 3, 5}  # 1-based {1,3,4,6}
    assert res.q == 1.0


def test_threshold_rejects_zero_entries():
    with pytest.raises(DataError):
        threshold(np.array([1.0, 0.0]), q=0.5)


def test_threshold_rejects_bad_q():
    with pytest.raises(DataError):
        threshold(np.array([1.0]), q=0.0)
    with pytest.raises(DataError):
        threshold(np.array([1.0]), q=1.5)


def test_threshold_rejected_set_matches_threshold():
    rng = np.random.default_rng(31)
    for _ in range(200):
        w = _nonzero_w(rng, int(rng.integers(1, 40)))
        res = threshold(w, q=0.2)
        want = np.flatnonzero(w >= res.threshold) if np.isfinite(res.threshold) else np.array([])
        assert np.array_equal(res.rejected, want)
        if np.isfinite(res.threshold):
            # knockoff+ bound holds at the selected threshold
            n_neg = int((w <= -res.threshold).sum())
            assert (1 + n_neg) / max(res.n_rejected, 1) <= 0.2


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_threshold_monotone_in_q(seed):
    rng = np.random.default_rng(seed)
    w = _nonzero_w(rng, 25)
    r1 = threshold(w, q=0.1)
    r2 = threshold(w, q=0.3)
    assert set(r1.rejected.tolist()) <= set(r2.rejected.tolist())


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 100.0))
@settings(max_examples=60, deadline=None)
def test_threshold_scale_invariant(seed, scale):
    rng = np.random.default_rng(seed)
    w = _nonzero_w(rng, 20)
    base = threshold(w, q=0.25)
    scaled = threshold(scale * w, q=0.25)
    assert np.array_equal(base.rejected, scaled.rejected)


# ---------------------------------------------------------------------------
# psi_tau


def test_psi_tau_all_ones():
    psi, tau = psi_tau(np.ones(4), q=0.25)
    assert psi == 4 and tau == 4


def test_psi_tau_all_zeros():
    psi, tau = psi_tau(np.zeros(5), q=0.2)
    assert psi == 0 and tau == 0


def test_psi_tau_matches_threshold_on_example():
    res = threshold(W_SIX, q=1.0)
    indicators = sorted_sign_indicators(W_SIX)
    _, tau = psi_tau(indicators, q=1.0)
    assert tau == res.n_rejected == 4


def test_psi_tau_accepts_fractional_eta():
    psi, tau = psi_tau(np.array([0.9, 0.8, 0.6, 0.3]), q=0.5)
    assert psi >= 0 and tau >= 0


def test_psi_tau_rejects_out_of_range():
    with pytest.raises(DataError):
        psi_tau(np.array([0.5, 1.2]), q=0.2)
    with pytest.raises(DataError):
        psi_tau(np.array([-0.1]), q=0.2)


def test_sorted_sign_indicators_ordering():
    ind = sorted_sign_indicators(W_SIX)
    # |W| descending: 3, -2.5, 2, 1.5, -1, 0.5 -> signs 1,0,1,1,0,1
    assert np.array_equal(ind, np.array([1.0, 0.0, 1.0, 1.0, 0.0, 1.0]))
    tied = sorted_sign_indicators(np.array([-1.0, 1.0]))
    assert np.array_equal(tied, np.array([0.0, 1.0]))  # ties break by index


# ---------------------------------------------------------------------------
# scoring


def test_fdp_power_examples():
    perfect = fdp_power(np.array([2, 3]), {2, 3})
    assert perfect.fdp == 0.0 and perfect.power == 1.0
    empty = fdp_power(np.array([], dtype=int), {1})
    assert empty.fdp == 0.0 and empty.power == 0.0 and empty.n_rejected == 0
    half = fdp_power(np.array([1, 2]), {2, 3})
    assert half.fdp == 0.5 and half.power == 0.5
    assert half.normalized == 1.0  # 2 rejections / 2 non-nulls


def test_fdp_power_accepts_boolean_truth():
    truth_mask = np.array([False, True, True, False])
    by_mask = fdp_power(np.array([1, 3]), truth_mask)
    by_index = fdp_power(np.array([1, 3]), {1, 2})
    assert by_mask == by_index
    assert by_mask.fdp == 0.5 and by_mask.power == 0.5

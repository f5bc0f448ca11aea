"""Local dependence diagnostics for sign indicators of feature statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DataError
from .model_core import GibbsTrace

__all__ = ["DecayReport", "sign_cov", "decay_check", "w_display_transform"]


def sign_cov(trace: GibbsTrace) -> np.ndarray:
    """Empirical covariance of the correct-assignment indicators.

    Uses the maximum likelihood normalization (divide by n), so diagonal
    entries are bounded by 0.25.  Requires at least 100 kept draws.
    """
    bits = np.asarray(trace.sign_indicators, dtype=np.float64)
    if bits.shape[0] < 100:
        raise DataError(f"sign covariance needs >= 100 kept draws, got {bits.shape[0]}")
    centered = bits - bits.mean(axis=0, keepdims=True)
    return centered.T @ centered / bits.shape[0]


@dataclass(frozen=True)
class DecayReport:
    """Outcome of the geometric off-diagonal decay check."""

    passed: bool
    max_ratio: float  # largest |cov_ij| / (c * rho^|i-j|) over i != j
    max_offdiag: float
    worst_pair: tuple[int, int]
    c: float
    rho: float


def decay_check(cov: np.ndarray, c: float = 1.0, rho: float = 0.5) -> DecayReport:
    """Check |cov_ij| <= c * rho^|i-j| for all off-diagonal pairs."""
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DataError("covariance must be square")
    if not (0.0 < rho < 1.0) or c <= 0:
        raise DataError("need 0 < rho < 1 and c > 0")
    p = cov.shape[0]
    if p == 1:
        return DecayReport(True, 0.0, 0.0, (0, 0), c, rho)
    idx = np.arange(p)
    dist = np.abs(idx[:, None] - idx[None, :])
    off = dist > 0
    bound = c * rho ** dist.astype(np.float64)
    with np.errstate(divide="ignore"):
        ratios = np.where(off, np.abs(cov) / bound, 0.0)
    worst = np.unravel_index(int(np.argmax(ratios)), ratios.shape)
    max_ratio = float(ratios[worst])
    max_off = float(np.abs(cov[off]).max())
    return DecayReport(
        passed=max_ratio <= 1.0,
        max_ratio=max_ratio,
        max_offdiag=max_off,
        worst_pair=(int(worst[0]), int(worst[1])),
        c=float(c),
        rho=float(rho),
    )


def w_display_transform(w: np.ndarray) -> np.ndarray:
    """Compress statistics to (-1, 1) for plotting: sign(w) * 2 (sigmoid(|w|) - 1/2).

    Monotone in w and preserves rejection sets of the filter (threshold
    candidates transform monotonically).
    """
    w = np.asarray(w, dtype=np.float64)
    return np.sign(w) * 2.0 * (expit(np.abs(w)) - 0.5)

"""Sequential step-up filter on signed feature statistics.

Implements the adaptive threshold with the +1 numerator correction, the
equivalent formulation on sorted sign indicators (psi / tau), and replicate
scoring helpers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = ["RejectionResult", "Scorecard", "threshold", "psi_tau", "fdp_power", "sorted_sign_indicators"]


@dataclass(frozen=True)
class RejectionResult:
    """Outcome of the knockoff filter at level q."""

    threshold: float
    rejected: np.ndarray  # sorted 0-based feature indices
    n_rejected: int
    q: float = math.nan

    def __post_init__(self):
        rej = np.asarray(self.rejected, dtype=np.int64)
        rej = np.sort(rej)
        rej.setflags(write=False)
        object.__setattr__(self, "rejected", rej)
        object.__setattr__(self, "n_rejected", int(rej.shape[0]))


def _validate_w(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] < 1:
        raise DataError("w must be a nonempty 1-d array")
    if not np.isfinite(w).all():
        raise DataError("w has non-finite entries")
    if (w == 0.0).any():
        raise DataError("w contains exact zeros; apply epsilon randomization first")
    return w


def _validate_q(q: float) -> float:
    if not (0.0 < q <= 1.0):
        raise DataError(f"q must lie in (0, 1], got {q}")
    return float(q)


def threshold(w: np.ndarray, q: float) -> RejectionResult:
    """Adaptive significance cutoff for signed statistics.

    T = min over t in {|w_j|} of (1 + #{w_j <= -t}) / #{w_j >= t} <= q, with
    T = +inf (no rejections) when no candidate qualifies.  Rejects
    {j : w_j >= T}.
    """
    w = _validate_w(w)
    q = _validate_q(q)
    sorted_w = np.sort(w)
    n = w.shape[0]
    cands = np.unique(np.abs(w))
    # counts via binary search on the sorted statistic values
    n_neg = np.searchsorted(sorted_w, -cands, side="right")  # #{w <= -t}
    n_pos = n - np.searchsorted(sorted_w, cands, side="left")  # #{w >= t}
    with np.errstate(divide="ignore"):
        ratio = np.where(n_pos > 0, (1.0 + n_neg) / np.maximum(n_pos, 1), np.inf)
    ok = ratio <= q
    if not ok.any():
        return RejectionResult(threshold=math.inf, rejected=np.empty(0, dtype=np.int64), n_rejected=0, q=q)
    t = float(cands[np.argmax(ok)])
    rejected = np.flatnonzero(w >= t)
    return RejectionResult(threshold=t, rejected=rejected, n_rejected=len(rejected), q=q)


def psi_tau(eta: np.ndarray, q: float) -> tuple[int, int]:
    """Stopping index and rejection count on a sorted sign sequence.

    Entries may be binary indicators or conditional sign means in [0, 1].
    psi = max{k >= 1 : (k - k*mean_k + 1) / (k*mean_k) <= q} with 0 when no k
    qualifies (the ratio is +inf when the running mean is zero), and
    tau = ceil((psi + 1) / (1 + q)) for psi >= 1, else 0.
    """
    eta = np.asarray(eta, dtype=np.float64)
    if eta.ndim != 1:
        raise DataError("eta must be 1-d")
    if eta.size and ((eta < 0.0).any() or (eta > 1.0).any() or not np.isfinite(eta).all()):
        raise DataError("eta entries must lie in [0, 1]")
    q = _validate_q(q)
    if eta.size == 0:
        return 0, 0
    ones = np.cumsum(eta)
    k = np.arange(1, eta.size + 1, dtype=np.float64)
    zeros = k - ones
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(ones > 0, (zeros + 1.0) / np.maximum(ones, 1e-300), np.inf)
    ok = np.flatnonzero(ratio <= q)
    if ok.size == 0:
        return 0, 0
    psi = int(ok[-1] + 1)
    tau = int(math.ceil((psi + 1) / (1.0 + q)))
    return psi, tau


def sorted_sign_indicators(w: np.ndarray) -> np.ndarray:
    """Indicators 1{w_j > 0} ordered by decreasing |w_j|, ties by index."""
    w = _validate_w(w)
    order = np.lexsort((np.arange(w.shape[0]), -np.abs(w)))
    return (w[order] > 0).astype(np.int64)


@dataclass(frozen=True)
class Scorecard:
    """Replicate-level selection quality."""

    fdp: float
    power: float
    n_rejected: int
    normalized: float  # |rejected| / max(1, |truth|)


def fdp_power(rejected: np.ndarray, truth) -> Scorecard:
    """Score a rejection set against the non-null index set.

    ``truth`` may be an index collection or a boolean mask over coordinates.
    """
    rej = set(int(j) for j in np.asarray(rejected, dtype=np.int64))
    if isinstance(truth, (set, frozenset)):
        tru = {int(j) for j in truth}
    else:
        arr = np.atleast_1d(np.asarray(truth))
        if arr.dtype == np.bool_:
            arr = np.flatnonzero(arr)
        tru = set(int(j) for j in arr)
    n_rej = len(rej)
    false = len(rej - tru)
    hits = len(rej & tru)
    return Scorecard(
        fdp=false / max(1, n_rej),
        power=hits / max(1, len(tru)),
        n_rejected=n_rej,
        normalized=n_rej / max(1, len(tru)),
    )

"""Lasso-based feature statistics over the augmented design [X, X~].

Provides a deterministic cyclic coordinate descent solver for

    (1/2) ||y - Z b||^2 + lambda * n * ||b||_1,

entry-point detection along a warm-started path, and the coefficient
difference (LCD) and signed maximum (LSM) statistics.  Pair columns are
ordered canonically before fitting so the computed statistics are exactly
sign-equivariant under column swaps of (X, X~).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DataError
from .model_core import FeatureStatVector, _lex_first_is_smaller, finalize_statistic

__all__ = [
    "LassoFit",
    "lasso_fit",
    "lasso_path",
    "lambda_entry_path",
    "lcd",
    "lsm",
    "default_lambda_grid",
    "fixed_x_lambda",
    "cv_lambda",
    "lcd_statistic",
    "lsm_statistic",
]

_CV_FOLD_TAG = 0x63766C64


@njit(cache=True)
def _cd_solve(gram, zty, lam_n, b, gb, tol_kkt, max_sweeps):
    """Cyclic coordinate descent with covariance updates.

    ``b`` and ``gb = gram @ b`` are updated in place (warm starts).  Returns
    (kkt_violation, sweeps, converged).
    """
    d = b.shape[0]
    kkt = 0.0
    for sweep in range(max_sweeps):
        for j in range(d):
            gjj = gram[j, j]
            if gjj <= 0.0:
                continue
            cj = zty[j] - gb[j] + gjj * b[j]
            if cj > lam_n:
                new = (cj - lam_n) / gjj
            elif cj < -lam_n:
                new = (cj + lam_n) / gjj
            else:
                new = 0.0
            delta = new - b[j]
            if delta != 0.0:
                b[j] = new
                for i in range(d):
                    gb[i] += gram[i, j] * delta
        kkt = 0.0
        for j in range(d):
            g = zty[j] - gb[j]
            if b[j] > 0.0:
                v = abs(g - lam_n)
            elif b[j] < 0.0:
                v = abs(g + lam_n)
            else:
                v = abs(g) - lam_n
                if v < 0.0:
                    v = 0.0
            if v > kkt:
                kkt = v
        if kkt <= tol_kkt:
            return kkt, sweep + 1, True
    return kkt, max_sweeps, False


@dataclass(frozen=True)
class LassoFit:
    """Solution of the penalized least squares problem at one penalty value."""

    coefficients: np.ndarray
    lam: float
    converged: bool
    kkt_violation: float
    objective: float

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=np.float64)
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)


def _objective(gram, zty, y_ss, b, lam_n) -> float:
    return float(0.5 * y_ss - b @ zty + 0.5 * b @ (gram @ b) + lam_n * np.abs(b).sum())


def _validate_design(z: np.ndarray, y: np.ndarray):
    z = np.ascontiguousarray(z, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if z.ndim != 2 or y.ndim != 1 or z.shape[0] != y.shape[0]:
        raise DataError("design and response shapes are inconsistent")
    if not np.isfinite(z).all() or not np.isfinite(y).all():
        raise DataError("design or response has non-finite entries")
    return z, y


def lasso_fit(
    z: np.ndarray,
    y: np.ndarray,
    lam: float,
    tol: float = 1e-8,
    max_iter: int = 5000,
) -> LassoFit:
    """Solve the lasso at a single penalty.

    Convergence is declared when the maximal KKT violation drops below
    ``tol * max|Z'y|``.  With ``lam >= max|Z'y| / n`` the exact solution is
    identically zero.
    """
    z, y = _validate_design(z, y)
    if lam < 0:
        raise DataError("lambda must be nonnegative")
    n, d = z.shape
    gram = z.T @ z
    zty = z.T @ y
    scale = max(np.abs(zty).max(), 1e-300)
    b = np.zeros(d)
    gb = np.zeros(d)
    kkt, _, conv = _cd_solve(gram, zty, lam * n, b, gb, tol * scale, max_iter)
    return LassoFit(
        coefficients=b,
        lam=float(lam),
        converged=bool(conv),
        kkt_violation=float(kkt),
        objective=_objective(gram, zty, float(y @ y), b, lam * n),
    )


def default_lambda_grid(z: np.ndarray, y: np.ndarray, size: int = 100, span: float = 1e-3) -> np.ndarray:
    """Log-spaced penalty grid from the null threshold down by ``span``."""
    z, y = _validate_design(z, y)
    n = z.shape[0]
    lam_max = np.abs(z.T @ y).max() / n
    if lam_max <= 0:
        lam_max = 1.0 / n
    return np.geomspace(lam_max, lam_max * span, size)


def lasso_path(
    z: np.ndarray,
    y: np.ndarray,
    grid: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 5000,
) -> np.ndarray:
    """Warm-started coefficient path over a descending penalty grid.

    Returns an array of shape (len(grid), d).
    """
    z, y = _validate_design(z, y)
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 1:
        raise DataError("penalty grid must be a nonempty 1-d array")
    if np.any(np.diff(grid) > 0):
        raise DataError("penalty grid must be nonincreasing")
    n, d = z.shape
    gram = z.T @ z
    zty = z.T @ y
    scale = max(np.abs(zty).max(), 1e-300)
    b = np.zeros(d)
    gb = np.zeros(d)
    out = np.empty((grid.size, d))
    for i, lam in enumerate(grid):
        _cd_solve(gram, zty, lam * n, b, gb, tol * scale, max_iter)
        out[i] = b
    return out


def lambda_entry_path(
    z: np.ndarray,
    y: np.ndarray,
    grid: np.ndarray | None = None,
    tol: float = 1e-8,
) -> np.ndarray:
    """Per-column entry penalties along the path.

    A column enters at the largest grid value where its absolute residual
    correlation reaches the penalty boundary lam * n (the active-set
    condition), 0.0 if it never does.  Using the boundary score rather than
    the coefficient makes entry detection stable under duplicated columns.
    """
    z, y = _validate_design(z, y)
    if grid is None:
        grid = default_lambda_grid(z, y)
    grid = np.asarray(grid, dtype=np.float64)
    path = lasso_path(z, y, grid, tol=tol)
    gram = z.T @ z
    zty = z.T @ y
    # residual correlations per grid point: c = Z'y - G b
    corr = np.abs(zty[None, :] - path @ gram)
    lam_n = grid[:, None] * z.shape[0]
    # slack must dominate the solver's KKT tolerance or late entries are missed
    slack = np.maximum(1e-9 * lam_n, 4.0 * tol * max(np.abs(zty).max(), 1e-300))
    hit = corr >= lam_n - slack
    entries = np.zeros(z.shape[1])
    any_hit = hit.any(axis=0)
    first = np.argmax(hit, axis=0)
    entries[any_hit] = grid[first[any_hit]]
    return entries


def lcd(fit: LassoFit) -> np.ndarray:
    """Coefficient difference statistic |b_j| - |b_(j+p)| from an augmented fit."""
    coef = fit.coefficients
    if coef.shape[0] % 2 != 0:
        raise DataError("augmented coefficient vector must have even length")
    p = coef.shape[0] // 2
    return np.abs(coef[:p]) - np.abs(coef[p:])


def lsm(entries: np.ndarray) -> np.ndarray:
    """Signed maximum statistic from per-column entry penalties."""
    entries = np.asarray(entries, dtype=np.float64)
    if entries.ndim != 1 or entries.shape[0] % 2 != 0:
        raise DataError("entry vector must be 1-d with even length")
    p = entries.shape[0] // 2
    lam_x = entries[:p]
    lam_k = entries[p:]
    return np.sign(lam_x - lam_k) * np.maximum(lam_x, lam_k)


# ---------------------------------------------------------------------------
# Penalty selection rules


def fixed_x_lambda(z: np.ndarray, y: np.ndarray) -> float:
    """Deterministic penalty sigma_hat * sqrt(2 log p) / n for fixed-X designs.

    sigma_hat comes from the residual of projecting y off col([X, X~]),
    which is a masked-data quantity.  Requires n > 2p.
    """
    z, y = _validate_design(z, y)
    n, d = z.shape
    if n <= d:
        raise DataError(f"residual variance estimate needs n > {d} rows, got {n}")
    coef, _, _, _ = np.linalg.lstsq(z, y, rcond=None)
    resid = y - z @ coef
    sigma_hat = math.sqrt(float(resid @ resid) / (n - d))
    p = d // 2
    return sigma_hat * math.sqrt(2.0 * math.log(max(p, 2))) / n


def cv_lambda(
    z: np.ndarray,
    y: np.ndarray,
    grid: np.ndarray | None = None,
    n_folds: int = 5,
    seed: int = 0,
) -> float:
    """K-fold cross-validated penalty over a path grid.

    Folds are a seeded permutation of row indices, so the choice does not
    depend on the pair ordering of the columns.  Ties prefer the larger
    penalty.
    """
    z, y = _validate_design(z, y)
    n = z.shape[0]
    if n_folds < 2 or n_folds > n:
        raise DataError("n_folds must be in [2, n]")
    if grid is None:
        grid = default_lambda_grid(z, y)
    grid = np.asarray(grid, dtype=np.float64)
    rng = np.random.default_rng([_CV_FOLD_TAG, int(seed) & 0x7FFFFFFF])
    perm = rng.permutation(n)
    folds = np.array_split(perm, n_folds)
    errs = np.zeros((n_folds, grid.size))
    for k, test_idx in enumerate(folds):
        mask = np.ones(n, dtype=bool)
        mask[test_idx] = False
        path = lasso_path(z[mask], y[mask], grid)
        pred = z[test_idx] @ path.T  # (n_test, n_grid)
        errs[k] = ((pred - y[test_idx][:, None]) ** 2).mean(axis=0)
    mean_err = errs.mean(axis=0)
    return float(grid[int(np.argmin(mean_err))])  # grid descends: first winner is largest


# ---------------------------------------------------------------------------
# Statistic wrappers with canonical pair ordering


def _canonicalize_pairs(x: np.ndarray, x_tilde: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stack [X, X~] with each pair in lexicographic order.

    Returns (z_canonical, flip) where flip_j = -1 when the pair was swapped,
    so statistics computed on the canonical design convert back via
    w = flip * w_canonical.  This makes lasso statistics exactly equivariant
    under input column swaps.
    """
    x = np.asarray(x, dtype=np.float64)
    xt = np.asarray(x_tilde, dtype=np.float64)
    if x.shape != xt.shape:
        raise DataError("x and x_tilde must have identical shapes")
    n, p = x.shape
    z = np.empty((n, 2 * p))
    flip = np.ones(p)
    for j in range(p):
        if _lex_first_is_smaller(x[:, j], xt[:, j]):
            z[:, j] = x[:, j]
            z[:, p + j] = xt[:, j]
        else:
            z[:, j] = xt[:, j]
            z[:, p + j] = x[:, j]
            flip[j] = -1.0
    return z, flip


def _prepare_response(y: np.ndarray, response_kind: str) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if response_kind == "binary":
        return y - y.mean()
    return y


def lcd_statistic(
    x: np.ndarray,
    x_tilde: np.ndarray,
    y: np.ndarray,
    lam: float | None = None,
    rule: str = "fixed_x",
    seed: int = 0,
    response_kind: str = "continuous",
) -> FeatureStatVector:
    """Lasso coefficient difference statistic with automatic penalty choice.

    rule 'fixed_x' uses the deterministic residual-variance penalty; 'cv'
    cross-validates over the default grid (model-X usage).
    """
    z, flip = _canonicalize_pairs(x, x_tilde)
    yy = _prepare_response(y, response_kind)
    if lam is None:
        lam = fixed_x_lambda(z, yy) if rule == "fixed_x" else cv_lambda(z, yy, seed=seed)
    fit = lasso_fit(z, yy, lam)
    w = flip * lcd(fit)
    return finalize_statistic(w, "lcd", seed, orientation=flip)


def lsm_statistic(
    x: np.ndarray,
    x_tilde: np.ndarray,
    y: np.ndarray,
    grid: np.ndarray | None = None,
    seed: int = 0,
    response_kind: str = "continuous",
) -> FeatureStatVector:
    """Lasso signed maximum statistic over the default entry grid."""
    z, flip = _canonicalize_pairs(x, x_tilde)
    yy = _prepare_response(y, response_kind)
    entries = lambda_entry_path(z, yy, grid)
    w = flip * lsm(entries)
    return finalize_statistic(w, "lsm", seed, orientation=flip)

"""Knockoff construction: S matrices and fixed-X / Gaussian model-X copies.

The decorrelation matrix S is chosen either as the scaled equicorrelated
solution or by minimizing the trace of the inverse joint Gram matrix
("minimum variance-based reconstructability"), with a block variant for
grouped features.  Both knockoff samplers consume a diagonal S vector or a
full block-diagonal S matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, qr, solve_triangular
from scipy.optimize import minimize_scalar

from .errors import DataError, FeasibilityError
from .model_core import KnockoffModel, normalize_groups, singleton_groups

__all__ = [
    "SMatrixSpec",
    "s_equicorrelated",
    "s_mvr",
    "group_s_block",
    "fixed_x_knockoffs",
    "gaussian_mx_knockoffs",
    "build_knockoffs",
]

_MX_DRAW_TAG = 0x6B6E6F63  # stream tag for model-X knockoff noise


@dataclass(frozen=True)
class SMatrixSpec:
    """Configuration of the S-matrix solver.

    ``min_eig_clamp`` scales the final S by (1 - clamp) so that
    2*Sigma - S keeps a strictly positive eigenvalue margin.
    """

    method: str = "mvr"
    tol: float = 1e-10
    max_iter: int = 100
    min_eig_clamp: float = 1e-3

    def __post_init__(self):
        if self.method not in ("mvr", "equicorrelated"):
            raise DataError(f"unknown S-matrix method {self.method!r}")
        if not 0.0 < self.min_eig_clamp <= 1e-3:
            raise DataError("min_eig_clamp must lie in (0, 1e-3]")
        if self.tol <= 0 or self.max_iter < 1:
            raise DataError("tol must be positive and max_iter >= 1")


def _check_correlation(sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DataError("sigma must be square")
    if not np.isfinite(sigma).all():
        raise DataError("sigma has non-finite entries")
    if np.abs(sigma - sigma.T).max() > 1e-8:
        raise DataError("sigma must be symmetric")
    if np.abs(np.diag(sigma) - 1.0).max() > 1e-6:
        raise DataError("sigma must have unit diagonal (correlation scale)")
    return 0.5 * (sigma + sigma.T)


def s_equicorrelated(sigma: np.ndarray, min_eig_clamp: float = 1e-3) -> np.ndarray:
    """Equicorrelated S: (1 - clamp) * min(2 lambda_min(sigma), 1) on the diagonal."""
    sigma = _check_correlation(sigma)
    lam = np.linalg.eigvalsh(sigma)[0]
    if lam <= 0:
        raise FeasibilityError(f"sigma is not positive definite (lambda_min={lam:.3e})")
    val = (1.0 - min_eig_clamp) * min(2.0 * lam, 1.0)
    return np.full(sigma.shape[0], val)


def _mvr_objective(sigma: np.ndarray, s: np.ndarray) -> float:
    m = 2.0 * sigma - np.diag(s)
    lo = cholesky(m, lower=True)
    inv_l = solve_triangular(lo, np.eye(len(s)), lower=True)
    return float((inv_l ** 2).sum() + (1.0 / s).sum())


def s_mvr(sigma: np.ndarray, spec: SMatrixSpec = SMatrixSpec()) -> np.ndarray:
    """Diagonal S minimizing trace of the inverse joint Gram matrix.

    The objective decomposes as Tr((2 Sigma - S)^-1) + Tr(S^-1).  Cyclic
    coordinate descent with exact scalar minimizers; the rank-one inverse
    updates keep each sweep at O(p^2) per coordinate.  The returned vector is
    scaled by (1 - min_eig_clamp) for a strict feasibility margin.
    """
    sigma = _check_correlation(sigma)
    p = sigma.shape[0]
    lam = np.linalg.eigvalsh(sigma)[0]
    if lam <= 0:
        raise FeasibilityError(f"sigma is not positive definite (lambda_min={lam:.3e})")
    s = np.full(p, 0.5 * min(2.0 * lam, 1.0))
    m = 2.0 * sigma - np.diag(s)
    minv = cho_solve(cho_factor(m, lower=True), np.eye(p))
    obj = float(np.trace(minv) + (1.0 / s).sum())
    for _ in range(spec.max_iter):
        for j in range(p):
            c1 = minv[j, j]
            u = minv[:, j]
            c2 = float(u @ u)
            # exact scalar minimizer of delta -> Tr((M - d e e')^-1) + 1/(s_j + d)
            delta = (1.0 - np.sqrt(c2) * s[j]) / (np.sqrt(c2) + c1)
            s[j] += delta
            minv += (delta / (1.0 - delta * c1)) * np.outer(u, u)
        # refresh the inverse to suppress update drift, then test convergence
        m = 2.0 * sigma - np.diag(s)
        try:
            minv = cho_solve(cho_factor(m, lower=True), np.eye(p))
        except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by theory
            raise FeasibilityError("coordinate descent left the feasible cone") from exc
        new_obj = float(np.trace(minv) + (1.0 / s).sum())
        if obj - new_obj < spec.tol * max(1.0, abs(obj)):
            obj = new_obj
            break
        obj = new_obj
    return (1.0 - spec.min_eig_clamp) * s


def _block_diag_part(sigma: np.ndarray, groups) -> np.ndarray:
    out = np.zeros_like(sigma)
    for g in groups:
        cols = np.asarray(g)
        out[np.ix_(cols, cols)] = sigma[np.ix_(cols, cols)]
    return out


def group_s_block(sigma: np.ndarray, groups, spec: SMatrixSpec = SMatrixSpec()) -> np.ndarray:
    """Block-diagonal S over a feature partition.

    Every group block is parameterized as gamma_g * Sigma_gg.  The
    equicorrelated method uses a single global scale; the mvr method
    optimizes the per-group scales by cyclic bounded line searches on the
    joint objective.  Singleton partitions reduce exactly to the diagonal
    methods.
    """
    sigma = _check_correlation(sigma)
    p = sigma.shape[0]
    groups = normalize_groups(groups, p)
    if all(len(g) == 1 for g in groups):
        if spec.method == "equicorrelated":
            return np.diag(s_equicorrelated(sigma, spec.min_eig_clamp))
        return np.diag(s_mvr(sigma, spec))

    bmat = _block_diag_part(sigma, groups)
    if spec.method == "equicorrelated":
        # largest gamma with gamma * B <= 2 Sigma, capped at 1
        bl = cholesky(bmat, lower=True)
        inner = solve_triangular(bl, solve_triangular(bl, 2.0 * sigma, lower=True).T, lower=True)
        lam = np.linalg.eigvalsh(0.5 * (inner + inner.T))[0]
        if lam <= 0:
            raise FeasibilityError("sigma is not positive definite")
        gamma = min(float(lam), 1.0)
        return (1.0 - spec.min_eig_clamp) * gamma * bmat

    # mvr: cyclic optimization of per-group scales
    n_g = len(groups)
    tr_inv_block = np.empty(n_g)
    for i, g in enumerate(groups):
        cols = np.asarray(g)
        tr_inv_block[i] = np.trace(np.linalg.inv(sigma[np.ix_(cols, cols)]))

    def build(gammas: np.ndarray) -> np.ndarray:
        s = np.zeros_like(sigma)
        for i, g in enumerate(groups):
            cols = np.asarray(g)
            s[np.ix_(cols, cols)] = gammas[i] * sigma[np.ix_(cols, cols)]
        return s

    def objective(gammas: np.ndarray) -> float:
        m = 2.0 * sigma - build(gammas)
        lo = cholesky(m, lower=True)
        inv_l = solve_triangular(lo, np.eye(p), lower=True)
        return float((inv_l ** 2).sum() + (tr_inv_block / gammas).sum())

    gammas = np.full(n_g, 1e-3)  # strictly feasible start
    obj = objective(gammas)
    for _ in range(spec.max_iter):
        for i, g in enumerate(groups):
            cols = np.asarray(g)
            others = gammas.copy()
            others[i] = 0.0
            m_rest = 2.0 * sigma - build(others)
            lo = cholesky(m_rest, lower=True)
            inv_rest = cho_solve((lo, True), np.eye(p))
            blk = sigma[np.ix_(cols, cols)]
            bl = cholesky(blk, lower=True)
            core = bl.T @ inv_rest[np.ix_(cols, cols)] @ bl
            gmax = 1.0 / np.linalg.eigvalsh(0.5 * (core + core.T))[-1]

            def f(gamma, i=i):
                trial = gammas.copy()
                trial[i] = gamma
                return objective(trial)

            res = minimize_scalar(
                f, bounds=(1e-9 * gmax, (1.0 - 1e-9) * gmax), method="bounded",
                options={"xatol": 1e-12},
            )
            gammas[i] = float(res.x)
        new_obj = objective(gammas)
        if obj - new_obj < spec.tol * max(1.0, abs(obj)):
            obj = new_obj
            break
        obj = new_obj
    return (1.0 - spec.min_eig_clamp) * build(gammas)


def _as_smatrix(s: np.ndarray, p: int) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if s.ndim == 1:
        if s.shape[0] != p:
            raise DataError(f"s vector must have length {p}")
        return np.diag(s)
    if s.shape != (p, p):
        raise DataError(f"s must be length-{p} vector or ({p}, {p}) matrix")
    return s


def _chol_psd(a: np.ndarray, what: str) -> np.ndarray:
    """Upper Cholesky factor with escalating jitter for near-singular PSD input."""
    if not a.any():
        return np.zeros_like(a)  # degenerate S = 0: knockoffs must copy exactly
    jitter = 0.0
    for attempt in range(4):
        try:
            return cholesky(a + jitter * np.eye(a.shape[0]), lower=False)
        except np.linalg.LinAlgError:
            jitter = 1e-10 * (10.0 ** attempt)
    raise FeasibilityError(f"{what} is not positive semidefinite within jitter budget")


def fixed_x_knockoffs(x: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Fixed-X knockoff matrix satisfying the Gram conditions.

    X~ = X (I - Sigma^-1 S) + U C with U an orthonormal basis of the
    complement of col(X) and C'C = 2S - S Sigma^-1 S.  Requires n >= 2p and a
    full-rank design; the output is deterministic in ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    n, p = x.shape
    if n < 2 * p:
        raise DataError(f"fixed-X knockoffs need n >= 2p (got n={n}, p={p})")
    sigma = x.T @ x
    smat = _as_smatrix(s, p)
    try:
        factor = cho_factor(sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise FeasibilityError("design matrix is rank deficient") from exc
    sig_inv_s = cho_solve(factor, smat)
    resid_cov = 2.0 * smat - smat @ sig_inv_s
    resid_cov = 0.5 * (resid_cov + resid_cov.T)
    c = _chol_psd(resid_cov, "2S - S Sigma^-1 S")
    q, _ = qr(x, mode="full")
    u_perp = q[:, p : 2 * p]
    return x - x @ sig_inv_s + u_perp @ c


def gaussian_mx_knockoffs(x: np.ndarray, sigma: np.ndarray, s: np.ndarray, seed: int) -> np.ndarray:
    """Gaussian model-X knockoffs for rows x_i ~ N(0, sigma).

    Each row is drawn from N((I - S Sigma^-1) x_i, 2S - S Sigma^-1 S) using a
    seed-derived generator, so the output is bitwise reproducible.
    """
    x = np.asarray(x, dtype=np.float64)
    n, p = x.shape
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape != (p, p):
        raise DataError(f"sigma must be ({p}, {p})")
    smat = _as_smatrix(s, p)
    try:
        factor = cho_factor(sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise FeasibilityError("covariance is not positive definite") from exc
    sig_inv_s = cho_solve(factor, smat)
    mean = x - x @ sig_inv_s
    cond_cov = 2.0 * smat - smat @ sig_inv_s
    cond_cov = 0.5 * (cond_cov + cond_cov.T)
    c = _chol_psd(cond_cov, "2S - S Sigma^-1 S")
    rng = np.random.default_rng([_MX_DRAW_TAG, int(seed) & 0x7FFFFFFF])
    z = rng.standard_normal((n, p))
    return mean + z @ c


def build_knockoffs(
    x: np.ndarray,
    kind: str,
    spec: SMatrixSpec = SMatrixSpec(),
    sigma: np.ndarray | None = None,
    seed: int = 0,
    groups=None,
) -> KnockoffModel:
    """Convenience builder returning a validated :class:`KnockoffModel`.

    Fixed-X uses the Gram matrix of ``x`` (columns should be standardized to
    unit norm).  Model-X uses ``sigma`` when given, else the empirical
    correlation with off-diagonal entries shrunk by a factor 0.9.
    """
    x = np.asarray(x, dtype=np.float64)
    p = x.shape[1]
    if kind == "fixed_x":
        sig = x.T @ x
    elif kind == "model_x":
        if sigma is not None:
            sig = np.asarray(sigma, dtype=np.float64)
        else:
            emp = np.cov(x, rowvar=False)
            d = np.sqrt(np.diag(emp))
            sig = emp / np.outer(d, d)
            off = ~np.eye(p, dtype=bool)
            sig[off] *= 0.9
    else:
        raise DataError(f"unknown knockoff kind {kind!r}")

    if groups is not None and any(len(g) > 1 for g in normalize_groups(groups, p)):
        s = group_s_block(sig, groups, spec)
    elif spec.method == "equicorrelated":
        s = s_equicorrelated(sig, spec.min_eig_clamp)
    else:
        s = s_mvr(sig, spec)

    if kind == "fixed_x":
        xt = fixed_x_knockoffs(x, s)
    else:
        xt = gaussian_mx_knockoffs(x, sig, s, seed)
    model = KnockoffModel(x_tilde=xt, sigma=sig, s=s, kind=kind, groups=groups)
    model.validate(x)
    return model

"""Core data model for knockoff-based controlled feature selection.

Houses the dataset and knockoff containers, the masked-data view consumed by
the masked likelihood ratio (MLR) samplers, prior configuration, and the
feature statistic / Gibbs trace result types.

The masked view deliberately separates public information from the hidden
truth assignment: every column pair {x_j, x_tilde_j} is stored in an order
that is a function of the unordered pair and the masking seed only, so any
statistic computed from the public fields cannot depend on which element is
the real feature.  The hidden bits live in a sealed sub-record and enter only
through the two ``orient_*`` methods that attach signs at finalization time,
and through ``reveal`` (simulation scoring).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import DataError

__all__ = [
    "Dataset",
    "KnockoffModel",
    "MaskedDataset",
    "BasisSpec",
    "InvGammaPrior",
    "FixedValue",
    "BetaPrior",
    "SlabComponent",
    "PointMass",
    "PriorConfig",
    "FeatureStatVector",
    "GibbsTrace",
    "mask",
    "swap_columns",
    "sign_prob_from_w",
    "finalize_statistic",
    "standardize_columns",
    "normalize_groups",
]

_MASK_ORDER_TAG = 0x6D61736B  # stream tag for pair-order bits
_EPS_SIGN_TAG = 0x65707369  # stream tag for epsilon tie-break signs


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    if out is arr:
        out = out.copy()
    out.setflags(write=False)
    return out


def _freeze_int(arr: np.ndarray, dtype=np.int64) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=dtype)
    if out is arr:
        out = out.copy()
    out.setflags(write=False)
    return out


def _check_finite_matrix(x: np.ndarray, name: str) -> None:
    bad = ~np.isfinite(x)
    if bad.any():
        idx = np.argwhere(bad)[0]
        if x.ndim == 2:
            raise DataError(f"{name} contains a non-finite entry", row=int(idx[0]), col=int(idx[1]))
        raise DataError(f"{name} contains a non-finite entry", row=int(idx[0]))


def standardize_columns(x: np.ndarray, center: bool = True) -> np.ndarray:
    """Scale columns of ``x`` to unit Euclidean norm, optionally centering first.

    Raises
    ------
    DataError
        If a column has zero norm after centering.
    """
    x = np.asarray(x, dtype=np.float64)
    if center:
        x = x - x.mean(axis=0, keepdims=True)
    norms = np.linalg.norm(x, axis=0)
    zero = norms <= 0
    if zero.any():
        raise DataError("column has zero norm, cannot standardize", col=int(np.argmax(zero)))
    return x / norms


def normalize_groups(groups, p: int) -> tuple[tuple[int, ...], ...]:
    """Validate and canonicalize a feature partition.

    ``groups`` is an iterable of index collections that must partition
    ``range(p)``.  Returns groups with sorted members, ordered by first member.
    """
    canon = []
    seen: set[int] = set()
    for g in groups:
        members = tuple(sorted(int(j) for j in g))
        if not members:
            raise DataError("empty group in partition")
        for j in members:
            if j < 0 or j >= p:
                raise DataError(f"group member {j} outside feature range [0, {p})")
            if j in seen:
                raise DataError(f"feature {j} appears in more than one group")
            seen.add(j)
        canon.append(members)
    if len(seen) != p:
        missing = sorted(set(range(p)) - seen)
        raise DataError(f"groups do not cover features {missing[:5]}")
    canon.sort(key=lambda g: g[0])
    return tuple(canon)


def singleton_groups(p: int) -> tuple[tuple[int, ...], ...]:
    return tuple((j,) for j in range(p))


@dataclass(frozen=True)
class Dataset:
    """Design matrix and response.

    Parameters
    ----------
    x : ndarray, shape (n, p)
        Feature matrix.  With ``standardize=True`` (default) columns are
        centered and scaled to unit Euclidean norm at construction.
    y : ndarray, shape (n,)
        Response.  Binary responses must be coded in {0, 1}.
    response_kind : {"continuous", "binary"}
    standardize : bool
        Apply column standardization at ingestion.  Pass ``False`` to keep
        the raw scale (e.g. when the model-X distribution of ``x`` matters).
    """

    x: np.ndarray
    y: np.ndarray
    response_kind: str = "continuous"
    standardize: bool = True

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if x.ndim != 2:
            raise DataError("x must be a 2-d array")
        if y.ndim != 1:
            raise DataError("y must be a 1-d array")
        n, p = x.shape
        if n < 1 or p < 1:
            raise DataError("x must have at least one row and one column")
        if y.shape[0] != n:
            raise DataError(f"y has length {y.shape[0]}, expected {n}")
        _check_finite_matrix(x, "x")
        _check_finite_matrix(y, "y")
        if self.response_kind not in ("continuous", "binary"):
            raise DataError(f"unknown response_kind {self.response_kind!r}")
        if self.response_kind == "binary":
            vals = np.unique(y)
            if not np.isin(vals, (0.0, 1.0)).all():
                raise DataError("binary response must take values in {0, 1}")
        if self.standardize:
            x = standardize_columns(x, center=True)
        object.__setattr__(self, "x", _freeze(x))
        object.__setattr__(self, "y", _freeze(y))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class KnockoffModel:
    """A knockoff copy of a design together with its construction metadata.

    Parameters
    ----------
    x_tilde : ndarray, shape (n, p)
        Knockoff matrix.
    sigma : ndarray, shape (p, p)
        Feature covariance (model-X) or Gram matrix X'X (fixed-X).
    s : ndarray
        Decorrelation matrix as a length-p diagonal vector, or a full (p, p)
        block-diagonal matrix for group constructions.
    kind : {"fixed_x", "model_x"}
    groups : tuple of tuples
        Feature partition; singletons unless a group construction was used.
    """

    x_tilde: np.ndarray
    sigma: np.ndarray
    s: np.ndarray
    kind: str
    groups: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("fixed_x", "model_x"):
            raise DataError(f"unknown knockoff kind {self.kind!r}")
        xt = np.asarray(self.x_tilde, dtype=np.float64)
        sig = np.asarray(self.sigma, dtype=np.float64)
        s = np.asarray(self.s, dtype=np.float64)
        if xt.ndim != 2:
            raise DataError("x_tilde must be 2-d")
        p = xt.shape[1]
        if sig.shape != (p, p):
            raise DataError(f"sigma must be ({p}, {p})")
        if s.ndim == 1:
            if s.shape[0] != p:
                raise DataError(f"s vector must have length {p}")
        elif s.shape != (p, p):
            raise DataError(f"s must be a length-{p} vector or ({p}, {p}) matrix")
        groups = self.groups
        if groups is None:
            groups = singleton_groups(p)
        else:
            groups = normalize_groups(groups, p)
        object.__setattr__(self, "x_tilde", _freeze(xt))
        object.__setattr__(self, "sigma", _freeze(sig))
        object.__setattr__(self, "s", _freeze(s))
        object.__setattr__(self, "groups", groups)

    @property
    def p(self) -> int:
        return self.x_tilde.shape[1]

    def s_matrix(self) -> np.ndarray:
        """The decorrelation matrix as a full (p, p) array."""
        return np.diag(self.s) if self.s.ndim == 1 else np.asarray(self.s)

    def s_diag(self) -> np.ndarray:
        return np.asarray(self.s) if self.s.ndim == 1 else np.diag(self.s)

    def validate(self, x: np.ndarray, tol: float = 1e-8) -> None:
        """Check the defining Gram / PSD conditions against the design ``x``.

        For fixed-X: ``x_tilde' x_tilde == sigma`` and
        ``x' x_tilde == sigma - S`` entrywise within ``tol``.
        For model-X: ``2 sigma - S`` must have smallest eigenvalue >= -tol.
        """
        x = np.asarray(x, dtype=np.float64)
        smat = self.s_matrix()
        if self.kind == "fixed_x":
            g1 = self.x_tilde.T @ self.x_tilde - self.sigma
            g2 = x.T @ self.x_tilde - (self.sigma - smat)
            err = max(np.abs(g1).max(), np.abs(g2).max())
            if err > tol:
                raise DataError(f"fixed-X Gram identity violated by {err:.3e} (tol {tol:.1e})")
        else:
            w = np.linalg.eigvalsh(2.0 * self.sigma - smat)
            if w.min() < -tol:
                raise DataError(f"2*sigma - S has negative eigenvalue {w.min():.3e}")


@dataclass(frozen=True)
class _HiddenTruth:
    """Sealed truth assignment. 1 means the second public element is the real one."""

    bits: np.ndarray  # (n_units,) uint8

    def __post_init__(self):
        object.__setattr__(self, "bits", _freeze_int(self.bits, np.uint8))


@dataclass(frozen=True)
class Revealed:
    """Unmasked truth, for simulation scoring only."""

    x: np.ndarray | None = None
    x_tilde: np.ndarray | None = None
    beta_tilde: np.ndarray | None = None


def _lex_first_is_smaller(a: np.ndarray, b: np.ndarray) -> bool:
    """True if flattened ``a`` precedes ``b`` lexicographically (ties: True)."""
    af = a.ravel()
    bf = b.ravel()
    diff = af != bf
    if not diff.any():
        return True
    k = int(np.argmax(diff))
    return bool(af[k] < bf[k])


@dataclass(frozen=True)
class MaskedDataset:
    """Public masked view of a (design, knockoff, response) triple.

    Model-X payload: response ``y`` plus, for every swap unit, the unordered
    column block pair stored as ``pair_a`` / ``pair_b``.  Fixed-X payload: the
    matrices ``x`` / ``x_tilde`` (legitimately public under the fixed-X Gram
    conditions), the averaged inner products ``xi``, the magnitudes
    ``abs_beta_tilde`` of the S-whitened contrast, the Gram matrix ``sigma``
    and the ``s`` diagonal.

    The order of each (pair_a, pair_b) block is a deterministic function of
    the unordered pair and ``seed`` only; it carries no information about
    which element is the real feature.
    """

    kind: str
    response_kind: str
    seed: int
    groups: tuple[tuple[int, ...], ...]
    y: np.ndarray | None = None
    pair_a: np.ndarray | None = None
    pair_b: np.ndarray | None = None
    x: np.ndarray | None = None
    x_tilde: np.ndarray | None = None
    xi: np.ndarray | None = None
    abs_beta_tilde: np.ndarray | None = None
    sigma: np.ndarray | None = None
    s: np.ndarray | None = None
    _hidden: _HiddenTruth = field(default=None, repr=False)  # type: ignore[assignment]

    @property
    def p(self) -> int:
        if self.kind == "model_x":
            return self.pair_a.shape[1]
        return self.xi.shape[0]

    @property
    def n_units(self) -> int:
        return len(self.groups)

    def orient_stats(self, values: np.ndarray) -> np.ndarray:
        """Flip signs of per-unit statistics into true-feature orientation.

        ``values`` has unit index on its last axis, computed under the
        convention that positive means 'the first public element is the real
        feature' (model-X) or 'beta_tilde_j is positive' (fixed-X).
        """
        bits = self._hidden.bits.astype(np.float64)
        return np.asarray(values, dtype=np.float64) * (1.0 - 2.0 * bits)

    def orient_bits(self, bits_public: np.ndarray) -> np.ndarray:
        """Convert public assignment indicators into truth indicators.

        Input convention: 1 means the sampler currently assigns the first
        public element (model-X) or the positive sign (fixed-X).
        """
        b = np.asarray(bits_public, dtype=np.uint8)
        return np.bitwise_xor(b, self._hidden.bits)

    def reveal(self) -> Revealed:
        """Return the unmasked truth (simulation scoring only)."""
        h = self._hidden.bits.astype(bool)
        if self.kind == "model_x":
            x = np.array(self.pair_a)
            xt = np.array(self.pair_b)
            for u, g in enumerate(self.groups):
                if h[u]:
                    cols = list(g)
                    x[:, cols], xt[:, cols] = self.pair_b[:, cols], self.pair_a[:, cols]
            return Revealed(x=x, x_tilde=xt)
        signs = np.where(h, -1.0, 1.0)
        return Revealed(x=self.x, x_tilde=self.x_tilde, beta_tilde=signs * self.abs_beta_tilde)


def mask(dataset: Dataset, knockoffs: KnockoffModel, seed: int) -> MaskedDataset:
    """Build the masked view of (dataset, knockoffs).

    Model-X: for every swap unit the pair {x block, knockoff block} is stored
    in a canonical order reshuffled by seed-derived bits; the hidden record
    notes which element is the real block.  Fixed-X: computes the sufficient
    statistics xi = (X + X~)'y / 2 and beta_tilde = S^(-1) (X - X~)'y, storing
    the magnitudes publicly and the signs in the hidden record.

    Raises
    ------
    DataError
        If shapes differ, or fixed-X masking is requested with a zero S
        diagonal entry (the contrast magnitude would be undefined), or a
        non-singleton partition is used with fixed-X masking.
    """
    x = dataset.x
    xt = knockoffs.x_tilde
    if xt.shape != x.shape:
        raise DataError(f"x_tilde shape {xt.shape} does not match x shape {x.shape}")
    p = dataset.p
    groups = knockoffs.groups if knockoffs.groups is not None else singleton_groups(p)
    n_units = len(groups)
    order_rng = np.random.default_rng([_MASK_ORDER_TAG, seed & 0x7FFFFFFF])
    shuffle_bits = order_rng.integers(0, 2, size=n_units).astype(np.uint8)

    if knockoffs.kind == "model_x":
        pair_a = np.empty_like(x)
        pair_b = np.empty_like(x)
        hidden = np.zeros(n_units, dtype=np.uint8)
        for u, g in enumerate(groups):
            cols = list(g)
            bx = x[:, cols]
            bt = xt[:, cols]
            x_first = _lex_first_is_smaller(bx, bt)
            if shuffle_bits[u]:
                x_first = not x_first
            if x_first:
                pair_a[:, cols] = bx
                pair_b[:, cols] = bt
                hidden[u] = 0
            else:
                pair_a[:, cols] = bt
                pair_b[:, cols] = bx
                hidden[u] = 1
        return MaskedDataset(
            kind="model_x",
            response_kind=dataset.response_kind,
            seed=int(seed),
            groups=groups,
            y=dataset.y,
            pair_a=_freeze(pair_a),
            pair_b=_freeze(pair_b),
            _hidden=_HiddenTruth(hidden),
        )

    # fixed-X
    if dataset.response_kind != "continuous":
        raise DataError("fixed-X masking requires a continuous response")
    if any(len(g) != 1 for g in groups):
        raise DataError("fixed-X masking supports singleton groups only")
    s_diag = knockoffs.s_diag()
    if (s_diag <= 0).any():
        raise DataError(
            "fixed-X masking requires strictly positive S diagonal",
            col=int(np.argmax(s_diag <= 0)),
        )
    y = dataset.y
    xi = (x + xt).T @ y / 2.0
    beta_tilde = (x - xt).T @ y / s_diag
    hidden = (beta_tilde < 0).astype(np.uint8)
    return MaskedDataset(
        kind="fixed_x",
        response_kind=dataset.response_kind,
        seed=int(seed),
        groups=groups,
        y=None,
        x=x,
        x_tilde=xt,
        xi=_freeze(xi),
        abs_beta_tilde=_freeze(np.abs(beta_tilde)),
        sigma=knockoffs.sigma,
        s=_freeze(s_diag),
        _hidden=_HiddenTruth(hidden),
    )


def swap_columns(x: np.ndarray, x_tilde: np.ndarray, j_set) -> tuple[np.ndarray, np.ndarray]:
    """Exchange columns ``j_set`` between ``x`` and ``x_tilde`` (copies)."""
    x = np.array(x, dtype=np.float64)
    xt = np.array(x_tilde, dtype=np.float64)
    if x.shape != xt.shape:
        raise DataError("x and x_tilde must have identical shapes")
    idx = np.asarray(sorted(set(int(j) for j in j_set)), dtype=np.int64)
    if idx.size:
        if idx.min() < 0 or idx.max() >= x.shape[1]:
            raise DataError("swap index outside column range")
        x[:, idx], xt[:, idx] = xt[:, idx].copy(), x[:, idx].copy()
    return x, xt


def sign_prob_from_w(w_abs: np.ndarray) -> np.ndarray:
    """Posterior sign probability exp(|w|) / (1 + exp(|w|)) for each entry.

    Input must be nonnegative.  Computed as the logistic sigmoid of |w|,
    which is stable for large arguments.
    """
    w_abs = np.asarray(w_abs, dtype=np.float64)
    if not np.isfinite(w_abs).all():
        raise DataError("sign_prob_from_w expects finite magnitudes")
    if (w_abs < 0).any():
        raise DataError("sign_prob_from_w expects nonnegative magnitudes")
    return expit(w_abs)


def _epsilon_randomize(w: np.ndarray, seed: int) -> np.ndarray:
    """Replace exact zeros by +-epsilon with seeded signs.

    Epsilon is half the smallest nonzero magnitude (1e-8 when every entry is
    zero), so randomized entries rank strictly below every real signal.  The
    implied sign probability on a tied entry is a tie-break artifact, not an
    inference; callers comparing probabilities against an exact reference
    should restrict to untied coordinates.
    """
    w = np.array(w, dtype=np.float64)
    zero = w == 0.0
    if not zero.any():
        return w
    nz = np.abs(w[~zero])
    eps = 0.5 * nz.min() if nz.size else 1e-8
    rng = np.random.default_rng([_EPS_SIGN_TAG, int(seed) & 0x7FFFFFFF])
    signs = rng.integers(0, 2, size=w.shape[0]) * 2 - 1
    w[zero] = eps * signs[zero]
    return w


@dataclass(frozen=True)
class FeatureStatVector:
    """Feature statistic vector W with provenance tag.

    ``posterior_sign_prob`` is populated by MLR-type statistics and satisfies
    |w_j| = log(p_j / (1 - p_j)) by construction.
    """

    w: np.ndarray
    method: str
    posterior_sign_prob: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 1:
            raise DataError("w must be 1-d")
        _check_finite_matrix(w, "w")
        if (w == 0.0).any():
            raise DataError("w contains exact zeros; epsilon randomization missing")
        object.__setattr__(self, "w", _freeze(w))
        if self.posterior_sign_prob is not None:
            prob = np.asarray(self.posterior_sign_prob, dtype=np.float64)
            if prob.shape != w.shape:
                raise DataError("posterior_sign_prob shape mismatch")
            if (prob < 0.5).any() or (prob > 1.0).any():
                raise DataError("posterior_sign_prob outside [0.5, 1]")
            object.__setattr__(self, "posterior_sign_prob", _freeze(prob))


def finalize_statistic(
    w_raw: np.ndarray,
    method: str,
    seed: int,
    with_sign_prob: bool = False,
    orientation: np.ndarray | None = None,
) -> FeatureStatVector:
    """Apply epsilon tie-breaking and wrap a raw statistic vector.

    ``orientation`` (entries +-1), when given, states how ``w_raw`` relates
    to a swap-invariant frame (canonical pair order, or the public masked
    view): tie-break signs are then drawn in that frame and oriented
    afterwards, which keeps the statistic exactly sign-equivariant under
    column swaps even on tied entries.
    """
    w = np.asarray(w_raw, dtype=np.float64)
    if orientation is not None:
        orientation = np.asarray(orientation, dtype=np.float64)
        if orientation.shape != w.shape or not np.all(np.abs(orientation) == 1.0):
            raise DataError("orientation must be a +-1 vector matching w")
        w = orientation * _epsilon_randomize(orientation * w, seed)
    else:
        w = _epsilon_randomize(w, seed)
    prob = sign_prob_from_w(np.abs(w)) if with_sign_prob else None
    return FeatureStatVector(w=w, method=method, posterior_sign_prob=prob)


@dataclass(frozen=True)
class GibbsTrace:
    """Post burn-in draws from an MLR Gibbs run, pooled over chains.

    ``eta`` holds per-iteration log likelihood ratios per swap unit in
    true-feature orientation; ``sign_indicators`` the corresponding correct
    assignment indicators.  ``tau2`` is (n, m) for an m-slab mixture.
    """

    eta: np.ndarray
    sign_indicators: np.ndarray
    sigma2: np.ndarray
    tau2: np.ndarray
    p0: np.ndarray
    burn_in: int
    chain_ids: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=np.float64)
        if eta.ndim != 2 or eta.shape[0] < 1:
            raise DataError("eta must be (n_kept, n_units) with n_kept >= 1")
        _check_finite_matrix(eta, "eta")
        bits = np.asarray(self.sign_indicators)
        if bits.shape != eta.shape:
            raise DataError("sign_indicators shape mismatch")
        n = eta.shape[0]
        for name in ("sigma2", "p0"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.shape[0] != n:
                raise DataError(f"{name} length mismatch")
        object.__setattr__(self, "eta", _freeze(eta))
        object.__setattr__(self, "sign_indicators", _freeze_int(bits, np.uint8))
        object.__setattr__(self, "sigma2", _freeze(np.asarray(self.sigma2)))
        object.__setattr__(self, "tau2", _freeze(np.asarray(self.tau2)))
        object.__setattr__(self, "p0", _freeze(np.asarray(self.p0)))
        object.__setattr__(self, "chain_ids", _freeze_int(np.asarray(self.chain_ids)))

    @property
    def n_kept(self) -> int:
        return self.eta.shape[0]


# ---------------------------------------------------------------------------
# Prior configuration


@dataclass(frozen=True)
class BasisSpec:
    """Per-feature basis for the model-X likelihood.

    kind 'identity' uses the raw column; 'cubic_spline' expands each column
    into (x, x^2, x^3) plus one truncated cubic term per interior knot, with
    knots at empirical quantiles of the pooled column pair.
    """

    kind: str = "identity"
    knots: int = 1

    def __post_init__(self):
        if self.kind not in ("identity", "cubic_spline"):
            raise DataError(f"unknown basis kind {self.kind!r}")
        if self.kind == "cubic_spline" and self.knots < 1:
            raise DataError("cubic_spline basis needs at least one knot")

    def size(self) -> int:
        return 1 if self.kind == "identity" else 3 + self.knots


@dataclass(frozen=True)
class InvGammaPrior:
    """Inverse-gamma hyperprior with density ~ x^(-shape-1) exp(-rate / x)."""

    shape: float
    rate: float

    def __post_init__(self):
        if self.shape <= 0 or self.rate <= 0:
            raise DataError("inverse-gamma hyperprior needs positive shape and rate")


@dataclass(frozen=True)
class FixedValue:
    """Pin a hyperparameter at a fixed value (its Gibbs update is skipped)."""

    value: float

    def __post_init__(self):
        if not np.isfinite(self.value) or self.value < 0:
            raise DataError("fixed hyperparameter value must be finite and nonnegative")


@dataclass(frozen=True)
class BetaPrior:
    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise DataError("beta hyperprior needs positive parameters")


@dataclass(frozen=True)
class SlabComponent:
    """One slab of the coefficient mixture prior.

    ``variance`` is the prior on the slab variance tau_k^2; ``weight_conc``
    the Dirichlet concentration of the slab's mixture weight (used when the
    mixture has more than one slab).
    """

    variance: InvGammaPrior | FixedValue = InvGammaPrior(2.0, 2.0)
    weight_conc: float = 1.0

    def __post_init__(self):
        if self.weight_conc <= 0:
            raise DataError("slab weight concentration must be positive")


@dataclass(frozen=True)
class PointMass:
    """Exact coefficient vector and noise variance for oracle statistics."""

    beta: np.ndarray
    sigma2: float = 1.0

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        if beta.ndim != 1:
            raise DataError("point-mass beta must be 1-d")
        _check_finite_matrix(beta, "beta")
        if self.sigma2 <= 0:
            raise DataError("point-mass sigma2 must be positive")
        object.__setattr__(self, "beta", _freeze(beta))


@dataclass(frozen=True)
class PriorConfig:
    """Hierarchical prior for the MLR samplers.

       beta_j = 0 with prob p0, else drawn from slab k with prob p_k,
       beta_j | slab k  ~  Normal(0, tau_k^2 I)         (blockwise for groups)
       tau_k^2 ~ InvGamma(a_k, b_k),  sigma^2 ~ InvGamma(a_s, b_s),
       (p0, p_1..p_m) ~ Dirichlet(a0, conc_1..conc_m)   (Beta(a0, b0) if m=1).

    Any of the variance / sparsity priors may be pinned with ``FixedValue``,
    which disables the corresponding Gibbs update (needed e.g. when comparing
    against exact enumeration).  ``point_mass``, when set, replaces the whole
    hierarchy by an exact (beta, sigma2) pair.
    """

    basis: BasisSpec = BasisSpec()
    mixture: tuple[SlabComponent, ...] = (SlabComponent(),)
    sigma2_prior: InvGammaPrior | FixedValue = InvGammaPrior(2.0, 2.0)
    sparsity_prior: BetaPrior | FixedValue = BetaPrior(1.0, 1.0)
    point_mass: PointMass | None = None

    def __post_init__(self):
        if isinstance(self.mixture, SlabComponent):
            object.__setattr__(self, "mixture", (self.mixture,))
        if len(self.mixture) < 1:
            raise DataError("mixture needs at least one slab component")
        if isinstance(self.sparsity_prior, FixedValue):
            v = self.sparsity_prior.value
            if v > 1.0:
                raise DataError("fixed sparsity weight must lie in [0, 1]")

    @property
    def n_slabs(self) -> int:
        return len(self.mixture)

    def weight_concentration(self) -> np.ndarray:
        """Dirichlet concentration over (spike, slab_1, ..., slab_m)."""
        if isinstance(self.sparsity_prior, FixedValue):
            raise DataError("sparsity prior is pinned; no concentration available")
        a0, b0 = self.sparsity_prior.a, self.sparsity_prior.b
        if self.n_slabs == 1:
            return np.array([a0, b0], dtype=np.float64)
        return np.array([a0] + [c.weight_conc for c in self.mixture], dtype=np.float64)

    def fixed_weights(self) -> np.ndarray | None:
        """Mixture weights when the sparsity prior is pinned, else None."""
        if not isinstance(self.sparsity_prior, FixedValue):
            return None
        p0 = self.sparsity_prior.value
        m = self.n_slabs
        rest = (1.0 - p0) / m
        return np.array([p0] + [rest] * m, dtype=np.float64)

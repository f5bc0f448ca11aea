"""Candidate basis expansion for the model-X sampler.

Each masked unit contributes two candidate column blocks, one per element of
the unordered pair.  The identity basis keeps the raw columns; the cubic
spline basis expands each column into (x, x^2, x^3, hinge terms) with knots
at pooled quantiles.  Basis columns are standardized with statistics pooled
over both candidates so the expansion cannot leak which element is the
feature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from ..model_core import BasisSpec, MaskedDataset

__all__ = ["CandidateBases", "build_candidate_bases"]


@dataclass(frozen=True)
class CandidateBases:
    """Stacked candidate design blocks.

    ``phi_a[:, offsets[u]:offsets[u+1]]`` is unit u's block built from the
    first public pair element, ``phi_b`` likewise from the second.  Blocks
    are contiguous and ordered by unit.
    """

    phi_a: np.ndarray
    phi_b: np.ndarray
    offsets: np.ndarray

    @property
    def n_units(self) -> int:
        return self.offsets.shape[0] - 1

    def block_size(self, u: int) -> int:
        return int(self.offsets[u + 1] - self.offsets[u])


def _spline_columns(v: np.ndarray, knots: np.ndarray) -> np.ndarray:
    cols = [v, v**2, v**3]
    for t in knots:
        h = np.maximum(v - t, 0.0)
        cols.append(h**3)
    return np.column_stack(cols)


def _expand_column(a: np.ndarray, b: np.ndarray, n_knots: int) -> tuple[np.ndarray, np.ndarray]:
    pooled = np.concatenate([a, b])
    qs = (np.arange(1, n_knots + 1)) / (n_knots + 1)
    knots = np.quantile(pooled, qs)
    phi_a = _spline_columns(a, knots)
    phi_b = _spline_columns(b, knots)
    stacked = np.vstack([phi_a, phi_b])
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    return (phi_a - mean) / std, (phi_b - mean) / std


def build_candidate_bases(masked: MaskedDataset, basis: BasisSpec) -> CandidateBases:
    """Build per-unit candidate blocks from the public pair columns."""
    if masked.kind != "model_x":
        raise DataError("candidate bases are only defined for model-X masked data")
    pair_a = masked.pair_a
    pair_b = masked.pair_b
    p = pair_a.shape[1]
    groups = masked.groups
    per_feature = 1 if basis.kind == "identity" else 3 + basis.knots

    offsets = np.zeros(len(groups) + 1, dtype=np.int64)
    for u, g in enumerate(groups):
        offsets[u + 1] = offsets[u] + per_feature * len(g)
    total = int(offsets[-1])
    n = pair_a.shape[0]
    phi_a = np.empty((n, total), dtype=np.float64)
    phi_b = np.empty((n, total), dtype=np.float64)

    if basis.kind == "identity":
        col = 0
        for g in groups:
            for j in g:
                phi_a[:, col] = pair_a[:, j]
                phi_b[:, col] = pair_b[:, j]
                col += 1
    else:
        col = 0
        for g in groups:
            for j in g:
                ea, eb = _expand_column(pair_a[:, j], pair_b[:, j], basis.knots)
                phi_a[:, col : col + per_feature] = ea
                phi_b[:, col : col + per_feature] = eb
                col += per_feature
    if p != sum(len(g) for g in groups):
        raise DataError("groups do not partition the feature set")
    return CandidateBases(phi_a=phi_a, phi_b=phi_b, offsets=offsets)

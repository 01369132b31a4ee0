"""Nonparametric extremal-dependence diagnostics.

Rank transforms to pseudo-uniform margins, the empirical extremal
correlation chi (conditional tail exceedance probability), empirical
spectral (angular) samples on the unit-Frechet scale, and the l2 error
between chi vectors used to score dependence models.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DataError, UndefinedEstimateError

__all__ = [
    "PseudoGrid",
    "ChiMatrix",
    "SpectralSample",
    "rank_transform",
    "chi_empirical",
    "chi_matrix",
    "frechet_transform",
    "spectral_empirical",
    "chi_l2_error",
    "select_random_pairs",
    "select_site_pairs",
]

log = logging.getLogger(__name__)

Site = tuple[int, int]
Pair = tuple[Site, Site]


@dataclass
class PseudoGrid:
    """n observations of an H x W grid of pseudo-uniform values in (0, 1)."""

    values: np.ndarray  # (n, H, W), every entry strictly inside (0, 1)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3:
            raise DataError(f"pseudo grid must be (n, H, W), got shape {self.values.shape}")
        if np.any(self.values <= 0.0) or np.any(self.values >= 1.0):
            raise DataError("pseudo observations must lie strictly in (0, 1)")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.values.shape[1], self.values.shape[2]

    def site(self, site: Site) -> np.ndarray:
        r, c = site
        return self.values[:, r, c]


@dataclass
class ChiMatrix:
    """Extremal correlation estimates for a list of site pairs at threshold q.

    `chi` is NaN where the estimate is undefined (no conditioning
    exceedances); `defined` marks the valid entries.
    """

    pairs: list[Pair]
    chi: np.ndarray
    q: float
    defined: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.chi = np.asarray(self.chi, dtype=float)
        if self.defined is None:
            self.defined = np.isfinite(self.chi)
        self.defined = np.asarray(self.defined, dtype=bool)
        if len(self.pairs) != self.chi.size or self.chi.size != self.defined.size:
            raise DataError("pairs, chi and defined must have equal length")
        ok = self.chi[self.defined]
        if np.any(ok < 0.0) or np.any(ok > 1.0):
            raise DataError("chi estimates must lie in [0, 1]")

    @property
    def n_undefined(self) -> int:
        return int(np.sum(~self.defined))


@dataclass
class SpectralSample:
    """Empirical extremal angles of one site pair.

    Angles are x / (x + y) on the unit-Frechet scale, conditional on the
    radius x + y exceeding `threshold_u`.
    """

    angles: np.ndarray
    threshold_u: float
    pair: Optional[Pair] = None

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        if self.angles.size and (np.any(self.angles < 0.0) or np.any(self.angles > 1.0)):
            raise DataError("extremal angles must lie in [0, 1]")


def rank_transform(column: Sequence[float]) -> np.ndarray:
    """Map a sample to pseudo-uniform values rank/(n+1), midranks for ties.

    The output is invariant under strictly increasing transformations of the
    input; without ties it is a permutation of {1/(n+1), ..., n/(n+1)}.
    """
    column = np.asarray(column, dtype=float).ravel()
    n = column.size
    if n < 2:
        raise DataError(f"rank transform needs at least 2 observations, got {n}")
    return rankdata(column, method="average") / (n + 1.0)


def chi_empirical(u: Sequence[float], v: Sequence[float], q: float) -> float:
    """Empirical extremal correlation at finite threshold q.

    Estimates P(U > q | V > q) as the proportion of joint exceedances among
    the exceedances of `v`.  Both inputs should already be on a uniform
    scale (e.g. from :func:`rank_transform`).

    Raises
    ------
    UndefinedEstimateError
        If `v` never exceeds q; the caller decides the policy.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.size != v.size:
        raise DataError(f"length mismatch: {u.size} vs {v.size}")
    if u.size < 2:
        raise DataError("chi estimation needs at least 2 observations")
    if not 0.0 < q < 1.0:
        raise DataError(f"threshold q must lie in (0, 1), got {q}")
    cond = v > q
    n_cond = int(np.sum(cond))
    if n_cond == 0:
        raise UndefinedEstimateError(f"no exceedances of q={q} in the conditioning margin")
    joint = int(np.sum(cond & (u > q)))
    return float(min(1.0, max(0.0, joint / n_cond)))


def chi_matrix(pseudo: PseudoGrid, pairs: Sequence[Pair], q: float) -> ChiMatrix:
    """Apply :func:`chi_empirical` to every site pair of a pseudo grid.

    Pairs whose estimate is undefined are marked (NaN) rather than aborting
    the whole matrix.
    """
    H, W = pseudo.grid_shape
    chi = np.empty(len(pairs))
    defined = np.ones(len(pairs), dtype=bool)
    for k, (a, b) in enumerate(pairs):
        for (r, c) in (a, b):
            if not (0 <= r < H and 0 <= c < W):
                raise DataError(f"site ({r}, {c}) outside grid {H}x{W}")
        try:
            chi[k] = chi_empirical(pseudo.site(a), pseudo.site(b), q)
        except UndefinedEstimateError:
            chi[k] = np.nan
            defined[k] = False
    if not np.all(defined):
        log.warning("chi matrix: %d of %d pairs undefined at q=%g",
                    int(np.sum(~defined)), len(pairs), q)
    return ChiMatrix(pairs=list(pairs), chi=chi, q=q, defined=defined)


def frechet_transform(u) -> np.ndarray | float:
    """Map uniform values to the unit-Frechet scale, x = -1/log(u)."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise DataError("Frechet transform requires values strictly in (0, 1)")
    out = -1.0 / np.log(u)
    return float(out) if out.ndim == 0 else out


def spectral_empirical(
    u: Sequence[float],
    v: Sequence[float],
    radius_quantile: float,
    pair: Optional[Pair] = None,
) -> SpectralSample:
    """Empirical spectral (angular) sample of a pair of uniform margins.

    Transforms both margins to unit Frechet, forms radii r = x + y and
    angles w = x / r, and keeps the angles whose radius exceeds the
    empirical `radius_quantile`-quantile of the radii.  Under strong
    extremal dependence the angles concentrate near 1/2; under weak
    dependence they pile up near 0 and 1.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.size != v.size:
        raise DataError(f"length mismatch: {u.size} vs {v.size}")
    if not 0.0 < radius_quantile < 1.0:
        raise DataError(f"radius quantile must lie in (0, 1), got {radius_quantile}")
    x = frechet_transform(u)
    y = frechet_transform(v)
    r = x + y
    threshold = float(np.quantile(r, radius_quantile))
    keep = r > threshold
    if int(np.sum(keep)) < 5:
        raise UndefinedEstimateError(
            f"only {int(np.sum(keep))} radii exceed the {radius_quantile}-quantile; need >= 5"
        )
    angles = x[keep] / r[keep]
    return SpectralSample(angles=angles, threshold_u=threshold, pair=pair)


def chi_l2_error(a: ChiMatrix, b: ChiMatrix, return_skip_count: bool = False):
    """Euclidean norm of the difference between two chi vectors.

    Pairs undefined in either input are skipped; the skip count is logged
    and returned when `return_skip_count` is set.  If no pair is defined in
    both inputs the error itself is undefined and raises.
    """
    if a.pairs != b.pairs:
        raise DataError("chi matrices evaluate different pair lists")
    if a.q != b.q:
        raise DataError(f"chi matrices use different thresholds: {a.q} vs {b.q}")
    both = a.defined & b.defined
    skipped = int(np.sum(~both))
    if not np.any(both):
        raise UndefinedEstimateError("no pair is defined in both chi matrices")
    if skipped:
        log.warning("chi l2 error: skipping %d undefined pairs of %d", skipped, both.size)
    err = float(np.linalg.norm(a.chi[both] - b.chi[both]))
    if return_skip_count:
        return err, skipped
    return err


def _all_distinct_pairs(grid_shape: tuple[int, int]) -> list[Pair]:
    H, W = grid_shape
    sites = [(r, c) for r in range(H) for c in range(W)]
    return [(sites[i], sites[j]) for i in range(len(sites)) for j in range(i + 1, len(sites))]


def select_random_pairs(grid_shape: tuple[int, int], n_pairs: int, seed) -> list[Pair]:
    """Draw distinct site pairs uniformly without replacement, seeded."""
    pairs = _all_distinct_pairs(grid_shape)
    if n_pairs > len(pairs):
        raise DataError(f"grid {grid_shape} has only {len(pairs)} distinct pairs")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(pairs), size=n_pairs, replace=False)
    return [pairs[i] for i in idx]


def select_site_pairs(grid_shape: tuple[int, int], n_sites: int, seed) -> list[Pair]:
    """Pick `n_sites` random sites and return all pairs between them.

    Mirrors the evaluation protocol of scoring extremal correlations
    between randomly selected locations.
    """
    H, W = grid_shape
    total = H * W
    if n_sites > total:
        raise DataError(f"grid {grid_shape} has only {total} sites")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(total, size=n_sites, replace=False)
    sites = [(int(s // W), int(s % W)) for s in chosen]
    return [(sites[i], sites[j]) for i in range(len(sites)) for j in range(i + 1, len(sites))]

"""Synthetic gridded maxima with known margins and known tail dependence.

Validation data for the emulator: margins are exact GEV by construction
(uniforms pushed through the quantile function), and the dependence is one
of

  gauss_copula  distance-decay Gaussian copula, corr(h) = exp(-h / range);
                smooth spatially coherent fields, asymptotically
                independent tails.
  hr_pairs      independent sites except designated disjoint pairs carrying
                exact Husler-Reiss dependence, so empirical chi has a
                closed-form target.
  mixed         gauss_copula base with designated pairs overwritten by
                Husler-Reiss draws (those sites decouple from the rest).
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .brown_resnick import hr_bivariate_sample
from .dependence import Pair
from .errors import DataError, ParameterError
from .gev import GevParams, gev_quantile
from .pipeline import MaximaGrid

__all__ = ["make_synthetic", "margin_grid"]

_OPEN = 1e-12  # keep uniforms strictly inside (0, 1)


def margin_grid(grid_shape: tuple[int, int], params) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Broadcast margin parameters to per-site (mu, sigma, xi) arrays.

    `params` may be a GevParams / (mu, sigma, xi) triple applied everywhere,
    or a dict with per-site arrays under keys mu / sigma / xi.
    """
    H, W = grid_shape
    if isinstance(params, dict):
        mu = np.broadcast_to(np.asarray(params["mu"], dtype=float), (H, W)).copy()
        sigma = np.broadcast_to(np.asarray(params["sigma"], dtype=float), (H, W)).copy()
        xi = np.broadcast_to(np.asarray(params["xi"], dtype=float), (H, W)).copy()
    else:
        p = params if isinstance(params, GevParams) else GevParams(*params)
        mu = np.full((H, W), p.mu)
        sigma = np.full((H, W), p.sigma)
        xi = np.full((H, W), p.xi)
    if np.any(sigma <= 0):
        raise ParameterError("margin scale must be positive everywhere")
    return mu, sigma, xi


def _gauss_copula_uniforms(grid_shape, n, corr_range, rng) -> np.ndarray:
    if corr_range <= 0:
        raise ParameterError(f"correlation range must be positive, got {corr_range}")
    H, W = grid_shape
    coords = np.array([(r, c) for r in range(H) for c in range(W)], dtype=float)
    dist = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=-1)
    cov = np.exp(-dist / corr_range)
    cov[np.diag_indices_from(cov)] += 1e-10
    chol = np.linalg.cholesky(cov)
    z = rng.standard_normal((n, H * W)) @ chol.T
    return ndtr(z)


def _validate_pairs(pairs: Sequence[Pair], grid_shape) -> list[Pair]:
    H, W = grid_shape
    seen: set[tuple[int, int]] = set()
    for a, b in pairs:
        for (r, c) in (a, b):
            if not (0 <= r < H and 0 <= c < W):
                raise DataError(f"site ({r}, {c}) outside grid {H}x{W}")
        if a == b:
            raise DataError(f"pair {a} links a site with itself")
        if a in seen or b in seen:
            raise DataError("designated pairs must be disjoint")
        seen.update((a, b))
    return list(pairs)


def make_synthetic(
    kind: str,
    grid_shape: tuple[int, int],
    n: int,
    margin_params,
    dependence_params: Optional[dict] = None,
    seed: int = 0,
    block_length: int = 1,
    variable: str = "synthetic",
) -> MaximaGrid:
    """Sample n gridded maxima with known margins and dependence.

    dependence_params:
      gauss_copula: {"range": r}
      hr_pairs:     {"pairs": [...], "lam": scalar or per-pair list}
      mixed:        {"range": r, "pairs": [...], "lam": ...}
    """
    if n < 2:
        raise DataError("need n >= 2 synthetic observations")
    H, W = grid_shape
    if H < 1 or W < 1:
        raise DataError(f"bad grid shape {grid_shape}")
    dep = dict(dependence_params or {})
    ss = np.random.SeedSequence(seed)
    base_ss, pair_ss = ss.spawn(2)
    rng = np.random.default_rng(base_ss)

    if kind == "gauss_copula":
        u = _gauss_copula_uniforms(grid_shape, n, dep.get("range", 2.0), rng)
    elif kind == "hr_pairs":
        u = rng.random((n, H * W))
    elif kind == "mixed":
        u = _gauss_copula_uniforms(grid_shape, n, dep.get("range", 2.0), rng)
    else:
        raise DataError(f"unknown synthetic kind '{kind}'")

    if kind in ("hr_pairs", "mixed"):
        pairs = _validate_pairs(dep.get("pairs", []), grid_shape)
        if not pairs:
            raise DataError(f"kind '{kind}' needs at least one designated pair")
        lam = dep.get("lam", 1.0)
        lams = [float(lam)] * len(pairs) if np.isscalar(lam) else [float(v) for v in lam]
        if len(lams) != len(pairs):
            raise DataError("need one lambda per designated pair")
        for child, ((ra, ca), (rb, cb)), lam_k in zip(pair_ss.spawn(len(pairs)), pairs, lams):
            uv = hr_bivariate_sample(lam_k, n, child)
            u[:, ra * W + ca] = uv[:, 0]
            u[:, rb * W + cb] = uv[:, 1]

    u = np.clip(u, _OPEN, 1.0 - _OPEN).reshape(n, H, W)
    mu, sigma, xi = margin_grid(grid_shape, margin_params)
    values = np.empty_like(u)
    for r in range(H):
        for c in range(W):
            values[:, r, c] = gev_quantile(
                u[:, r, c], GevParams(mu[r, c], sigma[r, c], xi[r, c])
            )
    return MaximaGrid(values, block_length=block_length, variable=variable)

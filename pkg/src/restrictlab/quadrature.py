"""Gauss-Legendre helpers: fixed rules on [0, 1], tensor grids and panel-adaptive integration."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def gl01(order: int):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=64)
def tensor_gl01(order: int, dim: int):
    """Tensor-product rule on [0, 1]^dim: nodes (order**dim, dim), weights (order**dim,)."""
    x, w = gl01(order)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return nodes, weights


def panel_rule(lo, hi, order: int):
    """Nodes and weights for GL of ``order`` on each panel [lo_i, hi_i]; shapes (P, order)."""
    lo = np.asarray(lo, dtype=float)[:, None]
    hi = np.asarray(hi, dtype=float)[:, None]
    x, w = gl01(order)
    return lo + (hi - lo) * x, (hi - lo) * w


def adaptive_gl(f, breaks, order: int = 32, rtol: float = 1e-13, atol: float = 0.0,
                max_depth: int = 30):
    """Integrate ``f`` over [breaks[0], breaks[-1]] with panels split at ``breaks``.

    ``f`` takes a 1-d array of points and returns values of the same shape.
    A panel is accepted once GL on the panel and GL on its two halves agree to
    ``max(atol, rtol * |running total|)``; otherwise it is bisected.
    """
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1], breaks[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    total = 0.0
    for _ in range(max_depth):
        if lo.size == 0:
            break
        mid = 0.5 * (lo + hi)
        x, w = panel_rule(np.concatenate([lo, lo, mid]), np.concatenate([hi, mid, hi]), order)
        vals = f(x.ravel()).reshape(x.shape)
        sums = (vals * w).sum(axis=1)
        n = lo.size
        coarse, fine = sums[:n], sums[n:2 * n] + sums[2 * n:]
        scale = abs(total) + np.abs(fine).sum()
        ok = np.abs(fine - coarse) <= max(atol, rtol * scale) / max(n, 1) ** 0.5
        total += fine[ok].sum()
        lo, hi = np.concatenate([lo[~ok], mid[~ok]]), np.concatenate([mid[~ok], hi[~ok]])
    else:
        if lo.size:
            x, w = panel_rule(lo, hi, order)
            total += (f(x.ravel()).reshape(x.shape) * w).sum()
    return float(total)

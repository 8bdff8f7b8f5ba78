"""The gap-product functional W and Monte Carlo measures of its sublevel sets.

W(s_1, ..., s_m) = sup over bijections e: {1..m-1} -> {1..m-1} of prod (s_{i+1} - s_i)^{e_i}.
By rearrangement the sup pairs the largest exponent with the largest gap.
"""
from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from .errors import DomainError, PreconditionError
from .mc import DEFAULT_CHUNK, MCEstimate, mc_mean, sorted_uniforms
from .permutohedron import Composition


def gap_sup_batch(points) -> np.ndarray:
    """W for each row of ``points`` (rows sorted, shape (N, m))."""
    s = np.asarray(points, dtype=float)
    m = s.shape[-1]
    if m < 2:
        return np.ones(s.shape[:-1])
    gaps = np.sort(np.diff(s, axis=-1), axis=-1)
    return np.prod(gaps ** np.arange(1, m), axis=-1)


def gap_sup(points: Sequence[float]) -> float:
    s = np.asarray(points, dtype=float)
    if s.ndim != 1 or s.size < 2:
        raise DomainError("W needs at least two points")
    if s.size > 12:
        raise DomainError("W is limited to m <= 12 points")
    if np.any(np.diff(s) < 0):
        raise DomainError("points must be sorted")
    return float(gap_sup_batch(s[None, :])[0])


def gap_sup_bruteforce(points: Sequence[float]) -> float:
    """Enumerate all (m-1)! exponent assignments."""
    gaps = np.diff(np.asarray(points, dtype=float))
    best = 0.0
    for perm in itertools.permutations(range(1, len(gaps) + 1)):
        best = max(best, float(np.prod(gaps ** np.array(perm))))
    return best


def sublevel_measure(p: int, lam: float, box: float, n: int, seed: int,
                     chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> MCEstimate:
    """Measure of {0 <= s_1 <= ... <= s_p <= box : W(0, s_1, ..., s_p) <= lam}."""
    if p < 1 or not lam > 0 or not box > 0:
        raise DomainError("need p >= 1, lam > 0, box > 0")

    def sampler(rng, m):
        s = sorted_uniforms(rng, m, p, 0.0, box)
        s = np.concatenate([np.zeros((m, 1)), s], axis=1)
        return (gap_sup_batch(s) <= lam).astype(float)

    volume = box**p / math.factorial(p)
    return mc_mean(sampler, n, seed, volume, chunk_size, workers)


def fit_loglog_slope(xs, ys, weights_hits=None, min_hits: int = 100) -> float:
    """Least-squares slope of log y against log x, skipping points with fewer than ``min_hits``."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    keep = ys > 0
    if weights_hits is not None:
        keep &= np.asarray(weights_hits) >= min_hits
    if keep.sum() < 2:
        raise DomainError("not enough usable points for a slope fit")
    return float(np.polyfit(np.log(xs[keep]), np.log(ys[keep]), 1)[0])


def sublevel_exponent(p: int, box: float = 10.0, lams=None, n: int = 10**6, seed: int = 0,
                      chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> dict:
    """Fit the power law of ``sublevel_measure`` in ``lam`` over dyadic values."""
    lams = [2.0**-k for k in range(6, -1, -1)] if lams is None else list(lams)
    ests = [sublevel_measure(p, lam, box, n, seed + i, chunk_size, workers) for i, lam in enumerate(lams)]
    slope = fit_loglog_slope(lams, [e.value for e in ests], [e.hits for e in ests])
    return {"p": p, "box": box, "lams": lams, "estimates": ests, "slope": slope,
            "expected": 2.0 / (p + 1)}


# ---------------------------------------------------------------------------
# block sublevel bound


def block_functional(comp: Composition, d: int, anchors, blocks) -> np.ndarray:
    """W_1^(d/(l_1+1)) * prod_{n>=2} W_n^((d-1)/(l_n+1)) for sampled block tuples.

    ``blocks[n]`` has shape (N, l_n): the points after the anchor in block n.
    """
    total = None
    for i, (l, anchor, pts) in enumerate(zip(comp.parts, anchors, blocks)):
        N = pts.shape[0]
        s = np.concatenate([np.full((N, 1), anchor), pts], axis=1)
        w = gap_sup_batch(s)
        power = d / (l + 1) if i == 0 else (d - 1) / (l + 1)
        term = w**power
        total = term if total is None else total * term
    return total


def lemma2_bound_check(comp: Composition, d: int, deltas, mu: float, n: int, seed: int,
                       anchors=None, chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> MCEstimate:
    """MC estimate of m_{d-k}{t : block functional <= mu} / (mu^(2/d) prod_{n>=2} delta_n^(l_n/d)).

    Block n is the interval [0, delta_n] with its anchor point (default 0, the
    left end); its l_n free points range over [anchor, delta_n] in increasing order.
    """
    k = comp.k
    deltas = [float(x) for x in deltas]
    if comp.r != d - 1:
        raise PreconditionError(f"composition sums to r = {comp.r}, need d - 1 = {d - 1}")
    if len(deltas) != k or any(not x > 0 for x in deltas):
        raise PreconditionError("need one positive block length per block")
    if not mu > 0:
        raise DomainError("mu must be positive")
    anchors = [0.0] * k if anchors is None else [float(x) for x in anchors]
    if any(not 0 <= a < dl for a, dl in zip(anchors, deltas)):
        raise PreconditionError("anchors must lie in [0, delta_n)")
    volume = 1.0
    for l, a, dl in zip(comp.parts, anchors, deltas):
        volume *= (dl - a) ** l / math.factorial(l)

    def sampler(rng, m):
        blocks = [sorted_uniforms(rng, m, l, a, dl) for l, a, dl in zip(comp.parts, anchors, deltas)]
        return (block_functional(comp, d, anchors, blocks) <= mu).astype(float)

    rhs = mu ** (2.0 / d) * math.prod(dl ** (l / d) for l, dl in zip(comp.parts[1:], deltas[1:]))
    return mc_mean(sampler, n, seed, volume / rhs, chunk_size, workers)

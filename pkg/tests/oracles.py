"""Independent oracles shared by the unit and acceptance tests."""
from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.spatial import Delaunay


def solve_exact(A, b):
    """Gaussian elimination over the rationals; None if A is singular."""
    n = len(A)
    M = [list(map(Fraction, row)) + [Fraction(v)] for row, v in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col] / M[col][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[i][n] / M[i][i] for i in range(n)]


@lru_cache(maxsize=None)
def _hull(r: int):
    verts = list(itertools.permutations(range(1, r + 1)))
    pts = np.array(verts, dtype=float)[:, :-1]  # the hull lies in sum = r(r+1)/2
    tri = Delaunay(pts, qhull_options="QJ")
    return verts, tri


def _in_simplex_exact(x, simplex_verts):
    r = len(x)
    A = [[v[i] for v in simplex_verts] for i in range(r - 1)] + [[1] * len(simplex_verts)]
    lam = solve_exact(A, list(x[:-1]) + [1])
    return lam is not None and all(l >= 0 for l in lam)


def hull_member(point) -> bool:
    """Brute-force membership in conv{permutations of 1..r}, exact.

    The r! vertices are triangulated once; a point is a member iff it lies on
    the hyperplane and has nonnegative exact barycentric coordinates in some
    simplex.  Float barycentrics only prune simplices that are clearly out.
    """
    x = tuple(Fraction(c) for c in point)
    r = len(x)
    if sum(x) != r * (r + 1) // 2:
        return False
    if r == 1:
        return x == (1,)
    if r == 2:
        return 1 <= x[0] <= 2
    verts, tri = _hull(r)
    xf = np.array([float(c) for c in x[:-1]])
    T = tri.transform  # (nsimplex, r, r-1)
    bary = np.einsum("sij,sj->si", T[:, :-1, :], xf - T[:, -1, :])
    bary = np.concatenate([bary, 1 - bary.sum(axis=1, keepdims=True)], axis=1)
    candidates = np.nonzero(np.all(bary >= -1e-9, axis=1) & np.isfinite(bary).all(axis=1))[0]
    for s in candidates:
        if _in_simplex_exact(x, [verts[i] for i in tri.simplices[s]]):
            return True
    return False


def fuzz_points(r: int, n: int, rng: np.random.Generator) -> list:
    """Rational points with small denominators, about half of them members,
    many on the boundary, some off the hyperplane."""
    verts = list(itertools.permutations(range(1, r + 1)))
    out = []
    for _ in range(n):
        k = int(rng.integers(1, r + 1))
        idx = rng.choice(len(verts), size=k)
        w = [int(v) for v in rng.integers(1, 4, size=k)]
        tot = sum(w)
        x = [sum(Fraction(wi, tot) * verts[i][j] for wi, i in zip(w, idx)) for j in range(r)]
        kind = rng.random()
        if kind < 0.6 and r > 1:
            i, j = rng.choice(r, size=2, replace=False)
            step = Fraction(int(rng.integers(1, 5)), int(rng.integers(1, 7)))
            x[i] += step
            x[j] -= step
        elif kind < 0.7:
            x[int(rng.integers(r))] += Fraction(1, int(rng.integers(1, 5)))
        out.append(tuple(x))
    return out

"""Exact-rational geometry of the permutohedron A_r = conv{permutations of (1, ..., r)}.

Membership uses the half-space description: total sum r(r+1)/2 and every
subset sum over E at least |E|(|E|+1)/2.  The smallest subset sum of size m is
the sum of the m smallest coordinates, so sorted prefix sums suffice.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import MembershipError, PreconditionError


def tri(m: int) -> int:
    return m * (m + 1) // 2


def as_point(coords: Iterable) -> tuple:
    return tuple(Fraction(c) for c in coords)


@dataclass(frozen=True)
class Composition:
    """Parts l_1..l_k >= 0 with l_1 + ... + l_k + k - 1 = r."""

    parts: tuple

    def __post_init__(self):
        if len(self.parts) < 1 or any(int(p) != p or p < 0 for p in self.parts):
            raise PreconditionError(f"parts must be nonnegative integers, got {self.parts}")
        object.__setattr__(self, "parts", tuple(int(p) for p in self.parts))

    @property
    def k(self) -> int:
        return len(self.parts)

    @property
    def r(self) -> int:
        return sum(self.parts) + self.k - 1


def compositions(r: int):
    """All compositions with l_1 + ... + l_k + k - 1 = r."""
    for k in range(1, r + 2):
        total = r - k + 1
        # weak compositions of ``total`` into k parts
        for bars in itertools.combinations(range(total + k - 1), k - 1):
            prev, parts = -1, []
            for b in bars:
                parts.append(b - prev - 1)
                prev = b
            parts.append(total + k - 1 - prev - 1)
            yield Composition(tuple(parts))


# ---------------------------------------------------------------------------
# membership and decomposition


def violated_constraint(p: Sequence) -> tuple | None:
    """First failing inequality as ``(kind, m, lhs, rhs)``, or None for members."""
    x = as_point(p)
    r = len(x)
    total = sum(x, Fraction(0))
    if total != tri(r):
        return ("sum", r, total, Fraction(tri(r)))
    s = Fraction(0)
    for m, v in enumerate(sorted(x), start=1):
        s += v
        if s < tri(m):
            return ("prefix", m, s, Fraction(tri(m)))
    return None


def is_member(p: Sequence) -> bool:
    return violated_constraint(p) is None


@dataclass(frozen=True)
class ConvexCombination:
    weights: tuple  # positive Fractions summing to 1
    vertices: tuple  # permutations of (1..r), as tuples of ints

    def point(self) -> tuple:
        r = len(self.vertices[0])
        out = [Fraction(0)] * r
        for lam, v in zip(self.weights, self.vertices):
            for i in range(r):
                out[i] += lam * v[i]
        return tuple(out)

    def __len__(self):
        return len(self.weights)


def _ranking_vertex(x: Sequence[Fraction]) -> tuple:
    """The vertex ordered like x: the smallest coordinate gets 1 (ties by index)."""
    order = sorted(range(len(x)), key=lambda i: (x[i], i))
    v = [0] * len(x)
    for rank, i in enumerate(order, start=1):
        v[i] = rank
    return tuple(v)


def _max_step(x: Sequence[Fraction], v: Sequence[int]) -> Fraction | None:
    """Largest mu >= 0 keeping x + mu (x - v) in A_r; None if x == v."""
    r = len(x)
    best = None
    for size in range(1, r):
        for E in itertools.combinations(range(r), size):
            sx = sum((x[i] for i in E), Fraction(0))
            sv = sum(v[i] for i in E)
            if sv > sx:
                mu = (sx - tri(size)) / (sv - sx)
                if best is None or mu < best:
                    best = mu
    return best


def decompose(p: Sequence) -> ConvexCombination:
    """Write a member of A_r as a convex combination of permutation vertices.

    Repeatedly take the vertex v ranked like the current point x and push x
    away from v until a new subset constraint becomes tight; that point lies
    on a smaller face, so at most r vertices are used.  Every vertex lies on
    the smallest face containing p; in particular a coordinate equal to r is
    kept at r by every vertex.
    """
    x = list(as_point(p))
    bad = violated_constraint(x)
    if bad is not None:
        kind, m, lhs, rhs = bad
        raise MembershipError(
            f"point is not in A_{len(x)}: {kind} constraint of size {m} has {lhs} < {rhs}"
            if kind == "prefix" else f"coordinate sum {lhs} != {rhs}", violated=bad)
    weights, verts = [], []
    remaining = Fraction(1)
    for _ in range(len(x) + 1):
        v = _ranking_vertex(x)
        if all(xi == vi for xi, vi in zip(x, v)):
            weights.append(remaining)
            verts.append(v)
            break
        mu = _max_step(x, v)
        alpha = mu / (1 + mu)  # x = alpha v + (1 - alpha) y
        weights.append(remaining * alpha)
        verts.append(v)
        remaining *= 1 - alpha
        x = [xi + mu * (xi - vi) for xi, vi in zip(x, v)]
    else:  # pragma: no cover - a face dimension drops every step
        raise RuntimeError("decomposition did not terminate")
    merged: dict = {}
    for lam, v in zip(weights, verts):
        if lam:
            merged[v] = merged.get(v, Fraction(0)) + lam
    return ConvexCombination(tuple(merged.values()), tuple(merged.keys()))


def decompose_fixing(p: Sequence) -> ConvexCombination:
    """Decomposition where every coordinate equal to r stays r in every vertex.

    ``decompose`` already has this property; this variant builds it
    explicitly by recursing on the remaining r - 1 coordinates.
    """
    x = as_point(p)
    r = len(x)
    if not is_member(x):
        raise MembershipError("point is not in the permutohedron", violated_constraint(x))
    if r in x and r > 1:
        i0 = x.index(r)
        rest = x[:i0] + x[i0 + 1:]
        sub = decompose_fixing(rest)
        verts = tuple(v[:i0] + (r,) + v[i0:] for v in sub.vertices)
        return ConvexCombination(sub.weights, verts)
    return decompose(x)


def permutations_of(p: Sequence) -> set:
    return set(itertools.permutations(as_point(p)))


# ---------------------------------------------------------------------------
# the families A' and A''


def _block(l: int, denom: int) -> list:
    return [Fraction(i, denom) for i in range(1, l + 1)]


def family_prime(comp: Composition) -> list:
    """Generator r*(1/l_1 (1..l_1); 1/(l_2+1) (1..l_2); ...; 1/2 x (k-1)).

    Blocks with l_n = 0 contribute no entries.
    """
    parts = comp.parts
    if parts[0] <= 0:
        raise PreconditionError("A' is defined only when l_1 > 0")
    r = comp.r
    vec = _block(parts[0], parts[0])
    for l in parts[1:]:
        vec += _block(l, l + 1)
    vec += [Fraction(1, 2)] * (comp.k - 1)
    return [tuple(r * c for c in vec)]


def family_doubleprime(comp: Composition) -> list:
    """Generator r*(1/(l_1+1) (1..l_1); ...; 1/(l_k+1) (1..l_k); 1/2 x (k-2); 1)."""
    if comp.k < 2:
        raise PreconditionError("A'' is defined only for k >= 2")
    r = comp.r
    vec = []
    for l in comp.parts:
        vec += _block(l, l + 1)
    vec += [Fraction(1, 2)] * (comp.k - 2) + [Fraction(1)]
    return [tuple(r * c for c in vec)]


def merge_vectors(la: int, lb: int) -> tuple:
    """The two concatenated block vectors used in the merge step, already scaled.

    Returns ((la+lb+1) * (1/(la+1)(1..la); 1/(lb+1)(1..lb)),
             (la+lb+2) * (1/(la+1)(1..la); 1/(lb+1)(1..lb); 1/2)).
    """
    base = _block(la, la + 1) + _block(lb, lb + 1)
    first = tuple((la + lb + 1) * c for c in base)
    second = tuple((la + lb + 2) * c for c in base + [Fraction(1, 2)])
    return first, second


# ---------------------------------------------------------------------------
# scalar inequalities behind the merge step


def merge_inequalities(la: int, lb: int, m: int, n: int) -> dict:
    """Both sides of the four merge inequalities for one (m, n), exact.

    ``la`` plays the role of l_{k-1} (with m <= la) and ``lb`` of l_k (n <= lb).
    """
    F = Fraction
    s1, s2 = la + lb + 1, la + lb + 2
    tm, tn = F(m * (m + 1), 2), F(n * (n + 1), 2)
    return {
        "ineq70": (F(s1, la + 1) * tm + F(s1, lb + 1) * tn, F((n + m) * (n + m + 1), 2)),
        "ineq72": (F(m * (m + 1) * lb * (lb + 1) + n * (n + 1) * la * (la + 1)),
                   F(2 * m * n * (la + 1) * (lb + 1))),
        "ineq73": (F(s2, la + 1) * tm + F(s2, lb + 1) * tn, F((n + m) * (n + m + 1), 2)),
        "ineq74": (F(s2, la + 1) * tm + F(s2, lb + 1) * tn + F(s2, 2),
                   F((n + m + 1) * (n + m + 2), 2)),
    }


def check_merge_inequalities(la: int, lb: int) -> dict:
    """Check all four inequalities for 0 <= m <= la, 0 <= n <= lb."""
    if la < 1 or lb < 1:
        raise PreconditionError("need la, lb >= 1")
    violations = []
    checked = 0
    for m in range(la + 1):
        for n in range(lb + 1):
            for name, (lhs, rhs) in merge_inequalities(la, lb, m, n).items():
                checked += 1
                if lhs < rhs:
                    violations.append({"ineq": name, "m": m, "n": n, "lhs": str(lhs), "rhs": str(rhs)})
    return {"la": la, "lb": lb, "checked": checked, "violations": violations}


# ---------------------------------------------------------------------------
# reports


def inclusion_rows(r_max: int) -> list:
    """One row per (composition, family) for all compositions with r <= r_max."""
    rows = []
    for r in range(1, r_max + 1):
        for comp in compositions(r):
            fams = []
            if comp.parts[0] > 0:
                fams.append(("prime", family_prime(comp)[0]))
            if comp.k >= 2:
                fams.append(("doubleprime", family_doubleprime(comp)[0]))
            for name, gen in fams:
                perms = permutations_of(gen)
                member = all(is_member(q) for q in perms)
                dec = decompose(gen) if member else None
                rows.append({
                    "r": r, "k": comp.k, "parts": list(comp.parts), "family": name,
                    "generator": [str(c) for c in gen], "member": member,
                    "permutations": len(perms),
                    "decomposition_size": len(dec) if dec else None,
                    "exact": bool(dec and dec.point() == gen),
                })
    return rows

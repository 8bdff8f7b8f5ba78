"""Jacobian of the d-fold sum map and the kernel psi with J = int omega psi.

Two evaluation routes for psi are kept deliberately separate:

* ``psi`` runs the iterated-integral recursion
      psi(u; t_1..t_d) = int_{t_1}^{t_2} ... int_{t_{d-1}}^{t_d} psi(u; s_1..s_{d-1}) ds
  from the base case psi(u; t_1, t_2) = 1_[t_1, t_2](u), with tensor Gauss-Legendre.
* ``psi_fast`` is the closed form
      psi = V(t) / prod_{k<=d-2} k!  *  N(u) / ((d-2)! (t_d - t_1)),
  with V the Vandermonde product and N the degree d-2 B-spline on knots t.

The Jacobian itself is a plain determinant and shares no code with either.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import CurveSpec
from .errors import (CapabilityError, ConditioningError, DegenerateInputError, DomainError)
from .quadrature import adaptive_gl, gl01, tensor_gl01

MAX_RECURSIVE_D = 6
_ROW_BUDGET = 1 << 20


def check_nodes(spec: CurveSpec, nodes, strict: bool = True) -> np.ndarray:
    t = np.asarray(nodes, dtype=float)
    if t.shape != (spec.d,):
        raise DomainError(f"expected {spec.d} nodes, got shape {t.shape}")
    if not np.all((t > spec.a) & (t < spec.b)):
        raise DomainError(f"nodes must lie in ({spec.a}, {spec.b})")
    steps = np.diff(t)
    if np.any(steps < 0) or (strict and np.any(steps == 0)):
        raise DomainError("nodes must be increasing" + (" strictly" if strict else ""))
    return t


# ---------------------------------------------------------------------------
# Jacobian


def jacobian_batch(spec: CurveSpec, nodes) -> np.ndarray:
    """|det[gamma'(t_1) ... gamma'(t_d)]| for an array of node tuples (..., d)."""
    t = np.asarray(nodes, dtype=float)
    cols = spec.gamma_prime(t)  # (..., d nodes, d components)
    return np.abs(np.linalg.det(cols))


def jacobian(spec: CurveSpec, nodes) -> float:
    t = check_nodes(spec, nodes, strict=False)
    if np.any(np.diff(t) == 0):
        return 0.0
    return float(jacobian_batch(spec, t))


def moment_volume(nodes) -> np.ndarray:
    """prod_{i<j}(t_j - t_i) / prod_{k=0}^{d-2} k!; the moment curve has J = moment_volume / (d-1)!."""
    t = np.asarray(nodes, dtype=float)
    d = t.shape[-1]
    v = np.ones(t.shape[:-1])
    for i in range(d):
        for j in range(i + 1, d):
            v = v * (t[..., j] - t[..., i])
    return v / math.prod(math.factorial(k) for k in range(d - 1))


# ---------------------------------------------------------------------------
# recursive psi


def default_psi_order(d: int) -> int:
    # Each split piece is a polynomial of total degree (d-1)(d-2)/2 - 1.
    deg = (d - 1) * (d - 2) // 2 - 1
    return max(1, math.ceil((deg + 1) / 2)) + 1


def _psi_rec(u: np.ndarray, T: np.ndarray, order: int) -> np.ndarray:
    n, k = T.shape
    if k == 2:
        return ((T[:, 0] <= u) & (u <= T[:, 1])).astype(float)
    out = np.zeros(n)
    inside = np.nonzero((u >= T[:, 0]) & (u <= T[:, -1]))[0]
    if inside.size == 0:
        return out
    X, Wq = tensor_gl01(order, k - 1)
    q = Wq.size
    step = max(1, _ROW_BUDGET // q)
    for start in range(0, inside.size, step):
        rows = inside[start:start + step]
        uu, TT = u[rows], T[rows]
        m = rows.size
        # u lies in exactly one gap; only that gap is split at u
        g = np.minimum((TT[:, 1:-1] <= uu[:, None]).sum(axis=1), k - 2)
        acc = np.zeros(m)
        for side in (0, 1):
            lo, hi = TT[:, :-1].copy(), TT[:, 1:].copy()
            if side == 0:
                hi[np.arange(m), g] = uu
            else:
                lo[np.arange(m), g] = uu
            width = hi - lo
            vol = np.prod(width, axis=1)
            live = vol > 0
            if not live.any():
                continue
            lo, width = lo[live], width[live]
            S = lo[:, None, :] + width[:, None, :] * X[None, :, :]
            vals = _psi_rec(np.repeat(uu[live], q), S.reshape(-1, k - 1), order)
            acc[live] += vol[live] * (vals.reshape(-1, q) @ Wq)
        out[rows] = acc
    return out


def psi_recursive_batch(nodes, u, order: int) -> np.ndarray:
    """Recursive psi for node rows (N, d) and points u (N,)."""
    T = np.atleast_2d(np.asarray(nodes, dtype=float))
    uu = np.broadcast_to(np.asarray(u, dtype=float), (T.shape[0],)).copy()
    return _psi_rec(uu, T, order)


def psi(spec: CurveSpec, nodes, u, quad_order: int | None = None, rtol: float | None = None,
        max_order: int = 32):
    """psi(u; nodes) by the iterated-integral recursion.

    The order defaults to the smallest Gauss-Legendre order that is exact on
    each polynomial piece, plus one.  With ``rtol`` the order is doubled until
    successive values agree to that relative tolerance.
    """
    d = spec.d
    if d > MAX_RECURSIVE_D:
        raise CapabilityError(f"recursive psi supports d <= {MAX_RECURSIVE_D}; use psi_fast for d = {d}")
    t = check_nodes(spec, nodes, strict=False)
    order = quad_order or default_psi_order(d)
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    T = np.broadcast_to(t, (uu.size, d))
    val = _psi_rec(uu, T, order)
    if rtol is not None:
        while order < max_order:
            order *= 2
            new = _psi_rec(uu, T, order)
            done = np.all(np.abs(new - val) <= rtol * np.abs(new).max(initial=0.0))
            val = new
            if done:
                break
    return float(val[0]) if np.ndim(u) == 0 else val


# ---------------------------------------------------------------------------
# closed form


def bspline_basis(knots, u) -> np.ndarray:
    """The single B-spline of degree k-2 on knots (N, k), evaluated at u (N, M).

    Normalised as a partition-of-unity element (Cox-de Boor); degree 0 is the
    closed indicator of [t_1, t_2].
    """
    T = np.atleast_2d(np.asarray(knots, dtype=float))
    U = np.asarray(u, dtype=float)
    if U.ndim == 1:
        U = U[:, None] if U.shape[0] == T.shape[0] else np.broadcast_to(U, (T.shape[0], U.size))
    k = T.shape[1]
    t = T[:, :, None]
    if k == 2:
        return ((t[:, 0] <= U) & (U <= t[:, 1])).astype(float)
    B = [((t[:, i] <= U) & (U < t[:, i + 1])).astype(float) for i in range(k - 1)]
    for p in range(1, k - 1):
        nxt = []
        for i in range(k - 1 - p):
            left = (U - t[:, i]) / (t[:, i + p] - t[:, i]) * B[i]
            right = (t[:, i + p + 1] - U) / (t[:, i + p + 1] - t[:, i + 1]) * B[i + 1]
            nxt.append(left + right)
        B = nxt
    return B[0]


def psi_fast_batch(nodes, u) -> np.ndarray:
    """Closed-form psi for node rows (N, d) and points u (N, M) or (M,)."""
    T = np.atleast_2d(np.asarray(nodes, dtype=float))
    d = T.shape[1]
    span = T[:, -1] - T[:, 0]
    if np.any(np.diff(T, axis=1) < 1e-10 * span[:, None]):
        raise ConditioningError("nodes closer than 1e-10 of their span")
    scale = moment_volume(T) / (math.factorial(d - 2) * span)
    return scale[:, None] * bspline_basis(T, u)


def psi_fast(spec: CurveSpec, nodes, u):
    t = check_nodes(spec, nodes, strict=True)
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    val = psi_fast_batch(t[None, :], uu[None, :])[0]
    return float(val[0]) if np.ndim(u) == 0 else val


# ---------------------------------------------------------------------------
# identity J = int omega psi


def kernel_integral(spec: CurveSpec, nodes, weight, quad_order: int = 32, fast: bool = False,
                    psi_order: int | None = None, rtol: float = 1e-13) -> float:
    """int_{t_1}^{t_d} weight(u) psi(u; nodes) du, panels split at the nodes."""
    t = np.asarray(nodes, dtype=float)
    order = psi_order or default_psi_order(spec.d)
    if fast:
        kern = lambda x: psi_fast_batch(t[None, :], x[None, :])[0]
    else:
        kern = lambda x: psi_recursive_batch(np.broadcast_to(t, (x.size, t.size)), x, order)
    return adaptive_gl(lambda x: weight(x) * kern(x), t, order=quad_order, rtol=rtol)


def kernel_identity_residual(spec: CurveSpec, nodes, quad_order: int = 32, fast: bool = False,
                             psi_order: int | None = None) -> float:
    """|J - int omega psi| / J."""
    t = check_nodes(spec, nodes, strict=True)
    J = float(jacobian_batch(spec, t))
    if J < 1e-300:
        raise DegenerateInputError(f"Jacobian {J:g} is too small: nodes are degenerate")
    integral = kernel_integral(spec, t, spec.omega_unchecked, quad_order, fast, psi_order)
    return abs(J - integral) / J


# ---------------------------------------------------------------------------
# lower bound for int f psi with f a sum of indicators inside the node gaps


@dataclass(frozen=True)
class IntervalWeights:
    """Intervals (alpha_i, beta_i) inside (t_i, t_{i+1}), coefficients c_i >= 0,
    a distinguished gap ``p`` (0-based) and exponents e_i for i != p.

    ``exponents[p]`` is ignored.
    """

    alphas: tuple
    betas: tuple
    coeffs: tuple
    p: int
    exponents: tuple

    @property
    def deltas(self) -> np.ndarray:
        return np.asarray(self.betas, dtype=float) - np.asarray(self.alphas, dtype=float)

    def validate(self, nodes) -> None:
        t = np.asarray(nodes, dtype=float)
        m = t.size - 1
        if not (len(self.alphas) == len(self.betas) == len(self.coeffs) == len(self.exponents) == m):
            raise DomainError(f"need {m} intervals, coefficients and exponents")
        al, be = np.asarray(self.alphas, float), np.asarray(self.betas, float)
        if np.any(al < t[:-1]) or np.any(be > t[1:]) or np.any(be <= al):
            raise DomainError("each (alpha_i, beta_i) must be a nonempty subinterval of (t_i, t_{i+1})")
        if np.any(np.asarray(self.coeffs, float) < 0):
            raise DomainError("coefficients must be nonnegative")
        if not 0 <= self.p < m:
            raise DomainError(f"p must index a gap 0..{m - 1}")
        rest = sorted(int(e) for i, e in enumerate(self.exponents) if i != self.p)
        if rest != list(range(1, m)):
            raise DomainError(f"exponents off p must be a permutation of 1..{m - 1}")


def lemma1_rhs(w: IntervalWeights, d: int) -> float:
    dl = w.deltas
    val = w.coeffs[w.p] * dl[w.p] ** (d - 1)
    for i, e in enumerate(w.exponents):
        if i != w.p:
            val *= dl[i] ** e
    return float(val)


def lemma1_ratio(spec: CurveSpec, nodes, w: IntervalWeights, fast: bool = True,
                 psi_order: int | None = None) -> float:
    """(int f psi) / (c_p Delta_p^(d-1) prod_{i != p} Delta_i^e_i) with f = sum c_i 1_(alpha_i, beta_i)."""
    t = check_nodes(spec, nodes, strict=True)
    w.validate(t)
    rhs = lemma1_rhs(w, spec.d)
    if not rhs > 0:
        raise DegenerateInputError("right-hand side vanishes (c_p = 0 or an empty interval)")
    # psi restricted to a node gap is a polynomial of degree d-2, so a fixed GL rule is exact
    x, wq = gl01(spec.d + 2)
    lhs = 0.0
    order = psi_order or default_psi_order(spec.d)
    for al, be, c in zip(w.alphas, w.betas, w.coeffs):
        if c == 0:
            continue
        pts = al + (be - al) * x
        if fast:
            vals = psi_fast_batch(t[None, :], pts[None, :])[0]
        else:
            vals = psi_recursive_batch(np.broadcast_to(t, (pts.size, t.size)), pts, order)
        lhs += c * (be - al) * float(vals @ wq)
    return lhs / rhs


def random_lemma1_configs(d: int, n: int, rng: np.random.Generator, min_gap: float = 1e-3):
    """Random admissible (nodes, IntervalWeights) arrays on [0, 1].

    Returns nodes (n, d), alphas/betas/coeffs (n, d-1), p (n,), exponents (n, d-1)
    with exponents[p] = d - 1 (the power carried by the distinguished gap).
    """
    m = d - 1
    nodes = np.sort(rng.random((n, d)), axis=1)
    bad = np.any(np.diff(nodes, axis=1) < min_gap, axis=1)
    while bad.any():
        nodes[bad] = np.sort(rng.random((int(bad.sum()), d)), axis=1)
        bad = np.any(np.diff(nodes, axis=1) < min_gap, axis=1)
    frac = np.sort(rng.random((n, m, 2)), axis=2)
    gap = np.diff(nodes, axis=1)
    alphas = nodes[:, :-1] + gap * frac[:, :, 0]
    betas = nodes[:, :-1] + gap * frac[:, :, 1]
    coeffs = rng.random((n, m))
    p = rng.integers(0, m, size=n)
    exps = np.empty((n, m), dtype=int)
    for r in range(n):
        perm = rng.permutation(np.arange(1, m)) if m > 1 else np.array([], dtype=int)
        exps[r] = np.insert(perm, p[r], m)
    return nodes, alphas, betas, coeffs, p, exps


def lemma1_ratios_batch(nodes, alphas, betas, coeffs, p, exps) -> np.ndarray:
    """Vectorised lemma1 ratios via the closed-form kernel."""
    n, d = nodes.shape
    x, wq = gl01(d + 2)
    m = d - 1
    pts = alphas[:, :, None] + (betas - alphas)[:, :, None] * x  # (n, m, q)
    vals = psi_fast_batch(nodes, pts.reshape(n, -1)).reshape(n, m, -1)
    lhs = (coeffs * (betas - alphas) * (vals @ wq)).sum(axis=1)
    deltas = betas - alphas
    rows = np.arange(n)
    rhs = coeffs[rows, p] * np.prod(deltas ** exps, axis=1)
    return lhs / rhs


def lemma1_sweep(d: int, n: int, seed: int, chunk: int = 4096) -> dict:
    """Minimum lemma1 ratio over ``n`` random admissible configurations."""
    rng = np.random.default_rng(seed)
    best = math.inf
    best_cfg = None
    done = 0
    while done < n:
        m = min(chunk, n - done)
        cfg = random_lemma1_configs(d, m, rng)
        r = lemma1_ratios_batch(*cfg)
        i = int(np.argmin(r))
        if r[i] < best:
            best = float(r[i])
            best_cfg = {"nodes": cfg[0][i].tolist(), "alphas": cfg[1][i].tolist(),
                        "betas": cfg[2][i].tolist(), "coeffs": cfg[3][i].tolist(),
                        "p": int(cfg[4][i]), "exponents": cfg[5][i].tolist()}
        done += m
    return {"d": d, "n": n, "seed": seed, "min_ratio": best, "argmin": best_cfg}

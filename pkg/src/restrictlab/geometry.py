"""The sublevel set E, its weighted measure, the dyadic block decomposition and the
direct check of the main sum-set inequality.

For fixed t_1 the set

    E = {(t_2..t_d) : t_1 <= t_2 <= ... <= t_d < b,  J(t_1..t_d) <= [prod omega(t_i)]^(2/(d^2+d))}

carries the weight prod_{i>=2} omega(t_i)^(2/(d^2+d)); its weighted measure should be
bounded by a constant depending only on d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .curve import AffineMeasure, CurveSpec, DyadicPartition
from .errors import DomainError, InvariantViolation
from .kernel import jacobian_batch, moment_volume
from .mc import DEFAULT_CHUNK, MCEstimate, mc_mean, sorted_uniforms
from .quadrature import adaptive_gl, gl01

# mixture used by the graded sampler: a gap g in [0, L) is uniform with
# probability 1/2 and log-uniform on [L*ETA, L] otherwise
ETA = 1e-12


def affine_exponent(d: int) -> float:
    return 2.0 / (d * d + d)


def e_rhs(spec: CurveSpec, T) -> np.ndarray:
    return np.prod(spec.omega_unchecked(T), axis=-1) ** affine_exponent(spec.d)


def in_E_batch(spec: CurveSpec, T, prefilter: bool = True) -> np.ndarray:
    """J(t) <= [prod omega(t_i)]^(2/(d^2+d)) for full node rows T (N, d), sorted.

    With ``prefilter`` rows whose cheap lower bound omega(t_1) V(t) / prod_{k<d} k!
    already exceeds the right side are rejected before the determinant.  The
    bound holds because J is V / prod_{k<d-1} k! times a divided difference of
    phi', which equals omega(s) / (d-1)! for some s >= t_1, and omega increases
    on simple curves.
    """
    T = np.asarray(T, dtype=float)
    rhs = e_rhs(spec, T)
    out = np.zeros(T.shape[0], dtype=bool)
    todo = np.ones(T.shape[0], dtype=bool)
    if prefilter and not spec.degenerate:
        lower = spec.omega_unchecked(T[:, 0]) * moment_volume(T) / math.factorial(spec.d - 1)
        todo = lower <= rhs
    if todo.any():
        out[todo] = jacobian_batch(spec, T[todo]) <= rhs[todo]
    return out


def sublevel_set_E_indicator(spec: CurveSpec, t1: float, rest) -> bool:
    t = np.concatenate([[t1], np.asarray(rest, dtype=float)])
    if t.size != spec.d:
        raise DomainError(f"need {spec.d - 1} trailing nodes")
    if np.any(np.diff(t) < 0):
        raise DomainError("nodes must be nondecreasing")
    if np.any(np.diff(t) == 0):
        return True  # J = 0
    return bool(in_E_batch(spec, t[None, :], prefilter=False)[0])


# ---------------------------------------------------------------------------
# samplers for ordered tuples t_1 <= t_2 <= ... inside boxes


def _graded_gap(rng, L):
    """Draw g in [0, L) from the defensive mixture; return (g, density)."""
    m = L.shape[0]
    pick = rng.random(m) < 0.5
    u = rng.random(m)
    log_eta = math.log(ETA)
    g = np.where(pick, L * u, L * np.exp(log_eta * u))
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = 0.5 / L + np.where(g >= L * ETA, 0.5 / (g * -log_eta), 0.0)
    return g, dens


def sample_chain(rng, m: int, t1: float, lows, highs, graded: bool):
    """Sample t_2..t_d with t_{i+1} in [max(t_i, lows[i]), highs[i]).

    Returns (T (m, d-1), weight (m,)), where ``weight`` is 1/density (0 where the
    constraints are infeasible).  Each gap is drawn uniformly or from the graded
    mixture, so the estimator of an integral over the ordered region is unbiased.
    """
    k = len(lows)
    T = np.empty((m, k))
    weight = np.ones(m)
    prev = np.full(m, t1)
    for i in range(k):
        lo = np.maximum(prev, lows[i])
        L = highs[i] - lo
        ok = L > 0
        L = np.where(ok, L, 1.0)
        if graded:
            g, dens = _graded_gap(rng, L)
            weight *= np.where(ok, 1.0 / dens, 0.0)
        else:
            g = L * rng.random(m)
            weight *= np.where(ok, L, 0.0)
        T[:, i] = lo + g
        prev = T[:, i]
    return T, weight


# ---------------------------------------------------------------------------
# the bounded integral


def ineq9_integral(spec: CurveSpec, t1: float, n: int, seed: int, sampler: str = "uniform",
                   chunk_size: int = DEFAULT_CHUNK, workers: int = 1, prefilter: bool = True) -> MCEstimate:
    """MC estimate of int chi_E(t_2..t_d) prod_{i>=2} omega(t_i)^(2/(d^2+d)) over t_1 <= t_2 <= ... < b."""
    d, b = spec.d, spec.b
    if not spec.a < t1 < b:
        raise DomainError(f"t1 must lie in ({spec.a}, {b})")
    expo = affine_exponent(d)

    if sampler == "uniform":
        volume = (b - t1) ** (d - 1) / math.factorial(d - 1)

        def draw(rng, m):
            rest = sorted_uniforms(rng, m, d - 1, t1, b)
            return rest, np.ones(m)
    elif sampler == "graded":
        volume = 1.0

        def draw(rng, m):
            return sample_chain(rng, m, t1, [t1] * (d - 1), [b] * (d - 1), graded=True)
    else:
        raise DomainError(f"unknown sampler {sampler!r}")

    def integrand(rng, m):
        rest, w = draw(rng, m)
        T = np.concatenate([np.full((m, 1), t1), rest], axis=1)
        hit = in_E_batch(spec, T, prefilter)
        dens = np.prod(spec.omega_unchecked(rest), axis=1) ** expo
        return np.where(hit, w * dens, 0.0)

    return mc_mean(integrand, n, seed, volume, chunk_size, workers)


def ineq9_quadrature_d2(spec: CurveSpec, t1: float, grid: int = 4000) -> float:
    """Deterministic d = 2 value: integrate omega^(1/3) over {t_2 : J(t_1, t_2) <= RHS}."""
    if spec.d != 2:
        raise DomainError("deterministic oracle is for d = 2 only")
    b = spec.b

    def g(t2):
        T = np.stack([np.full_like(np.atleast_1d(t2), t1), np.atleast_1d(t2)], axis=-1)
        return jacobian_batch(spec, T) - e_rhs(spec, T)

    xs = np.linspace(t1, b, grid + 1)
    xs[-1] = b - 1e-15 * max(1.0, abs(b))
    gv = g(xs)
    cuts = [t1]
    for i in range(grid):
        if np.sign(gv[i]) != np.sign(gv[i + 1]) and gv[i] != 0 and gv[i + 1] != 0:
            cuts.append(brentq(lambda x: float(g(x)[0]), xs[i], xs[i + 1], xtol=1e-14, rtol=1e-15))
    cuts.append(b)
    dens = lambda x: spec.omega_unchecked(x) ** affine_exponent(2)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if float(g(np.array([0.5 * (lo + hi)]))[0]) <= 0:
            total += adaptive_gl(dens, [lo, hi], order=32, rtol=1e-14)
    return total


def ineq9_sup(spec: CurveSpec, t1_grid, n: int, seed: int, sampler: str = "uniform",
              chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> dict:
    ests = [ineq9_integral(spec, float(t), n, seed + i, sampler, chunk_size, workers)
            for i, t in enumerate(t1_grid)]
    vals = [e.value for e in ests]
    i = int(np.argmax(vals))
    return {"t1_grid": [float(t) for t in t1_grid], "estimates": ests, "sup": vals[i],
            "argsup": float(t1_grid[i])}


# ---------------------------------------------------------------------------
# block decomposition


@dataclass
class BlockDecomposition:
    levels: tuple  # j_1..j_d
    breaks: tuple  # p_0 = 0 < p_1 < ... < p_k = d
    parts: tuple  # l_n = p_n - p_{n-1} - 1
    c: tuple
    dd: tuple  # the right endpoints d_n
    pads: tuple  # (left, right) of the pad interval for n >= 2, None for n = 1
    block_levels: tuple  # m_n
    comparability: tuple = field(default=())  # (c_n - a_{j-1}) / (d_n - c_n) for n >= 2

    @property
    def k(self) -> int:
        return len(self.parts)

    @property
    def deltas(self) -> tuple:
        return tuple(h - l for l, h in zip(self.c, self.dd))

    @property
    def rhos(self) -> tuple:
        return tuple(None if p is None else p[1] - p[0] for p in self.pads)


def kappa(d: int) -> float:
    """Lower bound for (c_n - a_{j-1}) / (d_n - c_n) implied by the doubling chain."""
    return 1.0 / (2.0**d - 2.0)


def block_decompose(part: DyadicPartition, levels) -> BlockDecomposition:
    js = [int(j) for j in levels]
    d = len(js)
    if d < 2 or any(b < a for a, b in zip(js, js[1:])):
        raise DomainError("levels must be a nondecreasing list of at least two integers")
    if js[0] < part.jmin or js[-1] > part.jmax:
        raise DomainError(f"levels must lie in [{part.jmin}, {part.jmax}]")
    p = [0] + [i for i in range(1, d) if js[i] - js[i - 1] >= 2] + [d]
    k = len(p) - 1
    parts = tuple(p[n] - p[n - 1] - 1 for n in range(1, k + 1))
    j = lambda i: js[i - 1]  # 1-based
    c = tuple(part.point(j(p[n - 1] + 1)) for n in range(1, k + 1))
    dd = tuple(part.point(j(p[n]) + 1) for n in range(1, k + 1))
    pads = [None]
    comp = []
    for n in range(2, k + 1):
        jl = j(p[n - 1] + 1) - 1
        pads.append((part.point(jl), c[n - 1]))
    mlev = tuple(j(p[n - 1] + 1) for n in range(1, k + 1))
    slack = 4 * part.tol * (d + 1)
    if sum(parts) != d - k:
        raise InvariantViolation("block sizes do not sum to d - k", "l-sum")
    for n in range(k):
        if not c[n] < dd[n]:
            raise InvariantViolation(f"c_{n + 1} >= d_{n + 1}", "interleaving")
        if n and not dd[n - 1] < c[n]:
            raise InvariantViolation(f"d_{n} >= c_{n + 1}", "interleaving")
    for n in range(1, k):
        left, right = pads[n]
        if not (dd[n - 1] <= left < right):
            raise InvariantViolation(f"d_{n} <= a_(j-1) < c_{n + 1} fails", "ineq18.5")
        ratio = (right - left) / (dd[n] - c[n])
        comp.append(ratio)
        if (right - left) + slack < kappa(d) * (dd[n] - c[n]):
            raise InvariantViolation(
                f"pad/block ratio {ratio:.3g} below {kappa(d):.3g} for block {n + 1}", "ineq19")
    if any(b < a for a, b in zip(mlev, mlev[1:])):
        raise InvariantViolation("block levels not monotone", "ineq30.5")
    return BlockDecomposition(tuple(js), tuple(p), parts, c, dd, tuple(pads), mlev, tuple(comp))


# ---------------------------------------------------------------------------
# cell measures and block estimates


def cell_measure(spec: CurveSpec, part: DyadicPartition, t1: float, levels_tail, n: int, seed: int,
                 graded: bool = True, chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> MCEstimate:
    """m_{d-1} of E restricted to I_{j_2} x ... x I_{j_d} (ordered, t_2 >= t_1)."""
    tail = [int(j) for j in levels_tail]
    if len(tail) != spec.d - 1:
        raise DomainError(f"need {spec.d - 1} levels")
    lows = [part.point(j) for j in tail]
    highs = [part.point(j + 1) for j in tail]

    def integrand(rng, m):
        rest, w = sample_chain(rng, m, t1, lows, highs, graded)
        T = np.concatenate([np.full((m, 1), t1), rest], axis=1)
        return np.where(in_E_batch(spec, T), w, 0.0)

    return mc_mean(integrand, n, seed, 1.0, chunk_size, workers)


def _ratio_from_measure(est: MCEstimate, d: int, j1: int, tail) -> MCEstimate:
    s_tail = sum(tail)
    lhs_scale = 2.0 ** (s_tail / (d - 1))
    rhs = 2.0 ** ((j1 + s_tail) * affine_exponent(d))
    m = max(est.value, 0.0)
    val = lhs_scale * m ** (d / 2) / rhs
    err = lhs_scale * (d / 2) * m ** (d / 2 - 1) * est.stderr / rhs if m > 0 else 0.0
    return MCEstimate(val, err, est.samples, est.seed, est.chunk_size, est.hits, est.note)


def ineq16_block_check(spec: CurveSpec, part: DyadicPartition, t1: float, levels, n: int, seed: int,
                       graded: bool = True, chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> MCEstimate:
    """(2^(j_2+..+j_d))^(1/(d-1)) m(E_cell)^(d/2) / (2^(j_1+..+j_d))^(2/(d^2+d)).

    ``levels`` is the tail (j_2..j_d); j_1 is the level of t1.  Stderr by the
    delta method.
    """
    tail = [int(j) for j in levels]
    j1 = part.level_of(t1)
    if tail[0] < j1 or any(b < a for a, b in zip(tail, tail[1:])):
        raise DomainError("need j_1 <= j_2 <= ... <= j_d")
    est = cell_measure(spec, part, t1, tail, n, seed, graded, chunk_size, workers)
    return _ratio_from_measure(est, spec.d, j1, tail)


def level_tails(j1: int, d: int, width: int, jmax: int):
    """Nondecreasing (j_2..j_d) with j_1 <= j_2 and j_d <= min(j_1 + width, jmax)."""
    top = min(j1 + width, jmax)

    def rec(start, left):
        if left == 0:
            yield ()
            return
        for j in range(start, top + 1):
            for rest in rec(j, left - 1):
                yield (j,) + rest

    yield from rec(j1, d - 1)


def block_sweep(spec: CurveSpec, part: DyadicPartition, t1: float, width: int, n: int, seed: int,
                graded: bool = True, chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> dict:
    """All cells with levels up to j_1 + width: block ratios and the summed series.

    ``shell_sums[L]`` adds (2^(j_2+..+j_d))^(2/(d^2+d)) m(E_cell) over cells with
    j_d = j_1 + L; partial sums of the series are its cumulative sums.
    """
    d = spec.d
    j1 = part.level_of(t1)
    rows = []
    shells = np.zeros(width + 1)
    shell_var = np.zeros(width + 1)
    for i, tail in enumerate(level_tails(j1, d, width, part.jmax)):
        est = cell_measure(spec, part, t1, tail, n, seed + i, graded, chunk_size, workers)
        ratio = _ratio_from_measure(est, d, j1, tail)
        weight = 2.0 ** (sum(tail) * affine_exponent(d))
        L = tail[-1] - j1
        shells[L] += weight * est.value
        shell_var[L] += (weight * est.stderr) ** 2
        bd = block_decompose(part, (j1,) + tuple(tail))
        rows.append({"levels": [j1, *tail], "measure": est.value, "stderr": est.stderr,
                     "ratio": ratio.value, "ratio_stderr": ratio.stderr, "k": bd.k,
                     "parts": list(bd.parts), "term": weight * est.value})
    best = max(rows, key=lambda r: r["ratio"])
    return {"j1": j1, "t1": t1, "width": width, "rows": rows, "max_ratio": best["ratio"],
            "argmax": best["levels"], "shell_sums": shells.tolist(),
            "shell_stderr": np.sqrt(shell_var).tolist(),
            "partial_sums": np.cumsum(shells).tolist()}


# ---------------------------------------------------------------------------
# the main inequality, evaluated directly for a box F


def theorem1_direct(spec: CurveSpec, box_lo, box_hi, n: int, seed: int, t1_order: int = 24,
                    chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> MCEstimate:
    """LHS of the main inequality for F = box, divided by |F|.

    For each of ``t1_order`` Gauss-Legendre nodes t_1 the inner integral over
    {t_1 <= t_i < b} (unordered) is estimated by MC with ``n`` samples; the outer
    integral of inner^((d+2)/2) omega(t_1)^(2/(d^2+d)) is done by the GL rule on
    (a, b).  The standard error comes from the delta method.
    """
    d, a, b = spec.d, spec.a, spec.b
    lo, hi = np.asarray(box_lo, float), np.asarray(box_hi, float)
    if lo.shape != (d,) or hi.shape != (d,) or np.any(hi <= lo):
        raise DomainError("box must have d positive side lengths")
    vol_F = float(np.prod(hi - lo))
    expo = affine_exponent(d)
    x, w = gl01(t1_order)
    t1s, wts = a + (b - a) * x, (b - a) * w
    power = (d + 2) / 2
    total, var = 0.0, 0.0
    samples = 0
    for i, t1 in enumerate(t1s):
        def integrand(rng, m, t1=t1):
            rest = t1 + (b - t1) * rng.random((m, d - 1))
            pts = spec.gamma(t1) + spec.gamma(rest).sum(axis=1)
            inside = np.all((pts >= lo) & (pts <= hi), axis=1)
            dens = np.prod(spec.omega_unchecked(rest), axis=1) ** expo
            return np.where(inside, dens, 0.0)

        est = mc_mean(integrand, n, seed + i, (b - t1) ** (d - 1), chunk_size, workers)
        samples += est.samples
        outer = wts[i] * float(spec.omega_unchecked(t1)) ** expo
        total += outer * est.value**power
        var += (outer * power * est.value ** (power - 1) * est.stderr) ** 2
    return MCEstimate(total / vol_F, math.sqrt(var) / vol_F, samples, seed, chunk_size)


def theorem1_free_value_d2(spec: CurveSpec) -> float:
    """d = 2 value of the main left side when F contains every sum: lambda(a, b)^3 / 3."""
    if spec.d != 2:
        raise DomainError("closed form is for d = 2")
    mass = adaptive_gl(AffineMeasure(spec).density_unchecked, [spec.a, spec.b], order=32)
    return mass**3 / 3.0


def sum_range_box(spec: CurveSpec, grid: int = 2001):
    """Axis-aligned bounding box of {gamma(t_1) + ... + gamma(t_d)}."""
    t = np.linspace(spec.a, spec.b, grid)
    g = spec.gamma(t)
    return spec.d * g.min(axis=0), spec.d * g.max(axis=0)


def shell_decay(shell_sums) -> dict:
    """Geometric decay of the level-shell terms from their peak onwards.

    ``rate`` is exp(-slope) of a least-squares line through log shell_sums
    over the shells after the peak; ``ratios`` are successive shell quotients.
    """
    s = np.asarray(shell_sums, dtype=float)
    peak = int(np.argmax(s))
    tail = s[peak:]
    keep = tail > 0
    L = np.arange(peak, s.size)[keep]
    if L.size < 3:
        raise DomainError("need at least three positive shells after the peak")
    slope = float(np.polyfit(L, np.log(tail[keep]), 1)[0])
    ratios = [float(a / b) if b > 0 else math.inf for a, b in zip(s[peak:-1], s[peak + 1:])]
    return {"peak": peak, "rate": math.exp(-slope), "ratios": ratios}

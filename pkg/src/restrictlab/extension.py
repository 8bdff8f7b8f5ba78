"""The extension operator (f dlambda)^(xi) = int f(t) exp(i xi . gamma(t)) omega(t)^(2/(d^2+d)) dt
and finite-box probes of the estimate ||(f dlambda)^||_q <= C ||f||_{L^p(lambda)} on the
line 1/p + d(d+1)/(2q) = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .curve import AffineMeasure, CurveSpec
from .errors import DegenerateInputError, DomainError, ResolutionError
from .mc import DEFAULT_CHUNK, mc_mean
from .quadrature import adaptive_gl, gl01

ORDER = 16
MAX_PANELS = 10**6
_BLOCK = 1 << 22  # complex entries per evaluation block


@dataclass(frozen=True)
class TestFunction:
    """``indicator`` of [lo, hi], ``power`` t^alpha on [lo, hi], or ``constant`` value on (a, b)."""

    __test__ = False  # not a pytest class

    kind: str
    lo: float | None = None
    hi: float | None = None
    alpha: float = 0.0
    value: float = 1.0

    def support(self, curve: CurveSpec) -> tuple:
        if self.kind == "constant":
            return curve.a, curve.b
        if self.lo is None or self.hi is None or not self.lo < self.hi:
            raise DomainError("indicator and power test functions need lo < hi")
        if self.lo < curve.a or self.hi > curve.b:
            raise DomainError("test function must be supported inside (a, b)")
        return self.lo, self.hi

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            return self.value * t**self.alpha
        if self.kind in ("indicator", "constant"):
            return np.full_like(t, self.value)
        raise DomainError(f"unknown test function kind {self.kind!r}")

    def scaled(self, c: float) -> "TestFunction":
        return TestFunction(self.kind, self.lo, self.hi, self.alpha, self.value * c)

    @classmethod
    def from_dict(cls, obj: dict) -> "TestFunction":
        return cls(obj["kind"], obj.get("lo"), obj.get("hi"), float(obj.get("alpha", 0.0)),
                   float(obj.get("value", 1.0)))


@dataclass(frozen=True)
class ExponentPair:
    """p and the q on the line 1/p + d(d+1)/(2q) = 1.

    The proven range is 1 <= p < d + 2; ``exploratory`` admits larger p so
    sweeps can report there without asserting anything.
    """

    p: float
    d: int
    exploratory: bool = False

    def __post_init__(self):
        if not self.p >= 1:
            raise DomainError(f"need p >= 1, got {self.p}")
        if not self.exploratory and not self.p < self.d + 2:
            raise DomainError(f"need p < d + 2 = {self.d + 2}, got {self.p} (set exploratory=True to probe)")

    @property
    def q(self) -> float:
        if self.p == 1:
            return math.inf
        return self.d * (self.d + 1) * self.p / (2 * (self.p - 1))

    def line_residual(self) -> float:
        """1/p + d(d+1)/(2q) - 1 (zero on the exponent line)."""
        return 1 / self.p + self.d * (self.d + 1) / (2 * self.q) - 1


# ---------------------------------------------------------------------------
# panels


def _weight(meas: AffineMeasure, f: TestFunction):
    return lambda t: f(t) * meas.density_unchecked(t)


def base_panels(meas: AffineMeasure, f: TestFunction, rtol: float = 1e-14, max_depth: int = 40) -> np.ndarray:
    """Breakpoints on supp f where GL of order ORDER resolves f * density (no oscillation)."""
    lo, hi = f.support(meas.curve)
    g = _weight(meas, f)
    edges = [lo, hi]
    done = []
    todo = [(lo, hi)]
    x, w = gl01(ORDER)
    total = abs(adaptive_gl(g, [lo, hi], ORDER))
    for _ in range(max_depth):
        nxt = []
        for a, b in todo:
            m = 0.5 * (a + b)
            coarse = (b - a) * (g(a + (b - a) * x) @ w)
            fine = (m - a) * (g(a + (m - a) * x) @ w) + (b - m) * (g(m + (b - m) * x) @ w)
            if abs(fine - coarse) <= rtol * max(total, 1e-300):
                done.append((a, b))
            else:
                nxt += [(a, m), (m, b)]
        todo = nxt
        if not todo:
            break
    done += todo
    edges = sorted({p for ab in done for p in ab})
    return np.asarray(edges)


def _variation(curve: CurveSpec, edges) -> np.ndarray:
    """Total variation of each coordinate of gamma over each base panel, shape (panels, d)."""
    x, w = gl01(ORDER)
    lo, hi = edges[:-1, None], edges[1:, None]
    t = lo + (hi - lo) * x
    speed = np.abs(curve.gamma_prime(t))  # (panels, ORDER, d)
    return np.einsum("pod,o->pd", speed, w) * (hi - lo)


def _nodes(meas: AffineMeasure, f: TestFunction, edges, counts):
    """GL nodes/weights after splitting base panel i into counts[i] equal pieces."""
    ts, ws = [], []
    x, w = gl01(ORDER)
    for a, b, n in zip(edges[:-1], edges[1:], counts):
        cuts = np.linspace(a, b, int(n) + 1)
        h = np.diff(cuts)[:, None]
        ts.append((cuts[:-1, None] + h * x).ravel())
        ws.append((h * w).ravel())
    t = np.concatenate(ts)
    return t, np.concatenate(ws) * _weight(meas, f)(t)


def _panel_counts(tv, xi_abs, refine: int = 1):
    # phase changes by at most sum_k |xi_k| TV(gamma_k), kept below pi/2 per panel
    return np.maximum(1, np.ceil(tv @ xi_abs / (np.pi / 2))).astype(int) * refine


def _evaluate(curve: CurveSpec, xis: np.ndarray, t: np.ndarray, wt: np.ndarray) -> np.ndarray:
    G = curve.gamma(t)  # (N, d)
    out = np.empty(xis.shape[0], dtype=complex)
    step = max(1, _BLOCK // max(t.size, 1))
    for s in range(0, xis.shape[0], step):
        ph = xis[s:s + step] @ G.T
        out[s:s + step] = np.exp(1j * ph) @ wt
    return out


# ---------------------------------------------------------------------------
# public operations


def lambda_mass(meas: AffineMeasure, f: TestFunction) -> float:
    """int f dlambda."""
    lo, hi = f.support(meas.curve)
    return adaptive_gl(_weight(meas, f), base_panels(meas, f), ORDER)


def lp_norm(meas: AffineMeasure, f: TestFunction, p: float) -> float:
    """||f||_{L^p(lambda)}."""
    g = _weight(meas, f)
    if math.isinf(p):
        lo, hi = f.support(meas.curve)
        return float(np.abs(f(np.linspace(lo, hi, 4097))).max())
    edges = base_panels(meas, f)
    val = adaptive_gl(lambda t: np.abs(f(t)) ** p * meas.density_unchecked(t), edges, ORDER)
    return val ** (1.0 / p)


def extend(meas: AffineMeasure, f: TestFunction, xi, tol: float = 1e-10,
           max_panels: int = MAX_PANELS) -> complex:
    """(f dlambda)^(xi), refined by doubling panels until successive values differ by < tol."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    curve = meas.curve
    xi = np.asarray(xi, dtype=float).reshape(1, curve.d)
    edges = base_panels(meas, f)
    tv = _variation(curve, edges)
    refine = 1
    prev = None
    while True:
        counts = _panel_counts(tv, np.abs(xi[0]), refine)
        if counts.sum() > max_panels:
            raise ResolutionError(f"needs more than {max_panels} panels; use a smaller |xi|")
        t, wt = _nodes(meas, f, edges, counts)
        val = complex(_evaluate(curve, xi, t, wt)[0])
        if prev is not None and abs(val - prev) < tol:
            return val
        prev = val
        refine *= 2


def extend_many(meas: AffineMeasure, f: TestFunction, xis, max_panels: int = MAX_PANELS) -> np.ndarray:
    """(f dlambda)^ on many frequencies.

    Frequencies are grouped by the dyadic band of each |xi_k|; a group shares
    panels sized for the top of its bands.
    """
    curve = meas.curve
    xis = np.asarray(xis, dtype=float).reshape(-1, curve.d)
    edges = base_panels(meas, f)
    tv = _variation(curve, edges)
    band = np.ceil(np.log2(np.maximum(np.abs(xis), 1.0))).astype(int)
    keys, inverse = np.unique(band, axis=0, return_inverse=True)
    out = np.empty(xis.shape[0], dtype=complex)
    for g, key in enumerate(keys):
        idx = np.nonzero(inverse.ravel() == g)[0]
        counts = _panel_counts(tv, 2.0**key)
        if counts.sum() > max_panels:
            raise ResolutionError(f"needs more than {max_panels} panels; use a smaller |xi|")
        t, wt = _nodes(meas, f, edges, counts)
        out[idx] = _evaluate(curve, xis[idx], t, wt)
    return out


def decay_slope(meas: AffineMeasure, f: TestFunction, direction, s_values) -> float:
    """Log-log slope of |extend(s * direction)| against s."""
    direction = np.asarray(direction, dtype=float)
    s_values = np.asarray(s_values, dtype=float)
    vals = np.abs(extend_many(meas, f, s_values[:, None] * direction[None, :]))
    return float(np.polyfit(np.log(s_values), np.log(vals), 1)[0])


# ---------------------------------------------------------------------------
# finite-box L^q norms


def graded_axis(R: float, grid: int, h0: float):
    """Cell midpoints and widths of a sinh-graded partition of [-R, R], spacing ~h0 at 0."""
    ds = 2.0 / grid
    edges_s = np.linspace(-1.0, 1.0, grid + 1)
    mids_s = 0.5 * (edges_s[:-1] + edges_s[1:])
    if R * ds <= h0:
        return R * mids_s, np.full(grid, R * ds)
    # spacing at the origin is about R * alpha / sinh(alpha) * ds
    alpha = brentq(lambda a: R * a / math.sinh(a) * ds - h0, 1e-9, 700.0)
    x = lambda s: R * np.sinh(alpha * s) / math.sinh(alpha)
    return x(mids_s), np.diff(x(edges_s))


def _origin_spacing(meas: AffineMeasure, f: TestFunction) -> float:
    lo, hi = f.support(meas.curve)
    g = meas.curve.gamma(np.linspace(lo, hi, 513))
    extent = float((g.max(axis=0) - g.min(axis=0)).max())
    return np.pi / (4.0 * max(extent, 1e-12))


def lq_norm_box(meas: AffineMeasure, f: TestFunction, q: float, R: float, grid: int) -> float:
    """||(f dlambda)^||_{L^q([-R, R]^d)} on a graded tensor grid (d <= 3)."""
    d = meas.curve.d
    if d > 3:
        raise DomainError("tensor grids are for d <= 3; use lq_norm_mc")
    x, jac = graded_axis(R, grid, _origin_spacing(meas, f))
    mesh = np.meshgrid(*([x] * d), indexing="ij")
    jmesh = np.meshgrid(*([jac] * d), indexing="ij")
    xis = np.stack([m.ravel() for m in mesh], axis=-1)
    cell = np.prod(np.stack([m.ravel() for m in jmesh], axis=-1), axis=-1)
    vals = np.abs(extend_many(meas, f, xis))
    if math.isinf(q):
        return float(vals.max())
    return float((vals**q @ cell) ** (1.0 / q))


def lq_norm_mc(meas: AffineMeasure, f: TestFunction, q: float, R: float, n: int, seed: int,
               chunk_size: int = 4096, workers: int = 1) -> float:
    """MC version of ``lq_norm_box`` (any d): coordinates drawn from the sinh-graded density."""
    d = meas.curve.d
    h0 = _origin_spacing(meas, f)
    grid = 256
    ds = 2.0 / grid
    alpha = 0.0 if R * ds <= h0 else brentq(lambda a: R * a / math.sinh(a) * ds - h0, 1e-9, 700.0)

    def sampler(rng, m):
        s = rng.uniform(-1.0, 1.0, size=(m, d))
        if alpha == 0.0:
            xi, w = R * s, np.full(m, (2 * R) ** d)
        else:
            xi = R * np.sinh(alpha * s) / math.sinh(alpha)
            w = np.prod(2 * R * alpha * np.cosh(alpha * s) / math.sinh(alpha), axis=1)
        return np.abs(extend_many(meas, f, xi)) ** q * w

    est = mc_mean(sampler, n, seed, 1.0, chunk_size, workers)
    return est.value ** (1.0 / q)


def restriction_ratio(meas: AffineMeasure, f: TestFunction, pair: ExponentPair, R: float,
                      grid: int = 128, tol: float = 1e-10, n: int = 20000, seed: int = 0,
                      workers: int = 1, details: bool = False):
    """||(f dlambda)^||_{L^q([-R,R]^d)} / ||f||_{L^p(lambda)}.

    With ``details`` a dict is returned that also holds the value on a grid of
    half the resolution (the Richardson-style resolution check).
    """
    d = meas.curve.d
    if pair.d != d:
        raise DomainError("exponent pair dimension does not match the curve")
    if not R > 0:
        raise DomainError("R must be positive")
    fnorm = lp_norm(meas, f, pair.p)
    if fnorm == 0:
        raise DegenerateInputError("zero test function")
    q = pair.q
    if d <= 3:
        num = lq_norm_box(meas, f, q, R, grid)
        coarse = lq_norm_box(meas, f, q, R, grid // 2) if details else None
    else:
        num = lq_norm_mc(meas, f, q, R, n, seed, workers=workers)
        coarse = None
    ratio = num / fnorm
    if not details:
        return ratio
    return {"ratio": ratio, "norm_q": num, "norm_p": fnorm, "p": pair.p, "q": q, "R": R,
            "grid": grid, "coarse_ratio": None if coarse is None else coarse / fnorm}


def uniformity_sweep(curves, f_corpus, pair: ExponentPair, R: float, grid: int = 128) -> dict:
    """Max restriction ratio over the test functions, per curve; headline max/min spread."""
    rows = []
    for curve in curves:
        meas = AffineMeasure(curve)
        ratios = [restriction_ratio(meas, f, pair, R, grid) for f in f_corpus]
        rows.append({"curve": curve.to_dict(), "ratios": ratios, "max_ratio": max(ratios)})
    maxes = [r["max_ratio"] for r in rows]
    return {"p": pair.p, "q": pair.q, "R": R, "grid": grid, "rows": rows,
            "spread": max(maxes) / min(maxes)}

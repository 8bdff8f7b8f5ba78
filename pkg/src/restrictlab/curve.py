"""Simple curves, affine arclength density and the dyadic partition by values of omega.

A simple curve in R^d is the graph

    gamma(t) = (t, t^2/2!, ..., t^(d-1)/(d-1)!, phi(t)),   a < t < b,

with phi^(j) > 0 on (a, b) for j = 0..d+2.  We write omega = phi^(d); the affine
arclength measure is omega(t)^(2/(d^2+d)) dt.

Curve families are a closed registry with exact derivative evaluators, since the
kernel identity tests need phi^(j) to full precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ConfigError, DomainError, EvaluationError, InvariantViolation

# ---------------------------------------------------------------------------
# curve families


class Family:
    """Base class: ``deriv(j, t)`` returns phi^(j)(t), vectorised over ``t``."""

    name: str = "family"

    def deriv(self, j: int, t):
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"family": self.name, "params": self.params()}


@dataclass(frozen=True)
class Monomial(Family):
    """phi(t) = t^N / N!  (valid on t > 0 when N >= d + 2)."""

    N: int
    name: str = field(default="monomial", init=False, repr=False)

    def deriv(self, j, t):
        t = np.asarray(t, dtype=float)
        if j > self.N:
            return np.zeros_like(t)
        k = self.N - j
        return t**k / math.factorial(k)

    def params(self):
        return {"N": self.N}


@dataclass(frozen=True)
class Exponential(Family):
    name: str = field(default="exponential", init=False, repr=False)

    def deriv(self, j, t):
        return np.exp(np.asarray(t, dtype=float))


@lru_cache(maxsize=None)
def _flat_poly(j: int) -> tuple:
    # phi^(j)(t) = P_j(x) exp(-x) with x = 1/t and P_{j+1}(x) = x^2 (P_j(x) - P_j'(x))
    c = np.array([1.0])
    for _ in range(j):
        c = npoly.polymul([0.0, 0.0, 1.0], npoly.polysub(c, npoly.polyder(c)))
    return tuple(c)


@dataclass(frozen=True)
class Flat(Family):
    """phi(t) = exp(-1/t), flat to infinite order at t = 0."""

    name: str = field(default="flat", init=False, repr=False)

    def deriv(self, j, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        x = 1.0 / t[pos]
        out[pos] = npoly.polyval(x, _flat_poly(j)) * np.exp(-x)
        return out


@dataclass(frozen=True)
class Scaled(Family):
    """c * inner, for a positive constant c."""

    c: float
    inner: Family
    name: str = field(default="scaled", init=False, repr=False)

    def deriv(self, j, t):
        return self.c * self.inner.deriv(j, t)

    def params(self):
        return {"c": self.c, "inner": self.inner.to_dict()}


def family_from_dict(obj: dict) -> Family:
    if not isinstance(obj, dict) or "family" not in obj:
        raise ConfigError("curve family must be an object with a 'family' key", field="family")
    name = obj["family"]
    params = obj.get("params", {}) or {}
    if name == "monomial":
        if "N" not in params:
            raise ConfigError("monomial family needs params.N", field="params.N")
        return Monomial(int(params["N"]))
    if name == "exponential":
        return Exponential()
    if name == "flat":
        return Flat()
    if name == "scaled":
        for key in ("c", "inner"):
            if key not in params:
                raise ConfigError(f"scaled family needs params.{key}", field=f"params.{key}")
        c = float(params["c"])
        if not c > 0:
            raise ConfigError("scaled family needs c > 0", field="params.c")
        return Scaled(c, family_from_dict(params["inner"]))
    raise ConfigError(f"unknown curve family {name!r}", field="family")


# ---------------------------------------------------------------------------
# curve specs


@dataclass(frozen=True)
class CurveSpec:
    """A curve of the form above on (a, b).

    ``degenerate`` marks curves admitted without the strict positivity
    hypotheses (the moment curve, the parabola on a symmetric interval).
    Such curves are only required to have omega > 0.
    """

    d: int
    a: float
    b: float
    family: Family
    degenerate: bool = False

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.d}")
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.a < self.b:
            raise DomainError(f"need finite a < b, got ({self.a}, {self.b})")

    def deriv(self, j: int, t):
        """phi^(j)(t) without domain checks (also used at the endpoints)."""
        return self.family.deriv(j, t)

    def omega_unchecked(self, t):
        return self.family.deriv(self.d, t)

    def gamma(self, t):
        """Points gamma(t), shape ``t.shape + (d,)``."""
        t = np.asarray(t, dtype=float)
        cols = [t**k / math.factorial(k) for k in range(1, self.d)]
        cols.append(self.family.deriv(0, t))
        return np.stack(cols, axis=-1)

    def gamma_prime(self, t):
        """Tangent vectors (1, t, ..., t^(d-2)/(d-2)!, phi'(t))."""
        t = np.asarray(t, dtype=float)
        cols = [t**k / math.factorial(k) for k in range(0, self.d - 1)]
        cols.append(self.family.deriv(1, t))
        return np.stack(cols, axis=-1)

    def with_interval(self, a: float, b: float) -> "CurveSpec":
        return CurveSpec(self.d, a, b, self.family, self.degenerate)

    def to_dict(self) -> dict:
        out = {"d": self.d, "a": self.a, "b": self.b, **self.family.to_dict()}
        if self.degenerate:
            out["degenerate"] = True
        return out

    @classmethod
    def from_dict(cls, obj: dict, allow_degenerate: bool = False) -> "CurveSpec":
        if not isinstance(obj, dict):
            raise ConfigError("curve must be a JSON object", field="curve")
        for key in ("d", "a", "b", "family"):
            if key not in obj:
                raise ConfigError(f"curve is missing field {key!r}", field=f"curve.{key}")
        try:
            d, a, b = int(obj["d"]), float(obj["a"]), float(obj["b"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad numeric curve field: {exc}", field="curve") from exc
        degenerate = bool(obj.get("degenerate", False)) or allow_degenerate
        try:
            return cls(d, a, b, family_from_dict(obj), degenerate)
        except DomainError as exc:
            raise ConfigError(str(exc), field="curve") from exc


@dataclass(frozen=True)
class AffineMeasure:
    curve: CurveSpec

    @property
    def exponent(self) -> float:
        d = self.curve.d
        return 2.0 / (d * d + d)

    def density(self, t):
        return affine_density(self, t)

    def density_unchecked(self, t):
        return self.curve.omega_unchecked(t) ** self.exponent


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    passed: bool
    min_values: dict  # j -> smallest sampled phi^(j)
    violation: tuple | None = None  # first (j, t) with phi^(j)(t) <= 0

    def __bool__(self):
        return self.passed


def validation_grid(spec: CurveSpec, grid_size: int) -> np.ndarray:
    """Interior sample points; log-spaced when a = 0 is a limit point."""
    a, b = spec.a, spec.b
    if a == 0.0:
        return np.geomspace(b * 1e-6, b, grid_size + 1)[:-1]
    return np.linspace(a, b, grid_size + 2)[1:-1]


def validate_curve(spec: CurveSpec, grid_size: int = 1024) -> ValidationReport:
    if grid_size < 2:
        raise DomainError("grid_size must be at least 2")
    ts = validation_grid(spec, grid_size)
    mins = {}
    violation = None
    for j in range(spec.d + 3):
        vals = spec.deriv(j, ts)
        bad = ~np.isfinite(vals)
        if bad.any():
            t = float(ts[np.argmax(bad)])
            raise EvaluationError(f"phi^({j})({t}) is not finite", j=j, t=t)
        mins[j] = float(vals.min())
        if violation is None and (vals <= 0).any():
            violation = (j, float(ts[np.argmax(vals <= 0)]))
    return ValidationReport(violation is None, mins, violation)


def require_valid(spec: CurveSpec, grid_size: int = 1024) -> None:
    """Raise unless the curve validates, or is degenerate with omega > 0."""
    if spec.degenerate:
        w = spec.omega_unchecked(validation_grid(spec, grid_size))
        if not (np.all(np.isfinite(w)) and np.all(w > 0)):
            raise InvariantViolation("degenerate curve needs omega > 0 on (a, b)", "omega>0")
        return
    rep = validate_curve(spec, grid_size)
    if not rep.passed:
        j, t = rep.violation
        raise InvariantViolation(
            f"curve is not simple: phi^({j})({t:.6g}) <= 0", f"phi^({j})>0")


# ---------------------------------------------------------------------------
# omega and the affine density


def _check_open(spec: CurveSpec, t):
    t = np.asarray(t, dtype=float)
    if not np.all((t > spec.a) & (t < spec.b)):
        raise DomainError(f"t must lie in the open interval ({spec.a}, {spec.b})")
    return t


def omega(spec: CurveSpec, t):
    t = _check_open(spec, t)
    w = spec.omega_unchecked(t)
    return float(w) if w.ndim == 0 else w


def affine_density(meas: AffineMeasure, t):
    w = omega(meas.curve, t)
    return w ** meas.exponent


# ---------------------------------------------------------------------------
# dyadic partition


@dataclass(frozen=True)
class DyadicPartition:
    """Intervals I_j = [a_j, a_{j+1}) for levels j = jmin..jmax.

    ``breakpoints[i]`` is a_{jmin+i}; the first is a and the last is b (the
    boundary convention that appends one level at each end).
    """

    jmin: int
    jmax: int
    breakpoints: tuple
    a: float
    b: float
    tol: float

    @property
    def levels(self) -> range:
        return range(self.jmin, self.jmax + 1)

    def point(self, j: int) -> float:
        """a_j, for jmin <= j <= jmax + 1."""
        i = j - self.jmin
        if not 0 <= i < len(self.breakpoints):
            raise DomainError(f"breakpoint a_{j} outside partition range [{self.jmin}, {self.jmax + 1}]")
        return self.breakpoints[i]

    def interval(self, j: int) -> tuple:
        return self.point(j), self.point(j + 1)

    def length(self, j: int) -> float:
        lo, hi = self.interval(j)
        return hi - lo

    def level_of(self, t: float) -> int:
        if not self.a < t < self.b:
            raise DomainError(f"{t} not in ({self.a}, {self.b})")
        i = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.jmin + min(i, self.jmax - self.jmin)

    def is_interior(self, j: int) -> bool:
        return self.jmin < j < self.jmax + 1

    def doubling_ratios(self) -> list:
        """(j, (a_{j+1}-a_j) / (a_j-a_{j-1})) for all interior triples."""
        out = []
        for j in range(self.jmin + 1, self.jmax + 1):
            if self.is_interior(j - 1) and self.is_interior(j + 1):
                left = self.point(j) - self.point(j - 1)
                right = self.point(j + 1) - self.point(j)
                out.append((j, right / left))
        return out


def _bisect_level(spec: CurveSpec, target: float, lo: float, hi: float, tol: float) -> float:
    wlo, whi = float(spec.omega_unchecked(lo)), float(spec.omega_unchecked(hi))
    if not wlo <= target <= whi:
        raise InvariantViolation(f"omega does not bracket {target} on [{lo}, {hi}]", "monotone")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        wm = float(spec.omega_unchecked(mid))
        if not wlo <= wm <= whi:
            raise InvariantViolation(f"omega is not monotone near t={mid}", "monotone")
        if wm < target:
            lo, wlo = mid, wm
        else:
            hi, whi = mid, wm
    return 0.5 * (lo + hi)


def dyadic_partition(spec: CurveSpec, tol: float = 1e-12, min_level: int = -64) -> DyadicPartition:
    """Points a_j with omega(a_j) = 2^j, found by bisection.

    ``tol`` is relative to max(1, |a|, |b|).  When omega(a+) = 0 the set of
    attained levels has no least element; levels below ``min_level`` are then
    merged into the leading interval.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    a, b = spec.a, spec.b
    wa, wb = float(spec.omega_unchecked(a)), float(spec.omega_unchecked(b))
    if not (math.isfinite(wb) and wb > 0):
        raise InvariantViolation("omega(b-) must be finite and positive", "omega>0")
    if not wb > wa:
        raise InvariantViolation("omega is not increasing on (a, b)", "monotone")
    lowest = math.floor(math.log2(wa)) + 1 if wa > 0 else min_level
    lowest = max(lowest, min_level)
    highest = math.ceil(math.log2(wb)) - 1  # largest j with 2^j < omega(b)
    abs_tol = tol * max(1.0, abs(a), abs(b))
    if highest < lowest:
        j0 = math.floor(math.log2(wa)) if wa > 0 else min_level - 1
        return DyadicPartition(j0, j0, (a, b), a, b, abs_tol)
    pts = [a]
    lo = a
    for j in range(lowest, highest + 1):
        x = _bisect_level(spec, 2.0**j, lo, b, abs_tol)
        pts.append(x)
        lo = x
    pts.append(b)
    return DyadicPartition(lowest - 1, highest, tuple(pts), a, b, abs_tol)

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from restrictlab.errors import DomainError, PreconditionError
from restrictlab.permutohedron import Composition
from restrictlab.sublevel import (block_functional, fit_loglog_slope, gap_sup, gap_sup_batch,
                                  gap_sup_bruteforce, lemma2_bound_check, sublevel_exponent,
                                  sublevel_measure)


def test_gap_sup_examples():
    # gaps 1, 2: the larger gap takes exponent 2
    assert gap_sup([0, 1, 3]) == 4.0
    assert gap_sup([0, 2, 3]) == 4.0
    assert gap_sup([0, 1]) == 1.0


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=2, max_size=7).map(sorted))
def test_gap_sup_matches_bruteforce(pts):
    assert gap_sup(pts) == pytest.approx(gap_sup_bruteforce(pts), rel=1e-12, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 5), min_size=2, max_size=6).map(sorted), st.floats(-3, 3))
def test_gap_sup_translation_invariant(pts, shift):
    assert gap_sup([p + shift for p in pts]) == pytest.approx(gap_sup(pts), rel=1e-9, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 5), min_size=2, max_size=6).map(sorted), st.floats(0.1, 4))
def test_gap_sup_homogeneous(pts, c):
    m = len(pts)
    expected = c ** (m * (m - 1) / 2) * gap_sup(pts)
    assert gap_sup([c * p for p in pts]) == pytest.approx(expected, rel=1e-9, abs=1e-300)


def test_gap_sup_errors():
    with pytest.raises(DomainError):
        gap_sup([1.0])
    with pytest.raises(DomainError):
        gap_sup([0, 2, 1])
    with pytest.raises(DomainError):
        gap_sup(list(range(13)))


def test_batch_matches_scalar():
    rng = np.random.default_rng(0)
    s = np.sort(rng.random((50, 5)), axis=1)
    np.testing.assert_allclose(gap_sup_batch(s), [gap_sup(r) for r in s])


@pytest.mark.parametrize("lam", [0.25, 1.0, 4.0])
def test_sublevel_p1_exact(lam):
    est = sublevel_measure(1, lam, 10.0, 200_000, seed=1)
    assert est.within(min(lam, 10.0))


def test_sublevel_p2_against_quadrature():
    # W(0, s1, s2) = (smaller gap) * (larger gap)^2, counted on a fine grid
    lam, B = 0.5, 3.0
    g = np.linspace(0, B, 2001)
    h = g[1] - g[0]
    s1, s2 = np.meshgrid(g, g, indexing="ij")
    ok = (s1 <= s2)
    gaps = np.sort(np.stack([s1, s2 - s1]), axis=0)
    w = gaps[0] * gaps[1] ** 2
    area = ((w <= lam) & ok).sum() * h * h
    est = sublevel_measure(2, lam, B, 400_000, seed=2)
    assert abs(est.value - area) <= 3 * est.stderr + 5 * h


def test_sublevel_exponent_p2_close():
    fit = sublevel_exponent(2, n=200_000, seed=3)
    assert abs(fit["slope"] - 2 / 3) < 0.1


def test_fit_slope_exact_power_law():
    x = np.array([0.1, 0.2, 0.4, 0.8])
    assert fit_loglog_slope(x, 3 * x**0.7) == pytest.approx(0.7)
    with pytest.raises(DomainError):
        fit_loglog_slope(x, [1, 0, 0, 0])


def test_block_functional_single_block_is_power_of_w():
    comp = Composition((2,))
    pts = np.array([[0.5, 1.5]])
    val = block_functional(comp, 3, [0.0], [pts])
    assert val[0] == pytest.approx(gap_sup([0, 0.5, 1.5]) ** 1.0)


def test_lemma2_preconditions():
    with pytest.raises(PreconditionError):
        lemma2_bound_check(Composition((1, 1)), 3, [1, 1], 0.1, 100, 0)
    with pytest.raises(PreconditionError):
        lemma2_bound_check(Composition((1, 1)), 4, [1], 0.1, 100, 0)


@pytest.mark.parametrize("parts", [(2,), (1, 1), (0, 2), (2, 0)])
def test_lemma2_ratio_bounded_as_mu_shrinks(parts):
    comp = Composition(parts)
    d = comp.r + 1
    deltas = [1.0] + [0.5] * (comp.k - 1)
    ratios = [lemma2_bound_check(comp, d, deltas, mu, 100_000, seed=5).value
              for mu in (1e-1, 1e-2, 1e-3)]
    assert all(math.isfinite(r) for r in ratios)
    assert max(ratios) < 50

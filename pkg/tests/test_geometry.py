import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from restrictlab.curve import CurveSpec, Exponential, Monomial, dyadic_partition
from restrictlab.errors import DomainError
from restrictlab.geometry import (block_decompose, block_sweep, cell_measure, in_E_batch,
                                  ineq9_integral, ineq9_quadrature_d2, ineq9_sup,
                                  ineq16_block_check, kappa, level_tails, sample_chain,
                                  shell_decay, sublevel_set_E_indicator, sum_range_box,
                                  theorem1_direct, theorem1_free_value_d2)

EXP3 = CurveSpec(3, 0.0, 10.0, Exponential())
PARABOLA = CurveSpec(2, -1.0, 3.0, Monomial(2), degenerate=True)


def test_prefilter_does_not_change_membership():
    rng = np.random.default_rng(0)
    T = np.sort(rng.uniform(0, 10, (20000, 3)), axis=1)
    np.testing.assert_array_equal(in_E_batch(EXP3, T, True), in_E_batch(EXP3, T, False))


def test_indicator_repeated_node_and_errors():
    assert sublevel_set_E_indicator(EXP3, 1.0, [1.0, 2.0])
    with pytest.raises(DomainError):
        sublevel_set_E_indicator(EXP3, 1.0, [2.0])
    with pytest.raises(DomainError):
        sublevel_set_E_indicator(EXP3, 1.0, [3.0, 2.0])


def test_indicator_d2_parabola_is_gap_condition():
    # J = t2 - t1 and omega = 1, so E = {t2 - t1 <= 1}
    assert sublevel_set_E_indicator(PARABOLA, 0.0, [0.9])
    assert not sublevel_set_E_indicator(PARABOLA, 0.0, [1.1])


@pytest.mark.parametrize("graded", [False, True])
def test_chain_sampler_is_unbiased_for_volume(graded):
    # the ordered region t1 <= t2 <= t3 < 4 inside boxes [0,4) has volume 16 / 2
    rng = np.random.default_rng(1)
    _, w = sample_chain(rng, 400_000, 0.0, [0.0, 0.0], [4.0, 4.0], graded)
    assert w.mean() == pytest.approx(8.0, abs=4 * w.std() / math.sqrt(w.size))


@pytest.mark.parametrize("sampler", ["uniform", "graded"])
def test_ineq9_parabola_is_one(sampler):
    est = ineq9_integral(PARABOLA, 0.0, 100_000, seed=7, sampler=sampler)
    assert est.within(1.0)


@pytest.mark.parametrize("t1", [0.3, 1.0, 2.2])
def test_ineq9_d2_against_quadrature(t1):
    spec = CurveSpec(2, 0.0, 3.0, Exponential())
    est = ineq9_integral(spec, t1, 100_000, seed=11)
    assert est.within(ineq9_quadrature_d2(spec, t1), 3.5)


def test_ineq9_rejects_t1_outside():
    with pytest.raises(DomainError):
        ineq9_integral(EXP3, 10.0, 10, seed=0)


def test_ineq9_sup_reports_argsup():
    spec = CurveSpec(3, 0.0, 5.0, Exponential())
    rep = ineq9_sup(spec, [0.5, 2.5, 4.5], 20_000, seed=2)
    assert rep["sup"] == max(e.value for e in rep["estimates"])
    assert rep["argsup"] in (0.5, 2.5, 4.5)


def test_kappa_values():
    assert kappa(2) == 0.5 and kappa(3) == pytest.approx(1 / 6)


def test_block_decompose_example():
    part = dyadic_partition(EXP3)
    j = part.jmin + 1
    bd = block_decompose(part, (j, j + 1, j + 4))
    assert bd.parts == (1, 0)
    assert bd.k == 2
    assert bd.c[1] == part.point(j + 4)
    assert bd.pads[1] == (part.point(j + 3), part.point(j + 4))


def exhaustive_levels(d, lo, width):
    for js in itertools.combinations_with_replacement(range(lo, lo + width + 1), d):
        yield js


@pytest.mark.parametrize("d", [2, 3, 4])
def test_block_invariants_on_level_corpus(d):
    spec = CurveSpec(d, 0.0, 14.0, Exponential())
    part = dyadic_partition(spec)
    for js in exhaustive_levels(d, part.jmin + 1, 8):
        bd = block_decompose(part, js)
        assert sum(bd.parts) == d - bd.k
        assert all(x >= kappa(d) * (1 - 1e-9) for x in bd.comparability)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 12), min_size=2, max_size=6))
def test_block_decompose_random_levels(levels):
    d = len(levels)
    spec = CurveSpec(d, 0.0, 14.0, Exponential())
    part = dyadic_partition(spec)
    js = sorted(part.jmin + 1 + j for j in levels)
    bd = block_decompose(part, js)
    assert bd.breaks[0] == 0 and bd.breaks[-1] == d
    assert all(c < e for c, e in zip(bd.c, bd.dd))


def test_level_tails_count():
    for d in (2, 3, 4):
        for width in (0, 3, 6):
            n = sum(1 for _ in level_tails(0, d, width, 100))
            assert n == math.comb(width + d - 1, d - 1)


def test_block_check_deterministic_and_positive():
    part = dyadic_partition(EXP3)
    j = part.jmin + 1
    lo, hi = part.interval(j)
    t1 = lo + 0.3 * (hi - lo)
    a = ineq16_block_check(EXP3, part, t1, (j, j + 1), 20_000, seed=4, chunk_size=4096)
    b = ineq16_block_check(EXP3, part, t1, (j, j + 1), 20_000, seed=4, chunk_size=4096, workers=3)
    assert a.value > 0 and a == b


def test_cell_measure_needs_right_length():
    part = dyadic_partition(EXP3)
    with pytest.raises(DomainError):
        cell_measure(EXP3, part, 0.5, [1], 10, 0)


def test_block_sweep_shells_sum_to_partials():
    part = dyadic_partition(EXP3)
    j = part.jmin + 1
    lo, hi = part.interval(j)
    sw = block_sweep(EXP3, part, lo + 0.3 * (hi - lo), 6, 5000, seed=1)
    np.testing.assert_allclose(np.cumsum(sw["shell_sums"]), sw["partial_sums"])
    assert len(sw["rows"]) == math.comb(6 + 2, 2)


def test_shell_decay_on_geometric_sequence():
    seq = [1.0, 3.0, 9.0] + [9.0 * 2.0**-k for k in range(1, 8)]
    rep = shell_decay(seq)
    assert rep["peak"] == 2
    assert rep["rate"] == pytest.approx(2.0)
    assert rep["ratios"] == pytest.approx([2.0] * 7)


def test_theorem1_free_value_d2():
    spec = CurveSpec(2, 0.0, 1.0, Exponential())
    lo, hi = sum_range_box(spec)
    est = theorem1_direct(spec, lo - 0.01, hi + 0.01, 40_000, seed=3)
    vol = float(np.prod(hi - lo + 0.02))
    assert est.value * vol == pytest.approx(theorem1_free_value_d2(spec), rel=2e-3)


def test_theorem1_disjoint_box_is_zero():
    spec = CurveSpec(2, 0.0, 1.0, Exponential())
    est = theorem1_direct(spec, [50.0, 50.0], [51.0, 51.0], 2000, seed=0)
    assert est.value == 0.0


def test_theorem1_box_validation():
    with pytest.raises(DomainError):
        theorem1_direct(CurveSpec(2, 0.0, 1.0, Exponential()), [0, 0], [1, 0], 10, 0)

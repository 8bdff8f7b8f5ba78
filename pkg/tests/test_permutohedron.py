import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import fuzz_points, hull_member
from restrictlab.errors import MembershipError, PreconditionError
from restrictlab.permutohedron import (Composition, check_merge_inequalities, compositions,
                                       decompose, decompose_fixing, family_doubleprime,
                                       family_prime, inclusion_rows, is_member, merge_inequalities,
                                       merge_vectors, permutations_of, violated_constraint)


@pytest.mark.parametrize("p,expected", [
    ((2, 2, 2), True),
    ((1, 1, 4), False),
    ((1, 2, 3), True),
    ((3, 2, 1), True),
    ((F(3, 2), F(3, 2), 3), True),
    ((1, 2, 4), False),
    ((1,), True),
    ((2,), False),
])
def test_is_member_examples(p, expected):
    assert is_member(p) is expected


def test_violated_constraint_reports_prefix():
    assert violated_constraint((1, 1, 4)) == ("prefix", 2, 2, 3)
    assert violated_constraint((1, 2, 4))[0] == "sum"


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_is_member_agrees_with_hull_oracle(r):
    rng = np.random.default_rng(100 + r)
    pts = fuzz_points(r, 1500, rng)
    for p in pts:
        assert is_member(p) == hull_member(p), p


def test_decompose_example():
    dec = decompose((F(3, 2), F(3, 2), 3))
    assert dec.point() == (F(3, 2), F(3, 2), 3)
    assert sorted(zip(dec.vertices, dec.weights)) == [((1, 2, 3), F(1, 2)), ((2, 1, 3), F(1, 2))]


def test_decompose_vertex_is_itself():
    dec = decompose((1, 2, 3))
    assert dec.weights == (1,) and dec.vertices == ((1, 2, 3),)


def test_decompose_non_member_carries_constraint():
    with pytest.raises(MembershipError) as exc:
        decompose((1, 1, 4))
    assert exc.value.violated[:2] == ("prefix", 2)


def members(r):
    verts = list(itertools.permutations(range(1, r + 1)))
    return st.lists(st.tuples(st.sampled_from(verts), st.integers(1, 9)), min_size=1, max_size=6).map(
        lambda ws: tuple(sum(F(w, sum(x for _, x in ws)) * v[j] for v, w in ws) for j in range(r)))


@settings(max_examples=60, deadline=None)
@given(data=st.data(), r=st.integers(1, 6))
def test_decompose_reconstructs_exactly(data, r):
    p = data.draw(members(r))
    assert is_member(p)
    dec = decompose(p)
    assert dec.point() == p
    assert sum(dec.weights) == 1
    assert all(w > 0 for w in dec.weights)
    assert len(dec) <= r * (r - 1) // 2 + 1
    assert all(sorted(v) == list(range(1, r + 1)) for v in dec.vertices)


@settings(max_examples=40, deadline=None)
@given(data=st.data(), r=st.integers(2, 6))
def test_decompose_fixing_keeps_top_coordinate(data, r):
    p = list(data.draw(members(r - 1)))
    slot = data.draw(st.integers(0, r - 1))
    p.insert(slot, F(r))
    dec = decompose_fixing(p)
    assert dec.point() == tuple(p)
    assert all(v[slot] == r for v in dec.vertices)


def test_compositions_count_and_sum():
    for r in range(1, 8):
        comps = list(compositions(r))
        assert len(comps) == 2**r  # compositions of r + 1
        assert all(c.r == r for c in comps)
        assert len(set(c.parts for c in comps)) == len(comps)


@pytest.mark.parametrize("parts,expected", [
    ((1, 1), (3, F(3, 2), F(3, 2))),
    ((2,), (1, 2)),
    ((2, 2), (F(5, 2), 5, F(5, 3), F(10, 3), F(5, 2))),
])
def test_family_prime_generators(parts, expected):
    assert family_prime(Composition(parts)) == [tuple(F(x) for x in expected)]


@pytest.mark.parametrize("parts,expected", [
    ((1, 1), (F(3, 2), F(3, 2), 3)),
    ((1, 0, 1), (2, 2, 2, 4)),
])
def test_family_doubleprime_generators(parts, expected):
    assert family_doubleprime(Composition(parts)) == [tuple(F(x) for x in expected)]


def test_family_preconditions():
    with pytest.raises(PreconditionError):
        family_prime(Composition((0, 2)))
    with pytest.raises(PreconditionError):
        family_doubleprime(Composition((3,)))


def test_k1_prime_family_is_the_whole_permutohedron():
    # with one block the generator is (1, ..., r) itself
    for r in range(1, 7):
        assert family_prime(Composition((r,)))[0] == tuple(range(1, r + 1))


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_generator_permutations_are_members(r):
    for comp in compositions(r):
        gens = (family_prime(comp) if comp.parts[0] > 0 else []) + (
            family_doubleprime(comp) if comp.k >= 2 else [])
        for g in gens:
            assert all(is_member(q) for q in permutations_of(g))
            assert all(hull_member(q) for q in list(permutations_of(g))[:6])


def test_inclusion_rows_all_members():
    rows = inclusion_rows(5)
    assert rows and all(r["member"] and r["exact"] for r in rows)
    assert {r["family"] for r in rows} == {"prime", "doubleprime"}


def test_merge_inequality_equality_case():
    lhs, rhs = merge_inequalities(1, 1, 1, 1)["ineq72"]
    assert lhs == rhs == 8


@pytest.mark.parametrize("la,lb", [(1, 1), (2, 5), (7, 3), (10, 10)])
def test_merge_inequalities_hold(la, lb):
    rep = check_merge_inequalities(la, lb)
    assert rep["violations"] == []
    assert rep["checked"] == 4 * (la + 1) * (lb + 1)


def test_merge_m0_trivial():
    for n in range(0, 5):
        for name, (lhs, rhs) in merge_inequalities(4, 4, 0, n).items():
            assert lhs >= rhs, name


@pytest.mark.parametrize("la,lb", [(a, b) for a in range(0, 9) for b in range(0, 9) if a + b > 0])
def test_merge_vectors_are_members(la, lb):
    first, second = merge_vectors(la, lb)
    # the concatenated vectors have la + lb resp. la + lb + 1 entries; pad with the
    # top value to sit in A_{la+lb+1} resp. A_{la+lb+2}
    assert is_member(first + (F(la + lb + 1),))
    assert is_member(second + (F(la + lb + 2),))

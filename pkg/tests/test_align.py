import functools
import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from accentema.align import GAP, Alignment, PhonemeSeq, WeightTable, align, normalized_distance
from accentema.errors import DegenerateReference, UnknownPhoneme

INV = tuple("abcdefgh")
UNIT = WeightTable.unit(INV)


def brute_force(a, b, w):
    """Cheapest cost over every alignment, enumerated by explicit recursion."""
    @functools.lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) and j == len(b):
            return 0.0
        options = []
        if i < len(a) and j < len(b):
            options.append(w.cost(a[i], b[j]) + go(i + 1, j + 1))
        if i < len(a):
            options.append(w.cost(a[i], GAP) + go(i + 1, j))
        if j < len(b):
            options.append(w.cost(GAP, b[j]) + go(i, j + 1))
        return min(options)
    return go(0, 0)


def all_alignments(a, b):
    """Every alignment path as a tuple of pairs (no memoisation, no pruning)."""
    if not a and not b:
        yield ()
        return
    if a and b:
        for rest in all_alignments(a[1:], b[1:]):
            yield ((a[0], b[0]),) + rest
    if a:
        for rest in all_alignments(a[1:], b):
            yield ((a[0], GAP),) + rest
    if b:
        for rest in all_alignments(a, b[1:]):
            yield ((GAP, b[0]),) + rest


def exhaustive_cost(a, b, w):
    return min(sum(w.cost(x, y) for x, y in path) for path in all_alignments(tuple(a), tuple(b)))


seqs = st.lists(st.sampled_from(INV), max_size=6).map(tuple)


# -- examples -----------------------------------------------------------------

def test_identity_alignment_is_all_matches():
    al = align("k æ t".split(), "k æ t".split(), WeightTable.unit(["k", "æ", "t", "ɑ"]))
    assert al.total_cost == 0.0
    assert all(x == y for x, y in al.pairs)


def test_single_substitution():
    w = WeightTable.unit(["k", "æ", "t", "ɑ"])
    al = align("k æ t".split(), "k ɑ t".split(), w)
    assert al.total_cost == 1.0
    assert al.pairs == (("k", "k"), ("æ", "ɑ"), ("t", "t"))
    assert exhaustive_cost(("k", "æ", "t"), ("k", "ɑ", "t"), w) == 1.0


def test_empty_against_nonempty_is_pure_insertion():
    al = align([], ["k", "æ"], WeightTable.unit(["k", "æ"]))
    assert al.total_cost == 2.0
    assert al.pairs == ((GAP, "k"), (GAP, "æ"))


def test_both_empty():
    al = align([], [], UNIT)
    assert al.pairs == () and al.total_cost == 0.0 and al.normalized_cost == 0.0


@pytest.mark.parametrize("cost,ref_len,expected", [(0.0, 3, 0.0), (1.0, 4, 0.25), (2.0, 2, 1.0)])
def test_normalized_distance_examples(cost, ref_len, expected):
    assert normalized_distance(Alignment((), cost, 0.0), ref_len) == expected


def test_normalized_distance_empty_reference():
    assert normalized_distance(Alignment((), 0.0, 0.0), 0) == 0.0
    with pytest.raises(DegenerateReference):
        normalized_distance(Alignment((("a", GAP),), 1.0, 1.0), 0)


def test_unknown_phoneme():
    with pytest.raises(UnknownPhoneme) as exc:
        align(["a", "z"], ["a"], UNIT)
    assert exc.value.label == "z"


def test_gap_cannot_appear_in_sequence():
    with pytest.raises(ValueError):
        PhonemeSeq(("a", GAP))
    with pytest.raises(ValueError):
        PhonemeSeq(("a", ""))
    assert PhonemeSeq.from_string(" a  b ").phones == ("a", "b")


def test_weight_table_invariants():
    w = WeightTable(INV, {("a", "b"): 0.3, ("c", "a"): 1.7, ("d", GAP): -0.5, ("e", "e"): 0.9})
    assert w.cost("b", "a") == w.cost("a", "b") == 0.3
    assert w.cost("a", "c") == 1.0           # clamped
    assert w.cost(GAP, "d") == 0.0           # clamped
    assert w.cost("e", "e") == 0.0           # identity forced to zero
    assert w.cost("f", "g") == 1.0           # absent pair
    with pytest.raises(ValueError):
        w.cost(GAP, GAP)


# -- tie-breaking -------------------------------------------------------------------

def test_tie_prefers_substitution_over_indels():
    # sub costs 1, a delete+insert pair costs 2 under unit weights, so take a
    # table where both routes cost the same
    w = WeightTable(INV, {("a", "b"): 1.0, ("a", GAP): 0.5, ("b", GAP): 0.5})
    assert align(["a"], ["b"], w).pairs == (("a", "b"),)


def test_tie_prefers_deletion_over_insertion():
    # "a a" vs "a": the match can sit on either copy; traceback from the end
    # matches the last copy, so the leftover one is deleted (or inserted)
    w = WeightTable.unit(INV)
    al = align(["a", "a"], ["a"], w)
    assert al.pairs == (("a", GAP), ("a", "a"))
    al = align(["a"], ["a", "a"], w)
    assert al.pairs == ((GAP, "a"), ("a", "a"))


# -- A1 style oracle -------------------------------------------------------------------

def test_matches_exhaustive_search_unit_weights():
    rng = random.Random(1234)
    for _ in range(300):
        a = tuple(rng.choice(INV) for _ in range(rng.randint(0, 5)))
        b = tuple(rng.choice(INV) for _ in range(rng.randint(0, 5)))
        assert align(a, b, UNIT).total_cost == exhaustive_cost(a, b, UNIT)


def test_matches_brute_force_random_weights():
    rng = random.Random(99)
    labels = list(INV) + [GAP]
    for _ in range(100):
        costs = {(x, y): round(rng.random(), 3) for x, y in itertools.combinations(labels, 2)}
        w = WeightTable(INV, costs)
        a = tuple(rng.choice(INV) for _ in range(rng.randint(0, 6)))
        b = tuple(rng.choice(INV) for _ in range(rng.randint(0, 6)))
        al = align(a, b, w)
        assert al.total_cost == pytest.approx(brute_force(a, b, w), abs=1e-12)
        assert al.total_cost == pytest.approx(sum(w.cost(x, y) for x, y in al.pairs), abs=0)


# -- properties -----------------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(seqs, seqs)
def test_columns_round_trip(a, b):
    al = align(a, b, UNIT)
    assert al.column(0) == a and al.column(1) == b
    assert (GAP, GAP) not in al.pairs
    assert al.normalized_cost == pytest.approx(al.total_cost / max(len(b), 1))


@settings(max_examples=200, deadline=None)
@given(seqs, seqs)
def test_symmetry(a, b):
    assert align(a, b, UNIT).total_cost == align(b, a, UNIT).total_cost


@settings(max_examples=200, deadline=None)
@given(seqs, seqs, seqs)
def test_triangle_inequality(a, b, c):
    ab = align(a, b, UNIT).total_cost
    bc = align(b, c, UNIT).total_cost
    ac = align(a, c, UNIT).total_cost
    assert ac <= ab + bc


@settings(max_examples=200, deadline=None)
@given(seqs, seqs, st.lists(st.sampled_from(INV), min_size=1, max_size=4).map(tuple))
def test_common_suffix_does_not_increase_distance(a, b, tail):
    base = align(a, b, UNIT).normalized_cost
    assert align(a + tail, b + tail, UNIT).normalized_cost <= base + 1e-15


@settings(max_examples=100, deadline=None)
@given(seqs, seqs)
def test_deterministic(a, b):
    assert align(a, b, UNIT) == align(a, b, UNIT)

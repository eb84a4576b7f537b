import math
import random
from collections import Counter
from fractions import Fraction

import pytest

from accentema.align import GAP, Alignment, WeightTable, align
from accentema.errors import DegenerateRange, EmptyCounts, NonConvergence
from accentema.pmi import (PmiTable, TrainConfig, count_pairs, estimate_pmi, pmi_from_counts,
                           pmi_to_weights, speaker_accent_score, train_weights)


def exact_pmi(counts):
    """Exact rational evaluation: p(x,y) = n/N, p(x) = o_x / 2N, PMI = log2 of the ratio."""
    total = sum(Fraction(c) for c in counts.values())
    occ = Counter()
    for (x, y), c in counts.items():
        occ[x] += Fraction(c)
        occ[y] += Fraction(c)
    marg = {x: o / (2 * total) for x, o in occ.items()}
    joint = {k: Fraction(c) / total for k, c in counts.items()}
    return joint, marg, {(x, y): math.log2(j / (marg[x] * marg[y])) for (x, y), j in joint.items()}


# -- estimate_pmi / pmi_from_counts -----------------------------------------------

def test_single_pair_hand_value():
    t = pmi_from_counts({("a", "b"): 1})
    assert t.joint == {("a", "b"): 1.0}
    assert t.marg == {"a": 0.5, "b": 0.5}
    assert t.value("b", "a") == 2.0


def test_independence_gives_zero():
    # 4 N n_ab = o_a o_b  <=>  p(a,b) = p(a) p(b)
    counts = {("a", "b"): 1, ("a", "d"): 4, ("b", "c"): 7, ("b", "d"): 8}
    t = pmi_from_counts(counts)
    assert abs(t.value("a", "b")) < 1e-12


@pytest.mark.parametrize("counts", [
    {("a", "b"): 2, ("a", "c"): 1, ("b", "c"): 1},
    {("a", "b"): 5, ("c", "a"): 3, (GAP, "a"): 2, ("d", "e"): 7, ("b", GAP): 1},
    {("x", "y"): 1, ("x", "z"): 11, ("y", "w"): 13, ("z", "w"): 2, ("w", "x"): 6},
])
def test_matches_exact_rational_evaluation(counts):
    joint, marg, pmi = exact_pmi({tuple(sorted(k)): v for k, v in counts.items()})
    t = pmi_from_counts(counts)
    for k, v in joint.items():
        assert t.joint[k] == pytest.approx(float(v), abs=1e-12)
        assert t.pmi[k] == pytest.approx(pmi[k], abs=1e-12)
    for x, v in marg.items():
        assert t.marg[x] == pytest.approx(float(v), abs=1e-12)
    assert math.fsum(t.joint.values()) == pytest.approx(1.0, abs=1e-12)
    assert math.fsum(t.marg.values()) == pytest.approx(1.0, abs=1e-12)


def test_smoothing_hand_value():
    # inventory {a, b, c}, one (a, b) observed, delta = 0.5:
    # counts ab 1.5, ac 0.5, bc 0.5 -> N 2.5; occ a 2, b 2, c 1 -> total 5
    t = pmi_from_counts({("a", "b"): 1}, inventory=("a", "b", "c"), smoothing=0.5)
    assert t.joint[("a", "b")] == pytest.approx(0.6, abs=1e-15)
    assert t.marg["c"] == pytest.approx(0.2, abs=1e-15)
    assert t.value("a", "b") == pytest.approx(math.log2(0.6 / 0.16), abs=1e-12)
    assert t.value("a", "c") == pytest.approx(math.log2(0.2 / 0.08), abs=1e-12)


def test_matched_marginals_switch():
    # "all" marginals: each matched segment adds two occurrences of its label
    t = pmi_from_counts({("a", "b"): 1}, matched_counts={"a": 1})
    assert t.marg == {"a": pytest.approx(0.75), "b": pytest.approx(0.25)}
    assert t.value("a", "b") == pytest.approx(math.log2(1 / (0.75 * 0.25)), abs=1e-12)


def test_count_scale_invariance():
    counts = {("a", "b"): 3, ("a", "c"): 1, ("b", GAP): 2}
    t1 = pmi_from_counts(counts)
    t2 = pmi_from_counts({k: 2 * v for k, v in counts.items()})
    assert t1 == t2
    assert pmi_to_weights(t1) == pmi_to_weights(t2)


def test_pairs_counted_unordered_and_matches_excluded():
    al = [Alignment((("a", "b"), ("b", "a"), ("c", "c"), ("d", GAP)), 0.0, 0.0)]
    pairs, matched = count_pairs(al)
    assert pairs == {("a", "b"): 2, (GAP, "d"): 1}
    assert matched == {"c": 1}
    pairs, _ = count_pairs(al, include_indels=False)
    assert pairs == {("a", "b"): 2}


def test_empty_counts():
    al = [Alignment((("a", "a"),), 0.0, 0.0)]
    with pytest.raises(EmptyCounts):
        estimate_pmi(al, TrainConfig(smoothing=0.0))
    with pytest.raises(EmptyCounts):
        pmi_from_counts({})


def test_smoothing_population():
    al = [Alignment((("a", "b"), ("c", "c")), 0.0, 0.0)]
    t = estimate_pmi(al, TrainConfig())
    assert set(t.joint) == {("a", "b"), (GAP, "a"), (GAP, "b")}
    t = estimate_pmi(al, TrainConfig(include_indels=False))
    assert set(t.joint) == {("a", "b")}
    t = estimate_pmi(al, TrainConfig(include_indels=False, marginals="all"))
    assert set(t.joint) == {("a", "b"), ("a", "c"), ("b", "c")}


# -- pmi_to_weights ------------------------------------------------------------------

def test_min_max_inversion():
    w = pmi_to_weights(PmiTable({}, {}, {("a", "b"): 2.0, ("a", "c"): 0.0}))
    assert w.cost("a", "b") == 0.0
    assert w.cost("a", "c") == 1.0
    assert w.cost("b", "c") == 1.0          # unseen
    assert w.cost("a", "a") == 0.0
    assert w.cost("a", GAP) == 1.0


def test_intermediate_value():
    w = pmi_to_weights(PmiTable({}, {}, {("a", "b"): 3.0, ("a", "c"): -1.0, ("b", "c"): 2.0}))
    assert w.cost("b", "c") == pytest.approx(0.25, abs=1e-15)


def test_degenerate_range_falls_back_to_unit():
    with pytest.warns(DegenerateRange):
        w = pmi_to_weights(PmiTable({}, {}, {("a", "b"): 1.0, ("a", "c"): 1.0}))
    assert w.cost("a", "b") == 1.0 and w.costs == {}


def test_independent_table_collapses_costs():
    # all PMI equal (here all zero-range) -> every substitution the same cost
    t = PmiTable({}, {}, {("a", "b"): 0.0, ("a", "c"): 0.0, ("b", "c"): 0.0})
    with pytest.warns(DegenerateRange):
        w = pmi_to_weights(t)
    assert {w.cost(*k) for k in t.pmi} == {1.0}


# -- training -------------------------------------------------------------------------

def systematic_corpus(n=20, seed=3):
    """Predictions swap every 'a' for 'b'; the other phones pass through."""
    rng = random.Random(seed)
    corpus = []
    for _ in range(n):
        ref = [rng.choice("acdefg") for _ in range(rng.randint(4, 8))]
        if "a" not in ref:
            ref[rng.randrange(len(ref))] = "a"
        pred = ["b" if p == "a" else p for p in ref]
        corpus.append((tuple(pred), tuple(ref)))
    return corpus


def test_systematic_substitution_becomes_cheapest():
    corpus = systematic_corpus()
    res = train_weights(corpus)
    assert res.converged and res.iterations <= 15
    w = res.weights
    others = [(x, y, c) for x, y, c in w.items() if {x, y} != {"a", "b"}]
    assert len(others) == 27
    assert all(w.cost("a", "b") < c for _, _, c in others)
    assert w.cost("a", "b") == 0.0


def test_training_is_deterministic():
    corpus = systematic_corpus(seed=11)
    assert train_weights(corpus) == train_weights(corpus)


def test_stable_alignments_reproduce_weights():
    corpus = systematic_corpus(seed=5)
    res = train_weights(corpus)
    again = pmi_to_weights(estimate_pmi([align(a, b, res.weights) for a, b in corpus]),
                           res.weights.inventory)
    assert again == res.weights


def test_identical_corpus_converges_immediately():
    corpus = [(("a", "b"), ("a", "b"))] * 3
    res = train_weights(corpus)
    assert res.iterations == 1 and res.converged
    assert res.weights == WeightTable.unit({"a", "b"})


def test_weight_delta_criterion():
    res = train_weights(systematic_corpus(), TrainConfig(convergence="weight-delta", epsilon=1e-9))
    assert res.converged
    assert res.weights.cost("a", "b") == 0.0


def test_non_convergence_is_flagged():
    with pytest.warns(NonConvergence):
        res = train_weights(systematic_corpus(), TrainConfig(max_iters=1))
    assert res == (res.weights, 1, False)


def test_count_scale_invariance_of_training():
    corpus = systematic_corpus(seed=8) + [(("d", "e", "f"), ("c", "e", "f"))]
    cfg = TrainConfig(smoothing=0.0)
    w = train_weights(corpus, cfg).weights
    assert {w.cost("a", "b"), w.cost("c", "d")} == {0.0, 1.0}
    assert w == train_weights(corpus * 3, cfg).weights


@pytest.mark.parametrize("bad", [dict(max_iters=0), dict(epsilon=0.0), dict(smoothing=-1.0),
                                 dict(convergence="never"), dict(marginals="some")])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        TrainConfig(**bad)


def test_pmi_ld_increases_with_mutation_rate():
    # one speaker per rate; shared uniforms so higher rates mutate a superset
    rng = random.Random(2024)
    inv = "abcdefghij"
    refs = [tuple(rng.choice(inv) for _ in range(8)) for _ in range(120)]
    draws = [[(rng.random(), rng.choice(inv)) for _ in r] for r in refs]
    rates = (0.0, 0.1, 0.2, 0.3)
    corpus, owner = [], []
    for rho in rates:
        for ref, dr in zip(refs, draws):
            pred = tuple(s if u < rho and s != p else p for p, (u, s) in zip(ref, dr))
            corpus.append((pred, ref))
            owner.append(rho)
    w = train_weights(corpus).weights
    score = {}
    for rho in rates:
        d = [align(p, r, w).normalized_cost for (p, r), o in zip(corpus, owner) if o == rho]
        score[rho] = speaker_accent_score(str(rho), [(str(i), x, 0.0) for i, x in enumerate(d)]).pmi_ld_us
    assert score[0.0] == 0.0
    assert score[0.0] < score[0.1] < score[0.2] < score[0.3]


# -- speaker scores --------------------------------------------------------------------------

def test_speaker_score_arithmetic():
    s = speaker_accent_score("s", [("u1", 0.2, 0.1), ("u2", 0.4, 0.1)])
    assert s.pmi_ld_us == pytest.approx(0.3) and s.pmi_ld_uk == pytest.approx(0.1)
    assert s.relative == pytest.approx(0.2) and s.n_utts == 2
    z = speaker_accent_score("z", [("u", 0.0, 0.0)])
    assert (z.pmi_ld_us, z.pmi_ld_uk, z.relative) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        speaker_accent_score("e", [])


def test_british_speaker_scores_positive():
    us = [("k", "ɑ", "ɹ"), ("b", "ɝ", "d"), ("l", "ɑ", "t"), ("d", "æ", "n", "s")]
    uk = [("k", "ɑː"), ("b", "ɜː", "d"), ("l", "ɒ", "t"), ("d", "ɑː", "n", "s")]
    corpus_us = [(b, u) for u, b in zip(us, uk)] + [(u, u) for u in us]
    corpus_uk = [(b, b) for b in uk] + [(u, b) for u, b in zip(us, uk)]
    w_us = train_weights(corpus_us).weights
    w_uk = train_weights(corpus_uk).weights
    rows = [(str(i), align(b, u, w_us).normalized_cost, align(b, b, w_uk).normalized_cost)
            for i, (u, b) in enumerate(zip(us, uk))]
    assert speaker_accent_score("brit", rows).relative > 0

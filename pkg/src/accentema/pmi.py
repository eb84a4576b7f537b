"""PMI-derived edit weights and per-speaker accent scores.

Counts are taken over unordered aligned pairs ``{x, y}`` with ``x != y``.
Each counted pair contributes one occurrence to the marginal of each of its
two labels, so a single observed pair ``{a, b}`` gives ``p(a, b) = 1`` and
``p(a) = p(b) = 1/2``.
"""

import math
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .align import GAP, Alignment, WeightTable, _key, align
from .errors import DegenerateRange, EmptyCounts, NonConvergence


@dataclass(frozen=True)
class TrainConfig:
    max_iters: int = 15
    convergence: str = "alignments-stable"  # or "weight-delta"
    epsilon: float = 1e-6
    smoothing: float = 0.5
    include_indels: bool = True
    # "nonmatching": marginals over the same x != y pair population as the joint.
    # "all": marginals also count matched segments.
    marginals: str = "nonmatching"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.smoothing < 0:
            raise ValueError("smoothing must be >= 0")
        if self.convergence not in ("alignments-stable", "weight-delta"):
            raise ValueError(f"unknown convergence criterion {self.convergence!r}")
        if self.marginals not in ("nonmatching", "all"):
            raise ValueError(f"unknown marginals mode {self.marginals!r}")


@dataclass(frozen=True)
class PmiTable:
    joint: dict
    marg: dict
    pmi: dict

    def value(self, x, y):
        return self.pmi[_key(x, y)]


class TrainResult(NamedTuple):
    weights: WeightTable
    iterations: int
    converged: bool


@dataclass(frozen=True)
class AccentScore:
    speaker_id: str
    pmi_ld_us: float
    pmi_ld_uk: float
    relative: float
    ld_us: float
    ld_uk: float
    n_utts: int

    @property
    def ld_relative(self):
        return self.ld_us - self.ld_uk


def count_pairs(alignments: Iterable[Alignment], include_indels=True):
    """Return (non-matching unordered pair counts, matched label counts)."""
    pairs = Counter()
    matched = Counter()
    for al in alignments:
        for x, y in al.pairs:
            if x == y:
                matched[x] += 1
                continue
            if not include_indels and GAP in (x, y):
                continue
            pairs[_key(x, y)] += 1
    return pairs, matched


def pmi_from_counts(pair_counts, inventory=(), smoothing=0.0, matched_counts=None) -> PmiTable:
    """Build a PmiTable from unordered pair counts.

    ``smoothing`` adds a pseudo-count to every unordered pair of distinct
    labels drawn from ``inventory`` plus the labels seen in ``pair_counts``.
    ``matched_counts`` (label -> count), when given, also feeds the marginals.
    """
    counts = {_key(x, y): float(c) for (x, y), c in pair_counts.items() if x != y and c > 0}
    if smoothing > 0:
        labels = set(inventory)
        for x, y in counts:
            labels.update((x, y))
        labels = sorted(labels)
        for i, x in enumerate(labels):
            for y in labels[i + 1:]:
                counts[(x, y)] = counts.get((x, y), 0.0) + smoothing
    total = math.fsum(counts.values())
    if total <= 0:
        raise EmptyCounts("no non-matching aligned pairs to estimate PMI from")

    occ = Counter()
    for (x, y), c in counts.items():
        occ[x] += c
        occ[y] += c
    if matched_counts:
        for x, c in matched_counts.items():
            occ[x] += 2 * c
    occ_total = math.fsum(occ.values())

    joint = {k: c / total for k, c in sorted(counts.items())}
    marg = {x: c / occ_total for x, c in sorted(occ.items())}
    pmi = {(x, y): math.log2(p / (marg[x] * marg[y])) for (x, y), p in joint.items()}
    return PmiTable(joint, marg, pmi)


def estimate_pmi(alignments: Sequence[Alignment], cfg: TrainConfig = TrainConfig()) -> PmiTable:
    """PMI table from aligned pairs.

    Smoothing covers every pair of labels in the population the marginals
    are taken over: labels seen in non-matching pairs (plus GAP when indels
    count), and matched labels too when ``cfg.marginals == "all"``. Labels
    outside that population get no PMI entry and so cost 1 downstream.
    Smoothing over a wider inventory would hand labels that never take part
    in a substitution pseudo-count-only marginals, and pairs of them would
    score the highest PMI of all.
    """
    pairs, matched = count_pairs(alignments, cfg.include_indels)
    if not pairs and cfg.smoothing == 0:
        raise EmptyCounts("no non-matching aligned pairs to estimate PMI from")
    labels = {x for k in pairs for x in k}
    if cfg.include_indels and cfg.smoothing > 0:
        labels.add(GAP)
    if cfg.marginals == "all":
        labels.update(matched)
    return pmi_from_counts(
        pairs, labels, cfg.smoothing,
        matched if cfg.marginals == "all" else None,
    )


def pmi_to_weights(p: PmiTable, inventory=()) -> WeightTable:
    """Invert and min-max normalise PMI into costs in [0, 1].

    The highest-PMI pair costs 0 and the lowest costs 1. Pairs absent from
    the table (and indels, when the table has none) cost 1.
    """
    if not p.pmi:
        raise ValueError("empty PMI table")
    labels = set(inventory) | {x for k in p.pmi for x in k}
    labels.discard(GAP)
    hi = max(p.pmi.values())
    lo = min(p.pmi.values())
    if hi - lo <= 0:
        warnings.warn("PMI range is degenerate; falling back to unit weights",
                      DegenerateRange, stacklevel=2)
        return WeightTable.unit(labels)
    span = hi - lo
    costs = {k: (hi - v) / span for k, v in p.pmi.items()}
    return WeightTable(frozenset(labels), costs)


def _paths(alignments):
    return [al.pairs for al in alignments]


def train_weights(corpus: Sequence[tuple], cfg: TrainConfig = TrainConfig(), inventory=()) -> TrainResult:
    """Iteratively refine PMI weights over ``(predicted, reference)`` pairs.

    Starts from unit weights. Each iteration aligns the whole corpus under the
    current table, then re-estimates the table from those alignments.
    """
    if not corpus:
        raise ValueError("corpus is empty")
    labels = set(inventory)
    for a, b in corpus:
        labels.update(a)
        labels.update(b)
    weights = WeightTable.unit(labels)

    prev_paths = None
    for it in range(1, cfg.max_iters + 1):
        alignments = [align(a, b, weights) for a, b in corpus]
        paths = _paths(alignments)
        if cfg.convergence == "alignments-stable" and paths == prev_paths:
            return TrainResult(weights, it, True)

        pairs, _ = count_pairs(alignments, cfg.include_indels)
        if not pairs:
            # nothing to learn from: identical strings everywhere
            return TrainResult(WeightTable.unit(labels), it, True)
        new = pmi_to_weights(estimate_pmi(alignments, cfg), labels)

        if cfg.convergence == "weight-delta" and new.max_delta(weights) < cfg.epsilon:
            return TrainResult(new, it, True)
        weights = new
        prev_paths = paths

    warnings.warn(f"weight training stopped at max_iters={cfg.max_iters} without converging",
                  NonConvergence, stacklevel=2)
    return TrainResult(weights, cfg.max_iters, False)


def utterance_distance(pred, ref, weights: WeightTable) -> float:
    return align(pred, ref, weights).normalized_cost


def speaker_accent_score(speaker_id: str, per_utt, unweighted=None) -> AccentScore:
    """Average per-utterance distances into one speaker score.

    ``per_utt`` is a list of ``(utt_id, dist_us, dist_uk)`` PMI-LD values;
    ``unweighted`` is the same shape for plain LD and defaults to ``per_utt``.
    """
    per_utt = list(per_utt)
    if not per_utt:
        raise ValueError(f"no utterances for speaker {speaker_id!r}")
    unweighted = per_utt if unweighted is None else list(unweighted)
    n = len(per_utt)
    us = math.fsum(d[1] for d in per_utt) / n
    uk = math.fsum(d[2] for d in per_utt) / n
    ld_us = math.fsum(d[1] for d in unweighted) / len(unweighted)
    ld_uk = math.fsum(d[2] for d in unweighted) / len(unweighted)
    return AccentScore(speaker_id, us, uk, us - uk, ld_us, ld_uk, n)

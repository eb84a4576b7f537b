"""Weighted edit-distance alignment of phoneme sequences."""

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import DegenerateReference, UnknownPhoneme

GAP = "-"

# Traceback move codes, listed in tie-breaking preference order.
_DIAG, _DEL, _INS = 0, 1, 2
_TIE_TOL = 1e-12


def _key(a, b):
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class PhonemeSeq:
    phones: tuple
    utterance_id: str = ""

    def __post_init__(self):
        phones = tuple(self.phones)
        for p in phones:
            if not p or p == GAP:
                raise ValueError(f"illegal phoneme label {p!r} in {self.utterance_id!r}")
        object.__setattr__(self, "phones", phones)

    @classmethod
    def from_string(cls, text: str, utterance_id: str = "") -> "PhonemeSeq":
        return cls(tuple(text.split()), utterance_id)

    def __len__(self):
        return len(self.phones)

    def __iter__(self):
        return iter(self.phones)


@dataclass(frozen=True)
class WeightTable:
    """Symmetric edit costs over a phoneme inventory.

    ``costs`` holds one entry per unordered label pair, GAP included for indels.
    Pairs that are absent cost 1; identical non-GAP labels always cost 0.
    """

    inventory: frozenset
    costs: Mapping[tuple, float] = field(default_factory=dict)

    def __post_init__(self):
        inv = frozenset(self.inventory) - {GAP}
        clean = {}
        for (a, b), c in self.costs.items():
            if a == b:
                continue
            clean[_key(a, b)] = min(max(float(c), 0.0), 1.0)
        object.__setattr__(self, "inventory", inv)
        object.__setattr__(self, "costs", clean)

    @classmethod
    def unit(cls, inventory: Iterable[str]) -> "WeightTable":
        return cls(frozenset(inventory))

    def cost(self, a: str, b: str) -> float:
        if a == b:
            if a == GAP:
                raise ValueError("cost(GAP, GAP) is undefined")
            return 0.0
        return self.costs.get(_key(a, b), 1.0)

    def check(self, labels: Iterable[str]):
        for p in labels:
            if p not in self.inventory:
                raise UnknownPhoneme(p)

    def max_delta(self, other: "WeightTable") -> float:
        keys = set(self.costs) | set(other.costs)
        return max((abs(self.cost(*k) - other.cost(*k)) for k in keys), default=0.0)

    def items(self):
        """All unordered non-identical pairs over inventory + GAP with their cost."""
        labels = sorted(self.inventory) + [GAP]
        for i, a in enumerate(labels):
            for b in labels[i + 1:]:
                yield a, b, self.cost(a, b)


@dataclass(frozen=True)
class Alignment:
    pairs: tuple
    total_cost: float
    normalized_cost: float

    def column(self, side: int) -> tuple:
        return tuple(p[side] for p in self.pairs if p[side] != GAP)


def align(a: Sequence[str], b: Sequence[str], w: WeightTable) -> Alignment:
    """Minimum-cost alignment of ``a`` against ``b``.

    Ties are broken match > substitution > deletion from ``a`` > insertion
    into ``a``, so the returned path is unique for given inputs.
    ``normalized_cost`` divides by ``max(len(b), 1)``: ``b`` is the reference.
    """
    a = tuple(a)
    b = tuple(b)
    w.check(a)
    w.check(b)
    n, m = len(a), len(b)

    dele = [w.cost(x, GAP) for x in a]
    ins = [w.cost(GAP, y) for y in b]
    sub = [[w.cost(x, y) for y in b] for x in a]

    prev = [0.0] * (m + 1)
    for j in range(1, m + 1):
        prev[j] = prev[j - 1] + ins[j - 1]
    table = [prev]
    for i in range(1, n + 1):
        row = [0.0] * (m + 1)
        row[0] = prev[0] + dele[i - 1]
        sub_i = sub[i - 1]
        d_i = dele[i - 1]
        for j in range(1, m + 1):
            best = prev[j - 1] + sub_i[j - 1]
            c = prev[j] + d_i
            if c < best:
                best = c
            c = row[j - 1] + ins[j - 1]
            if c < best:
                best = c
            row[j] = best
        table.append(row)
        prev = row

    pairs = []
    i, j = n, m
    while i > 0 or j > 0:
        here = table[i][j]
        if i > 0 and j > 0 and abs(table[i - 1][j - 1] + sub[i - 1][j - 1] - here) <= _TIE_TOL:
            pairs.append((a[i - 1], b[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and abs(table[i - 1][j] + dele[i - 1] - here) <= _TIE_TOL:
            pairs.append((a[i - 1], GAP))
            i -= 1
        else:
            pairs.append((GAP, b[j - 1]))
            j -= 1
    pairs.reverse()

    total = sum(w.cost(x, y) for x, y in pairs)
    return Alignment(tuple(pairs), total, total / max(m, 1))


def normalized_distance(al: Alignment, ref_len: int) -> float:
    if ref_len <= 0:
        if al.total_cost > 0:
            raise DegenerateReference("reference is empty but alignment cost is positive")
        return 0.0
    return al.total_cost / ref_len

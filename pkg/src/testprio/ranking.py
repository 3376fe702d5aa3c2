"""Scott-Knott ranking with a Cliff's delta effect-size gate.

Treatments (here: prioritization schemes with their APFD observations) are
sorted by median and recursively split at the boundary that maximizes the
between-side gain

    gain = |l1|/|l| * abs(mean(l1) - mean(l))^2 + |l2|/|l| * abs(mean(l2) - mean(l))^2

computed over the pooled observations of each side. A split is kept only
when the two pooled sides differ by more than a small effect, |delta| >=
0.147 under Cliff's delta; otherwise the whole group shares one rank. Ranks
ascend from the worst median (rank 1 = worst).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

#: Cliff's delta magnitude below which an effect is "small" and a split is rejected.
SMALL_EFFECT = 0.147


@dataclass(frozen=True)
class Treatment:
    """A named list of observations to rank (nonempty)."""

    id: str
    observations: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.observations:
            raise ValueError(f"treatment {self.id!r} has no observations")


@dataclass(frozen=True)
class SkSplit:
    """One candidate prefix/suffix division of a median-sorted treatment list."""

    left: tuple[Treatment, ...]
    right: tuple[Treatment, ...]
    delta_gain: float


@dataclass(frozen=True)
class RankRow:
    id: str
    rank: int
    median: float | None
    iqr: float | None


@dataclass(frozen=True)
class RankReport:
    rows: tuple[RankRow, ...]

    def rank_of(self, treatment_id: str) -> int:
        for row in self.rows:
            if row.id == treatment_id:
                return row.rank
        raise KeyError(treatment_id)

    def row(self, treatment_id: str) -> RankRow:
        for row in self.rows:
            if row.id == treatment_id:
                return row
        raise KeyError(treatment_id)


def cliffs_delta(a: Sequence[float], b: Sequence[float]) -> float:
    """Pairwise dominance of ``a`` over ``b`` in [-1, 1].

    Counts sign(x - y) over all pairs, normalized by |a|*|b|. Computed via
    binary search over the sorted second list, which matches the quadratic
    definition exactly.
    """
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both observation lists must be nonempty")
    a_arr = np.asarray(a, dtype=float)
    b_sorted = np.sort(np.asarray(b, dtype=float))
    less = np.searchsorted(b_sorted, a_arr, side="left")  # per x: count of y < x
    greater = len(b_sorted) - np.searchsorted(b_sorted, a_arr, side="right")
    return float((less - greater).sum()) / (len(a) * len(b))


def _pooled(treatments: Sequence[Treatment]) -> np.ndarray:
    return np.concatenate([np.asarray(t.observations, dtype=float) for t in treatments])


def all_splits(treatments: Sequence[Treatment]) -> list[SkSplit]:
    """Every prefix/suffix division of the list, with its gain."""
    if len(treatments) < 2:
        raise ValueError("need at least 2 treatments to split")
    whole = _pooled(treatments)
    total = len(whole)
    grand_mean = whole.mean()
    splits = []
    for i in range(1, len(treatments)):
        left = tuple(treatments[:i])
        right = tuple(treatments[i:])
        left_obs = _pooled(left)
        right_obs = _pooled(right)
        gain = (
            len(left_obs) / total * abs(left_obs.mean() - grand_mean) ** 2
            + len(right_obs) / total * abs(right_obs.mean() - grand_mean) ** 2
        )
        splits.append(SkSplit(left, right, float(gain)))
    return splits


def best_split(treatments: Sequence[Treatment]) -> SkSplit:
    """The division with the largest gain; first maximum wins ties."""
    best = None
    for split in all_splits(treatments):
        if best is None or split.delta_gain > best.delta_gain:
            best = split
    assert best is not None
    return best


def _median(values: Sequence[float]) -> float:
    return float(np.median(np.asarray(values, dtype=float)))


def _group(treatments: Sequence[Treatment], threshold: float) -> list[list[Treatment]]:
    if len(treatments) < 2:
        return [list(treatments)]
    split = best_split(treatments)
    delta = cliffs_delta(_pooled(split.left), _pooled(split.right))
    if abs(delta) < threshold:
        return [list(treatments)]
    return _group(split.left, threshold) + _group(split.right, threshold)


def scott_knott(
    treatments: Sequence[Treatment], small_effect_threshold: float = SMALL_EFFECT
) -> RankReport:
    """Rank treatments into statistically distinct groups.

    Input order does not matter: treatments are sorted by median (ties by
    id). Each accepted split strictly shrinks the group, so the recursion
    terminates; treatments never separated by an accepted split share a rank.
    """
    if not treatments:
        raise ValueError("need at least one treatment")
    ordered = sorted(treatments, key=lambda t: (_median(t.observations), t.id))
    groups = _group(ordered, small_effect_threshold)
    rows = []
    for rank, group in enumerate(groups, start=1):
        for treatment in group:
            obs = np.asarray(treatment.observations, dtype=float)
            q25, q50, q75 = np.percentile(obs, [25, 50, 75], method="linear")
            rows.append(RankRow(treatment.id, rank, float(q50), float(q75 - q25)))
    return RankReport(tuple(rows))

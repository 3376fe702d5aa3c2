"""Cliff's delta and Scott-Knott ranking."""

import numpy as np
import pytest

from testprio.ranking import (
    SMALL_EFFECT,
    Treatment,
    all_splits,
    best_split,
    cliffs_delta,
    scott_knott,
)


def cliffs_delta_reference(a, b):
    """Quadratic pair-count oracle for the searchsorted implementation."""
    total = 0
    for x in a:
        for y in b:
            if x > y:
                total += 1
            elif x < y:
                total -= 1
    return total / (len(a) * len(b))


class TestCliffsDelta:
    def test_identical_lists_are_zero(self):
        assert cliffs_delta([1, 2, 3], [1, 2, 3]) == 0.0

    def test_complete_dominance(self):
        assert cliffs_delta([4, 5, 6], [1, 2, 3]) == 1.0
        assert cliffs_delta([1, 2, 3], [4, 5, 6]) == -1.0

    def test_hand_case(self):
        assert cliffs_delta([1, 2], [1, 3]) == pytest.approx(-0.25)

    def test_antisymmetry_and_bound(self, rng):
        for _ in range(50):
            a = rng.normal(size=int(rng.integers(1, 15))).tolist()
            b = rng.normal(size=int(rng.integers(1, 15))).tolist()
            d = cliffs_delta(a, b)
            assert d == pytest.approx(-cliffs_delta(b, a), abs=1e-12)
            assert -1.0 <= d <= 1.0

    def test_matches_pair_count_reference(self, rng):
        for _ in range(30):
            size_a = int(rng.integers(1, 12))
            size_b = int(rng.integers(1, 12))
            # Integer draws force plenty of exact ties.
            a = rng.integers(0, 5, size=size_a).tolist()
            b = rng.integers(0, 5, size=size_b).tolist()
            assert cliffs_delta(a, b) == pytest.approx(cliffs_delta_reference(a, b), abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            cliffs_delta([], [1.0])


class TestBestSplit:
    def test_two_disjoint_treatments(self):
        low = Treatment("low", (0.1, 0.2, 0.15))
        high = Treatment("high", (0.8, 0.9, 0.85))
        split = best_split([low, high])
        assert split.left == (low,)
        assert split.right == (high,)
        assert split.delta_gain > 0

    def test_nine_treatments_have_eight_candidates(self):
        treatments = [Treatment(f"s{i}", (float(i), float(i))) for i in range(9)]
        splits = all_splits(treatments)
        assert [(len(s.left), len(s.right)) for s in splits] == [
            (1, 8), (2, 7), (3, 6), (4, 5), (5, 4), (6, 3), (7, 2), (8, 1)
        ]

    def test_identical_observations_have_zero_gain(self):
        treatments = [Treatment(f"s{i}", (0.5, 0.5, 0.5)) for i in range(4)]
        assert all(s.delta_gain == pytest.approx(0.0) for s in all_splits(treatments))

    def test_single_treatment_rejected(self):
        with pytest.raises(ValueError):
            best_split([Treatment("only", (1.0,))])

    def test_split_preserves_order_and_partition(self, rng):
        for _ in range(20):
            treatments = [
                Treatment(f"s{i}", tuple(rng.normal(size=5)))
                for i in range(int(rng.integers(2, 7)))
            ]
            split = best_split(treatments)
            assert list(split.left) + list(split.right) == treatments
            assert split.left and split.right


class TestScottKnott:
    def test_well_separated_get_two_ranks(self):
        low = Treatment("low", tuple([0.2, 0.21, 0.19, 0.2] * 5))
        high = Treatment("high", tuple([0.8, 0.81, 0.79, 0.8] * 5))
        report = scott_knott([low, high])
        assert report.rank_of("low") == 1
        assert report.rank_of("high") == 2
        assert report.row("low").median == pytest.approx(0.2)
        assert report.row("high").iqr == pytest.approx(0.01, abs=0.011)

    def test_same_distribution_shares_one_rank(self):
        rng = np.random.default_rng(7)
        draws = rng.normal(0.5, 0.05, size=(3, 10_000))
        treatments = [Treatment(f"s{i}", tuple(row)) for i, row in enumerate(draws)]
        report = scott_knott(treatments)
        assert {report.rank_of(t.id) for t in treatments} == {1}

    def test_threshold_boundary(self):
        # Dominance construction: delta = (x - y) / |A| against a constant list.
        def pair(x: int):
            a = tuple([1.0] * x + [0.0] * (1000 - x))
            b = tuple([0.5] * 200)
            return Treatment("a", a), Treatment("b", b)

        a, b = pair(573)  # delta 0.146: small effect, no split
        assert abs(cliffs_delta(a.observations, b.observations)) == pytest.approx(0.146)
        report = scott_knott([a, b])
        assert report.rank_of("a") == report.rank_of("b")

        a, b = pair(574)  # delta 0.148: split accepted
        assert abs(cliffs_delta(a.observations, b.observations)) == pytest.approx(0.148)
        report = scott_knott([a, b])
        assert report.rank_of("a") != report.rank_of("b")

    def test_rank_numbers_ascend_from_worst_median(self):
        worst = Treatment("worst", (0.1,) * 20)
        middle = Treatment("middle", (0.5,) * 20)
        best = Treatment("best", (0.9,) * 20)
        report = scott_knott([best, worst, middle])
        assert report.rank_of("worst") == 1
        assert report.rank_of("middle") == 2
        assert report.rank_of("best") == 3

    def test_order_consistency(self, rng):
        # A treatment with a higher median never lands in a lower rank.
        for _ in range(20):
            treatments = [
                Treatment(f"s{i}", tuple(rng.normal(rng.uniform(0, 1), 0.05, size=12)))
                for i in range(int(rng.integers(2, 6)))
            ]
            report = scott_knott(treatments)
            rows = sorted(report.rows, key=lambda r: r.median)
            assert all(a.rank <= b.rank for a, b in zip(rows, rows[1:]))

    def test_permutation_invariance(self, rng):
        treatments = [
            Treatment(f"s{i}", tuple(rng.normal(i / 4.0, 0.1, size=20))) for i in range(5)
        ]
        baseline = scott_knott(treatments)
        for _ in range(5):
            shuffled = [treatments[i] for i in rng.permutation(len(treatments))]
            report = scott_knott(shuffled)
            assert {r.id: r.rank for r in report.rows} == {
                r.id: r.rank for r in baseline.rows
            }

    def test_single_treatment(self):
        report = scott_knott([Treatment("only", (0.5, 0.6))])
        assert report.rank_of("only") == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            scott_knott([])

    def test_default_threshold_value(self):
        assert SMALL_EFFECT == 0.147

"""Synthetic history generation for both failure regimes."""

import numpy as np
import pytest

from testprio.history import filter_useful_builds, parse_matrix, serialize_matrix
from testprio.simgen import GenProfile, generate


def streak_lengths(failed: np.ndarray) -> list[int]:
    """Completed consecutive-failure run lengths, pooled over tests."""
    lengths = []
    for j in range(failed.shape[1]):
        run = 0
        for value in failed[:, j]:
            if value:
                run += 1
            elif run:
                lengths.append(run)
                run = 0
    return lengths


class TestProfileValidation:
    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            GenProfile(kind="weird", n_tests=5, n_builds=5, fail_density=0.1)

    def test_sizes_positive(self):
        with pytest.raises(ValueError):
            GenProfile(kind="open_like", n_tests=0, n_builds=5, fail_density=0.1)

    def test_density_range(self):
        with pytest.raises(ValueError):
            GenProfile(kind="open_like", n_tests=5, n_builds=5, fail_density=0.0)
        with pytest.raises(ValueError):
            GenProfile(kind="open_like", n_tests=5, n_builds=5, fail_density=1.2)

    def test_infeasible_open_density_for_short_streaks(self):
        # Density 0.9 needs streaks to start faster than once per build.
        profile = GenProfile(
            kind="open_like", n_tests=5, n_builds=5, fail_density=0.9, run_length=5.0
        )
        with pytest.raises(ValueError, match="infeasible"):
            generate(profile)

    def test_infeasible_closed_density(self):
        profile = GenProfile(
            kind="closed_like", n_tests=5, n_builds=5, fail_density=0.95
        )
        with pytest.raises(ValueError, match="infeasible"):
            generate(profile)


class TestGenerate:
    def test_same_profile_same_seed_bit_identical(self):
        profile = GenProfile(
            kind="open_like", n_tests=10, n_builds=50, fail_density=0.1, seed=9
        )
        a = serialize_matrix(generate(profile))
        b = serialize_matrix(generate(profile))
        assert a == b

    def test_different_seeds_differ(self):
        base = dict(kind="open_like", n_tests=10, n_builds=50, fail_density=0.1)
        a = serialize_matrix(generate(GenProfile(seed=1, **base)))
        b = serialize_matrix(generate(GenProfile(seed=2, **base)))
        assert a != b

    @pytest.mark.parametrize("kind", ["open_like", "closed_like"])
    def test_every_build_is_useful(self, kind):
        profile = GenProfile(kind=kind, n_tests=8, n_builds=200, fail_density=0.05, seed=4)
        history = generate(profile)
        assert filter_useful_builds(history) == history

    def test_one_test_full_density_always_fails(self):
        for kind in ("open_like", "closed_like"):
            profile = GenProfile(kind=kind, n_tests=1, n_builds=20, fail_density=1.0, seed=2)
            history = generate(profile)
            assert all(r.failed_tests == ["t000"] for r in history.builds)

    def test_emitted_csv_parses_back(self):
        profile = GenProfile(kind="closed_like", n_tests=6, n_builds=30, fail_density=0.2, seed=8)
        history = generate(profile)
        text = serialize_matrix(history)
        assert parse_matrix(text, project_name=history.project_name) == history

    def test_shapes(self):
        profile = GenProfile(kind="open_like", n_tests=7, n_builds=13, fail_density=0.2, seed=1)
        history = generate(profile)
        assert len(history.tests) == 7
        assert len(history.builds) == 13


class TestOpenLikeRegime:
    def test_mean_streak_length_near_target(self):
        profile = GenProfile(
            kind="open_like", n_tests=20, n_builds=10_000,
            fail_density=0.05, run_length=5.0, seed=3,
        )
        _, failed = generate(profile).matrices
        lengths = streak_lengths(failed)
        assert len(lengths) > 500
        assert 4.0 <= float(np.mean(lengths)) <= 6.0

    def test_failures_repeat_across_consecutive_builds(self):
        # The signature of this regime: a failing test usually fails again
        # in the next build.
        profile = GenProfile(
            kind="open_like", n_tests=30, n_builds=3000,
            fail_density=0.05, run_length=5.0, seed=6,
        )
        _, failed = generate(profile).matrices
        repeat = failed[1:] & failed[:-1]
        assert repeat.sum() / failed[:-1].sum() > 0.6


class TestClosedLikeRegime:
    def test_lag1_autocorrelation_is_negligible(self):
        profile = GenProfile(
            kind="closed_like", n_tests=100, n_builds=5000,
            fail_density=0.10, cofail_cluster=0.8, seed=5,
        )
        _, failed = generate(profile).matrices
        for j in range(failed.shape[1]):
            column = failed[:, j].astype(float)
            if column.std() == 0:
                continue
            r = float(np.corrcoef(column[:-1], column[1:])[0, 1])
            assert abs(r) < 0.1

    def test_clustered_tests_cofail_within_builds(self):
        profile = GenProfile(
            kind="closed_like", n_tests=100, n_builds=2000,
            fail_density=0.10, cofail_cluster=1.0, seed=7,
        )
        _, failed = generate(profile).matrices
        # With full clustering, the conditional probability that some other
        # test fails given one does should far exceed the base density.
        f = failed.astype(float)
        rows_with_fail = f[f.sum(axis=1) >= 1]
        mean_fails_in_failing_builds = rows_with_fail.sum(axis=1).mean()
        assert mean_fails_in_failing_builds > 5.0

"""Seeded synthetic build histories for two CI failure regimes.

``open_like`` mimics projects where a broken test stays broken while someone
fixes it: per-test failures arrive as geometric-length streaks (configurable
mean), so consecutive builds repeat failures and recency is informative.

``closed_like`` mimics big integration suites: per-build failure sets are
drawn independently build to build (no streaks to exploit), but correlated
clusters of tests tend to fail together inside one build, so cross-test
structure is informative instead.

Every emitted build contains at least one failure, so generated histories
pass the useful-build filter unchanged. Same profile and seed give a
bit-identical history.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from testprio.history import BuildHistory, BuildRecord, TestOutcome

_KINDS = ("open_like", "closed_like")

#: closed_like: chance a test in an active cluster actually fails.
_CLUSTER_MEMBER_FAIL = 0.9

#: closed_like: tests per correlated cluster.
_CLUSTER_SIZE = 10


@dataclass(frozen=True)
class GenProfile:
    """Shape of a synthetic history.

    ``fail_density`` is the long-run per-test failure probability per build,
    in (0, 1]. ``run_length`` (open_like) is the mean consecutive-failure
    streak. ``cofail_cluster`` (closed_like) is the fraction of tests placed
    into correlated clusters; the rest fail independently.
    """

    kind: str
    n_tests: int
    n_builds: int
    fail_density: float
    run_length: float = 5.0
    cofail_cluster: float = 0.8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.n_tests < 1 or self.n_builds < 1:
            raise ValueError("n_tests and n_builds must be at least 1")
        if not 0.0 < self.fail_density <= 1.0:
            raise ValueError("fail_density must lie in (0, 1]")
        if self.kind == "open_like" and self.run_length < 1.0:
            raise ValueError("run_length must be at least 1")
        if self.kind == "closed_like" and not 0.0 <= self.cofail_cluster <= 1.0:
            raise ValueError("cofail_cluster must lie in [0, 1]")


def generate(profile: GenProfile) -> BuildHistory:
    """Synthesize a history for the profile; deterministic per seed."""
    rng = np.random.default_rng(profile.seed)
    if profile.fail_density == 1.0:
        fails = np.ones((profile.n_builds, profile.n_tests), dtype=bool)
    elif profile.kind == "open_like":
        fails = _open_like(profile, rng)
    else:
        fails = _closed_like(profile, rng)

    tests = tuple(f"t{j:03d}" for j in range(profile.n_tests))
    records = []
    for i in range(profile.n_builds):
        outcomes = {
            t: (TestOutcome.FAIL if fails[i, j] else TestOutcome.PASS)
            for j, t in enumerate(tests)
        }
        records.append(BuildRecord(f"b{i:05d}", i, outcomes))
    return BuildHistory(f"synthetic-{profile.kind}", tests, tuple(records))


def _open_like(profile: GenProfile, rng: np.random.Generator) -> np.ndarray:
    """Per-test geometric failure streaks at the requested steady density.

    With mean streak length L and density d, streaks must start from the
    passing state at rate s = d / (L * (1 - d)) per build; s must not exceed
    1, which bounds the feasible density at L / (L + 1).
    """
    length = profile.run_length
    density = profile.fail_density
    start_rate = density / (length * (1.0 - density))
    if start_rate > 1.0:
        raise ValueError(
            f"infeasible profile: density {density} needs a streak start rate of "
            f"{start_rate:.3f} > 1 at mean run length {length}; "
            f"density must be at most {length / (length + 1.0):.3f}"
        )
    continue_p = 1.0 - 1.0 / length  # geometric streak continuation

    fails = np.zeros((profile.n_builds, profile.n_tests), dtype=bool)
    failing = np.zeros(profile.n_tests, dtype=bool)
    for i in range(profile.n_builds):
        draw = rng.random(profile.n_tests)
        failing = np.where(failing, draw < continue_p, draw < start_rate)
        if not failing.any():
            # Keep every build useful: force one fresh streak to start here.
            failing[rng.integers(profile.n_tests)] = True
        fails[i] = failing
    return fails


def _closed_like(profile: GenProfile, rng: np.random.Generator) -> np.ndarray:
    """Independent builds with correlated co-failing clusters.

    Cluster activations are drawn independently per build, so each test's
    failure indicator has no autocorrelation across builds; tests inside an
    active cluster fail together with high probability.
    """
    density = profile.fail_density
    if density > _CLUSTER_MEMBER_FAIL:
        raise ValueError(
            f"infeasible profile: density {density} exceeds the in-cluster "
            f"failure rate {_CLUSTER_MEMBER_FAIL}"
        )
    n_clustered = int(round(profile.cofail_cluster * profile.n_tests))
    cluster_of = np.full(profile.n_tests, -1, dtype=int)
    n_clusters = 0
    if n_clustered >= 2:
        n_clusters = max(1, n_clustered // _CLUSTER_SIZE)
        members = rng.permutation(profile.n_tests)[:n_clustered]
        for position, test in enumerate(members):
            cluster_of[test] = position % n_clusters
    independent = cluster_of < 0
    activation_p = density / _CLUSTER_MEMBER_FAIL

    fails = np.zeros((profile.n_builds, profile.n_tests), dtype=bool)
    for i in range(profile.n_builds):
        active = rng.random(n_clusters) < activation_p if n_clusters else np.zeros(0, dtype=bool)
        row = np.zeros(profile.n_tests, dtype=bool)
        clustered = cluster_of >= 0
        row[clustered] = active[cluster_of[clustered]] & (
            rng.random(clustered.sum()) < _CLUSTER_MEMBER_FAIL
        )
        row[independent] = rng.random(independent.sum()) < density
        if not row.any():
            if n_clusters:
                # Keep the build useful: force one cluster to activate.
                forced = rng.integers(n_clusters)
                in_cluster = cluster_of == forced
                row[in_cluster] = rng.random(in_cluster.sum()) < _CLUSTER_MEMBER_FAIL
            if not row.any():
                row[rng.integers(profile.n_tests)] = True
        fails[i] = row
    return fails

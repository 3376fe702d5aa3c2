"""Replaying build histories through prioritization schemes.

For each build, a scheme sees only earlier builds (adaptive schemes
additionally reveal the current build's outcomes one test at a time through
the oracle; the optimal baseline alone receives the ground truth outright).
Each build yields one APFD sample.

Seeds fan out from one master seed as sha256(master/scheme/build_index), so
adding or dropping a scheme never perturbs another scheme's randomness, and
reruns with the same master seed reproduce every ordering.

The co-failure scheme is quadratic in history length per run; replays skip
it by default on histories beyond 800 builds or 1500 distinct failing tests,
and every scheme can be cut off by a wall-clock timeout. Both outcomes are
reported as "n/a" rather than raised.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

from testprio.history import BuildHistory
from testprio.metrics import ApfdSample, apfd_from_ordering
from testprio.prioritizers import (
    ActiveLearnerConfig,
    CoFailureState,
    DecayParams,
    ExecutionOracle,
    HISTORY_METRICS,
    RecencyWeights,
    SCHEME_IDS,
    order_by_history_metric,
    prioritize_active_learning,
    prioritize_cofailure,
    prioritize_flip_correlation,
    prioritize_optimal,
    prioritize_random,
)

#: Builds / distinct-failing-tests counts beyond which c1 is skipped by default.
C1_GUARD_MAX_BUILDS = 800
C1_GUARD_MAX_FAILED_TESTS = 1500

#: Default per-scheme wall-clock budget (seconds) for one replay.
DEFAULT_TIMEOUT = 600.0

STATUS_OK = "ok"
STATUS_TIMEOUT = "timeout"
STATUS_SKIPPED = "skipped"


@dataclass(frozen=True)
class SchemeConfig:
    """Per-scheme parameters shared by one run."""

    alpha: float = 0.9
    rocket: RecencyWeights = field(default_factory=RecencyWeights)
    n1: int = 2
    feature_window: int = 10
    negative_sample_cap: int = 10
    c1_update_on_pass: bool = False

    @property
    def decay(self) -> DecayParams:
        return DecayParams(alpha=self.alpha)


@dataclass
class ReplayResult:
    """Everything one scheme produced over one history."""

    scheme: str
    status: str
    samples: list[ApfdSample]
    orderings: list[tuple[int, list[str]]]  # (build_index, ordering)
    total_seconds: float
    note: str = ""

    @property
    def apfd_values(self) -> list[float]:
        return [s.apfd for s in self.samples]


def subseed(master_seed: int, *parts: object) -> int:
    """Derive an independent 64-bit seed from the master seed and labels."""
    text = "/".join(str(p) for p in parts) + f"#{master_seed}"
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _order_one_build(
    history: BuildHistory,
    build_index: int,
    scheme: str,
    seed: int,
    config: SchemeConfig,
    c1_state: CoFailureState | None,
) -> tuple[list[str], CoFailureState | None]:
    record = history.builds[build_index]
    if scheme == "a1":
        return prioritize_random(record.present_tests, seed), c1_state
    if scheme == "a2":
        return prioritize_optimal(record.outcomes, seed), c1_state
    if scheme in HISTORY_METRICS:
        base_metric, descending = HISTORY_METRICS[scheme]
        if scheme == "b3":
            metric = lambda h, t, k: base_metric(h, t, k, config.decay)
        elif scheme == "b4":
            metric = lambda h, t, k: base_metric(h, t, k, config.rocket)
        else:
            metric = base_metric
        return order_by_history_metric(history, build_index, metric, seed, descending), c1_state
    oracle = ExecutionOracle.for_build(record)
    if scheme == "c1":
        ordering, c1_state = prioritize_cofailure(
            history, build_index, oracle,
            state=c1_state, seed=seed, update_on_pass=config.c1_update_on_pass,
        )
    elif scheme == "c2":
        ordering = prioritize_flip_correlation(
            history, build_index, oracle, weights=config.rocket, seed=seed
        )
    elif scheme == "d1":
        ordering = prioritize_active_learning(
            history, build_index, oracle,
            ActiveLearnerConfig(
                n1=config.n1,
                feature_window=config.feature_window,
                seed=seed,
                negative_sample_cap=config.negative_sample_cap,
            ),
        )
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if oracle.reveal_count != len(record.outcomes):
        raise RuntimeError(
            f"{scheme} revealed {oracle.reveal_count} of {len(record.outcomes)} tests"
        )
    return ordering, c1_state


def _check_permutation(ordering: list[str], record_tests: list[str], scheme: str) -> None:
    if sorted(ordering) != sorted(record_tests):
        raise RuntimeError(f"{scheme} returned an invalid permutation")


def replay(
    history: BuildHistory,
    scheme: str,
    config: SchemeConfig | None = None,
    master_seed: int = 0,
    timeout: float = DEFAULT_TIMEOUT,
    capture_timings: bool = False,
) -> ReplayResult:
    """Run one scheme over every failing build of a (useful-filtered) history.

    Builds without failures are skipped (APFD is undefined there). On
    timeout the result keeps the samples gathered so far and is flagged so
    reporting can show an "n/a" row instead of a rank.
    """
    if scheme not in SCHEME_IDS:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEME_IDS}")
    if timeout <= 0:
        raise ValueError("timeout must be positive")
    config = config or SchemeConfig()
    samples: list[ApfdSample] = []
    orderings: list[tuple[int, list[str]]] = []
    c1_state: CoFailureState | None = None
    started = time.monotonic()

    for build_index, record in enumerate(history.builds):
        failing = record.failed_tests
        if not failing:
            continue
        if time.monotonic() - started > timeout:
            return ReplayResult(
                scheme, STATUS_TIMEOUT, samples, orderings,
                time.monotonic() - started,
                note=f"timed out after {timeout:g}s at build {build_index}",
            )
        seed = subseed(master_seed, scheme, build_index)
        build_started = time.monotonic() if capture_timings else None
        ordering, c1_state = _order_one_build(
            history, build_index, scheme, seed, config, c1_state
        )
        elapsed_ms = (
            (time.monotonic() - build_started) * 1000.0 if build_started is not None else None
        )
        _check_permutation(ordering, record.present_tests, scheme)
        value = apfd_from_ordering(ordering, failing)
        samples.append(ApfdSample(scheme, build_index, value, elapsed_ms))
        orderings.append((build_index, ordering))
    return ReplayResult(scheme, STATUS_OK, samples, orderings, time.monotonic() - started)


def c1_guard_trips(history: BuildHistory) -> str | None:
    """Reason the co-failure scheme should be skipped, or None if it is safe."""
    if len(history.builds) > C1_GUARD_MAX_BUILDS:
        return (
            f"{len(history.builds)} builds exceed the c1 guard "
            f"({C1_GUARD_MAX_BUILDS}); pass --no-c1-guard to force it"
        )
    if history.failing_test_count > C1_GUARD_MAX_FAILED_TESTS:
        return (
            f"{history.failing_test_count} failing tests exceed the c1 guard "
            f"({C1_GUARD_MAX_FAILED_TESTS}); pass --no-c1-guard to force it"
        )
    return None


def run_schemes(
    history: BuildHistory,
    schemes: list[str],
    config: SchemeConfig | None = None,
    master_seed: int = 0,
    timeout: float = DEFAULT_TIMEOUT,
    c1_guard: bool = True,
    capture_timings: bool = False,
) -> list[ReplayResult]:
    """Replay each requested scheme, honoring the c1 scale guard."""
    results = []
    for scheme in schemes:
        if scheme == "c1" and c1_guard:
            reason = c1_guard_trips(history)
            if reason is not None:
                results.append(ReplayResult("c1", STATUS_SKIPPED, [], [], 0.0, note=reason))
                continue
        results.append(
            replay(
                history, scheme, config,
                master_seed=master_seed, timeout=timeout, capture_timings=capture_timings,
            )
        )
    return results

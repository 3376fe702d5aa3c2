"""The nine prioritization schemes behind one contract.

Every scheme turns the tests of one build into an ordering (a permutation of
exactly the tests present in that build). Schemes differ in what they read:

* a1/a2: nothing / the current build's ground truth (upper and lower bounds)
* b1..b4: each test's own failure history, collapsed to a sortable metric
* c1/c2: cross-test correlation, steered by outcomes revealed mid-run
* d1: an incrementally retrained linear classifier over history features

All randomness (tie-breaks, shuffles, sampling) flows from an explicit seed,
so every scheme is reproducible. Adaptive schemes observe the current build
only through an :class:`ExecutionOracle`, one test at a time.

Cold start: a test with no prior presence gets the scheme's neutral value
(b1: infinity, so it sorts last; b2/b3/b4: 0; c1: score 0; d1: zero
features). Builds where some tests were absent use the present-only history
of each test.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from testprio.history import BuildHistory, BuildRecord, TestOutcome

SCHEME_IDS = ("a1", "a2", "b1", "b2", "b3", "b4", "c1", "c2", "d1")

#: Human-readable label per scheme id, used in reports.
SCHEME_LABELS = {
    "a1": "random",
    "a2": "optimal",
    "b1": "time since last failure",
    "b2": "failure rate",
    "b3": "exponential decay",
    "b4": "weighted recency",
    "c1": "co-failure",
    "c2": "flip correlation",
    "d1": "active learning",
}

#: Schemes that reveal the current build's outcomes mid-run via the oracle.
ADAPTIVE_SCHEMES = ("c1", "c2", "d1")

#: Schemes carrying mutable state across builds of one replay.
STATEFUL_SCHEMES = ("c1",)


class ExecutionOracle:
    """Hides one build's outcomes; reveals them one test at a time.

    Each test is revealable exactly once, so an adaptive scheme cannot peek
    ahead or re-query; ``reveal_count`` audits the protocol.
    """

    def __init__(self, failures: Mapping[str, bool]):
        self._failed = dict(failures)
        self._revealed: set[str] = set()

    @classmethod
    def for_build(cls, record: BuildRecord) -> "ExecutionOracle":
        return cls({t: o is TestOutcome.FAIL for t, o in record.outcomes.items()})

    @property
    def tests(self) -> frozenset[str]:
        return frozenset(self._failed)

    @property
    def reveal_count(self) -> int:
        return len(self._revealed)

    def reveal(self, test: str) -> bool:
        """Execute ``test``; returns True when it fails."""
        if test not in self._failed:
            raise KeyError(f"test {test!r} is not in this build")
        if test in self._revealed:
            raise RuntimeError(f"test {test!r} already revealed")
        self._revealed.add(test)
        return self._failed[test]


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayParams:
    """Learning rate for the exponential decay metric (0.9 performs best)."""

    alpha: float = 0.9

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class RecencyWeights:
    """Fixed weights over how many builds ago a failure happened."""

    w1: float = 0.7
    w2: float = 0.2
    w_rest: float = 0.1

    def __post_init__(self) -> None:
        if min(self.w1, self.w2, self.w_rest) <= 0:
            raise ValueError("weights must be positive")

    def weight(self, builds_ago: int) -> float:
        if builds_ago == 1:
            return self.w1
        if builds_ago == 2:
            return self.w2
        return self.w_rest


@dataclass
class CoFailureState:
    """Per-test scores the co-failure scheme carries from build to build."""

    scores: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        import json

        return json.dumps(self.scores, sort_keys=True)

    @classmethod
    def from_json(cls, payload: str) -> "CoFailureState":
        import json

        return cls(scores=dict(json.loads(payload)))


@dataclass(frozen=True)
class ActiveLearnerConfig:
    """Knobs for the active-learning scheme.

    ``n1`` is the fault count at which selection switches from uncertainty
    sampling to certainty sampling. ``feature_window`` is how many of each
    test's most recent outcomes become classifier features (zero-padded on
    the left). ``negative_sample_cap`` bounds how many unexecuted tests get
    presumed non-failing per retraining round while no real pass has been
    revealed yet.
    """

    n1: int = 2
    feature_window: int = 10
    seed: int = 0
    negative_sample_cap: int = 10

    def __post_init__(self) -> None:
        if self.n1 < 1:
            raise ValueError("n1 must be at least 1")
        if self.feature_window < 1:
            raise ValueError("feature_window must be at least 1")
        if self.negative_sample_cap < 1:
            raise ValueError("negative_sample_cap must be at least 1")


# ---------------------------------------------------------------------------
# Ranking plumbing
# ---------------------------------------------------------------------------


def rank_by_metric(
    metric: Mapping[str, float], rng: np.random.Generator, descending: bool = True
) -> list[str]:
    """Sort tests by metric value; exact ties break uniformly at random.

    Only the argsort of the metric matters: any strictly monotone transform
    of the values yields the same ordering under the same generator state.
    """
    tests = list(metric)
    jitter = rng.random(len(tests))
    sign = -1.0 if descending else 1.0

    def key(i: int) -> tuple[float, float]:
        return (sign * metric[tests[i]], jitter[i])

    return [tests[i] for i in sorted(range(len(tests)), key=key)]


def _argmax(candidates: Sequence[str], score: Mapping[str, float], rng: np.random.Generator) -> str:
    """Highest-scored candidate; ties break uniformly at random."""
    jitter = rng.random(len(candidates))
    best = max(range(len(candidates)), key=lambda i: (score[candidates[i]], jitter[i]))
    return candidates[best]


# ---------------------------------------------------------------------------
# Group A: baselines
# ---------------------------------------------------------------------------


def prioritize_random(build_tests: Sequence[str], seed: int) -> list[str]:
    """a1: a uniformly random permutation, deterministic per seed."""
    if not build_tests:
        raise ValueError("build has no tests")
    rng = np.random.default_rng(seed)
    order = list(build_tests)
    return [order[i] for i in rng.permutation(len(order))]


def prioritize_optimal(
    ground_truth: Mapping[str, TestOutcome] | Mapping[str, bool], seed: int
) -> list[str]:
    """a2: every failing test before every passing one (omniscient bound).

    Order within the failing and passing groups is a seeded shuffle.
    """
    if not ground_truth:
        raise ValueError("build has no tests")
    rng = np.random.default_rng(seed)
    tests = list(ground_truth)
    jitter = rng.random(len(tests))

    def failed(test: str) -> bool:
        value = ground_truth[test]
        return value is TestOutcome.FAIL if isinstance(value, TestOutcome) else bool(value)

    order = sorted(range(len(tests)), key=lambda i: (not failed(tests[i]), jitter[i]))
    return [tests[i] for i in order]


# ---------------------------------------------------------------------------
# Group B: own-history metrics
# ---------------------------------------------------------------------------


def time_since_last_failure(history: BuildHistory, test: str, at_build: int) -> float:
    """b1 metric: consecutive passing prior builds since the last failure.

    0 means the test failed in its most recent prior appearance; a test that
    never failed scores its full prior presence count; a test never seen
    before scores infinity (ranked last). Ranked ascending.
    """
    vector = history.outcome_vector(test, at_build)
    if not vector:
        return math.inf
    streak = 0
    for outcome in reversed(vector):
        if outcome:
            break
        streak += 1
    return float(streak)


def failure_rate(history: BuildHistory, test: str, at_build: int) -> float:
    """b2 metric: failing builds over builds the test ran in. Ranked descending."""
    vector = history.outcome_vector(test, at_build)
    if not vector:
        return 0.0
    return sum(vector) / len(vector)


def exponential_decay(
    history: BuildHistory, test: str, at_build: int, params: DecayParams = DecayParams()
) -> float:
    """b3 metric: recency-weighted failure score. Ranked descending.

    Seeded with the oldest outcome, then folded left to right:
    value = alpha * outcome + (1 - alpha) * value.
    """
    vector = history.outcome_vector(test, at_build)
    if not vector:
        return 0.0
    value = float(vector[0])
    for outcome in vector[1:]:
        value = params.alpha * outcome + (1.0 - params.alpha) * value
    return value


def weighted_recency(
    history: BuildHistory, test: str, at_build: int, weights: RecencyWeights = RecencyWeights()
) -> float:
    """b4 metric: sum of fixed weights over past failures by how many builds
    ago they happened (most recent prior build weighs 0.7). Ranked descending."""
    vector = history.outcome_vector(test, at_build)
    score = 0.0
    for builds_ago, outcome in enumerate(reversed(vector), start=1):
        if outcome:
            score += weights.weight(builds_ago)
    return score


#: b1..b4 as (metric callable, descending?) for generic metric-ranked ordering.
HISTORY_METRICS: dict[str, tuple[Callable[..., float], bool]] = {
    "b1": (time_since_last_failure, False),
    "b2": (failure_rate, True),
    "b3": (exponential_decay, True),
    "b4": (weighted_recency, True),
}


def order_by_history_metric(
    history: BuildHistory,
    build_index: int,
    metric_fn: Callable[[BuildHistory, str, int], float],
    seed: int,
    descending: bool = True,
) -> list[str]:
    """Order one build's tests by a per-test history metric."""
    record = history.builds[build_index]
    if not record.outcomes:
        raise ValueError(f"build {record.build_id!r} has no tests")
    rng = np.random.default_rng(seed)
    metric = {t: metric_fn(history, t, build_index) for t in record.present_tests}
    return rank_by_metric(metric, rng, descending=descending)


# ---------------------------------------------------------------------------
# Group C: cross-test correlation, outcome-adaptive
# ---------------------------------------------------------------------------


def cofailure_probability(
    builds: Sequence[BuildRecord], finished: str, candidate: str, finished_failed: bool = True
) -> float:
    """Empirical P(candidate fails | finished had the observed outcome).

    Estimated over prior builds where both tests ran and ``finished`` had the
    conditioning outcome; with no such builds the probability defaults to
    0.5, which makes the co-failure score delta vanish exactly.
    """
    conditioning = TestOutcome.FAIL if finished_failed else TestOutcome.PASS
    numerator = denominator = 0
    for record in builds:
        if record.outcomes.get(finished) is not conditioning:
            continue
        candidate_outcome = record.outcomes.get(candidate)
        if candidate_outcome is None:
            continue
        denominator += 1
        if candidate_outcome is TestOutcome.FAIL:
            numerator += 1
    if denominator == 0:
        return 0.5
    return numerator / denominator


def prioritize_cofailure(
    history: BuildHistory,
    build_index: int,
    oracle: ExecutionOracle,
    state: CoFailureState | None = None,
    seed: int = 0,
    update_on_pass: bool = False,
    trace: list[dict[str, float]] | None = None,
) -> tuple[list[str], CoFailureState]:
    """c1: pick by carried score; after each revealed failure, shift every
    unexecuted test's score by (co-failure probability - 0.5).

    Scores persist across builds through the returned state. Updates happen
    only after failing reveals unless ``update_on_pass`` is set. When given,
    ``trace`` collects a snapshot of the unexecuted tests' scores after each
    update. Cost is linear in prior history per update, which makes this the
    expensive scheme on long histories; see the replay guard and timeout.
    """
    record = history.builds[build_index]
    if not record.outcomes:
        raise ValueError(f"build {record.build_id!r} has no tests")
    prior = history.builds[:build_index]
    state = state or CoFailureState()
    rng = np.random.default_rng(seed)

    scores = {t: state.scores.get(t, 0.0) for t in record.present_tests}
    remaining = list(record.present_tests)
    ordering: list[str] = []
    while remaining:
        pick = _argmax(remaining, scores, rng)
        remaining.remove(pick)
        ordering.append(pick)
        failed = oracle.reveal(pick)
        if (failed or update_on_pass) and remaining:
            for test in remaining:
                probability = cofailure_probability(prior, pick, test, finished_failed=failed)
                scores[test] += probability - 0.5
            if trace is not None:
                trace.append({t: scores[t] for t in remaining})

    carried = dict(state.scores)
    carried.update(scores)
    return ordering, CoFailureState(carried)


def flip_count(history: BuildHistory, a: str, b: str, at_build: int) -> int:
    """Prior consecutive-build transitions where both tests changed state.

    Only transitions where both tests ran in both builds count. Symmetric in
    its two test arguments by construction.
    """
    count = 0
    builds = history.builds[:at_build]
    for earlier, later in zip(builds, builds[1:]):
        outcomes = [
            earlier.outcomes.get(a), later.outcomes.get(a),
            earlier.outcomes.get(b), later.outcomes.get(b),
        ]
        if any(o is None for o in outcomes):
            continue
        if outcomes[0] is not outcomes[1] and outcomes[2] is not outcomes[3]:
            count += 1
    return count


def _pairwise_flip_matrix(history: BuildHistory, build_index: int, tests: Sequence[str]) -> np.ndarray:
    """Co-flip counts for every pair of ``tests`` over prior transitions."""
    present, failed = history.matrices
    registry = {t: j for j, t in enumerate(history.tests)}
    cols = [registry[t] for t in tests]
    present = present[:build_index, cols]
    failed = failed[:build_index, cols]
    if build_index < 2:
        return np.zeros((len(tests), len(tests)), dtype=int)
    both_ran = present[:-1] & present[1:]
    flipped = both_ran & (failed[:-1] != failed[1:])
    flips = flipped.astype(int)
    return flips.T @ flips


def prioritize_flip_correlation(
    history: BuildHistory,
    build_index: int,
    oracle: ExecutionOracle,
    weights: RecencyWeights = RecencyWeights(),
    seed: int = 0,
) -> list[str]:
    """c2: start from the weighted-recency maximum, then repeatedly pick the
    unexecuted test that co-flipped most often with the test just executed."""
    record = history.builds[build_index]
    if not record.outcomes:
        raise ValueError(f"build {record.build_id!r} has no tests")
    rng = np.random.default_rng(seed)
    tests = record.present_tests
    index_of = {t: i for i, t in enumerate(tests)}
    co_flips = _pairwise_flip_matrix(history, build_index, tests)

    recency = {t: weighted_recency(history, t, build_index, weights) for t in tests}
    pick = _argmax(tests, recency, rng)
    ordering = [pick]
    oracle.reveal(pick)
    remaining = [t for t in tests if t != pick]
    while remaining:
        last_row = co_flips[index_of[ordering[-1]]]
        score = {t: float(last_row[index_of[t]]) for t in remaining}
        pick = _argmax(remaining, score, rng)
        remaining.remove(pick)
        ordering.append(pick)
        oracle.reveal(pick)
    return ordering


# ---------------------------------------------------------------------------
# Group D: active learning over history features
# ---------------------------------------------------------------------------


class SupportsScoring(Protocol):
    def fit(self, features: np.ndarray, labels: np.ndarray) -> None: ...

    def scores(self, features: np.ndarray) -> np.ndarray: ...


class MarginClassifier:
    """Linear max-margin classifier with margins squashed to (0, 1).

    The squashing is a plain sigmoid of the signed margin: monotone, so
    argmax and closest-to-0.5 selections are exactly margin-based.
    """

    def __init__(self) -> None:
        self._model = None

    def fit(self, features: np.ndarray, labels: np.ndarray) -> None:
        from sklearn.exceptions import ConvergenceWarning
        from sklearn.svm import LinearSVC

        model = LinearSVC(C=1.0, random_state=0, max_iter=5000)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", category=ConvergenceWarning)
            model.fit(features, labels)
        self._model = model

    def scores(self, features: np.ndarray) -> np.ndarray:
        if self._model is None:
            raise RuntimeError("classifier not fitted")
        margins = self._model.decision_function(features)
        return 1.0 / (1.0 + np.exp(-margins))


def history_features(history: BuildHistory, test: str, at_build: int, window: int) -> np.ndarray:
    """The test's last ``window`` outcomes, zero-padded on the left."""
    vector = history.outcome_vector(test, at_build)[-window:]
    features = np.zeros(window)
    if vector:
        features[window - len(vector):] = vector
    return features


def prioritize_active_learning(
    history: BuildHistory,
    build_index: int,
    oracle: ExecutionOracle,
    config: ActiveLearnerConfig = ActiveLearnerConfig(),
    classifier_factory: Callable[[], SupportsScoring] | None = None,
) -> list[str]:
    """d1: random until the first failure, then classifier-guided selection.

    After each reveal the classifier retrains on revealed failures
    (positives) versus revealed passes (negatives); while no pass has been
    revealed, a seeded sample of unexecuted tests stands in as provisional
    negatives. Selection is uncertainty sampling (score closest to 0.5)
    until ``config.n1`` faults have been revealed, then certainty sampling
    (highest score). A degenerate single-class training set falls back to
    ordering the rest by descending feature norm.
    """
    record = history.builds[build_index]
    if not record.outcomes:
        raise ValueError(f"build {record.build_id!r} has no tests")
    rng = np.random.default_rng(config.seed)
    factory = classifier_factory or MarginClassifier
    tests = record.present_tests
    features = {t: history_features(history, t, build_index, config.feature_window) for t in tests}

    remaining = list(tests)
    ordering: list[str] = []
    failed_tests: list[str] = []
    passed_tests: list[str] = []

    def execute(test: str) -> None:
        remaining.remove(test)
        ordering.append(test)
        (failed_tests if oracle.reveal(test) else passed_tests).append(test)

    # Bootstrap: seeded random picks until something fails (or nothing does).
    while remaining and not failed_tests:
        execute(remaining[rng.integers(len(remaining))])

    while remaining:
        negatives = list(passed_tests)
        if not negatives:
            k = min(len(failed_tests), config.negative_sample_cap, len(remaining))
            chosen = rng.choice(len(remaining), size=k, replace=False)
            negatives = [remaining[i] for i in sorted(chosen)]
        labeled = failed_tests + negatives
        labels = np.array([1] * len(failed_tests) + [0] * len(negatives))
        if len(set(labels)) < 2:
            jitter = rng.random(len(remaining))
            by_norm = sorted(
                range(len(remaining)),
                key=lambda i: (-float(np.linalg.norm(features[remaining[i]])), jitter[i]),
            )
            for test in [remaining[i] for i in by_norm]:
                ordering.append(test)
                oracle.reveal(test)
            return ordering

        classifier = factory()
        classifier.fit(np.stack([features[t] for t in labeled]), labels)
        probabilities = classifier.scores(np.stack([features[t] for t in remaining]))
        if len(failed_tests) >= config.n1:
            score = {t: float(p) for t, p in zip(remaining, probabilities)}  # certainty
        else:
            score = {t: -abs(float(p) - 0.5) for t, p in zip(remaining, probabilities)}
        execute(_argmax(remaining, score, rng))
    return ordering

"""Build-to-test outcome histories: data model, file I/O, filtering, screening.

A history is a chronological sequence of CI builds, each recording a pass or
fail outcome per test (a test missing from a build is "absent"). Histories
load from CSV or JSONL, keep the file's row order as replay order, and are
immutable after load, so they are safe for shared concurrent reads.

File formats:

* CSV: header ``build_id,<test1>,<test2>,...``; cell tokens ``pass``,
  ``fail``, ``absent`` (case-insensitive); rows are chronological.
* JSONL: one object per line, ``{"build_id": ..., "outcomes": {test:
  "pass"|"fail"}}``; a test missing from ``outcomes`` is absent.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import IO, Mapping

import numpy as np

FORMATS = ("csv", "jsonl")


class TestOutcome(Enum):
    """Outcome of one test in one build; ABSENT means the test did not run."""

    PASS = "pass"
    FAIL = "fail"
    ABSENT = "absent"


class ParseError(ValueError):
    """Malformed history file; the message names the offending line."""


@dataclass(frozen=True)
class BuildRecord:
    """One build: opaque id, chronological index, and per-test outcomes.

    ``outcomes`` holds only PASS/FAIL entries; a test not in the mapping was
    absent from the build. A build where no test ran at all is "broken".
    """

    build_id: str
    index: int
    outcomes: Mapping[str, TestOutcome]

    def outcome(self, test: str) -> TestOutcome:
        return self.outcomes.get(test, TestOutcome.ABSENT)

    @property
    def present_tests(self) -> list[str]:
        return list(self.outcomes)

    @property
    def failed_tests(self) -> list[str]:
        return [t for t, o in self.outcomes.items() if o is TestOutcome.FAIL]

    @property
    def has_failure(self) -> bool:
        return any(o is TestOutcome.FAIL for o in self.outcomes.values())

    @property
    def is_broken(self) -> bool:
        return not self.outcomes


@dataclass(frozen=True)
class BuildHistory:
    """Chronological build outcomes for one project.

    ``tests`` is the registry of every test name seen anywhere in the
    history, in first-seen order. ``builds`` is the replay order; it is never
    re-sorted after load.
    """

    project_name: str
    tests: tuple[str, ...]
    builds: tuple[BuildRecord, ...]

    def __post_init__(self) -> None:
        if len(set(self.tests)) != len(self.tests):
            raise ValueError("duplicate test names in registry")
        known = set(self.tests)
        seen_ids: set[str] = set()
        for expected, record in enumerate(self.builds):
            if record.index != expected:
                raise ValueError(
                    f"build indices must be contiguous from 0; "
                    f"got {record.index} at position {expected}"
                )
            if record.build_id in seen_ids:
                raise ValueError(f"duplicate build_id {record.build_id!r}")
            seen_ids.add(record.build_id)
            unknown = set(record.outcomes) - known
            if unknown:
                raise ValueError(
                    f"build {record.build_id!r} names unregistered tests: {sorted(unknown)}"
                )

    def __len__(self) -> int:
        return len(self.builds)

    def outcome_vector(self, test: str, before_build: int) -> list[int]:
        """Binary failure vector for ``test`` over builds ``0..before_build-1``.

        1 for a failing build, 0 for a passing one; builds where the test was
        absent are skipped, so the vector length equals the test's prior
        presence count.
        """
        if test not in set(self.tests):
            raise KeyError(f"unknown test {test!r}")
        if not 0 <= before_build <= len(self.builds):
            raise IndexError(f"before_build {before_build} out of range")
        vector = []
        for record in self.builds[:before_build]:
            outcome = record.outcomes.get(test)
            if outcome is not None:
                vector.append(1 if outcome is TestOutcome.FAIL else 0)
        return vector

    @cached_property
    def failing_test_count(self) -> int:
        """Number of distinct tests that failed in at least one build."""
        failed: set[str] = set()
        for record in self.builds:
            failed.update(record.failed_tests)
        return len(failed)

    @cached_property
    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """(present, failed) boolean matrices of shape (builds, tests)."""
        col = {t: j for j, t in enumerate(self.tests)}
        present = np.zeros((len(self.builds), len(self.tests)), dtype=bool)
        failed = np.zeros_like(present)
        for i, record in enumerate(self.builds):
            for test, outcome in record.outcomes.items():
                j = col[test]
                present[i, j] = True
                failed[i, j] = outcome is TestOutcome.FAIL
        return present, failed


def filter_useful_builds(history: BuildHistory) -> BuildHistory:
    """Keep exactly the builds containing at least one failure.

    Drops all-pass builds and broken (no tests ran) builds, preserves
    chronological order, and re-densifies indices from 0. Idempotent.
    """
    kept = [r for r in history.builds if r.has_failure]
    rebuilt = tuple(
        BuildRecord(build_id=r.build_id, index=i, outcomes=r.outcomes)
        for i, r in enumerate(kept)
    )
    return BuildHistory(history.project_name, history.tests, rebuilt)


# ---------------------------------------------------------------------------
# Parsing and serialization
# ---------------------------------------------------------------------------

_TOKENS = {
    "pass": TestOutcome.PASS,
    "fail": TestOutcome.FAIL,
    "absent": TestOutcome.ABSENT,
}


def _text_stream(source: IO | str) -> IO[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    first = source.read(0)
    if isinstance(first, bytes):
        return io.TextIOWrapper(source, encoding="utf-8")
    return source


def parse_matrix(source: IO | str, format: str = "csv", project_name: str = "") -> BuildHistory:
    """Parse a build-to-test outcome table from a stream or string.

    Builds appear in file order; unknown cell tokens, ragged rows, and
    duplicate build ids are rejected with the offending line number.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    stream = _text_stream(source)
    if format == "csv":
        return _parse_csv(stream, project_name)
    return _parse_jsonl(stream, project_name)


def _parse_csv(stream: IO[str], project_name: str) -> BuildHistory:
    lines = stream.read().splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("no builds: empty input")
    header = [cell.strip() for cell in lines[0].split(",")]
    if not header or header[0] != "build_id":
        raise ParseError("line 1: header must start with 'build_id'")
    tests = header[1:]
    if not tests:
        raise ParseError("line 1: header names no tests")
    if len(set(tests)) != len(tests):
        raise ParseError("line 1: duplicate test column")

    records = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = [cell.strip() for cell in line.split(",")]
        if len(cells) != len(header):
            raise ParseError(
                f"line {lineno}: expected {len(header)} columns, got {len(cells)}"
            )
        build_id = cells[0]
        if build_id in seen:
            raise ParseError(f"line {lineno}: duplicate build_id {build_id!r}")
        seen.add(build_id)
        outcomes: dict[str, TestOutcome] = {}
        for test, cell in zip(tests, cells[1:]):
            token = cell.lower()
            if token not in _TOKENS:
                raise ParseError(f"line {lineno}: unknown outcome token {cell!r}")
            outcome = _TOKENS[token]
            if outcome is not TestOutcome.ABSENT:
                outcomes[test] = outcome
        records.append(BuildRecord(build_id, len(records), outcomes))
    if not records:
        raise ParseError("no builds: file has a header but no rows")
    return BuildHistory(project_name, tuple(tests), tuple(records))


def _parse_jsonl(stream: IO[str], project_name: str) -> BuildHistory:
    tests: list[str] = []
    known: set[str] = set()
    rows = []
    seen: set[str] = set()
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or "build_id" not in obj:
            raise ParseError(f"line {lineno}: object must carry 'build_id'")
        build_id = str(obj["build_id"])
        if build_id in seen:
            raise ParseError(f"line {lineno}: duplicate build_id {build_id!r}")
        seen.add(build_id)
        raw = obj.get("outcomes", {})
        if not isinstance(raw, dict):
            raise ParseError(f"line {lineno}: 'outcomes' must be an object")
        outcomes: dict[str, TestOutcome] = {}
        for test, value in raw.items():
            token = str(value).lower()
            if token not in ("pass", "fail"):
                raise ParseError(f"line {lineno}: unknown outcome token {value!r}")
            outcomes[test] = _TOKENS[token]
            if test not in known:
                known.add(test)
                tests.append(test)
        rows.append((build_id, outcomes))
    if not rows:
        raise ParseError("no builds: empty input")
    records = tuple(
        BuildRecord(build_id, i, outcomes) for i, (build_id, outcomes) in enumerate(rows)
    )
    return BuildHistory(project_name, tuple(tests), records)


def serialize_matrix(history: BuildHistory, format: str = "csv") -> str:
    """Render a history back to its canonical CSV or JSONL text."""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    if format == "csv":
        lines = ["build_id," + ",".join(history.tests)]
        for record in history.builds:
            cells = [record.outcome(t).value for t in history.tests]
            lines.append(record.build_id + "," + ",".join(cells))
        return "\n".join(lines) + "\n"
    lines = []
    for record in history.builds:
        outcomes = {t: record.outcomes[t].value for t in history.tests if t in record.outcomes}
        lines.append(json.dumps({"build_id": record.build_id, "outcomes": outcomes}))
    return "\n".join(lines) + "\n"


def load_history(path: str | Path, format: str | None = None, project_name: str | None = None) -> BuildHistory:
    """Load a history file, inferring format from the suffix when not given."""
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix in (".jsonl", ".ndjson", ".json") else "csv"
    if project_name is None:
        project_name = path.stem
    with open(path, "r", encoding="utf-8") as handle:
        return parse_matrix(handle, format=format, project_name=project_name)


def write_history(history: BuildHistory, path: str | Path, format: str = "csv") -> None:
    Path(path).write_text(serialize_matrix(history, format=format), encoding="utf-8")


# ---------------------------------------------------------------------------
# Sanity screening
# ---------------------------------------------------------------------------

#: Repository-metadata checks evaluated only when a metadata sidecar supplies
#: the keyed value: (key, operator, threshold).
DEFAULT_METADATA_CHECKS: tuple[tuple[str, str, float], ...] = (
    ("developers", ">=", 7),
    ("pull_requests", ">", 0),
    ("commits", ">", 20),
    ("releases", ">", 1),
    ("issues", ">", 10),
    ("duration_weeks", ">", 52),
)


@dataclass(frozen=True)
class SanityCriteria:
    """Thresholds a project history must clear to be worth analyzing."""

    min_total_builds: int = 500
    min_useful_builds: int = 100
    min_failed_test_cases: int = 50
    metadata_checks: tuple[tuple[str, str, float], ...] = DEFAULT_METADATA_CHECKS

    def __post_init__(self) -> None:
        for name in ("min_total_builds", "min_useful_builds", "min_failed_test_cases"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for key, op, threshold in self.metadata_checks:
            if op not in (">=", ">"):
                raise ValueError(f"unsupported operator {op!r} for {key!r}")
            if threshold < 0:
                raise ValueError(f"threshold for {key!r} must be nonnegative")


@dataclass(frozen=True)
class SanityCheckResult:
    criterion: str
    threshold: str
    observed: float | int | None
    passed: bool | None  # None = not evaluated (metadata missing)


@dataclass(frozen=True)
class SanityReport:
    results: tuple[SanityCheckResult, ...]

    @property
    def passed(self) -> bool:
        """True when every evaluated criterion passed."""
        return all(r.passed for r in self.results if r.passed is not None)


def sanity_check(
    history: BuildHistory,
    criteria: SanityCriteria | None = None,
    metadata: Mapping[str, float] | None = None,
) -> SanityReport:
    """Screen a raw (unfiltered) history against the selection criteria.

    Counts derived from the history itself are always evaluated; repository
    metadata checks are "not evaluated" unless ``metadata`` supplies the key.
    "Failed test cases" counts distinct tests that ever failed.
    """
    criteria = criteria or SanityCriteria()
    metadata = metadata or {}
    total = len(history.builds)
    useful = len(filter_useful_builds(history).builds)
    failed_cases = history.failing_test_count

    results = [
        SanityCheckResult(
            "total builds", f">= {criteria.min_total_builds}", total,
            total >= criteria.min_total_builds,
        ),
        SanityCheckResult(
            "useful builds", f">= {criteria.min_useful_builds}", useful,
            useful >= criteria.min_useful_builds,
        ),
        SanityCheckResult(
            "failed test cases", f">= {criteria.min_failed_test_cases}", failed_cases,
            failed_cases >= criteria.min_failed_test_cases,
        ),
    ]
    for key, op, threshold in criteria.metadata_checks:
        observed = metadata.get(key)
        if observed is None:
            results.append(SanityCheckResult(key, f"{op} {threshold}", None, None))
        else:
            ok = observed >= threshold if op == ">=" else observed > threshold
            results.append(SanityCheckResult(key, f"{op} {threshold}", observed, ok))
    return SanityReport(tuple(results))

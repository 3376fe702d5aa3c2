"""Shared builders for outcome-grid fixtures.

Tests describe histories column-wise: one list per test, one entry per
build, with 1 = fail, 0 = pass, None = absent. The last row is usually the
"current" build an ordering is produced for.
"""

from __future__ import annotations

import numpy as np
import pytest

from testprio.history import BuildHistory, BuildRecord, TestOutcome


def grid_history(columns: dict[str, list[int | None]], name: str = "fixture") -> BuildHistory:
    tests = tuple(columns)
    lengths = {len(col) for col in columns.values()}
    assert len(lengths) == 1, "all columns must cover the same builds"
    n_builds = lengths.pop()
    records = []
    for i in range(n_builds):
        outcomes = {}
        for test, column in columns.items():
            if column[i] is None:
                continue
            outcomes[test] = TestOutcome.FAIL if column[i] else TestOutcome.PASS
        records.append(BuildRecord(f"b{i + 1}", i, outcomes))
    return BuildHistory(name, tests, tuple(records))


def random_history(
    rng: np.random.Generator,
    n_tests: int,
    n_builds: int,
    fail_p: float = 0.3,
    absent_p: float = 0.0,
) -> BuildHistory:
    """A fully random history; builds may lack failures or tests."""
    columns = {}
    for j in range(n_tests):
        column: list[int | None] = []
        for _ in range(n_builds):
            if absent_p and rng.random() < absent_p:
                column.append(None)
            else:
                column.append(int(rng.random() < fail_p))
        columns[f"t{j}"] = column
    return grid_history(columns, name="random")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260810)

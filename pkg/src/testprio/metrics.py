"""Fault-detection scoring: APFD, mean detection-rate curves, and summaries.

APFD (weighted average percentage of faults detected) rewards orderings that
surface failing tests early:

    apfd = 1 - (sum of fault-revealing ranks) / (n * m) + 1 / (2n)

with n tests in the run, m fault-revealing tests, and 1-based ranks. The
value equals the trapezoidal area under the step curve of the fraction of
faults found versus the fraction of the suite executed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Collection, Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class ApfdInput:
    """Fault-revealing ranks for one prioritized run.

    ``fault_positions`` are the 1-based ranks of the fault-revealing tests,
    strictly increasing; there must be at least one.
    """

    n: int
    fault_positions: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be at least 1")
        m = len(self.fault_positions)
        if m == 0:
            raise ValueError("no faults in run")
        if m > self.n:
            raise ValueError("more faults than tests")
        previous = 0
        for rank in self.fault_positions:
            if not previous < rank <= self.n:
                raise ValueError(
                    f"fault positions must be strictly increasing in 1..{self.n}"
                )
            previous = rank

    @property
    def m(self) -> int:
        return len(self.fault_positions)


@dataclass(frozen=True)
class ApfdSample:
    """One build's APFD under one scheme; elapsed is optional wall time (ms)."""

    algorithm: str
    build_index: int
    apfd: float
    elapsed_ms: float | None = None


@dataclass(frozen=True)
class DetectionCurve:
    """Mean fraction of a build's failures found within the first k tests."""

    x: tuple[int, ...]
    y: tuple[float, ...]


def apfd(inp: ApfdInput) -> float:
    """Evaluate APFD for validated fault positions."""
    return 1.0 - sum(inp.fault_positions) / (inp.n * inp.m) + 1.0 / (2 * inp.n)


def apfd_from_ordering(ordering: Sequence[str], failing: Collection[str]) -> float:
    """APFD of an ordering given the set of fault-revealing test names."""
    failing = set(failing)
    positions = tuple(i for i, test in enumerate(ordering, start=1) if test in failing)
    if len(positions) != len(failing):
        missing = failing - set(ordering)
        raise ValueError(f"failing tests missing from ordering: {sorted(missing)}")
    return apfd(ApfdInput(n=len(ordering), fault_positions=positions))


def detection_curve(
    runs: Sequence[tuple[Sequence[str], Collection[str]]],
) -> DetectionCurve:
    """Pointwise mean detection rate over per-build (ordering, failing) runs.

    For each k, a build contributes the fraction of its failing tests found
    within its first k executions; builds shorter than k contribute 1.0. The
    mean is taken per k across builds (not pooled counts).
    """
    if not runs:
        raise ValueError("need at least one run")
    width = max(len(ordering) for ordering, _ in runs)
    totals = np.zeros(width)
    for ordering, failing in runs:
        failing = set(failing)
        if not failing:
            raise ValueError("run has no failing tests")
        found = 0
        recall = np.ones(width)
        for k, test in enumerate(ordering):
            if test in failing:
                found += 1
            recall[k] = found / len(failing)
        totals += recall
    y = totals / len(runs)
    return DetectionCurve(tuple(range(1, width + 1)), tuple(float(v) for v in y))


def summarize(values: Sequence[float]) -> dict[str, float]:
    """Median and interquartile range (75th minus 25th percentile).

    Percentiles use linear interpolation; downstream ranking reads these
    numbers, so the interpolation rule is fixed here on purpose.
    """
    if len(values) == 0:
        raise ValueError("cannot summarize an empty list")
    arr = np.asarray(values, dtype=float)
    q25, q50, q75 = np.percentile(arr, [25, 50, 75], method="linear")
    return {"median": float(q50), "iqr": float(q75 - q25)}


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------


def export_samples(samples: Iterable[ApfdSample], stream: IO[str]) -> None:
    """Write samples as ``algorithm,build_index,apfd,elapsed_ms`` rows.

    ``elapsed_ms`` is left empty when timing was not captured, which keeps
    the file byte-reproducible from the run seed.
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["algorithm", "build_index", "apfd", "elapsed_ms"])
    for s in samples:
        elapsed = "" if s.elapsed_ms is None else f"{s.elapsed_ms:.3f}"
        writer.writerow([s.algorithm, s.build_index, repr(s.apfd), elapsed])


def read_samples(path: str | Path) -> list[ApfdSample]:
    """Read a samples CSV produced by :func:`export_samples`."""
    samples = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        required = {"algorithm", "build_index", "apfd"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"samples CSV must carry columns {sorted(required)}")
        for row in reader:
            elapsed = row.get("elapsed_ms") or None
            samples.append(
                ApfdSample(
                    algorithm=row["algorithm"],
                    build_index=int(row["build_index"]),
                    apfd=float(row["apfd"]),
                    elapsed_ms=float(elapsed) if elapsed is not None else None,
                )
            )
    if not samples:
        raise ValueError("samples CSV has no rows")
    return samples


def export_curve(curve: DetectionCurve, stream: IO[str]) -> None:
    """Write a detection curve as ``k,mean_recall`` rows."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["k", "mean_recall"])
    for k, recall in zip(curve.x, curve.y):
        writer.writerow([k, repr(recall)])

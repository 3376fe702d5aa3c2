"""Run artifacts: samples and curve CSVs, rank and runtime tables, figures.

Everything written here is a pure function of the replay results, so two
runs with the same config and master seed produce byte-identical CSVs and
rank tables (the runtime table is wall-clock by nature and is the one
exception).
"""

from __future__ import annotations

import io
import json
import platform
from dataclasses import dataclass
from pathlib import Path

from testprio import __version__
from testprio.history import BuildHistory
from testprio.metrics import ApfdSample, DetectionCurve, detection_curve, export_curve, export_samples
from testprio.ranking import RankReport, RankRow, Treatment, scott_knott
from testprio.replay import STATUS_OK, ReplayResult


@dataclass(frozen=True)
class RunArtifacts:
    """Paths of everything one run wrote."""

    out_dir: Path
    samples_csv: Path
    ranks_csv: Path
    ranks_txt: Path
    runtime_csv: Path
    manifest_json: Path
    curve_csvs: tuple[Path, ...]
    figures: tuple[Path, ...]


def rank_completed(results: list[ReplayResult]) -> RankReport:
    """Scott-Knott ranks over completed schemes, with n/a rows for the rest.

    Schemes that were skipped or timed out do not enter the statistics; they
    are appended sharing the worst rank (rank 1) with median/IQR shown as
    n/a, mirroring how over-budget schemes are treated in practice.
    """
    completed = [r for r in results if r.status == STATUS_OK and r.samples]
    if not completed:
        raise ValueError("no scheme completed; nothing to rank")
    treatments = [Treatment(r.scheme, tuple(r.apfd_values)) for r in completed]
    report = scott_knott(treatments)
    rows = list(report.rows)
    for result in results:
        if result.status != STATUS_OK or not result.samples:
            rows.append(RankRow(result.scheme, 1, None, None))
    return RankReport(tuple(rows))


def render_rank_table(report: RankReport) -> str:
    """Aligned text table with rank / what / med / IQR columns."""
    header = ("rank", "what", "med", "IQR")
    body = []
    for row in sorted(report.rows, key=lambda r: (r.rank, r.median is None, r.median or 0.0, r.id)):
        med = "n/a" if row.median is None else f"{row.median:.2f}"
        iqr = "n/a" if row.iqr is None else f"{row.iqr:.2f}"
        body.append((str(row.rank), row.id, med, iqr))
    widths = [max(len(cell) for cell in column) for column in zip(header, *body)]
    lines = [
        "  ".join(cell.ljust(width) for cell, width in zip(cells, widths)).rstrip()
        for cells in [header, *body]
    ]
    return "\n".join(lines) + "\n"


def render_rank_csv(report: RankReport) -> str:
    lines = ["rank,what,med,IQR"]
    for row in sorted(report.rows, key=lambda r: (r.rank, r.median is None, r.median or 0.0, r.id)):
        med = "n/a" if row.median is None else f"{row.median:.4f}"
        iqr = "n/a" if row.iqr is None else f"{row.iqr:.4f}"
        lines.append(f"{row.rank},{row.id},{med},{iqr}")
    return "\n".join(lines) + "\n"


def render_runtime_csv(results: list[ReplayResult]) -> str:
    """Per-scheme replay wall time, with n/a rows for skips and timeouts."""
    lines = ["algorithm,status,seconds"]
    for result in results:
        seconds = f"{result.total_seconds:.3f}" if result.status == STATUS_OK else "n/a"
        lines.append(f"{result.scheme},{result.status},{seconds}")
    return "\n".join(lines) + "\n"


def _curves(history: BuildHistory, results: list[ReplayResult]) -> dict[str, DetectionCurve]:
    curves = {}
    for result in results:
        if result.status != STATUS_OK or not result.orderings:
            continue
        runs = [
            (ordering, history.builds[i].failed_tests) for i, ordering in result.orderings
        ]
        curves[result.scheme] = detection_curve(runs)
    return curves


def _save_figures(
    out_dir: Path,
    curves: dict[str, DetectionCurve],
    results: list[ReplayResult],
) -> tuple[Path, ...]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    if curves:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for scheme, curve in curves.items():
            ax.plot(curve.x, [v * 100 for v in curve.y], label=scheme)
        ax.set_xlabel("tests executed")
        ax.set_ylabel("failing tests found (%)")
        ax.set_ylim(0, 102)
        ax.legend(loc="lower right", ncol=3, fontsize=8)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        path = out_dir / "detection_rates.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    completed = [r for r in results if r.status == STATUS_OK and r.samples]
    if completed:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        ax.boxplot(
            [r.apfd_values for r in completed],
            tick_labels=[r.scheme for r in completed],
            showfliers=False,
        )
        ax.set_xlabel("scheme")
        ax.set_ylabel("APFD")
        ax.grid(alpha=0.3, axis="y")
        fig.tight_layout()
        path = out_dir / "apfd_distributions.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return tuple(written)


def write_artifacts(
    history: BuildHistory,
    results: list[ReplayResult],
    out_dir: str | Path,
    manifest_config: dict,
    figures: bool = True,
) -> RunArtifacts:
    """Write every artifact for one run and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    completed = [r for r in results if r.status == STATUS_OK and r.samples]
    if not completed:
        raise ValueError("no scheme completed; nothing to report")

    samples: list[ApfdSample] = []
    for result in completed:
        samples.extend(result.samples)
    buffer = io.StringIO()
    export_samples(samples, buffer)
    samples_csv = out_dir / "samples.csv"
    samples_csv.write_text(buffer.getvalue(), encoding="utf-8")

    report = rank_completed(results)
    ranks_csv = out_dir / "ranks.csv"
    ranks_csv.write_text(render_rank_csv(report), encoding="utf-8")
    ranks_txt = out_dir / "ranks.txt"
    ranks_txt.write_text(render_rank_table(report), encoding="utf-8")

    runtime_csv = out_dir / "runtime.csv"
    runtime_csv.write_text(render_runtime_csv(results), encoding="utf-8")

    curves = _curves(history, results)
    curve_paths = []
    for scheme, curve in curves.items():
        buffer = io.StringIO()
        export_curve(curve, buffer)
        path = out_dir / f"curve_{scheme}.csv"
        path.write_text(buffer.getvalue(), encoding="utf-8")
        curve_paths.append(path)

    manifest = {
        "config": manifest_config,
        "schemes": {r.scheme: {"status": r.status, "note": r.note} for r in results},
        "versions": {
            "testprio": __version__,
            "python": platform.python_version(),
        },
    }
    manifest_json = out_dir / "manifest.json"
    manifest_json.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    figure_paths: tuple[Path, ...] = ()
    if figures:
        figure_paths = _save_figures(out_dir, curves, results)

    return RunArtifacts(
        out_dir=out_dir,
        samples_csv=samples_csv,
        ranks_csv=ranks_csv,
        ranks_txt=ranks_txt,
        runtime_csv=runtime_csv,
        manifest_json=manifest_json,
        curve_csvs=tuple(curve_paths),
        figures=figure_paths,
    )

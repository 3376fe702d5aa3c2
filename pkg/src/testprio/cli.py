"""Command-line entry points.

Subcommands:

* ``ingest``: parse a history file, print size counts and the sanity report.
* ``gen``: synthesize a history from a profile and write the canonical CSV.
* ``run``: replay schemes over a history and write all run artifacts.
* ``rank``: recompute the rank table from an existing samples CSV.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from testprio.history import (
    ParseError,
    SanityCriteria,
    filter_useful_builds,
    load_history,
    sanity_check,
    serialize_matrix,
)
from testprio.metrics import read_samples
from testprio.prioritizers import SCHEME_IDS, RecencyWeights
from testprio.ranking import Treatment, scott_knott
from testprio.replay import DEFAULT_TIMEOUT, SchemeConfig, run_schemes
from testprio.report import render_rank_csv, render_rank_table, write_artifacts
from testprio.simgen import GenProfile, generate


class CliError(Exception):
    """User-facing failure; printed to stderr with exit code 1."""


def _add_gen_profile_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--profile", type=Path, help="JSON profile file for the generator")
    parser.add_argument("--kind", choices=("open_like", "closed_like"))
    parser.add_argument("--tests", type=int, help="number of tests")
    parser.add_argument("--builds", type=int, help="number of builds")
    parser.add_argument("--density", type=float, help="per-test failure density in (0, 1]")
    parser.add_argument("--run-length", type=float, default=5.0,
                        help="open_like: mean consecutive-failure streak")
    parser.add_argument("--cofail-cluster", type=float, default=0.8,
                        help="closed_like: fraction of tests in correlated clusters")


def _profile_from_args(args: argparse.Namespace) -> GenProfile:
    if args.profile is not None:
        try:
            payload = json.loads(Path(args.profile).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read profile {args.profile}: {exc}") from exc
        try:
            return GenProfile(**payload)
        except (TypeError, ValueError) as exc:
            raise CliError(f"bad profile {args.profile}: {exc}") from exc
    missing = [name for name in ("kind", "tests", "builds", "density")
               if getattr(args, name) is None]
    if missing:
        raise CliError(
            "either --profile or all of --kind/--tests/--builds/--density are required"
        )
    try:
        return GenProfile(
            kind=args.kind,
            n_tests=args.tests,
            n_builds=args.builds,
            fail_density=args.density,
            run_length=args.run_length,
            cofail_cluster=args.cofail_cluster,
            seed=args.seed,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _generate(profile: GenProfile):
    try:
        return generate(profile)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _load_input(args: argparse.Namespace) -> "BuildHistory":
    if args.input is not None:
        try:
            return load_history(args.input, format=args.format)
        except (OSError, ParseError) as exc:
            raise CliError(f"cannot load {args.input}: {exc}") from exc
    return _generate(_profile_from_args(args))


def _cmd_ingest(args: argparse.Namespace) -> int:
    try:
        history = load_history(args.input, format=args.format, project_name=args.project)
    except (OSError, ParseError) as exc:
        raise CliError(f"cannot load {args.input}: {exc}") from exc
    metadata = None
    if args.metadata is not None:
        try:
            metadata = json.loads(Path(args.metadata).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read metadata {args.metadata}: {exc}") from exc

    useful = filter_useful_builds(history)
    report = sanity_check(history, SanityCriteria(), metadata)
    print(f"project: {history.project_name}")
    print(f"tests: {len(history.tests)}")
    print(f"builds: {len(history.builds)} total, {len(useful.builds)} useful")
    print(f"failing tests: {history.failing_test_count}")
    print("sanity check:")
    for result in report.results:
        status = "skip" if result.passed is None else ("pass" if result.passed else "FAIL")
        observed = "no metadata" if result.observed is None else f"observed {result.observed}"
        print(f"  [{status:4}] {result.criterion} {result.threshold} ({observed})")
    print(f"overall: {'pass' if report.passed else 'FAIL'}")
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    profile = _profile_from_args(args)
    history = _generate(profile)
    text = serialize_matrix(history, format="csv")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(text, encoding="utf-8")
    print(f"wrote {len(history.builds)} builds x {len(history.tests)} tests to {args.out}")
    return 0


def _parse_schemes(raw: str) -> list[str]:
    schemes = [s.strip().lower() for s in raw.split(",") if s.strip()]
    unknown = [s for s in schemes if s not in SCHEME_IDS]
    if unknown:
        raise CliError(f"unknown schemes {unknown}; valid ids: {','.join(SCHEME_IDS)}")
    if not schemes:
        raise CliError("at least one scheme is required")
    return schemes


def _cmd_run(args: argparse.Namespace) -> int:
    if args.input is None and args.profile is None and args.kind is None:
        raise CliError("run needs --input or a generator profile")
    history = _load_input(args)
    history = filter_useful_builds(history)
    if not history.builds:
        raise CliError("history has no useful builds (none contain a failure)")
    schemes = _parse_schemes(args.schemes)
    try:
        weights = RecencyWeights(*args.rocket_weights) if args.rocket_weights else RecencyWeights()
        config = SchemeConfig(
            alpha=args.alpha,
            rocket=weights,
            n1=args.n1,
            feature_window=args.feature_window,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    results = run_schemes(
        history,
        schemes,
        config,
        master_seed=args.seed,
        timeout=args.timeout,
        c1_guard=not args.no_c1_guard,
        capture_timings=args.timings,
    )
    for result in results:
        line = f"{result.scheme}: {result.status}"
        if result.status == "ok":
            line += f", {len(result.samples)} builds in {result.total_seconds:.1f}s"
        elif result.note:
            line += f" ({result.note})"
        print(line)

    manifest_config = {
        "input": str(args.input) if args.input is not None else None,
        "profile": asdict(_profile_from_args(args)) if args.input is None else None,
        "schemes": schemes,
        "seed": args.seed,
        "alpha": args.alpha,
        "n1": args.n1,
        "feature_window": args.feature_window,
        "timeout": args.timeout,
        "c1_guard": not args.no_c1_guard,
        "timings": args.timings,
    }
    try:
        artifacts = write_artifacts(
            history, results, args.out, manifest_config, figures=not args.no_figures
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    print(f"artifacts in {artifacts.out_dir}")
    print(artifacts.ranks_txt.read_text(encoding="utf-8"), end="")
    return 0


def _cmd_rank(args: argparse.Namespace) -> int:
    try:
        samples = read_samples(args.samples)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read samples {args.samples}: {exc}") from exc
    by_scheme: dict[str, list[float]] = {}
    for sample in samples:
        by_scheme.setdefault(sample.algorithm, []).append(sample.apfd)
    report = scott_knott([Treatment(s, tuple(v)) for s, v in by_scheme.items()])
    table = render_rank_table(report)
    print(table, end="")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "ranks.txt").write_text(table, encoding="utf-8")
        (args.out / "ranks.csv").write_text(render_rank_csv(report), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="testprio",
        description="Replay CI build histories through test prioritization schemes, "
        "score them with APFD, and rank them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="validate a history file and print its sanity report")
    p_ingest.add_argument("--input", type=Path, required=True)
    p_ingest.add_argument("--format", choices=("csv", "jsonl"), default=None)
    p_ingest.add_argument("--project", default=None, help="project name for the report")
    p_ingest.add_argument("--metadata", type=Path, default=None,
                          help="JSON sidecar with repository metadata for the sanity check")
    p_ingest.set_defaults(func=_cmd_ingest)

    p_gen = sub.add_parser("gen", help="synthesize a history and write it as CSV")
    _add_gen_profile_args(p_gen)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", type=Path, required=True)
    p_gen.set_defaults(func=_cmd_gen)

    p_run = sub.add_parser("run", help="replay schemes over a history and write artifacts")
    p_run.add_argument("--input", type=Path, default=None, help="history file (CSV or JSONL)")
    p_run.add_argument("--format", choices=("csv", "jsonl"), default=None)
    _add_gen_profile_args(p_run)
    p_run.add_argument("--schemes", default=",".join(SCHEME_IDS),
                       help="comma-separated scheme ids (default: all nine)")
    p_run.add_argument("--seed", type=int, default=0, help="master seed for the whole run")
    p_run.add_argument("--alpha", type=float, default=0.9, help="exponential decay learning rate")
    p_run.add_argument("--n1", type=int, default=2,
                       help="faults before active learning switches to certainty sampling")
    p_run.add_argument("--feature-window", type=int, default=10,
                       help="history window for active-learning features")
    p_run.add_argument("--rocket-weights", type=float, nargs=3, default=None,
                       metavar=("W1", "W2", "WREST"),
                       help="recency weights for b4/c2 (default 0.7 0.2 0.1)")
    p_run.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT,
                       help="per-scheme wall-clock budget in seconds")
    p_run.add_argument("--out", type=Path, required=True, help="artifact directory")
    p_run.add_argument("--no-c1-guard", action="store_true",
                       help="run c1 even on histories beyond the scale guard")
    p_run.add_argument("--timings", action="store_true",
                       help="record per-build wall time in samples.csv "
                            "(makes the file non-reproducible)")
    p_run.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    p_run.set_defaults(func=_cmd_run)

    p_rank = sub.add_parser("rank", help="re-rank an existing samples CSV")
    p_rank.add_argument("--samples", type=Path, required=True)
    p_rank.add_argument("--out", type=Path, default=None, help="directory for ranks.csv/ranks.txt")
    p_rank.set_defaults(func=_cmd_rank)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

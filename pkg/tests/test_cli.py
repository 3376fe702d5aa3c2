"""End-to-end command-line behavior."""

import json

import pytest

from testprio.cli import main
from testprio.history import load_history


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture()
def history_csv(tmp_path):
    path = tmp_path / "hist.csv"
    rc = run_cli(
        "gen", "--kind", "open_like", "--tests", 6, "--builds", 30,
        "--density", 0.2, "--run-length", 3, "--seed", 13, "--out", path,
    )
    assert rc == 0
    return path


class TestGen:
    def test_writes_parseable_csv(self, history_csv):
        history = load_history(history_csv)
        assert len(history.builds) == 30
        assert len(history.tests) == 6

    def test_deterministic_output(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        for path in (a, b):
            assert run_cli(
                "gen", "--kind", "closed_like", "--tests", 5, "--builds", 10,
                "--density", 0.3, "--seed", 4, "--out", path,
            ) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_profile_file(self, tmp_path):
        profile = tmp_path / "profile.json"
        profile.write_text(json.dumps({
            "kind": "open_like", "n_tests": 4, "n_builds": 8,
            "fail_density": 0.2, "run_length": 3.0, "seed": 1,
        }))
        out = tmp_path / "gen.csv"
        assert run_cli("gen", "--profile", profile, "--out", out) == 0
        assert len(load_history(out).builds) == 8

    def test_missing_shape_flags_fail(self, tmp_path, capsys):
        rc = run_cli("gen", "--kind", "open_like", "--out", tmp_path / "x.csv")
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_infeasible_profile_fails_cleanly(self, tmp_path, capsys):
        rc = run_cli(
            "gen", "--kind", "open_like", "--tests", 3, "--builds", 5,
            "--density", 0.9, "--run-length", 2, "--out", tmp_path / "x.csv",
        )
        assert rc == 1
        assert "infeasible" in capsys.readouterr().err


class TestIngest:
    def test_reports_counts_and_sanity(self, history_csv, capsys):
        assert run_cli("ingest", "--input", history_csv) == 0
        out = capsys.readouterr().out
        assert "builds: 30 total, 30 useful" in out
        assert "sanity check:" in out
        assert "total builds >= 500" in out
        assert "overall: FAIL" in out  # 30 < 500

    def test_metadata_sidecar(self, history_csv, tmp_path, capsys):
        sidecar = tmp_path / "meta.json"
        sidecar.write_text(json.dumps({"developers": 12, "commits": 5000}))
        assert run_cli("ingest", "--input", history_csv, "--metadata", sidecar) == 0
        out = capsys.readouterr().out
        assert "developers" in out and "pass" in out

    def test_missing_file_errors(self, tmp_path, capsys):
        rc = run_cli("ingest", "--input", tmp_path / "nope.csv")
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_malformed_file_errors(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("build_id,t1\nb1,flaky\n")
        assert run_cli("ingest", "--input", bad) == 1
        assert "line 2" in capsys.readouterr().err


class TestRun:
    def test_full_pipeline_artifacts(self, history_csv, tmp_path, capsys):
        out_dir = tmp_path / "out"
        rc = run_cli(
            "run", "--input", history_csv, "--schemes", "a1,a2,b1,b3",
            "--seed", 3, "--out", out_dir,
        )
        assert rc == 0
        printed = capsys.readouterr().out
        assert "artifacts in" in printed
        assert (out_dir / "samples.csv").exists()
        assert (out_dir / "ranks.txt").exists()
        assert (out_dir / "ranks.csv").exists()
        assert (out_dir / "runtime.csv").exists()
        assert (out_dir / "manifest.json").exists()
        assert (out_dir / "curve_b1.csv").exists()
        assert (out_dir / "detection_rates.png").exists()

    def test_no_figures_flag(self, history_csv, tmp_path):
        out_dir = tmp_path / "out"
        rc = run_cli(
            "run", "--input", history_csv, "--schemes", "a1",
            "--seed", 3, "--out", out_dir, "--no-figures",
        )
        assert rc == 0
        assert not (out_dir / "detection_rates.png").exists()

    def test_run_from_inline_profile(self, tmp_path):
        out_dir = tmp_path / "out"
        rc = run_cli(
            "run", "--kind", "open_like", "--tests", 5, "--builds", 12,
            "--density", 0.2, "--seed", 9, "--schemes", "a1,b2", "--out", out_dir,
        )
        assert rc == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["config"]["profile"]["n_builds"] == 12

    def test_unknown_scheme_rejected(self, history_csv, tmp_path, capsys):
        rc = run_cli(
            "run", "--input", history_csv, "--schemes", "a1,zz",
            "--out", tmp_path / "out",
        )
        assert rc == 1
        assert "unknown schemes" in capsys.readouterr().err

    def test_input_or_profile_required(self, tmp_path, capsys):
        rc = run_cli("run", "--out", tmp_path / "out")
        assert rc == 1
        assert "needs --input or" in capsys.readouterr().err

    def test_timings_flag_populates_elapsed(self, history_csv, tmp_path):
        out_dir = tmp_path / "out"
        rc = run_cli(
            "run", "--input", history_csv, "--schemes", "a1", "--seed", 1,
            "--out", out_dir, "--timings", "--no-figures",
        )
        assert rc == 0
        rows = (out_dir / "samples.csv").read_text().splitlines()[1:]
        assert all(row.split(",")[3] != "" for row in rows)

    def test_default_omits_timings(self, history_csv, tmp_path):
        out_dir = tmp_path / "out"
        rc = run_cli(
            "run", "--input", history_csv, "--schemes", "a1", "--seed", 1,
            "--out", out_dir, "--no-figures",
        )
        assert rc == 0
        rows = (out_dir / "samples.csv").read_text().splitlines()[1:]
        assert all(row.endswith(",") for row in rows)


class TestRank:
    def test_reranks_existing_samples(self, history_csv, tmp_path, capsys):
        out_dir = tmp_path / "out"
        assert run_cli(
            "run", "--input", history_csv, "--schemes", "a1,a2", "--seed", 3,
            "--out", out_dir, "--no-figures",
        ) == 0
        capsys.readouterr()
        rank_dir = tmp_path / "ranks"
        rc = run_cli("rank", "--samples", out_dir / "samples.csv", "--out", rank_dir)
        assert rc == 0
        printed = capsys.readouterr().out
        assert printed.splitlines()[0].split() == ["rank", "what", "med", "IQR"]
        # Re-ranking the run's own samples reproduces its rank table.
        assert (rank_dir / "ranks.txt").read_text() == (out_dir / "ranks.txt").read_text()

    def test_missing_samples_errors(self, tmp_path, capsys):
        rc = run_cli("rank", "--samples", tmp_path / "none.csv")
        assert rc == 1
        assert "error:" in capsys.readouterr().err

"""End-to-end CLI behavior: pipeline, outputs, exit codes, determinism.

The files under tests/golden/ were produced by this exact command sequence
(synth-bundle --objects 60 --seed 7; ingest; extract; prune --variance
0.99; query-multi with the flags named in each test) and pin the CLI's
CSV output byte for byte.
"""

from pathlib import Path

import pytest

from latentsim.cli import main

GOLDEN = Path(__file__).parent / "golden"


def run(tmp_path, *argv):
    session = str(tmp_path / "s.lsim")
    return main(["--session", session, *argv])


def build_pipeline(tmp_path, objects=60, seed=7, variance="0.99"):
    bundle = str(tmp_path / "bundle")
    assert run(tmp_path, "synth-bundle", bundle, "--objects", str(objects),
               "--seed", str(seed)) == 0
    assert run(tmp_path, "ingest", bundle) == 0
    assert run(tmp_path, "extract") == 0
    assert run(tmp_path, "prune", "--variance", variance) == 0


class TestPipeline:
    def test_full_pipeline_and_self_query(self, tmp_path, capsys):
        build_pipeline(tmp_path, objects=12, seed=3)
        assert run(tmp_path, "query", "--id", "obj_000", "--tau", "1.0") == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert lines[-13].split() == ["rank", "id", "score"]
        first = lines[-12].split()
        assert first[0] == "1"
        assert first[1] == "obj_000"
        assert first[2] == "1.000000000"

    def test_prune_full_variance_keeps_all_nonzero(self, tmp_path, capsys):
        build_pipeline(tmp_path, objects=12, seed=3, variance="1.0")
        out = capsys.readouterr().out
        assert "retained 16 of 16 features" in out

    def test_query_writes_csv(self, tmp_path, capsys):
        build_pipeline(tmp_path, objects=12, seed=3)
        csv_path = tmp_path / "out" / "ranking.csv"
        assert run(tmp_path, "query", "--id", "obj_001", "--tau", "1.0",
                   "--csv", str(csv_path)) == 0
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "rank,id,score"
        assert lines[1].startswith("1,obj_001,1.000000000")
        assert len(lines) == 13

    def test_status_reports_pipeline_state(self, tmp_path, capsys):
        build_pipeline(tmp_path, objects=12, seed=3)
        assert run(tmp_path, "status") == 0
        out = capsys.readouterr().out
        assert "objects: 12" in out
        assert "features_total: 16" in out
        assert "weights_stale: False" in out

    def test_env_var_session_path(self, tmp_path, capsys, monkeypatch):
        bundle = str(tmp_path / "bundle")
        assert run(tmp_path, "synth-bundle", bundle, "--objects", "6",
                   "--seed", "1") == 0
        monkeypatch.chdir(tmp_path)
        monkeypatch.setenv("LATENTSIM_SESSION", str(tmp_path / "env.lsim"))
        assert main(["ingest", bundle]) == 0
        assert (tmp_path / "env.lsim").is_file()
        assert main(["status"]) == 0
        assert "objects: 6" in capsys.readouterr().out


class TestClusterAndWeights:
    def curate(self, tmp_path):
        build_pipeline(tmp_path, objects=12, seed=3)
        for oid in ("obj_000", "obj_001", "obj_002"):
            assert run(tmp_path, "cluster", "assign", "first", "--object", oid) == 0
        for oid in ("obj_004", "obj_005", "obj_006"):
            assert run(tmp_path, "cluster", "assign", "second", "--object", oid) == 0

    def test_recompute_and_cluster_weighted_query(self, tmp_path, capsys):
        self.curate(tmp_path)
        assert run(tmp_path, "weights", "recompute", "--method", "cluster-diff") == 0
        out = capsys.readouterr().out
        assert "installed cluster_diff weights over 16 features" in out
        assert run(tmp_path, "query", "--id", "obj_000", "--tau", "1.0",
                   "--weights", "cluster") == 0
        err = capsys.readouterr().err
        assert "stale" not in err

    def test_stale_warning_after_edit(self, tmp_path, capsys):
        self.curate(tmp_path)
        assert run(tmp_path, "weights", "recompute", "--method", "cluster-diff") == 0
        assert run(tmp_path, "cluster", "assign", "first", "--object", "obj_007") == 0
        capsys.readouterr()
        assert run(tmp_path, "query", "--id", "obj_000", "--tau", "1.0",
                   "--weights", "cluster") == 0
        assert "stale" in capsys.readouterr().err

    def test_rename_and_remove(self, tmp_path, capsys):
        self.curate(tmp_path)
        assert run(tmp_path, "cluster", "rename", "first",
                   "--new-name", "renamed") == 0
        assert "renamed(3)" in capsys.readouterr().out
        assert run(tmp_path, "cluster", "remove", "renamed") == 0
        assert "renamed" not in capsys.readouterr().out

    def test_magnitude_report_outputs(self, tmp_path, capsys):
        self.curate(tmp_path)
        out_dir = tmp_path / "reports"
        assert run(tmp_path, "report", "magnitude-change",
                   "--out", str(out_dir), "--bins", "6") == 0
        printed = capsys.readouterr().out
        assert "group decoder:" in printed and "group encoder:" in printed
        csv_lines = (out_dir / "magnitude_change.csv").read_text().splitlines()
        assert csv_lines[0] == "feature,layer,channel,group,raw,normalized"
        assert len(csv_lines) == 17
        layer_lines = (out_dir / "magnitude_change_layers.csv").read_text().splitlines()
        assert layer_lines[0] == "kind,tag,sum,percent"
        assert any(l.startswith("layer,conv_a,") for l in layer_lines)
        assert any(l.startswith("group,encoder,") for l in layer_lines)
        png = (out_dir / "magnitude_change.png").read_bytes()
        assert png[:8] == b"\x89PNG\r\n\x1a\n"


class TestSparsityDemo:
    def test_outputs_and_headers(self, tmp_path, capsys):
        out_dir = tmp_path / "demo"
        assert run(tmp_path, "sparsity-demo", "--epochs", "4", "--samples", "6",
                   "--out", str(out_dir)) == 0
        printed = capsys.readouterr().out
        assert "final: task=" in printed
        lines = (out_dir / "sparsity_history.csv").read_text().splitlines()
        assert lines[0] == "epoch,L_task,L_sp,R_sp,R_sp0,gamma,R"
        assert len(lines) == 5
        png = (out_dir / "sparsity_history.png").read_bytes()
        assert png[:8] == b"\x89PNG\r\n\x1a\n"

    def test_target_zero_ratio_flag(self, tmp_path, capsys):
        out_dir = tmp_path / "demo"
        assert run(tmp_path, "sparsity-demo", "--target-zero-ratio", "0.7",
                   "--epochs", "2", "--samples", "4", "--out", str(out_dir)) == 0
        assert (out_dir / "sparsity_history.csv").is_file()

    def test_bad_beta_exit_code(self, tmp_path, capsys):
        code = run(tmp_path, "sparsity-demo", "--beta", "1.5", "--epochs", "1",
                   "--samples", "4", "--out", str(tmp_path / "x"))
        assert code == 12
        assert "error:" in capsys.readouterr().err


class TestExitCodes:
    def test_missing_session(self, tmp_path, capsys):
        assert run(tmp_path, "status") == 20
        assert "error:" in capsys.readouterr().err

    def test_ingest_missing_bundle(self, tmp_path, capsys):
        assert run(tmp_path, "ingest", str(tmp_path / "nope")) == 17

    def test_unknown_query_id(self, tmp_path, capsys):
        build_pipeline(tmp_path, objects=6, seed=1)
        assert run(tmp_path, "query", "--id", "ghost", "--tau", "1.0") == 20

    def test_bad_variance(self, tmp_path, capsys):
        bundle = str(tmp_path / "bundle")
        run(tmp_path, "synth-bundle", bundle, "--objects", "6", "--seed", "1")
        run(tmp_path, "ingest", bundle)
        run(tmp_path, "extract")
        assert run(tmp_path, "prune", "--variance", "1.5") == 12

    def test_recompute_without_clusters(self, tmp_path, capsys):
        build_pipeline(tmp_path, objects=6, seed=1)
        assert run(tmp_path, "weights", "recompute",
                   "--method", "cluster-diff") == 21

    def test_trapezoid_single_query(self, tmp_path, capsys):
        build_pipeline(tmp_path, objects=6, seed=1)
        assert run(tmp_path, "query", "--id", "obj_000", "--mf", "trapezoid",
                   "--tau", "0.5") == 12

    def test_argparse_usage_error_stays_two(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--session", str(tmp_path / "s.lsim"), "no-such-command"])
        assert excinfo.value.code == 2


class TestGolden:
    def test_trapezoid_ranking_matches_golden(self, tmp_path, capsys):
        build_pipeline(tmp_path)
        csv_path = tmp_path / "ranking.csv"
        assert run(tmp_path, "query-multi", "--ids", "obj_000,obj_003",
                   "--mf", "trapezoid", "--tau", "0.5",
                   "--csv", str(csv_path)) == 0
        assert csv_path.read_bytes() == (GOLDEN / "trapezoid_ranking.csv").read_bytes()

    def test_group_scoped_ranking_matches_golden(self, tmp_path, capsys):
        build_pipeline(tmp_path)
        csv_path = tmp_path / "ranking.csv"
        assert run(tmp_path, "query-multi", "--ids", "obj_000,obj_021",
                   "--mf", "trapezoid", "--tau", "0.25", "--group", "encoder",
                   "--top-k", "10", "--csv", str(csv_path)) == 0
        assert csv_path.read_bytes() == (GOLDEN / "encoder_ranking.csv").read_bytes()


class TestDeterminism:
    def test_pipeline_reruns_byte_identical(self, tmp_path, capsys):
        outputs = []
        for name in ("a", "b"):
            work = tmp_path / name
            work.mkdir()
            build_pipeline(work, objects=24, seed=11)
            csv_path = work / "ranking.csv"
            assert run(work, "query", "--id", "obj_005", "--tau", "1.3",
                       "--csv", str(csv_path)) == 0
            outputs.append(csv_path.read_bytes())
        assert outputs[0] == outputs[1]

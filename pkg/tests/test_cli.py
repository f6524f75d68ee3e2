import re

import numpy as np
import pytest

from copygen import cli
from copygen.data import write_quadruple_file


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "synth"
    code = cli.main(["synth", "--out", str(out), "--entities", "25",
                     "--relations", "3", "--snapshots", "8",
                     "--facts-per-snapshot", "40", "--recurrence", "0.9",
                     "--fixed-objects", "--seed", "3"])
    assert code == 0
    return out


@pytest.fixture(scope="module")
def checkpoint(synth_dir, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "m.cyg"
    code = cli.main(["train", "--data", str(synth_dir), "--out", str(path),
                     "--alpha", "0.8", "--dim", "8", "--epochs", "3",
                     "--batch-size", "128", "--seed", "0"])
    assert code == 0
    return path


def lines_of(capsys):
    return capsys.readouterr().out.strip().splitlines()


class TestSynthAndStats:
    def test_synth_writes_dataset(self, synth_dir):
        for name in ("train.txt", "valid.txt", "test.txt", "stat.txt", "synth.cfg"):
            assert (synth_dir / name).exists(), name
        assert (synth_dir / "stat.txt").read_text().split() == ["25", "3"]
        assert "realized_fact_repeat_rate" in (synth_dir / "synth.cfg").read_text()

    def test_stats_key_value_output(self, synth_dir, capsys, tmp_path):
        csv = tmp_path / "stats.csv"
        assert cli.main(["stats", "--data", str(synth_dir), "--csv", str(csv)]) == 0
        out = {line.split("=")[0]: float(line.split("=")[1])
               for line in lines_of(capsys)}
        assert set(out) == {"fact_repeat_rate", "group_repeat_rate",
                            "subject_group_repeat_rate"}
        assert out["fact_repeat_rate"] > 0.5  # recurrence 0.9 dataset
        body = csv.read_text().splitlines()
        assert "metric,value" in body
        assert any(row.startswith("fact_repeat_rate,") for row in body)


class TestTrainAndEval:
    def test_checkpoint_embeds_config(self, checkpoint):
        from copygen.model import checkpoint_config_text

        text = checkpoint_config_text(checkpoint)
        assert "alpha = 0.8" in text
        assert "version = " in text

    def test_train_is_deterministic(self, synth_dir, tmp_path):
        path = tmp_path / "same.cyg"
        blobs = []
        for _ in range(2):
            assert cli.main(["train", "--data", str(synth_dir), "--out", str(path),
                             "--alpha", "0.5", "--dim", "4", "--epochs", "2",
                             "--seed", "11"]) == 0
            blobs.append(path.read_bytes())
        assert blobs[0] == blobs[1]

    def test_train_log_csv(self, synth_dir, tmp_path, capsys):
        log = tmp_path / "log.csv"
        assert cli.main(["train", "--data", str(synth_dir), "--out",
                         str(tmp_path / "t.cyg"), "--dim", "4", "--epochs", "2",
                         "--log-csv", str(log)]) == 0
        capsys.readouterr()
        body = [l for l in log.read_text().splitlines() if not l.startswith("#")]
        assert body[0] == "epoch,loss,seconds"
        assert len(body) == 3

    def test_eval_reports_metrics(self, synth_dir, checkpoint, capsys):
        assert cli.main(["eval", "--checkpoint", str(checkpoint),
                         "--data", str(synth_dir)]) == 0
        out = dict(line.split("=", 1) for line in lines_of(capsys))
        assert out["split"] == "test" and out["filter"] == "static"
        assert 0.0 <= float(out["mrr"]) <= 100.0
        assert float(out["hits1"]) <= float(out["hits3"]) <= float(out["hits10"])
        assert int(out["object_count"]) + int(out["subject_count"]) == int(out["count"])

    def test_eval_per_snapshot_csv(self, synth_dir, checkpoint, tmp_path, capsys):
        csv = tmp_path / "snap.csv"
        assert cli.main(["eval", "--checkpoint", str(checkpoint),
                         "--data", str(synth_dir),
                         "--per-snapshot-csv", str(csv)]) == 0
        capsys.readouterr()
        body = [l for l in csv.read_text().splitlines() if not l.startswith("#")]
        assert body[0] == "snapshot,count,mrr,hits1,hits3,hits10"
        assert len(body) >= 2

    def test_eval_alpha_override_and_raw_filter(self, synth_dir, checkpoint, capsys):
        assert cli.main(["eval", "--checkpoint", str(checkpoint),
                         "--data", str(synth_dir), "--filter", "raw",
                         "--alpha", "0.3"]) == 0
        out = dict(line.split("=", 1) for line in lines_of(capsys))
        assert out["alpha"] == "0.3" and out["filter"] == "raw"


class TestAblateSweepPredict:
    def test_ablate_csv_shape(self, synth_dir, checkpoint, capsys):
        assert cli.main(["ablate", "--checkpoint", str(checkpoint),
                         "--data", str(synth_dir)]) == 0
        rows = [l for l in lines_of(capsys) if not l.startswith("#")]
        assert rows[0] == "mode,mrr,hits1,hits3,hits10"
        assert [r.split(",")[0] for r in rows[1:]] == [
            "copy-only", "gen-only", "gen-new", "full"]
        assert len(rows) == 5

    def test_sweep_alpha_csv(self, synth_dir, checkpoint, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        assert cli.main(["sweep-alpha", "--checkpoint", str(checkpoint),
                         "--data", str(synth_dir), "--out", str(out)]) == 0
        capsys.readouterr()
        body = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert body[0] == "alpha,mrr,hits1,hits3,hits10"
        assert len(body) == 12
        assert body[1].startswith("0.0,") and body[-1].startswith("1.0,")

    def test_predict_line_format(self, synth_dir, checkpoint, capsys):
        assert cli.main(["predict", "--checkpoint", str(checkpoint),
                         "--data", str(synth_dir), "--subject", "3",
                         "--relation", "1", "--time", "7", "--topk", "5"]) == 0
        rows = lines_of(capsys)
        assert len(rows) == 5
        pattern = re.compile(r"^\d+,\d+,[0-9.eE+-]+,[0-9.eE+-]+$")
        for rank, row in enumerate(rows, start=1):
            assert pattern.match(row), row
            fields = row.split(",")
            assert int(fields[0]) == rank
            assert 0.0 <= float(fields[3]) <= 1.0 + 1e-9

    def test_predict_rejects_bad_ids(self, synth_dir, checkpoint, capsys):
        code = cli.main(["predict", "--checkpoint", str(checkpoint),
                         "--data", str(synth_dir), "--subject", "999",
                         "--relation", "0", "--time", "0"])
        assert code == 1
        assert capsys.readouterr().err.startswith("error:")


class TestUsageAndErrors:
    def test_eval_without_checkpoint_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["eval", "--data", "somewhere"])
        assert exc.value.code == 2

    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["frobnicate"])
        assert exc.value.code == 2

    def test_no_subcommand_prints_usage(self, capsys):
        assert cli.main([]) == 2

    def test_missing_checkpoint_file_is_runtime_error(self, synth_dir, capsys):
        code = cli.main(["eval", "--checkpoint", "/nonexistent.cyg",
                         "--data", str(synth_dir)])
        assert code == 1
        err = capsys.readouterr().err
        assert err.startswith("error:") and err.count("\n") == 1


class TestConfigFile:
    def test_precedence_flag_over_file_over_default(self, synth_dir, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epochs = 5\ndim = 4\nseed = 2  # comment\n")
        out = tmp_path / "m.cyg"
        assert cli.main(["train", "--data", str(synth_dir), "--out", str(out),
                         "--config", str(cfg), "--epochs", "1"]) == 0
        stdout = capsys.readouterr().out
        assert stdout.count("epoch=") == 1  # flag beat the config file
        from copygen.model import checkpoint_config_text, load_checkpoint

        text = checkpoint_config_text(out)
        assert "dim = 4" in text and "epochs = 1" in text
        assert load_checkpoint(out).dim == 4

    def test_malformed_config_file(self, synth_dir, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("this is not a key value line\n")
        code = cli.main(["train", "--data", str(synth_dir), "--config", str(cfg)])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_config_value_is_usage_error(self, synth_dir, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("epochs = soon\n")
        with pytest.raises(SystemExit) as exc:
            cli.main(["train", "--data", str(synth_dir), "--config", str(cfg)])
        assert exc.value.code == 2


class TestMoreEvalSurfaces:
    def test_absorb_valid_changes_vocabulary(self, synth_dir, checkpoint, capsys):
        results = []
        for extra in ([], ["--absorb-valid"]):
            assert cli.main(["eval", "--checkpoint", str(checkpoint),
                             "--data", str(synth_dir), "--mode", "copy-only",
                             *extra]) == 0
            out = dict(line.split("=", 1) for line in lines_of(capsys))
            results.append(float(out["mrr"]))
        assert results[0] != results[1]  # validation facts extended the history

    def test_eval_empty_valid_split_flagged(self, tmp_path, capsys):
        src = tmp_path / "twoway"
        assert cli.main(["synth", "--out", str(src), "--entities", "15",
                         "--relations", "2", "--snapshots", "6",
                         "--facts-per-snapshot", "20", "--seed", "1",
                         "--split", "80/20"]) == 0
        ckpt = tmp_path / "m.cyg"
        assert cli.main(["train", "--data", str(src), "--out", str(ckpt),
                         "--dim", "4", "--epochs", "1"]) == 0
        capsys.readouterr()
        assert cli.main(["eval", "--checkpoint", str(ckpt), "--data", str(src),
                         "--split", "valid"]) == 0
        out = lines_of(capsys)
        assert "count=0" in out and "metrics=undefined" in out

    def test_sweep_alpha_retrain(self, synth_dir, tmp_path, capsys):
        ckpt = tmp_path / "m.cyg"
        assert cli.main(["train", "--data", str(synth_dir), "--out", str(ckpt),
                         "--dim", "4", "--epochs", "1"]) == 0
        out = tmp_path / "sweep.csv"
        assert cli.main(["sweep-alpha", "--checkpoint", str(ckpt),
                         "--data", str(synth_dir), "--out", str(out),
                         "--retrain", "--dim", "4", "--epochs", "1"]) == 0
        capsys.readouterr()
        body = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert len(body) == 12


class TestInstalledEntryPoint:
    def test_version_and_threads(self, synth_dir, tmp_path):
        import subprocess
        import sys

        proc = subprocess.run([sys.executable, "-m", "copygen.cli", "--version"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.startswith("copygen ")
        proc = subprocess.run(
            [sys.executable, "-m", "copygen.cli", "train", "--data", str(synth_dir),
             "--out", str(tmp_path / "t.cyg"), "--dim", "4", "--epochs", "1",
             "--threads", "1"],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr


class TestPrepare:
    def test_passthrough_normalizes(self, tmp_path, capsys):
        src = tmp_path / "raw"
        src.mkdir()
        (src / "stat.txt").write_text("10 2\n")
        write_quadruple_file(src / "train.txt",
                             np.asarray([(0, 0, 1, 24), (1, 1, 2, 48)], np.int64))
        write_quadruple_file(src / "test.txt",
                             np.asarray([(2, 0, 3, 72)], np.int64))
        out = tmp_path / "prepared"
        assert cli.main(["prepare", "--data", str(src), "--out", str(out),
                         "--granularity", "24"]) == 0
        assert (out / "train.txt").read_text() == "0\t0\t1\t0\n1\t1\t2\t1\n"
        assert (out / "test.txt").read_text() == "2\t0\t3\t2\n"
        assert (out / "stat.txt").read_text().split() == ["10", "2"]
        assert (out / "prepared.cfg").exists()

    def test_resplit_mode(self, tmp_path, capsys):
        src = tmp_path / "raw"
        src.mkdir()
        (src / "stat.txt").write_text("10 2\n")
        rows = [(i % 5, i % 2, (i + 1) % 5, t) for t in range(10) for i in range(4)]
        write_quadruple_file(src / "all.txt", np.asarray(rows, np.int64))
        out = tmp_path / "prepared"
        assert cli.main(["prepare", "--data", str(src), "--out", str(out),
                         "--split", "80/10/10"]) == 0
        stdout = capsys.readouterr().out
        assert "boundaries=8,9" in stdout
        for name in ("train.txt", "valid.txt", "test.txt"):
            assert (out / name).exists()

    def test_two_way_resplit(self, tmp_path, capsys):
        src = tmp_path / "raw"
        src.mkdir()
        (src / "stat.txt").write_text("10 2\n")
        rows = [(i % 5, i % 2, (i + 1) % 5, t) for t in range(10) for i in range(4)]
        write_quadruple_file(src / "all.txt", np.asarray(rows, np.int64))
        out = tmp_path / "prepared"
        assert cli.main(["prepare", "--data", str(src), "--out", str(out),
                         "--split", "80/20"]) == 0
        assert not (out / "valid.txt").exists()
        assert (out / "train.txt").exists() and (out / "test.txt").exists()

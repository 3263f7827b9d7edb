"""Command-line surface: every subcommand, exit codes, and file outputs."""

import os

import numpy as np
import pytest

from lesiongan.cli import cli

DESK_CFG = """
input_size = 16
scale_factor = 0.25
dropout_rate = 0.25
dtype = float64
batch_size = 2
epochs = 1
checkpoint_every = 0
seed = 3
"""


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "desk.cfg"
    path.write_text(DESK_CFG)
    return str(path)


def read_dir_bytes(root):
    out = {}
    for name in sorted(os.listdir(root)):
        with open(os.path.join(root, name), "rb") as fh:
            out[name] = fh.read()
    return out


class TestSynth:
    def test_deterministic_directory(self, tmp_path):
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        assert cli(["synth", "--n", "4", "--size", "32", "--seed", "7", "--out", a]) == 0
        assert cli(["synth", "--n", "4", "--size", "32", "--seed", "7", "--out", b]) == 0
        assert read_dir_bytes(a) == read_dir_bytes(b)

    def test_writes_manifest_and_masks(self, tmp_path):
        out = str(tmp_path / "ds")
        assert cli(["synth", "--n", "2", "--size", "16", "--seed", "1", "--out", out]) == 0
        names = set(os.listdir(out))
        assert "manifest.tsv" in names
        assert "synth0000.png" in names and "synth0000_mask.png" in names


class TestCountParams:
    def test_full_scale_total_in_band(self, capsys):
        assert cli(["count-params"]) == 0
        out = capsys.readouterr().out
        total = int(out.strip().split()[-1])
        assert 2.2e6 <= total <= 2.5e6

    def test_with_config(self, cfg_file, capsys):
        assert cli(["count-params", "--config", cfg_file]) == 0
        out = capsys.readouterr().out
        assert "generator" in out and "discriminator" in out


class TestUsageErrors:
    def test_unknown_subcommand(self, capsys):
        assert cli(["frobnicate"]) == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_flag_shows_help(self, capsys):
        assert cli(["count-params", "--bogus"]) == 1
        err = capsys.readouterr().err
        assert "usage error" in err and "--bogus" in err and "usage:" in err

    def test_missing_required(self, capsys):
        assert cli(["train"]) == 1

    def test_unknown_config_key_is_usage_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("input_size = 16\nbogus_key = 3\n")
        assert cli(["count-params", "--config", str(bad)]) == 1

    def test_missing_config_file_is_io_error(self, capsys):
        assert cli(["count-params", "--config", "/nonexistent/x.cfg"]) == 2

    def test_missing_checkpoint_is_io_error(self, tmp_path, capsys):
        assert cli(["eval", "--checkpoint", "/nonexistent/ck.lgseg",
                    "--manifest", str(tmp_path / "m.tsv")]) == 2


class TestTrainEvalInferBench:
    def test_full_workflow(self, tmp_path, cfg_file, capsys):
        run_dir = str(tmp_path / "run")
        # Train a few steps on synthetic data.
        assert cli(["train", "--config", cfg_file, "--synthetic", "4",
                    "--steps", "4", "--out", run_dir]) == 0
        ckpt = os.path.join(run_dir, "checkpoint_final.lgseg")
        assert os.path.exists(ckpt)
        assert os.path.exists(os.path.join(run_dir, "loss_log.csv"))

        # Build a labeled dataset on disk.
        data_dir = str(tmp_path / "data")
        assert cli(["synth", "--n", "3", "--size", "16", "--seed", "5",
                    "--out", data_dir]) == 0
        manifest = os.path.join(data_dir, "manifest.tsv")

        # Infer masks for the dataset images.
        pred_dir = str(tmp_path / "preds")
        assert cli(["infer", "--checkpoint", ckpt, "--manifest", manifest,
                    "--out", pred_dir]) == 0
        mask_files = sorted(os.listdir(pred_dir))
        assert len(mask_files) == 3
        capsys.readouterr()

        # Eval against the dataset.
        eval_dir = str(tmp_path / "eval")
        assert cli(["eval", "--checkpoint", ckpt, "--manifest", manifest,
                    "--out", eval_dir]) == 0
        out = capsys.readouterr().out
        assert "MEAN" in out
        csv_path = os.path.join(eval_dir, "metrics.csv")
        lines = open(csv_path).read().strip().split("\n")
        assert lines[0] == "id,acc,dsc,jsc,sen,spe,jsc_th"
        assert lines[-1].startswith("MEAN,")

        # Bench two small sizes.
        assert cli(["bench", "--checkpoint", ckpt, "--sizes", "16", "24",
                    "--warmup", "0", "--iters", "1"]) == 0
        out = capsys.readouterr().out
        assert "fps" in out

    def test_eval_against_own_predictions_scores_ones(self, tmp_path, cfg_file, capsys):
        # Build fixtures where ground truth equals the model's prediction:
        # eval must then report a MEAN row of exact 1.0 everywhere.
        run_dir = str(tmp_path / "run")
        assert cli(["train", "--config", cfg_file, "--synthetic", "2",
                    "--steps", "2", "--out", run_dir]) == 0
        ckpt = os.path.join(run_dir, "checkpoint_final.lgseg")
        data_dir = str(tmp_path / "data")
        assert cli(["synth", "--n", "2", "--size", "16", "--seed", "5",
                    "--out", data_dir]) == 0
        pred_dir = str(tmp_path / "preds")
        assert cli(["infer", "--checkpoint", ckpt,
                    "--manifest", os.path.join(data_dir, "manifest.tsv"),
                    "--out", pred_dir]) == 0
        capsys.readouterr()

        fixture = tmp_path / "fixture.tsv"
        rows = []
        for i in range(2):
            img = os.path.join(data_dir, f"synth{i:04d}.png")
            mask = os.path.join(pred_dir, f"synth{i:04d}_mask.png")
            rows.append(f"{img}\t{mask}")
        fixture.write_text("\n".join(rows) + "\n")

        assert cli(["eval", "--checkpoint", ckpt, "--manifest", str(fixture)]) == 0
        out = capsys.readouterr().out
        mean_line = [ln for ln in out.splitlines() if ln.startswith("MEAN")][0]
        values = [float(v) for v in mean_line.split()[1:]]
        assert values == [1.0] * 6

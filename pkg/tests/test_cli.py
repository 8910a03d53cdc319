import json
import os

import numpy as np
import pytest

from pamtennis import nn, ppo
from pamtennis.cli import main
from pamtennis.hysr import HysrEnv
from pamtennis.launcher import LauncherConfig, generate_dataset
from pamtennis.dataset import save_dataset
from pamtennis.rng import substream


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "balls.jsonl"
    save_dataset(generate_dataset(LauncherConfig(), n=8, seed=1), path)
    return str(path)


@pytest.fixture(scope="module")
def zero_ckpt(tmp_path_factory, small_dataset):
    from pamtennis.dataset import load_dataset

    env = HysrEnv(load_dataset(small_dataset))
    params = nn.init_params(env.obs_dim, env.act_dim, 16, substream(0, 4, 0), act_scale=env.act_scale)
    path = tmp_path_factory.mktemp("ckpt") / "zero.ckpt"
    ppo.save_checkpoint(str(path), params, norm=env.norm)
    return str(path)


class TestGenData:
    def test_deterministic_outputs(self, tmp_path):
        out1, out2 = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
        assert main(["gen-data", "--n", "5", "--seed", "1", "--out", out1]) == 0
        assert main(["gen-data", "--n", "5", "--seed", "1", "--out", out2]) == 0
        assert open(out1, "rb").read() == open(out2, "rb").read()
        manifest = json.loads(open(out1 + ".manifest.json").read())
        assert manifest["command"] == "gen-data"
        assert manifest["seed"] == 1

    def test_bad_config_path(self, tmp_path):
        code = main(["gen-data", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path / "x")])
        assert code == 2


class TestStats:
    def test_writes_csv(self, small_dataset, tmp_path):
        out = str(tmp_path / "var.csv")
        assert main(["stats", "--data", small_dataset, "--out", out]) == 0
        header = open(out).readline().strip()
        assert header == "bin_center,mean_x,std_x,mean_y,std_y,mean_z,std_z"

    def test_missing_dataset(self, tmp_path):
        out = str(tmp_path / "var.csv")
        missing = str(tmp_path / "missing.jsonl")
        code = main(["stats", "--data", missing, "--out", out])
        assert code == 2


class TestTrain:
    def test_missing_dataset_exit_2(self, tmp_path, capsys):
        missing = str(tmp_path / "gone.jsonl")
        code = main(
            ["train", "--data", missing, "--out", str(tmp_path / "m.ckpt"), "--total-timesteps", "256"]
        )
        assert code == 2
        assert "gone.jsonl" in capsys.readouterr().err

    def test_tiny_training_run(self, small_dataset, tmp_path):
        cfg = tmp_path / "small.cfg"
        cfg.write_text("ppo.nsteps = 256\nppo.nminibatches = 4\nppo.noptepochs = 2\nppo.hidden = 16\n")
        ckpt = str(tmp_path / "m.ckpt")
        log = str(tmp_path / "log.csv")
        code = main(
            [
                "train", "--config", str(cfg), "--data", small_dataset,
                "--out", ckpt, "--log", log, "--seed", "3",
                "--total-timesteps", "512",
            ]
        )
        assert code == 0
        assert os.path.exists(ckpt) and os.path.exists(ckpt + ".manifest.json")
        lines = open(log).read().splitlines()
        assert lines[0].startswith("update,timesteps,")
        assert len(lines) == 3  # header + 2 updates
        params, norm, digest = ppo.load_checkpoint(ckpt)
        assert params.hidden == 16
        assert norm is not None


class TestEval:
    def test_eval_zero_checkpoint(self, zero_ckpt, tmp_path):
        out = str(tmp_path / "evalout")
        code = main(
            ["eval", "--ckpt", zero_ckpt, "--n", "5", "--out", out, "--seed", "2", "--deterministic"]
        )
        assert code == 0
        summary = open(os.path.join(out, "summary.csv")).read().splitlines()
        values = dict(zip(summary[0].split(","), summary[1].split(",")))
        assert 0.0 <= float(values["hit_rate"]) <= 1.0
        assert os.path.exists(os.path.join(out, "run_manifest.json"))


class TestReplay:
    def test_trace_csv(self, zero_ckpt, small_dataset, tmp_path):
        out = str(tmp_path / "trace.csv")
        code = main(
            ["replay", "--ckpt", zero_ckpt, "--data", small_dataset, "--traj", "0", "--out", out]
        )
        assert code == 0
        header = open(out).readline().strip().split(",")
        assert header[0] == "t" and "p_1a" in header and header[-1] == "reward"

    def test_unknown_traj_id(self, zero_ckpt, small_dataset, tmp_path):
        code = main(
            ["replay", "--ckpt", zero_ckpt, "--data", small_dataset, "--traj", "99",
             "--out", str(tmp_path / "t.csv")]
        )
        assert code == 2


class TestUsage:
    def test_unknown_subcommand_exit_1(self):
        assert main(["frobnicate"]) == 1

    def test_unknown_flag_exit_1(self):
        assert main(["gen-data", "--wat", "1"]) == 1

    def test_no_command_exit_1(self):
        assert main([]) == 1

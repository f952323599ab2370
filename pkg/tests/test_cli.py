import json

import pytest

from skysmooth import ddpg, scene
from skysmooth.cli import main

TINY = ["--set", "train.warmup_steps=40", "--set", "train.batch_size=16",
        "--set", "train.eval_every=0", "--set", "sim.max_steps=50",
        "--set", "train.lstm_hidden=6", "--set", "train.embed=5", "--set", "train.hidden=8"]


def train_tiny(out, *extra):
    return main(["train", "--scene", "empty", "--episodes", "2", "--out", str(out), "--quiet",
                 *TINY, *extra])


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert train_tiny(out, "--seed", "3") == 0
    return out


def test_train_outputs(trained):
    assert (trained / "policy.ckpt").exists()
    cfg = json.loads((trained / "config.json").read_text())
    assert cfg["train"]["seed"] == 3 and cfg["train"]["hidden"] == 8 and cfg["scene"] == "empty"
    lines = (trained / "train_log.csv").read_text().splitlines()
    assert lines[0] == ",".join(ddpg.TRAIN_LOG_HEADER) and len(lines) == 3


def test_eval_metrics_plot(trained, tmp_path, capsys):
    ev = tmp_path / "ev"
    assert main(["eval", "--policy", str(trained / "policy.ckpt"), "--scene", "empty",
                 "--episodes", "3", "--out", str(ev)]) == 0
    rep = json.loads((ev / "report.json").read_text())
    assert rep["n_episodes"] == 3 and 0 <= rep["sr"] <= 100
    assert len(list(ev.glob("ep_*.csv"))) == 3
    capsys.readouterr()

    assert main(["metrics", str(ev)]) == 0
    again = json.loads(capsys.readouterr().out)
    assert again["sr"] == rep["sr"] and again["cac"] == pytest.approx(rep["cac"])

    assert main(["metrics", str(ev), "--meters"]) == 0
    assert "cac_m" in json.loads(capsys.readouterr().out)

    svg = tmp_path / "t.svg"
    assert main(["plot", str(ev), "--scene", "empty", "--out", str(svg)]) == 0
    text = svg.read_text()
    assert text.count("<polyline") == 3 and "stroke-dasharray" in text


def test_scene_command(tmp_path):
    path = tmp_path / "ts3.json"
    assert main(["scene", "ts3", str(path)]) == 0
    assert scene.load(path) == scene.builtin("ts3")
    assert main(["scene", "nowhere", str(path)]) == 1


def test_gradcheck_command(capsys):
    assert main(["gradcheck"]) == 0
    assert "worst relative error" in capsys.readouterr().out


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SKYSMOOTH_SEED", "11")
    assert train_tiny(tmp_path, "--episodes", "1") == 0
    assert json.loads((tmp_path / "config.json").read_text())["train"]["seed"] == 11


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"train": {"gamma": 2.0}}))
    assert main(["train", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "gamma" in capsys.readouterr().err
    bad.write_text(json.dumps({"rewards": {"C9": 1}}))
    assert main(["train", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "C9" in capsys.readouterr().err
    assert main(["train", "--scene", "missing.json", "--out", str(tmp_path / "o")]) == 1
    assert main(["eval", "--policy", str(tmp_path / "none.ckpt"), "--scene", "train",
                 "--out", str(tmp_path / "e")]) == 1


def test_divergence_exit_code(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise FloatingPointError("episode 0: training diverged")
    monkeypatch.setattr(ddpg, "train", boom)
    assert train_tiny(tmp_path) == 2
    assert "diverged" in capsys.readouterr().err


def test_config_file_round_trip(trained, tmp_path):
    # the resolved config written by train is itself a valid config file
    out = tmp_path / "again"
    assert main(["train", "--config", str(trained / "config.json"), "--out", str(out),
                 "--quiet"]) == 0
    assert (out / "train_log.csv").read_bytes() == (trained / "train_log.csv").read_bytes()


def test_smooth_off_echoed(tmp_path):
    assert train_tiny(tmp_path, "--episodes", "1", "--smooth", "off") == 0
    assert json.loads((tmp_path / "config.json").read_text())["train"]["smooth_enabled"] is False


def test_missing_inputs_named(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["train", "--scene", str(missing), "--out", str(tmp_path / "o")]) == 1
    assert str(missing) in capsys.readouterr().err
    assert main(["plot", str(tmp_path), "--scene", str(missing),
                 "--out", str(tmp_path / "x.svg")]) == 1
    assert main(["metrics", str(tmp_path / "empty_dir")]) == 1

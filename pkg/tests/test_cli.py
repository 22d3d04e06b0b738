import csv
import io
import json

import pytest

from constellation_rl import report
from constellation_rl.cli import cmd_replay, main
from constellation_rl.metrics import EpisodeMetrics

SMALL = {
    "experiment_id": "small",
    "env": {"num_sats": 4, "rounds_per_episode": 12, "base_failure_prob": 0.05},
    "train_episodes": 2,
    "eval_episodes": 2,
    "seeds": [0, 1],
}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_train_writes_checkpoint_and_curve(tmp_path):
    cfg = write_config(tmp_path, {**SMALL, "agents": ["DQN"]})
    out = tmp_path / "run"
    assert main(["train", "--config", cfg, "--out", str(out)]) == 0
    ck = json.loads((out / "checkpoint.json").read_text())
    assert ck["agent"] == "DQN" and ck["num_sats"] == 4 and "qnet" in ck["state"]
    rows = report.read_csv(out / "training_curve.csv")
    assert len(rows) == 2 and list(rows[0]) == report.CURVE_HEADER
    assert (out / "training_curve.svg").exists()


def test_train_needs_agent_choice(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL)
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert "agent" in capsys.readouterr().err
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "x"), "--agent", "QLearning"]) == 0


def test_missing_num_sats_is_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {"env": {"rounds_per_episode": 5}, "agents": ["DQN"]})
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert "num_sats" in capsys.readouterr().err


def test_malformed_json_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "env": {"num_sats": 4},\n  "agents": ["DQN",]\n}')
    assert main(["train", "--config", str(path), "--out", str(tmp_path / "x")]) == 2
    assert "line 3" in capsys.readouterr().err


def test_unwritable_out_dir_is_io_error(tmp_path):
    cfg = write_config(tmp_path, {**SMALL, "agents": ["LoadBalancing"]})
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    assert main(["train", "--config", cfg, "--out", str(blocker / "sub")]) == 3
    assert main(["compare", "--config", cfg, "--out", str(blocker)]) == 3


def test_missing_config_file_is_io_error(tmp_path):
    assert main(["train", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 3


def test_compare_empty_seeds(tmp_path):
    cfg = write_config(tmp_path, {**SMALL, "seeds": []})
    assert main(["compare", "--config", cfg, "--out", str(tmp_path / "out")]) == 2


def test_compare_outputs(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    out = tmp_path / "out"
    assert main(["compare", "--config", cfg, "--out", str(out)]) == 0
    rows = report.read_csv(out / "results.csv")
    assert list(rows[0]) == report.RESULTS_HEADER
    assert len(rows) == 5 * 2 * 2
    summary = report.read_csv(out / "summary.csv")
    labels = [r["agent"] for r in summary]
    assert labels == ["LoadBalancing", "QLearning", "PolicyGradient", "DQN", "PPO"]
    for name in ("avg_reward.svg", "tcr.svg", "art.svg"):
        svg = (out / name).read_text()
        # five bars, each one labelled on the x axis
        assert svg.count("<g id=\"patch_") >= 5
        for label in labels:
            assert f"<!-- {label} -->" in svg


def test_compare_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["compare", "--config", cfg, "--out", str(a)]) == 0
    assert main(["compare", "--config", cfg, "--out", str(b), "--workers", "2"]) == 0
    for name in ("results.csv", "summary.csv", "avg_reward.svg", "tcr.svg", "art.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_charts_are_pure_functions_of_summary(tmp_path):
    summary = tmp_path / "summary.csv"
    report.write_summary_csv(
        [
            {"agent": "A", "seeds": 1, "median_reward": 1.5, "median_tcr": 20.0, "median_art": None,
             "capacity_violations": 0, "tmax_violations": 0},
            {"agent": "B", "seeds": 1, "median_reward": -2.0, "median_tcr": 40.0, "median_art": 0.7,
             "capacity_violations": 0, "tmax_violations": 1},
        ],
        summary,
    )
    (tmp_path / "x").mkdir()
    (tmp_path / "y").mkdir()
    report.render_summary_charts(summary, tmp_path / "x")
    report.render_summary_charts(summary, tmp_path / "y")
    for name in report.CHARTS:
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()


def test_csv_float_round_trip(tmp_path):
    values = [1 / 3, 123456.789012345, -2.5e-7, 48.0, 0.907]
    curve = [EpisodeMetrics(100.0, 100.0 - v % 100, reward_sum=v, response_times=[abs(v)]) for v in values]
    path = tmp_path / "c.csv"
    report.write_curve_csv(curve, path)
    rows = report.read_csv(path)
    for m, row in zip(curve, rows):
        assert abs(float(row["reward_sum"]) - m.reward_sum) <= 1e-9 * max(1.0, abs(m.reward_sum))
        assert abs(float(row["art_seconds_or_empty"]) - m.art) <= 1e-9 * max(1.0, m.art)
    raw = path.read_bytes()
    assert raw.count(b"\r\n") == len(values) + 1
    assert list(csv.reader(io.StringIO(raw.decode())))[0] == report.CURVE_HEADER


def test_empty_art_field(tmp_path):
    path = tmp_path / "c.csv"
    report.write_curve_csv([EpisodeMetrics(10.0, 5.0)], path)
    assert report.read_csv(path)[0]["art_seconds_or_empty"] == ""


@pytest.fixture()
def checkpoint(tmp_path):
    cfg = write_config(tmp_path, {**SMALL, "agents": ["PPO"]})
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "ck")]) == 0
    return str(tmp_path / "ck" / "checkpoint.json"), cfg


def test_replay_log(checkpoint, capsys):
    ck, cfg = checkpoint
    assert main(["replay", "--checkpoint", ck, "--config", cfg, "--seed", "3"]) == 0
    first = capsys.readouterr().out
    lines = first.strip().split("\n")
    assert len(lines) == 12 + 1
    assert lines[-1].startswith("summary\t")
    assert [int(l.split("\t")[0]) for l in lines[:-1]] == list(range(12))
    assert all(len(l.split("\t")) == 7 for l in lines[:-1])
    assert main(["replay", "--checkpoint", ck, "--config", cfg, "--seed", "3"]) == 0
    assert capsys.readouterr().out == first


def test_replay_dimension_mismatch(checkpoint, tmp_path, capsys):
    ck, _ = checkpoint
    other = write_config(tmp_path, {**SMALL, "env": {"num_sats": 5}}, "five.json")
    assert main(["replay", "--checkpoint", ck, "--config", other]) == 2
    assert "num_sats" in capsys.readouterr().err


def test_replay_rejects_foreign_json(tmp_path):
    path = tmp_path / "ck.json"
    path.write_text(json.dumps({"hello": 1}))
    cfg = write_config(tmp_path, SMALL)
    assert main(["replay", "--checkpoint", str(path), "--config", cfg]) == 2


def test_replay_stream_argument(checkpoint):
    ck, cfg = checkpoint
    buf = io.StringIO()
    assert cmd_replay(ck, cfg, 0, stream=buf) == 0
    assert buf.getvalue().startswith("0\t")

"""Command line stages: exit codes, file outputs, determinism."""
import json
import os

import pytest

from epirisk.cli import main

SMALL_CONFIG = {
    "scenario": {
        "n_regions": 18,
        "seed": 0,
        "horizon_days": 50,
        "pop_range": [2000.0, 8000.0],
        "side_m": 25000.0,
        "coupling": 0.3,
        "obs_noise": 0.01,
        "feature_noise": 0.1,
        "n_distractors": 2,
    },
    "gravity": {"k": 4, "delta_m": 6000.0},
    "model": {"hidden_dim": 8, "num_layers": 2, "epochs": 25},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return str(path)


def read_tree(root):
    out = {}
    for name in sorted(os.listdir(root)):
        full = os.path.join(root, name)
        if os.path.isfile(full):
            with open(full, "rb") as fh:
                out[name] = fh.read()
    return out


def test_missing_input_exits_2_with_path(tmp_path, capsys):
    out = str(tmp_path / "ws")
    code = main(["calibrate", "--out", out])
    err = capsys.readouterr().err
    assert code == 2
    assert os.path.join(out, "regions.csv") in err


def test_unknown_config_field_exits_3(tmp_path, capsys):
    cfg = {"scenario": {"n_regions": 10, "bogus_knob": 1}}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    code = main(["simulate", "--config", str(path), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 3
    assert "scenario.bogus_knob" in err


def test_unknown_config_section_exits_3(tmp_path, capsys):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"nonsense": {}}))
    code = main(["simulate", "--config", str(path), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 3
    assert "nonsense" in err


def test_invalid_config_value_exits_3(tmp_path, capsys):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"scenario": {"coupling": 2.0}}))
    code = main(["simulate", "--config", str(path), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 3
    assert "scenario.coupling" in err


def test_degenerate_series_exits_4_naming_stage(tmp_path, capsys):
    out = tmp_path / "ws"
    out.mkdir()
    (out / "regions.csv").write_text(
        "region_id,population,x_m,y_m\na,5000.0,0.0,0.0\n")
    days = "\n".join(f"a,{d},0.0" for d in range(10))
    (out / "cases.csv").write_text(
        "region_id,day,cumulative_cases\n" + days + "\n")
    code = main(["calibrate", "--out", str(out)])
    err = capsys.readouterr().err
    assert code == 4
    assert "stage calibrate failed" in err


def test_bad_seeds_flag_exits_3(tmp_path, capsys):
    code = main(["ablate", "--out", str(tmp_path), "--seeds", "1,x"])
    # seeds are parsed before any file is touched
    assert code in (2, 3)


def test_simulate_is_deterministic(tmp_path, config_path, capsys):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["simulate", "--config", config_path, "--out", a]) == 0
    assert main(["simulate", "--config", config_path, "--out", b]) == 0
    capsys.readouterr()
    assert read_tree(a) == read_tree(b)
    c = str(tmp_path / "c")
    assert main(["simulate", "--config", config_path, "--out", c,
                 "--seed", "9"]) == 0
    capsys.readouterr()
    assert read_tree(a) != read_tree(c)


def test_pipeline_produces_all_artifacts(tmp_path, config_path, capsys):
    out = str(tmp_path / "ws")
    code = main(["pipeline", "--config", config_path, "--out", out])
    stdout = capsys.readouterr().out
    assert code == 0
    for name in ("regions.csv", "features.csv", "cases.csv",
                 "calibration.csv", "labels.csv", "graph.json", "split.json",
                 "checkpoint.json", "history.csv", "metrics.json"):
        assert os.path.exists(os.path.join(out, name)), name
    assert "test weighted F1" in stdout
    with open(os.path.join(out, "checkpoint.json")) as fh:
        assert json.load(fh)["config"]["variant"] == "full"


def test_variant_flag_reaches_checkpoint(tmp_path, config_path, capsys):
    out = str(tmp_path / "ws")
    code = main(["pipeline", "--config", config_path, "--out", out,
                 "--variant", "no_gravity"])
    capsys.readouterr()
    assert code == 0
    with open(os.path.join(out, "checkpoint.json")) as fh:
        assert json.load(fh)["config"]["variant"] == "no_gravity"


def test_stagewise_matches_pipeline(tmp_path, config_path, capsys):
    whole = str(tmp_path / "whole")
    steps = str(tmp_path / "steps")
    assert main(["pipeline", "--config", config_path, "--out", whole]) == 0
    for stage in ("simulate", "calibrate", "label", "build-graph",
                  "train", "evaluate"):
        assert main([stage, "--config", config_path, "--out", steps]) == 0
    capsys.readouterr()
    assert read_tree(whole) == read_tree(steps)


def test_ablate_writes_records(tmp_path, config_path, capsys):
    out = str(tmp_path / "ws")
    assert main(["pipeline", "--config", config_path, "--out", out]) == 0
    code = main(["ablate", "--config", config_path, "--out", out,
                 "--seeds", "0", "--variants", "full,vanilla_mp"])
    capsys.readouterr()
    assert code == 0
    with open(os.path.join(out, "ablation.json")) as fh:
        records = json.load(fh)
    assert [r["variant"] for r in records] == ["full", "vanilla_mp"]
    assert all(r["seed"] == 0 for r in records)


def test_evaluate_without_checkpoint_exits_2(tmp_path, config_path, capsys):
    out = str(tmp_path / "ws")
    assert main(["simulate", "--config", config_path, "--out", out]) == 0
    code = main(["evaluate", "--out", out])
    err = capsys.readouterr().err
    assert code == 2
    assert "checkpoint.json" in err

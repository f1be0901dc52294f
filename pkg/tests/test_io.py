"""File formats: lossless roundtrips, atomic writes, checkpoint safety."""
import json
import os

import numpy as np
import pytest

import epirisk as er
from epirisk import dataio as dio
from epirisk.errors import ConfigError, DataError, ShapeError


@pytest.fixture
def dataset():
    cfg = er.ScenarioConfig(n_regions=8, seed=5, horizon_days=25,
                            pop_range=(1500.0, 6000.0), side_m=20000.0,
                            gravity=er.GravityConfig(k=3, delta_m=6000.0))
    return er.make_dataset(cfg)


def test_regions_roundtrip(tmp_path, dataset):
    path = tmp_path / "regions.csv"
    dio.write_regions_csv(path, dataset.regions)
    back = dio.read_regions_csv(path)
    assert [r.region_id for r in back] == [r.region_id for r in dataset.regions]
    for a, b in zip(back, dataset.regions):
        # repr-formatted floats survive the trip bit for bit
        assert a.population == b.population
        assert a.x_m == b.x_m and a.y_m == b.y_m


def test_features_roundtrip(tmp_path, dataset):
    path = tmp_path / "features.csv"
    feats = {r.region_id: r.features for r in dataset.regions}
    dio.write_features_csv(path, feats)
    back = dio.read_features_csv(path)
    for rid, vec in feats.items():
        assert np.array_equal(back[rid], vec)


def test_features_per_item_layout_aggregates(tmp_path):
    path = tmp_path / "features.csv"
    path.write_text(
        "region_id,item_id,f0,f1\n"
        "a,x,1.0,2.0\n"
        "a,y,3.0,4.0\n"
        "b,z,5.0,6.0\n"
    )
    feats = dio.read_features_csv(path)
    assert np.array_equal(feats["a"], [2.0, 3.0])
    assert np.array_equal(feats["b"], [5.0, 6.0])


def test_features_duplicate_region_rejected(tmp_path):
    path = tmp_path / "features.csv"
    path.write_text("region_id,f0\na,1.0\na,2.0\n")
    with pytest.raises(DataError):
        dio.read_features_csv(path)


def test_attach_features_requires_every_region(dataset):
    feats = {r.region_id: r.features for r in dataset.regions}
    del feats[dataset.regions[0].region_id]
    with pytest.raises(DataError):
        dio.attach_features(dataset.regions, feats)


def test_cases_roundtrip(tmp_path, dataset):
    path = tmp_path / "cases.csv"
    dio.write_cases_csv(path, dataset.series)
    back = dio.read_cases_csv(path)
    assert len(back) == len(dataset.series)
    for a, b in zip(back, dataset.series):
        assert a.region_id == b.region_id
        assert np.array_equal(a.days, b.days)
        assert np.array_equal(a.cumulative_cases, b.cumulative_cases)


def test_calibration_roundtrip(tmp_path):
    path = tmp_path / "calibration.csv"
    params = er.SirParams.from_initial_infected(
        population=5000.0, i0=10.0, beta=0.31, gamma=0.12)
    res = er.CalibrationResult(params=params, mse=1.5e-3, clamped=True)
    dio.write_calibration_csv(path, [("r00", res)])
    rows = dio.read_calibration_csv(path)
    assert rows[0]["region_id"] == "r00"
    assert rows[0]["beta"] == 0.31 and rows[0]["gamma"] == 0.12
    assert rows[0]["r0"] == res.r0
    assert rows[0]["clamped"] is True


def test_labels_roundtrip_and_validation(tmp_path):
    path = tmp_path / "labels.csv"
    labels = [er.RiskLabel("a", 1.9, 0), er.RiskLabel("b", 2.7, 1),
              er.RiskLabel("c", 4.2, 2)]
    dio.write_labels_csv(path, labels)
    back = dio.read_labels_csv(path)
    assert [(l.region_id, l.r0, l.label) for l in back] \
        == [(l.region_id, l.r0, l.label) for l in labels]
    path.write_text("region_id,r0,label\na,1.0,5\n")
    with pytest.raises(DataError):
        dio.read_labels_csv(path)


def test_graph_roundtrip_is_lossless(tmp_path, dataset):
    path = tmp_path / "graph.json"
    dio.write_graph_json(path, dataset.graph, dataset.config.gravity)
    graph, gcfg = dio.read_graph_json(path)
    assert gcfg == dataset.config.gravity
    assert np.array_equal(graph.feature_matrix(),
                          dataset.graph.feature_matrix())
    assert len(graph.edges) == len(dataset.graph.edges)
    for a, b in zip(graph.edges, dataset.graph.edges):
        assert (a.src, a.dst) == (b.src, b.dst)
        assert a.raw_weight == b.raw_weight
        assert a.norm_weight == b.norm_weight


def test_graph_without_config_or_features(tmp_path):
    regions = [er.Region("a", 1000.0, 0.0, 0.0),
               er.Region("b", 2000.0, 3000.0, 0.0)]
    graph = er.build_graph(regions, er.GravityConfig(k="full"))
    path = tmp_path / "graph.json"
    dio.write_graph_json(path, graph)
    back, gcfg = dio.read_graph_json(path)
    assert gcfg is None
    assert back.regions[0].features is None


def test_split_roundtrip_and_overlap_detection(tmp_path):
    split = er.make_split(20, seed=2)
    path = tmp_path / "split.json"
    dio.write_split_json(path, split)
    back = dio.read_split_json(path)
    assert np.array_equal(back.train, split.train)
    assert np.array_equal(back.val, split.val)
    assert np.array_equal(back.test, split.test)
    assert back.seed == 2
    obj = json.loads(path.read_text())
    obj["val"][0] = obj["train"][0]
    path.write_text(json.dumps(obj))
    with pytest.raises(DataError):
        dio.read_split_json(path)


def test_history_roundtrip(tmp_path):
    history = [
        {"epoch": 0, "train_loss": 1.0986122886681098, "val_weighted_f1": 0.25},
        {"epoch": 1, "train_loss": 1.09, "val_weighted_f1": 0.5},
    ]
    path = tmp_path / "history.csv"
    dio.write_history_csv(path, history)
    back = dio.read_history_csv(path)
    assert back == history


def test_metrics_and_ablation_json(tmp_path):
    report = er.weighted_metrics(np.array([0, 1, 2, 2]),
                                 np.array([0, 1, 2, 1]), 3)
    mpath = tmp_path / "metrics.json"
    dio.write_metrics_json(mpath, report)
    obj = json.loads(mpath.read_text())
    assert obj["weighted_f1"] == report.weighted_f1
    records = [{"variant": "full", "seed": 0, "f1": 0.9,
                "precision": 0.91, "recall": 0.89}]
    apath = tmp_path / "ablation.json"
    dio.write_ablation_json(apath, records)
    assert dio.read_ablation_json(apath) == records


def test_atomic_write_leaves_no_temp_files(tmp_path):
    path = tmp_path / "out.txt"
    dio.atomic_write_text(path, "hello\n")
    assert path.read_text() == "hello\n"
    assert sorted(os.listdir(tmp_path)) == ["out.txt"]


def test_checkpoint_roundtrip_is_bit_exact(tmp_path):
    cfg = er.EpiGcnConfig(feature_dim=4, hidden_dim=5, num_layers=2, seed=3)
    model = er.EpiGcnModel(cfg)
    path = tmp_path / "checkpoint.json"
    dio.save_checkpoint(model, path)
    loaded = dio.load_checkpoint(path)
    assert loaded.config == cfg
    for name in model.params:
        assert np.array_equal(loaded.params[name].data,
                              model.params[name].data)


def test_checkpoint_rejects_bad_files(tmp_path):
    cfg = er.EpiGcnConfig(feature_dim=4, hidden_dim=5)
    model = er.EpiGcnModel(cfg)
    path = tmp_path / "checkpoint.json"
    dio.save_checkpoint(model, path)
    obj = json.loads(path.read_text())

    bad = dict(obj)
    bad["format_version"] = 99
    path.write_text(json.dumps(bad))
    with pytest.raises(DataError):
        dio.load_checkpoint(path)

    bad = json.loads(json.dumps(obj))
    bad["params"]["w_s"]["shape"] = [2, 2]
    path.write_text(json.dumps(bad))
    with pytest.raises(ShapeError):
        dio.load_checkpoint(path)

    bad = json.loads(json.dumps(obj))
    del bad["params"]["w_out"]
    path.write_text(json.dumps(bad))
    with pytest.raises(ShapeError):
        dio.load_checkpoint(path)

    bad = json.loads(json.dumps(obj))
    bad["config"]["variant"] = "bogus"
    path.write_text(json.dumps(bad))
    with pytest.raises(ConfigError):
        dio.load_checkpoint(path)


def test_csv_header_mismatch_rejected(tmp_path):
    path = tmp_path / "regions.csv"
    path.write_text("region,pop\na,100\n")
    with pytest.raises(DataError):
        dio.read_regions_csv(path)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DataError):
        dio.read_regions_csv(empty)


def test_float_formatting_is_shortest_roundtrip(tmp_path):
    value = 0.1 + 0.2
    path = tmp_path / "labels.csv"
    dio.write_labels_csv(path, [er.RiskLabel("a", value, 1)])
    text = path.read_text()
    assert repr(value) in text
    assert dio.read_labels_csv(path)[0].r0 == value

"""File formats for every pipeline stage, with atomic writes.

All writers emit to a temporary file in the destination directory and
os.replace it into place, so a crash never leaves a half-written file.
Floats are serialized with repr (shortest round-trip form): writers are
byte-deterministic for identical inputs and readers recover exact values.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict

import numpy as np

from .errors import ConfigError, DataError, ShapeError
from .gcn import EpiGcnConfig, EpiGcnModel
from .gravity import Edge, GravityConfig, MobilityGraph, Region, aggregate_node_features
from .sir import CalibrationResult, CaseSeries, RiskLabel
from .synth import DatasetSplit

CHECKPOINT_FORMAT_VERSION = 1


def atomic_write_text(path, text):
    """Write text to path via a same-directory temp file and os.replace."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _fmt(value):
    """Lossless scalar formatting for CSV cells."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([[_fmt(v) for v in row] for row in rows])
    atomic_write_text(path, buf.getvalue())


def _read_csv(path, expected_header=None):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = list(reader)
    if expected_header is not None and header != list(expected_header):
        raise DataError(
            f"{path}: expected header {list(expected_header)}, got {header}"
        )
    return header, rows


# ---------------------------------------------------------------------------
# regions and features

REGIONS_HEADER = ("region_id", "population", "x_m", "y_m")


def write_regions_csv(path, regions):
    _write_csv(path, REGIONS_HEADER,
               [(r.region_id, r.population, r.x_m, r.y_m) for r in regions])


def read_regions_csv(path):
    _, rows = _read_csv(path, REGIONS_HEADER)
    regions = []
    for row in rows:
        if len(row) != 4:
            raise DataError(f"{path}: malformed row {row}")
        rid, pop, x, y = row
        regions.append(Region(region_id=rid, population=float(pop),
                              x_m=float(x), y_m=float(y)))
    if not regions:
        raise DataError(f"{path}: no regions")
    return regions


def write_features_csv(path, features):
    """features is a mapping region_id -> 1-D vector; one row per region."""
    widths = {len(np.asarray(v).reshape(-1)) for v in features.values()}
    if len(widths) > 1:
        raise DataError(f"inconsistent feature widths {sorted(widths)}")
    width = widths.pop() if widths else 0
    header = ("region_id",) + tuple(f"f{j}" for j in range(width))
    rows = [(rid,) + tuple(float(v) for v in np.asarray(vec).reshape(-1))
            for rid, vec in features.items()]
    _write_csv(path, header, rows)


def read_features_csv(path):
    """region_id -> feature vector; per-item rows are mean-aggregated.

    Two layouts are accepted: `region_id,f0,...` with one row per region,
    and `region_id,item_id,f0,...` with several rows per region.
    """
    header, rows = _read_csv(path)
    if not header or header[0] != "region_id":
        raise DataError(f"{path}: first column must be region_id")
    per_item = len(header) > 1 and header[1] == "item_id"
    start = 2 if per_item else 1
    if len(header) <= start:
        raise DataError(f"{path}: no feature columns")
    pairs = []
    for row in rows:
        if len(row) != len(header):
            raise DataError(f"{path}: malformed row {row}")
        pairs.append((row[0], np.array([float(v) for v in row[start:]])))
    if not pairs:
        raise DataError(f"{path}: no feature rows")
    if not per_item:
        seen = set()
        for rid, _ in pairs:
            if rid in seen:
                raise DataError(
                    f"{path}: duplicate region {rid} without item_id column"
                )
            seen.add(rid)
    return aggregate_node_features(pairs)


def attach_features(regions, features):
    """Set each region's feature vector from the mapping, in place."""
    for r in regions:
        if r.region_id not in features:
            raise DataError(f"no features for region {r.region_id}")
        r.features = np.asarray(features[r.region_id], dtype=np.float64)
    return regions


# ---------------------------------------------------------------------------
# case series, calibration, labels

CASES_HEADER = ("region_id", "day", "cumulative_cases")


def write_cases_csv(path, series_list):
    rows = []
    for s in series_list:
        for day, cum in zip(s.days, s.cumulative_cases):
            rows.append((s.region_id, int(day), float(cum)))
    _write_csv(path, CASES_HEADER, rows)


def read_cases_csv(path):
    _, rows = _read_csv(path, CASES_HEADER)
    by_region: dict = {}
    order = []
    for row in rows:
        if len(row) != 3:
            raise DataError(f"{path}: malformed row {row}")
        rid, day, cum = row
        if rid not in by_region:
            by_region[rid] = []
            order.append(rid)
        by_region[rid].append((int(day), float(cum)))
    if not order:
        raise DataError(f"{path}: no case rows")
    out = []
    for rid in order:
        pairs = sorted(by_region[rid])
        days = np.array([d for d, _ in pairs], dtype=np.int64)
        cums = np.array([c for _, c in pairs])
        out.append(CaseSeries(region_id=rid, days=days, cumulative_cases=cums))
    return out


CALIBRATION_HEADER = ("region_id", "beta", "gamma", "r0", "mse", "clamped")


def write_calibration_csv(path, results):
    """results is a sequence of (region_id, CalibrationResult)."""
    rows = []
    for rid, res in results:
        rows.append((rid, res.params.beta, res.params.gamma, res.r0,
                     res.mse, int(res.clamped)))
    _write_csv(path, CALIBRATION_HEADER, rows)


def read_calibration_csv(path):
    """Rows as dicts; enough to rebuild labels without refitting."""
    _, rows = _read_csv(path, CALIBRATION_HEADER)
    out = []
    for row in rows:
        if len(row) != 6:
            raise DataError(f"{path}: malformed row {row}")
        out.append({
            "region_id": row[0],
            "beta": float(row[1]),
            "gamma": float(row[2]),
            "r0": float(row[3]),
            "mse": float(row[4]),
            "clamped": bool(int(row[5])),
        })
    if not out:
        raise DataError(f"{path}: no calibration rows")
    return out


LABELS_HEADER = ("region_id", "r0", "label")


def write_labels_csv(path, labels):
    """labels is a LabelingResult or a plain list of RiskLabel."""
    items = getattr(labels, "labels", labels)
    _write_csv(path, LABELS_HEADER,
               [(lab.region_id, lab.r0, int(lab.label)) for lab in items])


def read_labels_csv(path):
    _, rows = _read_csv(path, LABELS_HEADER)
    out = []
    for row in rows:
        if len(row) != 3:
            raise DataError(f"{path}: malformed row {row}")
        label = int(row[2])
        if label not in (0, 1, 2):
            raise DataError(f"{path}: label must be 0, 1 or 2, got {label}")
        out.append(RiskLabel(region_id=row[0], r0=float(row[1]), label=label))
    if not out:
        raise DataError(f"{path}: no label rows")
    return out


# ---------------------------------------------------------------------------
# graph and split

def write_graph_json(path, graph, gravity_config=None):
    """Lossless dump: nodes with features, edges with both weight kinds."""
    obj = {
        "gravity": asdict(gravity_config) if gravity_config is not None else None,
        "nodes": [
            {
                "region_id": r.region_id,
                "population": r.population,
                "x_m": r.x_m,
                "y_m": r.y_m,
                "features": None if r.features is None
                else [float(v) for v in r.features],
            }
            for r in graph.regions
        ],
        "edges": [
            {"src": e.src, "dst": e.dst,
             "raw_weight": e.raw_weight, "norm_weight": e.norm_weight}
            for e in graph.edges
        ],
    }
    write_json(path, obj)


def read_graph_json(path):
    """Returns (MobilityGraph, GravityConfig or None), exactly as written."""
    obj = read_json(path)
    try:
        regions = [
            Region(region_id=nd["region_id"], population=nd["population"],
                   x_m=nd["x_m"], y_m=nd["y_m"],
                   features=None if nd["features"] is None
                   else np.array(nd["features"]))
            for nd in obj["nodes"]
        ]
        edges = [
            Edge(src=ed["src"], dst=ed["dst"],
                 raw_weight=ed["raw_weight"], norm_weight=ed["norm_weight"])
            for ed in obj["edges"]
        ]
        gravity = obj.get("gravity")
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: malformed graph file ({exc})") from exc
    cfg = None
    if gravity is not None:
        k = gravity.get("k", 16)
        cfg = GravityConfig(rho=gravity["rho"], theta=gravity["theta"],
                            delta_m=gravity["delta_m"],
                            k=k if k == "full" else int(k))
    return MobilityGraph(regions=regions, edges=edges), cfg


def write_split_json(path, split):
    write_json(path, {
        "train": [int(j) for j in split.train],
        "val": [int(j) for j in split.val],
        "test": [int(j) for j in split.test],
        "seed": int(split.seed),
    })


def read_split_json(path):
    obj = read_json(path)
    try:
        split = DatasetSplit(
            train=np.array(obj["train"], dtype=np.int64),
            val=np.array(obj["val"], dtype=np.int64),
            test=np.array(obj["test"], dtype=np.int64),
            seed=int(obj["seed"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed split file ({exc})") from exc
    parts = np.concatenate([split.train, split.val, split.test])
    if len(np.unique(parts)) != len(parts):
        raise DataError(f"{path}: split parts overlap")
    return split


# ---------------------------------------------------------------------------
# training artifacts

HISTORY_HEADER = ("epoch", "train_loss", "val_weighted_f1")


def write_history_csv(path, history):
    _write_csv(path, HISTORY_HEADER,
               [(int(h["epoch"]), float(h["train_loss"]),
                 float(h["val_weighted_f1"])) for h in history])


def read_history_csv(path):
    _, rows = _read_csv(path, HISTORY_HEADER)
    return [
        {"epoch": int(r[0]), "train_loss": float(r[1]),
         "val_weighted_f1": float(r[2])}
        for r in rows
    ]


def write_metrics_json(path, report):
    obj = report.to_dict() if hasattr(report, "to_dict") else dict(report)
    write_json(path, obj)


def write_ablation_json(path, records):
    write_json(path, list(records))


def read_ablation_json(path):
    obj = read_json(path)
    if not isinstance(obj, list):
        raise DataError(f"{path}: expected a list of ablation records")
    return obj


# ---------------------------------------------------------------------------
# model checkpoints

def save_checkpoint(model, path):
    """Versioned JSON: config plus named parameters in row-major order."""
    params = {
        name: {
            "shape": list(p.data.shape),
            "values": [float(v) for v in p.data.reshape(-1)],
        }
        for name, p in model.params.items()
    }
    write_json(path, {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": asdict(model.config),
        "params": params,
    })


def load_checkpoint(path):
    """Rebuild the model; rejects version or shape mismatches."""
    obj = read_json(path)
    version = obj.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise DataError(
            f"{path}: unsupported checkpoint format_version {version!r}"
        )
    try:
        config = EpiGcnConfig(**obj["config"])
    except TypeError as exc:
        raise ConfigError("config", f"bad checkpoint config ({exc})") from exc
    except KeyError as exc:
        raise DataError(f"{path}: checkpoint missing {exc}") from exc
    model = EpiGcnModel(config)
    state = {}
    for name, entry in obj.get("params", {}).items():
        shape = tuple(entry["shape"])
        values = np.array(entry["values"], dtype=np.float64)
        if values.size != int(np.prod(shape)):
            raise ShapeError(
                f"{path}: parameter {name!r} has {values.size} values"
                f" for shape {shape}"
            )
        state[name] = values.reshape(shape)
    model.load_state_dict(state)
    return model

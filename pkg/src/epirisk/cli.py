"""Command line pipeline: simulate -> calibrate -> label -> build-graph ->
train -> evaluate, plus ablate and an end-to-end pipeline command.

Every stage reads and writes files in one workspace directory (--out) and
is deterministic for a fixed seed, so re-running a stage reproduces its
outputs byte for byte. Exit codes: 2 missing input file (the path is
printed), 3 configuration error (the field name is printed), 4 stage
failure (the stage name is printed).
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import dataio
from .errors import ConfigError, DataError, EpiriskError
from .gcn import VARIANTS, EpiGcnConfig, EpiGcnModel, evaluate, run_ablations, train
from .gravity import GravityConfig, build_graph
from .sir import DEFAULT_THRESHOLD_MULTIPLIER, CalibConfig, calibrate_sir, categorize_r0
from .synth import ScenarioConfig, make_dataset, make_split

REGIONS_FILE = "regions.csv"
FEATURES_FILE = "features.csv"
CASES_FILE = "cases.csv"
CALIBRATION_FILE = "calibration.csv"
LABELS_FILE = "labels.csv"
GRAPH_FILE = "graph.json"
SPLIT_FILE = "split.json"
CHECKPOINT_FILE = "checkpoint.json"
HISTORY_FILE = "history.csv"
METRICS_FILE = "metrics.json"
ABLATION_FILE = "ablation.json"

_NUMERIC_FAILURES = (EpiriskError, ZeroDivisionError, FloatingPointError,
                     OverflowError, ValueError)


class _StageError(Exception):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage, original):
        super().__init__(str(original))
        self.stage = stage
        self.original = original


def _build_dataclass(cls, section, section_name):
    """Construct a config dataclass from a JSON section, strictly.

    Lists become tuples (JSON has no tuple type); unknown keys raise
    ConfigError naming the offending field.
    """
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in section.items():
        if key not in known:
            raise ConfigError(f"{section_name}.{key}", "unknown field")
        kwargs[key] = tuple(value) if isinstance(value, list) else value
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{section_name}.{exc.field}", exc.message) from exc
    except TypeError as exc:
        raise ConfigError(section_name, str(exc)) from exc


def _load_config(args):
    if not getattr(args, "config", None):
        return {}
    cfg = dataio.read_json(args.config)
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be a JSON object")
    allowed = {"scenario", "gravity", "calibration", "labeling", "model",
               "ablation"}
    for key in cfg:
        if key not in allowed:
            raise ConfigError(key, "unknown config section")
    return cfg


def _gravity_config(cfg):
    return _build_dataclass(GravityConfig, cfg.get("gravity", {}), "gravity")


def _scenario_config(cfg, args):
    section = dict(cfg.get("scenario", {}))
    if "gravity" in section:
        raise ConfigError("scenario.gravity",
                          "gravity settings belong in the top-level section")
    if args.seed is not None:
        section["seed"] = args.seed
    scen = _build_dataclass(ScenarioConfig, section, "scenario")
    return dataclasses.replace(scen, gravity=_gravity_config(cfg))


def _model_seed(cfg, args):
    if args.seed is not None:
        return args.seed
    return int(cfg.get("model", {}).get("seed", 0))


def _model_config(cfg, args, feature_dim):
    section = dict(cfg.get("model", {}))
    if "feature_dim" in section:
        raise ConfigError("model.feature_dim",
                          "inferred from the data; remove it")
    if "variant" not in section:
        section["variant"] = "full"
    if getattr(args, "variant", None):
        section["variant"] = args.variant
    section["seed"] = _model_seed(cfg, args)
    section["feature_dim"] = feature_dim
    return _build_dataclass(EpiGcnConfig, section, "model")


def _labeling_k(cfg):
    section = cfg.get("labeling", {})
    for key in section:
        if key != "k":
            raise ConfigError(f"labeling.{key}", "unknown field")
    return float(section.get("k", DEFAULT_THRESHOLD_MULTIPLIER))


def _out_path(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _in_path(args, name):
    path = os.path.join(args.out, name)
    if not os.path.exists(path):
        raise FileNotFoundError(2, "missing input file", path)
    return path


def _load_graph_with_features(args):
    graph, _ = dataio.read_graph_json(_in_path(args, GRAPH_FILE))
    if any(r.features is None for r in graph.regions):
        feats = dataio.read_features_csv(_in_path(args, FEATURES_FILE))
        dataio.attach_features(graph.regions, feats)
    return graph


def _load_labels_for(graph, args):
    rows = dataio.read_labels_csv(_in_path(args, LABELS_FILE))
    by_id = {lab.region_id: lab.label for lab in rows}
    labels = []
    for r in graph.regions:
        if r.region_id not in by_id:
            raise DataError(f"no label for region {r.region_id}")
        labels.append(by_id[r.region_id])
    return np.array(labels, dtype=np.int64)


def _load_or_make_split(args, cfg, n):
    path = os.path.join(args.out, SPLIT_FILE)
    if os.path.exists(path):
        return dataio.read_split_json(path)
    split = make_split(n, seed=_model_seed(cfg, args))
    dataio.write_split_json(path, split)
    print(f"wrote {path}")
    return split


# ---------------------------------------------------------------------------
# stage handlers

def cmd_simulate(args, cfg):
    scen = _scenario_config(cfg, args)
    ds = make_dataset(scen)
    dataio.write_regions_csv(_out_path(args, REGIONS_FILE), ds.regions)
    dataio.write_features_csv(
        _out_path(args, FEATURES_FILE),
        {r.region_id: r.features for r in ds.regions},
    )
    dataio.write_cases_csv(_out_path(args, CASES_FILE), ds.series)
    for name in (REGIONS_FILE, FEATURES_FILE, CASES_FILE):
        print(f"wrote {os.path.join(args.out, name)}")
    return 0


def cmd_calibrate(args, cfg):
    regions = dataio.read_regions_csv(_in_path(args, REGIONS_FILE))
    series = dataio.read_cases_csv(_in_path(args, CASES_FILE))
    pop = {r.region_id: r.population for r in regions}
    calib_cfg = _build_dataclass(CalibConfig, cfg.get("calibration", {}),
                                 "calibration")
    results = []
    for s in series:
        if s.region_id not in pop:
            raise DataError(f"cases reference unknown region {s.region_id}")
        results.append((s.region_id, calibrate_sir(s, pop[s.region_id], calib_cfg)))
    dataio.write_calibration_csv(_out_path(args, CALIBRATION_FILE), results)
    print(f"wrote {os.path.join(args.out, CALIBRATION_FILE)}"
          f" ({len(results)} regions)")
    return 0


def cmd_label(args, cfg):
    rows = dataio.read_calibration_csv(_in_path(args, CALIBRATION_FILE))
    result = categorize_r0(
        [row["r0"] for row in rows],
        k=_labeling_k(cfg),
        region_ids=[row["region_id"] for row in rows],
    )
    dataio.write_labels_csv(_out_path(args, LABELS_FILE), result)
    counts = np.bincount(result.label_values, minlength=3)
    print(f"wrote {os.path.join(args.out, LABELS_FILE)}"
          f" (low={counts[0]} medium={counts[1]} high={counts[2]})")
    return 0


def cmd_build_graph(args, cfg):
    regions = dataio.read_regions_csv(_in_path(args, REGIONS_FILE))
    feat_path = os.path.join(args.out, FEATURES_FILE)
    if os.path.exists(feat_path):
        dataio.attach_features(regions, dataio.read_features_csv(feat_path))
    gcfg = _gravity_config(cfg)
    graph = build_graph(regions, gcfg)
    dataio.write_graph_json(_out_path(args, GRAPH_FILE), graph, gcfg)
    print(f"wrote {os.path.join(args.out, GRAPH_FILE)}"
          f" ({graph.num_nodes} nodes, {graph.num_edges} edges)")
    return 0


def cmd_train(args, cfg):
    graph = _load_graph_with_features(args)
    labels = _load_labels_for(graph, args)
    split = _load_or_make_split(args, cfg, graph.num_nodes)
    feature_dim = graph.feature_matrix().shape[1]
    model_cfg = _model_config(cfg, args, feature_dim)
    model = EpiGcnModel(model_cfg)
    result = train(model, graph, labels, split.train, split.val)
    dataio.save_checkpoint(model, _out_path(args, CHECKPOINT_FILE))
    dataio.write_history_csv(_out_path(args, HISTORY_FILE), result.history)
    print(f"wrote {os.path.join(args.out, CHECKPOINT_FILE)}")
    print(f"wrote {os.path.join(args.out, HISTORY_FILE)}")
    print(f"best epoch {result.best_epoch}"
          f" val weighted F1 {result.best_val_f1:.4f}")
    return 0


def cmd_evaluate(args, cfg):
    model = dataio.load_checkpoint(_in_path(args, CHECKPOINT_FILE))
    graph = _load_graph_with_features(args)
    labels = _load_labels_for(graph, args)
    split = dataio.read_split_json(_in_path(args, SPLIT_FILE))
    report = evaluate(model, graph, labels, split.test)
    dataio.write_metrics_json(_out_path(args, METRICS_FILE), report)
    print(f"wrote {os.path.join(args.out, METRICS_FILE)}")
    print(f"test weighted F1 {report.weighted_f1:.4f}"
          f" precision {report.weighted_precision:.4f}"
          f" recall {report.weighted_recall:.4f}")
    return 0


def _parse_seeds(text):
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError:
        raise ConfigError("seeds", f"expected comma-separated ints, got {text!r}")


def cmd_ablate(args, cfg):
    graph = _load_graph_with_features(args)
    labels = _load_labels_for(graph, args)
    split = _load_or_make_split(args, cfg, graph.num_nodes)
    section = cfg.get("ablation", {})
    for key in section:
        if key not in ("variants", "seeds"):
            raise ConfigError(f"ablation.{key}", "unknown field")
    variants = tuple(section.get("variants", VARIANTS))
    seeds = tuple(int(s) for s in section.get("seeds", (0, 1, 2)))
    if args.variants:
        variants = tuple(args.variants.split(","))
    if args.seeds:
        seeds = _parse_seeds(args.seeds)
    feature_dim = graph.feature_matrix().shape[1]
    base_cfg = _model_config(cfg, args, feature_dim)
    records = run_ablations(graph, labels, split, base_cfg,
                            variants=variants, seeds=seeds)
    dataio.write_ablation_json(_out_path(args, ABLATION_FILE), records)
    print(f"wrote {os.path.join(args.out, ABLATION_FILE)}")
    for variant in variants:
        f1s = [r["f1"] for r in records if r["variant"] == variant]
        print(f"{variant}: mean test weighted F1 {np.mean(f1s):.4f}"
              f" over seeds {list(seeds)}")
    return 0


_PIPELINE = (
    ("simulate", cmd_simulate),
    ("calibrate", cmd_calibrate),
    ("label", cmd_label),
    ("build-graph", cmd_build_graph),
    ("train", cmd_train),
    ("evaluate", cmd_evaluate),
)


def cmd_pipeline(args, cfg):
    for stage, handler in _PIPELINE:
        try:
            handler(args, cfg)
        except ConfigError:
            raise
        except _NUMERIC_FAILURES as exc:
            raise _StageError(stage, exc) from exc
    return 0


# ---------------------------------------------------------------------------
# parser and entry point

def build_parser():
    parser = argparse.ArgumentParser(
        prog="epirisk",
        description="Epidemic exposure risk pipeline over regional case data.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file with per-stage sections")
    common.add_argument("--out", default=".",
                        help="workspace directory for inputs and outputs")
    common.add_argument("--seed", type=int, default=None,
                        help="override the stage seed")

    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text, variant=False, seeds=False):
        p = sub.add_parser(name, parents=[common], help=help_text)
        if variant:
            p.add_argument("--variant", choices=VARIANTS, default=None,
                           help="model variant")
        if seeds:
            p.add_argument("--variants", default=None,
                           help="comma-separated variants to ablate")
            p.add_argument("--seeds", default=None,
                           help="comma-separated seeds to ablate")
        p.set_defaults(func=handler, stage=name)
        return p

    add("simulate", cmd_simulate, "generate a synthetic scenario")
    add("calibrate", cmd_calibrate, "fit per-region transmission parameters")
    add("label", cmd_label, "assign three-level risk labels")
    add("build-graph", cmd_build_graph, "build the gravity mobility graph")
    add("train", cmd_train, "train the risk classifier", variant=True)
    add("evaluate", cmd_evaluate, "evaluate a checkpoint on the test split",
        variant=True)
    add("ablate", cmd_ablate, "compare model variants over seeds",
        variant=True, seeds=True)
    add("pipeline", cmd_pipeline, "run all stages end to end", variant=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        return args.func(args, cfg)
    except FileNotFoundError as exc:
        path = exc.filename or str(exc)
        print(f"missing file: {path}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error in field {exc.field}: {exc.message}", file=sys.stderr)
        return 3
    except _StageError as exc:
        print(f"stage {exc.stage} failed: {exc}", file=sys.stderr)
        return 4
    except _NUMERIC_FAILURES as exc:
        print(f"stage {args.stage} failed: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

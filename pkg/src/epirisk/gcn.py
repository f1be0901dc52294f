"""Transmission-aware graph network for node-level risk classification.

Each region carries three embeddings playing the roles of susceptible,
infectious and recovered mass. A message-passing layer moves mass between
them: an infection term driven by a weighted sum of neighbor infectious
states, and a recovery term local to the node. The per-node sum of the
three embeddings is invariant under a layer by construction.

Two ablation variants share the training loop: "no_gravity" keeps the
edge set but replaces gravity weights with uniform ones, and "vanilla_mp"
is a plain mean-aggregation network with a single embedding per node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, ShapeError, TrainingError
from .metrics import weighted_metrics

VARIANTS = ("full", "no_gravity", "vanilla_mp")


@dataclass(frozen=True)
class EpiGcnConfig:
    feature_dim: int
    hidden_dim: int = 16
    num_classes: int = 3
    num_layers: int = 2
    variant: str = "full"
    learning_rate: float = 1e-3
    epochs: int = 300
    seed: int = 0

    def __post_init__(self):
        for name in ("feature_dim", "hidden_dim", "num_classes", "num_layers"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(name, f"must be a positive int, got {v!r}")
        if self.num_classes < 2:
            raise ConfigError("num_classes", "need at least 2 classes")
        if self.variant not in VARIANTS:
            raise ConfigError("variant", f"unknown variant {self.variant!r}")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate", "must be positive")
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise ConfigError("epochs", f"must be a positive int, got {self.epochs!r}")


class EpiGcnModel:
    """Parameter container plus forward pass for one variant.

    Parameters are created in a fixed order from a single seeded
    generator, so construction is bit-reproducible. Weights use Glorot
    uniform bounds sqrt(6 / (fan_in + fan_out)); biases start at zero.
    """

    def __init__(self, config):
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.params: dict = {}
        f = config.feature_dim
        d = config.hidden_dim
        c = config.num_classes

        def glorot(name, fan_in, fan_out):
            a = math.sqrt(6.0 / (fan_in + fan_out))
            data = rng.uniform(-a, a, size=(fan_in, fan_out))
            self.params[name] = ad.Tensor(data, requires_grad=True, name=name)

        def zeros(name, width):
            self.params[name] = ad.Tensor(
                np.zeros((1, width)), requires_grad=True, name=name
            )

        if config.variant in ("full", "no_gravity"):
            for comp in ("s", "i", "r"):
                glorot(f"w_{comp}", f, d)
                zeros(f"b_{comp}", d)
            for layer in range(config.num_layers):
                glorot(f"w_tran_{layer}", 2 * d, d)
                glorot(f"w_recov_{layer}", d, d)
            glorot("w_out", 3 * d, c)
        else:
            glorot("w_embed", f, d)
            zeros("b_embed", d)
            for layer in range(config.num_layers):
                glorot(f"w_layer_{layer}", d, d)
            glorot("w_out", d, c)

    def num_params(self):
        return sum(p.data.size for p in self.params.values())

    def edge_triples(self, graph):
        """Variant-specific (src, dst, weight) rows from a mobility graph.

        full: gravity-normalized weights. no_gravity: same edges, uniform
        1/indegree. vanilla_mp: uniform mean over in-neighbors and self.
        """
        variant = self.config.variant
        if variant == "full":
            return graph.edge_triples("norm")
        if variant == "no_gravity":
            return graph.edge_triples("uniform")
        base = graph.edge_triples("norm")
        n = graph.num_nodes
        indeg = np.zeros(n)
        if len(base):
            np.add.at(indeg, base[:, 1].astype(np.int64), 1.0)
        w = 1.0 / (indeg + 1.0)
        selfloops = np.column_stack([np.arange(n), np.arange(n), w])
        if len(base) == 0:
            return selfloops
        scaled = base.copy()
        scaled[:, 2] = w[base[:, 1].astype(np.int64)]
        return np.vstack([scaled, selfloops])

    def _check_features(self, features):
        feats = np.asarray(features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[1] != self.config.feature_dim:
            raise ShapeError(
                f"features must be (n, {self.config.feature_dim}),"
                f" got {feats.shape}"
            )
        return feats

    def _sir_stack(self, x, edge_triples):
        """Project S/I/R embeddings and run the message-passing layers.

        Returns the (hs, hi, hr) triple after the projections and after
        each layer; the last entry feeds the output head. Each layer only
        moves mass between the three embeddings, so the elementwise sum
        hs + hi + hr is the same at every stage up to rounding.
        """
        p = self.params
        hs = ad.relu(ad.linear(x, p["w_s"], p["b_s"]))
        hi = ad.relu(ad.linear(x, p["w_i"], p["b_i"]))
        hr = ad.relu(ad.linear(x, p["w_r"], p["b_r"]))
        trace = [(hs, hi, hr)]
        for layer in range(self.config.num_layers):
            nbr = ad.weighted_neighbor_sum(hi, edge_triples)
            moved = ad.linear(ad.concat_cols(hs, nbr), p[f"w_tran_{layer}"])
            recovered = ad.linear(hi, p[f"w_recov_{layer}"])
            hs, hi, hr = (
                ad.sub(hs, moved),
                ad.sub(ad.add(hi, moved), recovered),
                ad.add(hr, recovered),
            )
            trace.append((hs, hi, hr))
        return trace

    def forward(self, features, edge_triples):
        """Logits tensor (n, num_classes); records onto any active tape."""
        x = ad.Tensor(self._check_features(features))
        p = self.params
        if self.config.variant in ("full", "no_gravity"):
            hs, hi, hr = self._sir_stack(x, edge_triples)[-1]
            stacked = ad.concat_cols(ad.concat_cols(hs, hi), hr)
            return ad.linear(stacked, p["w_out"])
        h = ad.relu(ad.linear(x, p["w_embed"], p["b_embed"]))
        for layer in range(self.config.num_layers):
            h = ad.relu(ad.linear(
                ad.weighted_neighbor_sum(h, edge_triples), p[f"w_layer_{layer}"]
            ))
        return ad.linear(h, p["w_out"])

    def sir_embeddings(self, features, edge_triples):
        """(hs, hi, hr) triples after the projections and after each layer.

        Only defined for the SIR-structured variants; exposes the stages
        so the per-node conservation invariant can be checked.
        """
        if self.config.variant == "vanilla_mp":
            raise ConfigError("variant", "vanilla_mp has no S/I/R embeddings")
        x = ad.Tensor(self._check_features(features))
        return self._sir_stack(x, edge_triples)

    def predict_probs(self, graph):
        """Class probabilities (n, C) outside any tape."""
        logits = self.forward(graph.feature_matrix(), self.edge_triples(graph))
        return ad.softmax_rows(logits).data

    def predict(self, graph):
        """Hard labels by argmax; ties resolve to the lowest class id."""
        return np.argmax(self.predict_probs(graph), axis=1)

    def state_dict(self):
        return {name: p.data.copy() for name, p in self.params.items()}

    def load_state_dict(self, state):
        own = set(self.params)
        given = set(state)
        if own != given:
            missing = sorted(own - given)
            extra = sorted(given - own)
            raise ShapeError(
                f"parameter names mismatch: missing {missing}, unexpected {extra}"
            )
        for name, arr in state.items():
            arr = np.asarray(arr, dtype=np.float64)
            if arr.shape != self.params[name].data.shape:
                raise ShapeError(
                    f"parameter {name!r}: shape {arr.shape}"
                    f" != expected {self.params[name].data.shape}"
                )
        for name, arr in state.items():
            self.params[name].data = np.asarray(arr, dtype=np.float64).copy()


# ---------------------------------------------------------------------------
# training and evaluation

@dataclass
class TrainResult:
    """Per-epoch history plus which epoch's parameters were kept.

    history rows are dicts with epoch, train_loss, val_weighted_f1, all
    measured on the parameter state entering that epoch (before its
    update), so the selected best epoch corresponds exactly to the
    restored parameters.
    """

    history: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_f1: float = 0.0


def train(model, graph, labels, train_idx, val_idx):
    """Full-batch Adam on masked cross-entropy; keeps best-val-F1 params.

    Deterministic end to end: no sampling after construction, and the
    best epoch is the earliest one attaining the maximum validation
    weighted F1 (later ties do not replace it).
    """
    cfg = model.config
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    features = graph.feature_matrix()
    n = features.shape[0]
    if labels.shape[0] != n:
        raise ShapeError(f"expected {n} labels, got {labels.shape[0]}")
    train_idx = np.asarray(train_idx, dtype=np.int64)
    val_idx = np.asarray(val_idx, dtype=np.int64)
    if len(train_idx) == 0 or len(val_idx) == 0:
        raise TrainingError("train and validation index sets must be non-empty")

    triples = model.edge_triples(graph)
    weights = np.zeros(n)
    weights[train_idx] = 1.0
    opt = ad.Adam(model.params, lr=cfg.learning_rate)

    result = TrainResult()
    best_state = None
    for epoch in range(cfg.epochs):
        opt.zero_grad()
        with ad.Tape() as tape:
            logits = model.forward(features, triples)
            probs = ad.softmax_rows(logits)
            loss = ad.cross_entropy(probs, labels, weights)
            tape.backward(loss)
        # metrics reflect the pre-update parameters the loss was taken on
        val_pred = np.argmax(probs.data[val_idx], axis=1)
        val_f1 = weighted_metrics(labels[val_idx], val_pred,
                                  cfg.num_classes).weighted_f1
        result.history.append({
            "epoch": epoch,
            "train_loss": loss.item(),
            "val_weighted_f1": val_f1,
        })
        if val_f1 > result.best_val_f1 or best_state is None:
            result.best_val_f1 = val_f1
            result.best_epoch = epoch
            best_state = model.state_dict()
        opt.step()

    model.load_state_dict(best_state)
    return result


def evaluate(model, graph, labels, idx):
    """MetricsReport for the model's predictions on an index subset."""
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    idx = np.asarray(idx, dtype=np.int64)
    pred = model.predict(graph)
    return weighted_metrics(labels[idx], pred[idx], model.config.num_classes)


def run_ablations(graph, labels, split, base_config, variants=VARIANTS,
                  seeds=(0, 1, 2)):
    """Train and test every (variant, seed) pair on a fixed dataset.

    Returns one record per pair with test-set weighted precision, recall
    and F1, in deterministic (variant-major, seed-minor) order.
    """
    records = []
    for variant in variants:
        if variant not in VARIANTS:
            raise ConfigError("variant", f"unknown variant {variant!r}")
        for seed in seeds:
            cfg = EpiGcnConfig(
                feature_dim=base_config.feature_dim,
                hidden_dim=base_config.hidden_dim,
                num_classes=base_config.num_classes,
                num_layers=base_config.num_layers,
                variant=variant,
                learning_rate=base_config.learning_rate,
                epochs=base_config.epochs,
                seed=int(seed),
            )
            model = EpiGcnModel(cfg)
            train(model, graph, labels, split.train, split.val)
            report = evaluate(model, graph, labels, split.test)
            records.append({
                "variant": variant,
                "seed": int(seed),
                "f1": report.weighted_f1,
                "precision": report.weighted_precision,
                "recall": report.weighted_recall,
            })
    return records

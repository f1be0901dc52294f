"""Support-weighted classification metrics and confusion matrices.

Per-class metrics with a zero denominator are reported as 0, the common
reporting default; weighted aggregates average per-class values with
weights proportional to class support.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


def confusion_matrix(truth, pred, num_classes):
    """C x C integer counts; rows are true classes, columns predicted."""
    t = np.asarray(truth, dtype=np.intp).reshape(-1)
    p = np.asarray(pred, dtype=np.intp).reshape(-1)
    if t.shape[0] != p.shape[0]:
        raise DataError(f"truth has {t.shape[0]} entries, pred has {p.shape[0]}")
    if t.shape[0] == 0:
        raise DataError("cannot score an empty sample")
    for name, ids in (("truth", t), ("pred", p)):
        if ids.min() < 0 or ids.max() >= num_classes:
            raise DataError(f"{name} contains ids outside [0, {num_classes})")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


@dataclass
class MetricsReport:
    """Weighted metrics plus the per-class breakdown they were built from."""

    weighted_f1: float
    weighted_precision: float
    weighted_recall: float
    per_class: list = field(default_factory=list)
    confusion: np.ndarray = None

    def to_dict(self):
        return {
            "weighted_f1": self.weighted_f1,
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "per_class": self.per_class,
            "confusion": self.confusion.tolist(),
        }


def weighted_metrics(truth, pred, num_classes):
    """Support-weighted F1 / precision / recall from a single confusion matrix.

    Weighted recall equals plain accuracy by construction (the supports
    cancel), which the tests assert as an identity.
    """
    cm = confusion_matrix(truth, pred, num_classes)
    total = cm.sum()
    per_class = []
    w_f1 = w_prec = w_rec = 0.0
    for c in range(num_classes):
        tp = float(cm[c, c])
        support = float(cm[c, :].sum())
        predicted = float(cm[:, c].sum())
        prec = tp / predicted if predicted > 0 else 0.0
        rec = tp / support if support > 0 else 0.0
        f1 = 2 * prec * rec / (prec + rec) if (prec + rec) > 0 else 0.0
        share = support / total
        w_f1 += share * f1
        w_prec += share * prec
        w_rec += share * rec
        per_class.append(
            {"class": c, "precision": prec, "recall": rec, "f1": f1,
             "support": int(support)}
        )
    return MetricsReport(
        weighted_f1=w_f1,
        weighted_precision=w_prec,
        weighted_recall=w_rec,
        per_class=per_class,
        confusion=cm,
    )

"""Classification metrics: accuracy, macro-F1, mean per-class recall, confusion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyEvalError, LabelError


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    macro_f1: float
    mean_per_class: float
    per_class_f1: list
    confusion: np.ndarray  # (C, C), rows = true class, cols = predicted

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "mean_per_class": self.mean_per_class,
            "per_class_f1": [float(x) for x in self.per_class_f1],
            "confusion": self.confusion.tolist(),
        }


def metrics(predictions, labels, num_classes: int) -> MetricSet:
    """macro_f1 averages F1 over all classes (0 where a class has neither
    predictions nor positives); mean_per_class averages recall over classes
    that appear in the labels."""
    pred = np.asarray(predictions)
    lab = np.asarray(labels)
    if pred.shape != lab.shape or pred.ndim != 1:
        raise LabelError(f"prediction shape {pred.shape} != label shape {lab.shape}")
    if len(pred) == 0:
        raise EmptyEvalError("cannot evaluate an empty prediction set")
    for name, arr in (("predictions", pred), ("labels", lab)):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise LabelError(f"{name} must lie in [0, {num_classes})")
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (lab, pred), 1)
    total = len(pred)
    tp = np.diag(confusion).astype(np.float64)
    fn = confusion.sum(axis=1) - tp
    fp = confusion.sum(axis=0) - tp
    accuracy = float(tp.sum() / total)
    f1 = np.zeros(num_classes)
    denom = 2 * tp + fp + fn
    nz = denom > 0
    f1[nz] = 2 * tp[nz] / denom[nz]
    support = confusion.sum(axis=1)
    present = support > 0
    recalls = tp[present] / support[present]
    return MetricSet(
        accuracy=accuracy,
        macro_f1=float(f1.mean()),
        mean_per_class=float(recalls.mean()),
        per_class_f1=[float(x) for x in f1],
        confusion=confusion,
    )

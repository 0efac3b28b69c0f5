"""Confusion-matrix accounting, per-class precision/recall, class-balanced
accuracy, and the class-imbalance measure.

Percentages carry full float precision in machine output; human-facing
formatting rounds to 2 decimals.
"""

from dataclasses import dataclass

import numpy as np


def confusion(preds, labels, num_classes: int) -> np.ndarray:
    """(c x c) count matrix, entry (i, j) = samples of true class i predicted as j."""
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise ValueError(f"preds {preds.shape} and labels {labels.shape} must be equal-length vectors")
    for name, v in (("preds", preds), ("labels", labels)):
        if v.size and (v.min() < 0 or v.max() >= num_classes):
            raise ValueError(f"{name} contain values outside [0, {num_classes})")
    flat = np.bincount(labels * num_classes + preds, minlength=num_classes * num_classes)
    return flat.reshape(num_classes, num_classes)


def precision_recall(cm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-class (precision, recall) in percent; 0/0 is defined as 0."""
    cm = np.asarray(cm, dtype=np.float64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise ValueError(f"confusion matrix must be square, got shape {cm.shape}")
    correct = np.diag(cm)
    predicted = cm.sum(axis=0)
    actual = cm.sum(axis=1)
    precision = np.divide(correct, predicted, out=np.zeros_like(correct), where=predicted > 0)
    recall = np.divide(correct, actual, out=np.zeros_like(correct), where=actual > 0)
    return precision * 100.0, recall * 100.0


def cba(recalls) -> float:
    """Class-balanced accuracy: the arithmetic mean of per-class recalls."""
    recalls = np.asarray(recalls, dtype=np.float64)
    if recalls.size < 1:
        raise ValueError("cba needs at least one class recall")
    return float(recalls.mean())


def imbalance_measure(class_counts) -> float:
    """sum_i (n_max - n_i) / n: the minimum fraction of extra samples needed
    to balance every class up to the largest one. 0 iff all counts are equal."""
    counts = np.asarray(class_counts, dtype=np.int64)
    if counts.size == 0 or np.any(counts < 0):
        raise ValueError(f"class counts must be nonnegative and nonempty, got {class_counts}")
    total = int(counts.sum())
    if total == 0:
        raise ValueError("imbalance measure undefined for an empty dataset")
    return float(int(counts.max()) * counts.size - total) / total


@dataclass
class ClassReport:
    """Per-class precision/recall (percent), CBA, imbalance of the evaluated
    set, and per-class support."""

    class_names: list[str]
    precision: np.ndarray
    recall: np.ndarray
    cba: float
    omega_imb: float
    support: np.ndarray

    @classmethod
    def from_predictions(cls, preds, labels, class_names: list[str]) -> "ClassReport":
        cm = confusion(preds, labels, len(class_names))
        precision, recall = precision_recall(cm)
        support = cm.sum(axis=1)
        return cls(
            class_names=list(class_names),
            precision=precision,
            recall=recall,
            cba=cba(recall),
            omega_imb=imbalance_measure(support),
            support=support,
        )

    def to_record(self) -> dict:
        """Machine-readable record with full precision and a fixed field order."""
        return {
            "classes": list(self.class_names),
            "precision": [float(p) for p in self.precision],
            "recall": [float(r) for r in self.recall],
            "cba": float(self.cba),
            "omega_imb": float(self.omega_imb),
            "support": [int(s) for s in self.support],
        }

    def format_table(self) -> str:
        """Human-readable table, percentages at 2 decimals."""
        width = max(len(n) for n in self.class_names + ["class"])
        lines = [f"{'class':<{width}}  {'support':>9}  {'precision':>9}  {'recall':>9}"]
        for name, sup, pre, rec in zip(self.class_names, self.support, self.precision, self.recall):
            lines.append(f"{name:<{width}}  {int(sup):>9}  {pre:>9.2f}  {rec:>9.2f}")
        lines.append(f"CBA: {self.cba:.2f}    Omega_imb: {self.omega_imb:.2f}")
        return "\n".join(lines)

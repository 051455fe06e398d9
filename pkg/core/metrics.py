from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from core.exceptions import EmptyDatasetError, LabelError, ShapeError
from schemas.bench import ClassMetrics, Metrics


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    counts: NDArray[np.int64]

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ShapeError(f"confusion matrix must be square, got shape {counts.shape}")
        if np.any(counts < 0):
            raise ValueError("confusion matrix counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_predictions(cls, true: Sequence[int], predicted: Sequence[int], num_classes: int) -> "ConfusionMatrix":
        true = np.asarray(true, dtype=np.int64)
        predicted = np.asarray(predicted, dtype=np.int64)
        if true.shape != predicted.shape:
            raise ShapeError(f"{true.size} true labels but {predicted.size} predictions")
        for ids in (true, predicted):
            if ids.size and (ids.min() < 0 or ids.max() >= num_classes):
                raise LabelError(f"class ids must lie in [0, {num_classes})")
        counts = np.zeros((num_classes, num_classes), dtype=np.int64)
        np.add.at(counts, (true, predicted), 1)
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _require_counts(cm: ConfusionMatrix) -> None:
    if cm.total == 0:
        raise EmptyDatasetError("cannot score an empty confusion matrix")


def accuracy(cm: ConfusionMatrix) -> float:
    _require_counts(cm)
    return float(np.trace(cm.counts)) / cm.total


def _ratio(numerator: NDArray, denominator: NDArray) -> NDArray[np.float64]:
    out = np.zeros(numerator.shape)
    np.divide(numerator, denominator, out=out, where=denominator > 0)
    return out


def per_class_scores(cm: ConfusionMatrix):
    """Precision, recall, F1 and support per class, with 0/0 taken as 0."""
    hits = np.diag(cm.counts).astype(np.float64)
    precision = _ratio(hits, cm.counts.sum(axis=0))
    recall = _ratio(hits, cm.counts.sum(axis=1))
    f1 = _ratio(2.0 * precision * recall, precision + recall)
    return precision, recall, f1, cm.counts.sum(axis=1)


def weighted_f1(cm: ConfusionMatrix) -> float:
    _require_counts(cm)
    _, _, f1, support = per_class_scores(cm)
    return float(np.sum(support / cm.total * f1))


def evaluate(cm: ConfusionMatrix, class_names: Optional[Sequence[str]] = None) -> Metrics:
    precision, recall, f1, support = per_class_scores(cm)
    precision, recall, f1 = (np.clip(a, 0.0, 1.0) for a in (precision, recall, f1))
    names = list(class_names) if class_names is not None else [str(i) for i in range(len(support))]
    return Metrics(
        accuracy=accuracy(cm),
        weighted_f1=min(weighted_f1(cm), 1.0),
        per_class=[
            ClassMetrics(name=n, precision=float(p), recall=float(r), f1=float(f), support=int(s))
            for n, p, r, f, s in zip(names, precision, recall, f1, support)
        ],
    )

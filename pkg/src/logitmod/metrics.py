"""Evaluation metrics: top-1 accuracy and confusion-based segmentation scores.

Segmentation tallies are micro-aggregated: true/false positives and false
negatives are summed over all instances before any division. Pixels whose
label equals IGNORE_LABEL are excluded from every tally. Mean IoU averages
over classes with at least one ground-truth or predicted pixel; the
per-class maps cover classes present in the ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modulate import as_logits_tensor, as_logits_vector

__all__ = [
    "IGNORE_LABEL",
    "ClassificationDataset",
    "SegmentationInstance",
    "SegMetrics",
    "argmax_predict",
    "top1_accuracy",
    "predict_map",
    "segmentation_metrics",
]

IGNORE_LABEL = 0xFFFF


@dataclass(frozen=True)
class ClassificationDataset:
    """Labeled logits: an (N, C) score matrix plus N integer labels < C."""

    num_classes: int
    logits: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        c = int(self.num_classes)
        if c < 2:
            raise ValueError("num_classes must be >= 2")
        logits = np.asarray(self.logits, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if logits.ndim != 2 or logits.shape[1] != c:
            raise ValueError("logits must have shape (N, num_classes)")
        if labels.shape != (logits.shape[0],):
            raise ValueError("labels must have shape (N,)")
        if not np.all(np.isfinite(logits)):
            raise ValueError("logits must be finite")
        if logits.shape[0] and (labels.min() < 0 or labels.max() >= c):
            raise ValueError("labels must lie in [0, num_classes)")
        object.__setattr__(self, "num_classes", c)
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.size)


@dataclass(frozen=True)
class SegmentationInstance:
    """An (H, W, C) logits tensor with an (H, W) ground-truth label map."""

    logits: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        logits = as_logits_tensor(self.logits)
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != logits.shape[:2]:
            raise ValueError("label map shape must match logits (H, W)")
        valid = labels != IGNORE_LABEL
        if np.any((labels < 0) & valid) or np.any((labels >= logits.shape[2]) & valid):
            raise ValueError("labels must be < num_classes or the ignore marker")
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "labels", labels)

    @property
    def num_classes(self) -> int:
        return int(self.logits.shape[2])

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.logits.shape[0]), int(self.logits.shape[1]))


@dataclass(frozen=True)
class SegMetrics:
    """Per-class pixel accuracy and IoU (ground-truth classes) plus mean IoU."""

    per_class_pixel_accuracy: dict[int, float]
    per_class_iou: dict[int, float]
    mean_iou: float


def argmax_predict(logits) -> int:
    """Index of the maximal score; ties break to the lowest index."""
    return int(np.argmax(as_logits_vector(logits)))


def top1_accuracy(dataset: ClassificationDataset, predictions) -> float:
    """Fraction of samples whose prediction equals the label."""
    preds = np.asarray(predictions, dtype=np.int64)
    if preds.shape != dataset.labels.shape:
        raise ValueError("predictions length must match the dataset")
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    return float(np.mean(preds == dataset.labels))


def predict_map(tensor) -> np.ndarray:
    """Per-pixel argmax over channels; ties break to the lowest channel."""
    return np.argmax(as_logits_tensor(tensor), axis=2).astype(np.int64)


def segmentation_metrics(instances, predictions) -> SegMetrics:
    """Micro-aggregated per-class pixel accuracy, IoU, and mean IoU.

    ``predictions`` holds one (H, W) class map per instance. Accuracy for
    class c is TP_c over its ground-truth pixel count; IoU_c is
    TP_c / (TP_c + FP_c + FN_c). If every pixel is ignore-marked the
    metrics are undefined and reported empty (mean IoU NaN).
    """
    instances = list(instances)
    predictions = list(predictions)
    if len(instances) != len(predictions):
        raise ValueError("need one prediction map per instance")
    if not instances:
        raise ValueError("no instances given")
    c = instances[0].num_classes
    joint = np.zeros(c * c, dtype=np.int64)
    for inst, pred in zip(instances, predictions):
        if inst.num_classes != c:
            raise ValueError("instances must share one class count")
        pred = np.asarray(pred, dtype=np.int64)
        if pred.shape != inst.labels.shape:
            raise ValueError("prediction map shape must match the label map")
        if pred.size and (pred.min() < 0 or pred.max() >= c):
            raise ValueError("predictions must lie in [0, num_classes)")
        keep = inst.labels != IGNORE_LABEL
        joint += np.bincount(
            inst.labels[keep] * c + pred[keep], minlength=c * c
        )
    confusion = joint.reshape(c, c)
    gt_count = confusion.sum(axis=1)
    pred_count = confusion.sum(axis=0)
    tp = np.diag(confusion)
    accuracy = {
        int(k): float(tp[k] / gt_count[k]) for k in np.flatnonzero(gt_count > 0)
    }
    iou_all = {}
    for k in np.flatnonzero((gt_count > 0) | (pred_count > 0)):
        union = gt_count[k] + pred_count[k] - tp[k]
        iou_all[int(k)] = float(tp[k] / union)
    if not iou_all:
        return SegMetrics({}, {}, float("nan"))
    mean_iou = float(np.mean(list(iou_all.values())))
    iou_gt = {k: v for k, v in iou_all.items() if gt_count[k] > 0}
    return SegMetrics(accuracy, iou_gt, mean_iou)

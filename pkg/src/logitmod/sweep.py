"""Sigma-sweep protocols.

Utility sweeps walk a sigma grid (default step 0.2), modulate every
sample once per grid point with a deterministic sub-stream, and record
the metric (top-1 accuracy for classification, mean IoU for
segmentation). They stop at sigma_max or, under the chance-plateau rule,
once the metric has stayed within ``chance_epsilon`` of chance level
(1/C) for ``plateau_steps`` consecutive points — the observable sign
that modulation has saturated.

Focus sweeps raise (or lower) the targeted class logits and record the
per-target pixel accuracy and IoU beside the overall mean IoU, stopping
early if the mean IoU falls more than ``miou_tolerance`` percentage
points below baseline; out-of-tolerance points are not recorded, and the
last recorded sigma is the maximum feasible one.

Grid points use disjoint sub-streams keyed by (grid index, repeat,
instance), so results are independent of evaluation order. Within one
classification grid point the noise matrix is drawn in a single block
whose row i belongs to sample i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metrics import (
    ClassificationDataset,
    SegmentationInstance,
    predict_map,
    segmentation_metrics,
)
from .modulate import ModulationSpec, apply_to_tensor
from .stats import RngStream

__all__ = [
    "STOP_RULES",
    "SweepConfig",
    "FocusSweepConfig",
    "SweepRecord",
    "SweepResult",
    "sigma_grid",
    "sweep_utility",
    "sweep_focus",
    "write_sweep_csv",
]

STOP_RULES = ("explicit-max", "chance-plateau")

_K_UTILITY = 201
_K_FOCUS = 202


@dataclass(frozen=True)
class SweepConfig:
    """Grid and stopping parameters of a sigma sweep."""

    sigma_max: float
    seed: int
    sigma_start: float = 0.0
    sigma_step: float = 0.2
    stop_rule: str = "chance-plateau"
    chance_epsilon: float = 0.02
    plateau_steps: int = 2
    repeats: int = 1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma_start) and self.sigma_start >= 0):
            raise ValueError("sigma_start must be >= 0")
        if not (math.isfinite(self.sigma_max) and self.sigma_max > 0):
            raise ValueError("sigma_max must be positive")
        if self.sigma_start > self.sigma_max:
            raise ValueError("sigma_start must not exceed sigma_max")
        if not (math.isfinite(self.sigma_step) and self.sigma_step > 0):
            raise ValueError("sigma_step must be positive")
        if self.stop_rule not in STOP_RULES:
            raise ValueError(f"stop_rule must be one of {STOP_RULES}")
        if self.chance_epsilon < 0:
            raise ValueError("chance_epsilon must be >= 0")
        if self.plateau_steps < 1:
            raise ValueError("plateau_steps must be >= 1")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


@dataclass(frozen=True)
class FocusSweepConfig:
    """Focus-sweep parameters: targets, direction, and the mIoU tolerance.

    ``miou_tolerance`` is in percentage points (mean IoU itself is a
    fraction in [0, 1]).
    """

    base: SweepConfig
    targets: tuple[int, ...]
    direction: str = "up"
    miou_tolerance: float = 0.5

    def __post_init__(self) -> None:
        targets = tuple(sorted({int(t) for t in self.targets}))
        if not targets:
            raise ValueError("targets must be non-empty")
        if targets[0] < 0:
            raise ValueError("target indices must be non-negative")
        if self.direction not in ("up", "down"):
            raise ValueError("direction must be 'up' or 'down'")
        if self.miou_tolerance < 0:
            raise ValueError("miou_tolerance must be >= 0")
        object.__setattr__(self, "targets", targets)


@dataclass(frozen=True)
class SweepRecord:
    sigma: float
    metrics: dict[str, float]


@dataclass(frozen=True)
class SweepResult:
    """Ordered sweep records plus the unmodulated baseline bundle."""

    records: list[SweepRecord]
    stop_reason: str
    baseline: dict[str, float]
    max_feasible_sigma: float | None = None

    def sigmas(self) -> list[float]:
        return [r.sigma for r in self.records]

    def series(self, key: str) -> list[float]:
        return [r.metrics[key] for r in self.records]


def sigma_grid(cfg: SweepConfig) -> list[float]:
    """The sweep's sigma values: start, start+step, ... up to sigma_max."""
    grid = []
    i = 0
    limit = cfg.sigma_max * (1 + 1e-12) + 1e-12
    while True:
        sigma = cfg.sigma_start + i * cfg.sigma_step
        if sigma > limit:
            break
        grid.append(float(sigma))
        i += 1
    return grid


def _classification_accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(logits, axis=1) == labels))


def _segmentation_bundle(instances, predictions, targets=()) -> dict[str, float]:
    m = segmentation_metrics(instances, predictions)
    bundle = {"miou": m.mean_iou}
    for c in targets:
        bundle[f"acc_{c}"] = m.per_class_pixel_accuracy.get(c, float("nan"))
        bundle[f"iou_{c}"] = m.per_class_iou.get(c, float("nan"))
    return bundle


def _as_instances(dataset) -> list[SegmentationInstance]:
    instances = list(dataset)
    if not instances:
        raise ValueError("dataset is empty")
    if any(not isinstance(x, SegmentationInstance) for x in instances):
        raise ValueError("expected SegmentationInstance items")
    c = instances[0].num_classes
    if any(inst.num_classes != c for inst in instances):
        raise ValueError("instances must share one class count")
    return instances


def sweep_utility(dataset, cfg: SweepConfig) -> SweepResult:
    """Utility-modulation sweep over a classification or segmentation dataset.

    One modulation draw per (grid point, sample) by default; ``repeats``
    averages that many independent draws per grid point. The record at
    sigma = 0 is the unmodulated evaluation, bit-for-bit.
    """
    if isinstance(dataset, ClassificationDataset):
        if len(dataset) == 0:
            raise ValueError("dataset is empty")
        num_classes = dataset.num_classes
        baseline_value = _classification_accuracy(dataset.logits, dataset.labels)

        def evaluate(sigma: float, index: int) -> dict[str, float]:
            if sigma == 0.0:
                return {"accuracy": baseline_value}
            values = []
            for r in range(cfg.repeats):
                gen = RngStream(cfg.seed).substream(_K_UTILITY, index, r).generator()
                noisy = dataset.logits + gen.normal(0.0, sigma, size=dataset.logits.shape)
                values.append(_classification_accuracy(noisy, dataset.labels))
            return {"accuracy": float(np.mean(values))}

        metric_key = "accuracy"
        baseline = {"accuracy": baseline_value}
    else:
        instances = _as_instances(dataset)
        num_classes = instances[0].num_classes
        baseline = _segmentation_bundle(instances, [predict_map(i.logits) for i in instances])

        def evaluate(sigma: float, index: int) -> dict[str, float]:
            if sigma == 0.0:
                return dict(baseline)
            bundles = []
            for r in range(cfg.repeats):
                spec = ModulationSpec("utility", sigma, seed=cfg.seed)
                preds = [
                    predict_map(
                        apply_to_tensor(
                            inst.logits, spec, RngStream(cfg.seed).substream(_K_UTILITY, index, r, j)
                        )
                    )
                    for j, inst in enumerate(instances)
                ]
                bundles.append(_segmentation_bundle(instances, preds))
            return {k: float(np.mean([b[k] for b in bundles])) for k in bundles[0]}

        metric_key = "miou"

    chance = 1.0 / num_classes
    records: list[SweepRecord] = []
    stop_reason = "reached-max"
    plateau = 0
    for index, sigma in enumerate(sigma_grid(cfg)):
        records.append(SweepRecord(sigma, evaluate(sigma, index)))
        if cfg.stop_rule == "chance-plateau":
            if abs(records[-1].metrics[metric_key] - chance) <= cfg.chance_epsilon:
                plateau += 1
                if plateau >= cfg.plateau_steps:
                    stop_reason = "chance-plateau"
                    break
            else:
                plateau = 0
    return SweepResult(records=records, stop_reason=stop_reason, baseline=baseline)


def sweep_focus(dataset, cfg: FocusSweepConfig) -> SweepResult:
    """Focus-modulation sweep over a segmentation dataset.

    Records mean IoU plus per-target pixel accuracy and IoU at each grid
    sigma; stops (without recording) once mean IoU drops more than
    ``miou_tolerance`` points below baseline.
    """
    instances = _as_instances(dataset)
    num_classes = instances[0].num_classes
    if cfg.targets[-1] >= num_classes:
        raise ValueError(f"target index out of range for {num_classes} classes")
    base = cfg.base
    baseline = _segmentation_bundle(
        instances, [predict_map(i.logits) for i in instances], cfg.targets
    )
    tolerance = cfg.miou_tolerance / 100.0
    mode = "focus-up" if cfg.direction == "up" else "focus-down"
    records: list[SweepRecord] = []
    stop_reason = "reached-max"
    for index, sigma in enumerate(sigma_grid(base)):
        if sigma == 0.0:
            bundle = dict(baseline)
        else:
            bundles = []
            for r in range(base.repeats):
                spec = ModulationSpec(mode, sigma, targets=frozenset(cfg.targets), seed=base.seed)
                preds = [
                    predict_map(
                        apply_to_tensor(
                            inst.logits, spec, RngStream(base.seed).substream(_K_FOCUS, index, r, j)
                        )
                    )
                    for j, inst in enumerate(instances)
                ]
                bundles.append(_segmentation_bundle(instances, preds, cfg.targets))
            bundle = {k: float(np.mean([b[k] for b in bundles])) for k in bundles[0]}
        if baseline["miou"] - bundle["miou"] > tolerance:
            stop_reason = "tolerance-violated"
            break
        records.append(SweepRecord(sigma, bundle))
    max_feasible = records[-1].sigma if records else None
    return SweepResult(
        records=records,
        stop_reason=stop_reason,
        baseline=baseline,
        max_feasible_sigma=max_feasible,
    )


def write_sweep_csv(result: SweepResult, path) -> None:
    """Write records as CSV: ``sigma`` plus one column per metric key."""
    if not result.records:
        raise ValueError("sweep produced no records")
    keys = list(result.records[0].metrics)
    lines = [",".join(["sigma"] + keys)]
    for rec in result.records:
        lines.append(",".join([repr(rec.sigma)] + [repr(rec.metrics[k]) for k in keys]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

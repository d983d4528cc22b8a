"""Logits modulation.

Two redistribution modes applied between a model's feature extractor and
its output mapping: *utility* adds i.i.d. zero-mean Gaussian noise to all
logits, degrading output quality by an amount controlled by sigma;
*focus* adds (or subtracts) the absolute value of Gaussian noise on a
targeted subset of class logits, shifting emphasis in one direction.

Noise is always drawn in a fixed traversal order (index order for
vectors; row-major with channel innermost for tensors) so results are
reproducible given a stream. Modulated logits are neither clamped nor
renormalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .stats import RngStream

__all__ = [
    "MODES",
    "ModulationSpec",
    "as_logits_vector",
    "as_logits_tensor",
    "apply_utility",
    "apply_focus",
    "apply_to_tensor",
]

MODES = ("utility", "focus-up", "focus-down")


def as_logits_vector(scores) -> np.ndarray:
    """Validate and return a logits vector as a float64 array (C >= 2, finite)."""
    v = np.asarray(scores, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("logits vector must be one-dimensional")
    if v.size < 2:
        raise ValueError("logits vector needs at least 2 classes")
    if not np.all(np.isfinite(v)):
        raise ValueError("logits must be finite")
    return v


def as_logits_tensor(values) -> np.ndarray:
    """Validate and return an H x W x C logits tensor as float64."""
    t = np.asarray(values, dtype=np.float64)
    if t.ndim != 3:
        raise ValueError("logits tensor must have shape (H, W, C)")
    h, w, c = t.shape
    if h < 1 or w < 1:
        raise ValueError("tensor height and width must be >= 1")
    if c < 2:
        raise ValueError("logits tensor needs at least 2 channels")
    if not np.all(np.isfinite(t)):
        raise ValueError("logits must be finite")
    return t


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if math.isnan(sigma) or math.isinf(sigma) or sigma < 0:
        raise ValueError("sigma must be finite and >= 0")
    return sigma


def _check_targets(targets, num_classes: int) -> list[int]:
    idx = sorted({int(i) for i in targets})
    if not idx:
        raise ValueError("targets must be a non-empty set of class indices")
    if idx[0] < 0 or idx[-1] >= num_classes:
        raise ValueError(f"target index out of range for {num_classes} classes")
    return idx


@dataclass(frozen=True)
class ModulationSpec:
    """How to modulate: mode, noise scale, targeted classes, and the seed."""

    mode: str
    sigma: float
    targets: frozenset[int] = field(default_factory=frozenset)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        _check_sigma(self.sigma)
        object.__setattr__(self, "targets", frozenset(int(i) for i in self.targets))
        if self.mode == "utility":
            if self.targets:
                raise ValueError("utility mode takes no targets")
        else:
            if not self.targets:
                raise ValueError("focus modes require a non-empty target set")
            if min(self.targets) < 0:
                raise ValueError("target indices must be non-negative")

    @property
    def direction(self) -> str:
        if self.mode == "utility":
            raise ValueError("utility mode has no direction")
        return "up" if self.mode == "focus-up" else "down"


def apply_utility(logits, sigma: float, rng: RngStream) -> np.ndarray:
    """Add an independent N(0, sigma^2) draw to every logit.

    sigma = 0 returns a bit-identical copy of the input.
    """
    v = as_logits_vector(logits)
    sigma = _check_sigma(sigma)
    if sigma == 0.0:
        return v.copy()
    return v + rng.generator().normal(0.0, sigma, size=v.size)


def apply_focus(logits, targets, direction: str, sigma: float, rng: RngStream) -> np.ndarray:
    """Shift targeted logits by +|e| (up) or -|e| (down), e ~ N(0, sigma^2).

    One |e| is drawn per targeted entry, in ascending index order;
    non-targeted logits are returned unchanged. sigma = 0 is the identity.
    """
    v = as_logits_vector(logits)
    sigma = _check_sigma(sigma)
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    idx = _check_targets(targets, v.size)
    out = v.copy()
    if sigma == 0.0:
        return out
    mag = np.abs(rng.generator().normal(0.0, sigma, size=len(idx)))
    if direction == "up":
        out[idx] += mag
    else:
        out[idx] -= mag
    return out


def apply_to_tensor(tensor, spec: ModulationSpec, rng: RngStream) -> np.ndarray:
    """Modulate every pixel's logits vector independently.

    Equivalent to applying the vector operation at each (h, w) with noise
    drawn in row-major, channel-innermost order; a 1 x 1 x C tensor gives
    exactly the vector result under the same stream.
    """
    t = as_logits_tensor(tensor)
    h, w, c = t.shape
    if spec.sigma == 0.0:
        return t.copy()
    if spec.mode == "utility":
        return t + rng.generator().normal(0.0, spec.sigma, size=t.shape)
    idx = _check_targets(spec.targets, c)
    out = t.copy()
    mag = np.abs(rng.generator().normal(0.0, spec.sigma, size=(h, w, len(idx))))
    if spec.mode == "focus-up":
        out[:, :, idx] += mag
    else:
        out[:, :, idx] -= mag
    return out

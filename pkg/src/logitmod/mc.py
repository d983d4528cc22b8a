"""Monte Carlo oracles for the closed-form preservation probabilities.

Independent simulation-based estimates with Wilson score intervals
(99% by default; Wilson stays valid near p = 0 or 1, which the small-
and large-sigma regimes hit routinely). Estimates are deterministic
given (inputs, seed, stream, trials). Order comparisons use non-strict
inequalities, so exact floating-point ties count as preserved; argmax
ties break to the lowest index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .modulate import ModulationSpec, as_logits_vector
from .stats import RngStream
from .theory import gap_profile

__all__ = [
    "MIN_TRIALS",
    "McEstimate",
    "wilson_interval",
    "mc_order_preservation",
    "mc_focus_preservation",
    "mc_argmax_flip_rate",
]

MIN_TRIALS = 10_000
_CHUNK = 1_000_000


@dataclass(frozen=True)
class McEstimate:
    """A binomial proportion estimate with its Wilson score interval."""

    estimate: float
    trials: int
    ci_low: float
    ci_high: float
    confidence: float = 0.99

    def __post_init__(self) -> None:
        if not self.ci_low <= self.estimate <= self.ci_high:
            raise ValueError("interval must bracket the estimate")

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2.0

    def contains(self, p: float) -> bool:
        return self.ci_low <= p <= self.ci_high

    def consistent_with(self, p: float, half_widths: float = 3.0) -> bool:
        """Whether ``p`` lies within ``half_widths`` interval half-widths."""
        return abs(p - self.estimate) <= half_widths * self.half_width


def wilson_interval(successes: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    z = NormalDist().inv_cdf((1.0 + confidence) / 2.0)
    n = float(trials)
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    spread = (z / denom) * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n))
    # at the boundaries center == spread analytically; clamp the rounding dust
    low = 0.0 if successes == 0 else max(0.0, center - spread)
    high = 1.0 if successes == trials else min(1.0, center + spread)
    return (low, high)


def _estimate(successes: int, trials: int, confidence: float) -> McEstimate:
    low, high = wilson_interval(successes, trials, confidence)
    return McEstimate(successes / trials, trials, low, high, confidence)


def _check_trials(trials: int) -> int:
    trials = int(trials)
    if trials < MIN_TRIALS:
        raise ValueError(f"trials must be >= {MIN_TRIALS}")
    return trials


def _chunks(trials: int):
    done = 0
    while done < trials:
        size = min(_CHUNK, trials - done)
        yield size
        done += size


def mc_order_preservation(
    logits, sigma: float, trials: int, rng: RngStream, confidence: float = 0.99
) -> McEstimate:
    """Fraction of trials in which perturbed logits keep their sorted order.

    Each trial adds i.i.d. N(0, sigma^2) noise and checks that the values,
    taken in the original vector's sorted order, are still non-decreasing.
    """
    v = as_logits_vector(logits)
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma <= 0:
        raise ValueError("sigma must be positive")
    trials = _check_trials(trials)
    base = v[gap_profile(v).permutation]
    gen = rng.generator()
    hits = 0
    for size in _chunks(trials):
        noisy = base + gen.normal(0.0, sigma, size=(size, base.size))
        hits += int(np.sum(np.all(np.diff(noisy, axis=1) >= 0.0, axis=1)))
    return _estimate(hits, trials, confidence)


def mc_focus_preservation(
    gap: float, sigma: float, trials: int, rng: RngStream, confidence: float = 0.99
) -> McEstimate:
    """Fraction of trials with |e| <= gap for e ~ N(0, sigma^2)."""
    gap = float(gap)
    if math.isnan(gap) or gap < 0:
        raise ValueError("gap must be >= 0")
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma <= 0:
        raise ValueError("sigma must be positive")
    trials = _check_trials(trials)
    gen = rng.generator()
    hits = 0
    for size in _chunks(trials):
        hits += int(np.sum(np.abs(gen.normal(0.0, sigma, size=size)) <= gap))
    return _estimate(hits, trials, confidence)


def mc_argmax_flip_rate(
    logits, spec: ModulationSpec, trials: int, rng: RngStream, confidence: float = 0.99
) -> McEstimate:
    """Fraction of trials in which modulation changes the argmax."""
    v = as_logits_vector(logits)
    trials = _check_trials(trials)
    if spec.mode != "utility":
        idx = sorted(spec.targets)
        if idx[-1] >= v.size:
            raise ValueError(f"target index out of range for {v.size} classes")
    if spec.sigma == 0.0:
        return _estimate(0, trials, confidence)
    before = int(np.argmax(v))
    gen = rng.generator()
    flips = 0
    for size in _chunks(trials):
        if spec.mode == "utility":
            noisy = v + gen.normal(0.0, spec.sigma, size=(size, v.size))
        else:
            noisy = np.tile(v, (size, 1))
            mag = np.abs(gen.normal(0.0, spec.sigma, size=(size, len(idx))))
            if spec.mode == "focus-up":
                noisy[:, idx] += mag
            else:
                noisy[:, idx] -= mag
        flips += int(np.sum(np.argmax(noisy, axis=1) != before))
    return _estimate(flips, trials, confidence)

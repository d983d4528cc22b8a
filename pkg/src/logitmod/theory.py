"""Closed-form preservation probabilities for perturbed logits.

For a logits vector sorted into non-decreasing order with consecutive
gaps d_1 .. d_{n-1}, adding i.i.d. N(0, sigma^2) noise preserves the full
ordering with probability

    prod_i Phi(d_i / (sqrt(2) * sigma)),

each factor being the chance that one adjacent pair keeps its order. The
product treats the pairwise events as independent; adjacent differences
share a noise term, so for n >= 3 it is an independence-based
approximation of the exact joint probability (the Monte Carlo oracles
quantify the deviation). At n = 2 it is exact.

Its derivative with respect to the noise *variance* v = sigma^2 is

    sum_i [ -d_i / (2*sqrt(2)*sigma^3) * phi(z_i) * prod_{j != i} Phi(z_j) ],

which is never positive: more noise never helps preserve order.

For focus shifts, raising a logit that trails another by ``gap`` with
+|e|, e ~ N(0, sigma^2), keeps it behind with probability
2*Phi(gap/sigma) - 1 (the folded-normal CDF at the gap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modulate import as_logits_vector
from .stats import folded_normal_cdf, std_normal_cdf, std_normal_pdf

__all__ = [
    "GapProfile",
    "TheoryResult",
    "gap_profile",
    "order_preservation_prob",
    "order_preservation_rate",
    "order_theory",
    "focus_preservation_prob",
]

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class GapProfile:
    """Sorted-order permutation of a logits vector and its consecutive gaps."""

    gaps: np.ndarray
    permutation: np.ndarray

    def __post_init__(self) -> None:
        gaps = np.asarray(self.gaps, dtype=np.float64)
        perm = np.asarray(self.permutation, dtype=np.int64)
        if gaps.ndim != 1 or perm.ndim != 1:
            raise ValueError("gaps and permutation must be one-dimensional")
        if perm.size != gaps.size + 1:
            raise ValueError("permutation must have one more entry than gaps")
        if not np.all(np.isfinite(gaps)) or np.any(gaps < 0):
            raise ValueError("gaps must be finite and >= 0")
        if sorted(perm.tolist()) != list(range(perm.size)):
            raise ValueError("permutation must be a bijection on 0..n-1")
        object.__setattr__(self, "gaps", gaps)
        object.__setattr__(self, "permutation", perm)

    @property
    def n(self) -> int:
        return int(self.permutation.size)


@dataclass(frozen=True)
class TheoryResult:
    """Order-preservation probability and its rate of change in sigma^2."""

    probability: float
    derivative_wrt_variance: float
    sigma: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        if self.derivative_wrt_variance > 0.0:
            raise ValueError("derivative w.r.t. variance cannot be positive")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")


def gap_profile(logits) -> GapProfile:
    """Sort a logits vector and return its permutation and consecutive gaps.

    The sort is stable, so ties keep their original index order; tied
    entries contribute zero gaps.
    """
    v = as_logits_vector(logits)
    perm = np.argsort(v, kind="stable")
    return GapProfile(np.diff(v[perm]), perm)


def _check_pos_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma <= 0:
        raise ValueError("sigma must be positive")
    return sigma


def order_preservation_prob(profile: GapProfile, sigma: float) -> float:
    """prod_i Phi(gap_i / (sqrt(2)*sigma)), in (0, 1].

    sigma = 0 is outside the domain; the analytic limit is 1 when every
    gap is positive and is left undefined when ties are present.
    """
    sigma = _check_pos_sigma(sigma)
    p = 1.0
    for gap in profile.gaps:
        p *= std_normal_cdf(gap / (_SQRT2 * sigma))
    return p


def order_preservation_rate(profile: GapProfile, sigma: float) -> float:
    """d/d(sigma^2) of the order-preservation probability; always <= 0.

    A zero gap annihilates its own term (the gap multiplies it), so the
    rate is 0 exactly when all gaps are 0.
    """
    sigma = _check_pos_sigma(sigma)
    gaps = profile.gaps
    m = gaps.size
    if m == 0:
        return 0.0
    z = gaps / (_SQRT2 * sigma)
    cdf = np.array([std_normal_cdf(x) for x in z])
    pdf = np.array([std_normal_pdf(x) for x in z])
    # prod_{j != i} Phi(z_j) via prefix/suffix products: stable when some
    # factor underflows to 0 (no division).
    prefix = np.ones(m)
    suffix = np.ones(m)
    for i in range(1, m):
        prefix[i] = prefix[i - 1] * cdf[i - 1]
    for i in range(m - 2, -1, -1):
        suffix[i] = suffix[i + 1] * cdf[i + 1]
    scale = -1.0 / (2.0 * _SQRT2 * sigma**3)
    return float(np.sum(scale * gaps * pdf * prefix * suffix))


def order_theory(profile: GapProfile, sigma: float) -> TheoryResult:
    """Bundle probability and variance-derivative for one (profile, sigma)."""
    return TheoryResult(
        probability=order_preservation_prob(profile, sigma),
        derivative_wrt_variance=order_preservation_rate(profile, sigma),
        sigma=float(sigma),
    )


def focus_preservation_prob(gap: float, sigma: float) -> float:
    """Pr that a logit raised by +|e| stays <= a logit ``gap`` above it.

    Equals the folded-normal CDF 2*Phi(gap/sigma) - 1; requires gap >= 0.
    """
    gap = float(gap)
    if math.isnan(gap) or gap < 0:
        raise ValueError("gap must be >= 0")
    return folded_normal_cdf(gap, _check_pos_sigma(sigma))

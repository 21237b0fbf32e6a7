"""Threshold detection and its Gaussian-approximation error rate."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from molfilter._optim import golden_section_min
from molfilter.channel import Cir
from molfilter.filters import Filter
from molfilter.stats import interference_mean, interference_means, q_function

THRESHOLD_GRID_POINTS = 4001


@dataclass(frozen=True)
class DetectorSpec:
    filter: Filter
    threshold: float

    def __post_init__(self):
        if not np.isfinite(self.threshold):
            raise ValueError("threshold must be finite")


class GaussianMoments(NamedTuple):
    mu0: float
    mu1: float
    var0: float
    var1: float


def detect(spec: DetectorSpec, observations) -> int:
    r = np.asarray(observations)
    if r.shape != spec.filter.weights.shape:
        raise ValueError(f"expected {len(spec.filter)} observations, got shape {r.shape}")
    return int(spec.filter.apply(r) >= spec.threshold)


def detect_many(spec: DetectorSpec, observations) -> np.ndarray:
    """Vectorised :func:`detect` over rows of an (N, M) array."""
    return (spec.filter.apply(observations) >= spec.threshold).astype(np.int8)


def gaussian_moments(f: Filter, cir: Cir, s, c_ext: float, bit: int):
    """(mean, variance) of the decision variable for one ISI pattern and bit."""
    w = f.weights
    if w.size != cir.m_samples:
        raise ValueError(f"filter length {w.size} does not match M = {cir.m_samples}")
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    lam = interference_mean(cir, s, c_ext) + bit * cir.signal
    return float(w @ lam), float(w**2 @ lam)


def pattern_moments(f: Filter, cir: Cir, c_ext: float) -> list[GaussianMoments]:
    """Moments for both bits, one entry per ISI pattern (enumeration order)."""
    w = f.weights
    if w.size != cir.m_samples:
        raise ValueError(f"filter length {w.size} does not match M = {cir.m_samples}")
    lam0 = interference_means(cir, c_ext)
    lam1 = lam0 + cir.signal
    return [
        GaussianMoments(float(w @ a), float(w @ b), float(w**2 @ a), float(w**2 @ b))
        for a, b in zip(lam0, lam1)
    ]


def _prob_at_least(xi, mu, var):
    """P(Y >= xi) for Y ~ N(mu, var); a step function when var == 0."""
    xi = np.asarray(xi, dtype=float)
    if var <= 0:
        return (xi <= mu).astype(float)
    return q_function((xi - mu) / np.sqrt(var))


def _prob_below(xi, mu, var):
    xi = np.asarray(xi, dtype=float)
    if var <= 0:
        return (xi > mu).astype(float)
    # Q of the mirrored argument keeps precision deep in the tail
    return q_function((mu - xi) / np.sqrt(var))


def _ber(moments, xi):
    total = 0.0
    for g in moments:
        total = total + 0.5 * (_prob_below(xi, g.mu1, g.var1) + _prob_at_least(xi, g.mu0, g.var0))
    return total / len(moments)


def analytical_ber(f: Filter, cir: Cir, c_ext: float, xi) -> float:
    """Gaussian-approximation BER averaged over equiprobable ISI patterns.

    ``xi`` may be an array, in which case an array is returned.
    """
    out = _ber(pattern_moments(f, cir, c_ext), xi)
    return float(out) if np.ndim(out) == 0 else np.asarray(out)


def threshold_bracket(moments) -> tuple[float, float]:
    s0 = max(np.sqrt(g.var0) for g in moments)
    s1 = max(np.sqrt(g.var1) for g in moments)
    lo = min(g.mu0 for g in moments) - 4 * s0
    hi = max(g.mu1 for g in moments) + 4 * s1
    if lo > hi:  # negative-gain filters can invert the ordering of the means
        lo, hi = hi, lo
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    return float(lo), float(hi)


def best_threshold(moments) -> float:
    """Threshold minimising the pattern-averaged BER for given moments."""
    lo, hi = threshold_bracket(moments)
    grid = np.linspace(lo, hi, THRESHOLD_GRID_POINTS)
    vals = _ber(moments, grid)
    i = int(np.argmin(vals))  # first minimum, i.e. the smaller threshold on ties
    best_xi, best = float(grid[i]), float(vals[i])
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    xi = golden_section_min(lambda x: float(_ber(moments, x)), a, b, rtol=1e-12, atol=1e-12)
    if float(_ber(moments, xi)) < best:
        best_xi = float(xi)
    return best_xi


def optimize_threshold(f: Filter, cir: Cir, c_ext: float) -> float:
    """Threshold minimising :func:`analytical_ber`: dense grid, then golden-section
    refinement between the neighbours of the best grid point.
    """
    return best_threshold(pattern_moments(f, cir, c_ext))

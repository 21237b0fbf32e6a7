"""Linear filters for one symbol interval and their output SINR."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from molfilter.channel import Cir

LABELS = ("matched", "sum", "correlator", "peak", "custom")


class IllConditionedError(ValueError):
    """Raised when 0.5*diag(c_s) + C_i is not positive definite."""


@dataclass(frozen=True)
class Filter:
    weights: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size == 0 or not np.all(np.isfinite(w)):
            raise ValueError("filter weights must be a non-empty finite vector")
        if not np.any(w != 0):
            raise ValueError("filter must not be the all-zero vector")
        if self.label not in LABELS:
            raise ValueError(f"unknown filter label {self.label!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size

    def apply(self, r) -> np.ndarray:
        """Decision variable f^T r; ``r`` may be (M,) or (N, M)."""
        return np.asarray(r) @ self.weights


def noise_plus_interference(cir: Cir, cov: np.ndarray) -> np.ndarray:
    """B = 0.5*diag(c_s) + C_i, the denominator matrix of the SINR."""
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (cir.m_samples, cir.m_samples):
        raise ValueError(f"covariance shape {cov.shape} does not match M = {cir.m_samples}")
    return 0.5 * np.diag(cir.signal) + cov


def _cholesky(b):
    try:
        return cho_factor(b, lower=True)
    except LinAlgError as exc:
        raise IllConditionedError("0.5*diag(c_s) + C_i is not positive definite") from exc


def matched_filter(cir: Cir, cov: np.ndarray) -> Filter:
    """SINR-optimal filter B^-1 c_s, via a Cholesky solve."""
    b = noise_plus_interference(cir, cov)
    w = cho_solve(_cholesky(b), cir.signal)
    return Filter(w, "matched")


def sum_filter(m_samples: int) -> Filter:
    if m_samples < 1:
        raise ValueError("m_samples must be >= 1")
    return Filter(np.ones(m_samples), "sum")


def correlator_filter(cir: Cir) -> Filter:
    if not np.any(cir.signal > 0):
        raise ValueError("correlator needs at least one positive signal sample")
    return Filter(cir.signal.copy(), "correlator")


def peak_filter(cir: Cir) -> Filter:
    """Single sample at the largest signal count; ties go to the earliest sample."""
    w = np.zeros(cir.m_samples)
    w[int(np.argmax(cir.signal))] = 1.0
    return Filter(w, "peak")


def make_filter(label: str, cir: Cir, cov: np.ndarray) -> Filter:
    if label == "matched":
        return matched_filter(cir, cov)
    if label == "sum":
        return sum_filter(cir.m_samples)
    if label == "correlator":
        return correlator_filter(cir)
    if label == "peak":
        return peak_filter(cir)
    raise ValueError(f"cannot build a filter of type {label!r}")


def _weights(f):
    return f.weights if isinstance(f, Filter) else np.asarray(f, dtype=float)


def sinr(f, cir: Cir, cov: np.ndarray) -> float:
    """Expected signal power over noise-plus-interference power at the filter output."""
    w = _weights(f)
    den = w @ noise_plus_interference(cir, cov) @ w
    if not den > 0:
        raise ZeroDivisionError("filter output has zero noise-plus-interference variance")
    return 0.5 * (w @ cir.signal) ** 2 / den


def optimal_sinr(cir: Cir, cov: np.ndarray) -> float:
    b = noise_plus_interference(cir, cov)
    if not np.any(cir.signal):
        return 0.0
    return 0.5 * cir.signal @ cho_solve(_cholesky(b), cir.signal)


def rayleigh_quotient_oracle(cir: Cir, cov: np.ndarray, tol=1e-12, max_iter=10_000):
    """Top eigenpair of B^-1 c_s c_s^T by power iteration.

    Independent of :func:`matched_filter`: forms B^-1 with a generic inverse
    and never solves the normal equations directly. Returns
    ``(Filter, 0.5 * kappa_max)``.
    """
    b = noise_plus_interference(cir, cov)
    cs = cir.signal
    d = np.linalg.inv(b) @ np.outer(cs, cs)
    m = d.shape[0]

    starts = [np.ones(m), np.random.default_rng(0x5EED).standard_normal(m)]
    for v in starts:
        v = v / np.linalg.norm(v)
        kappa = 0.0
        for _ in range(max_iter):
            w = d @ v
            nrm = np.linalg.norm(w)
            if nrm == 0:
                break  # start vector orthogonal to the range; try the next one
            w /= nrm
            # keep a consistent sign so the convergence test is meaningful
            if w @ v < 0:
                w = -w
            kappa_new = v @ d @ v / (v @ v)
            if np.linalg.norm(w - v) <= tol and abs(kappa_new - kappa) <= tol * abs(kappa_new):
                v, kappa = w, w @ d @ w
                # orient so that the filter has positive gain on the signal
                if v @ cs < 0:
                    v = -v
                return Filter(v, "custom"), 0.5 * kappa
            v, kappa = w, kappa_new
    raise RuntimeError("power iteration did not converge")

"""Probability primitives and the exact interference covariance."""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.special import erfc, gammaln

from molfilter.channel import Cir

MAX_ENUM_BITS = 24


def make_stream(seed: int, index: int = 0) -> np.random.Generator:
    """Random stream keyed by a 64-bit seed and a 64-bit stream index.

    The same (seed, index) pair always reproduces the same draws.
    """
    if not (0 <= seed < 2**64 and 0 <= index < 2**64):
        raise ValueError("seed and index must be unsigned 64-bit integers")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def _check_rate(lam):
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)) or np.any(lam < 0):
        raise ValueError("Poisson mean must be finite and >= 0")
    return lam


def sample_poisson(lam: float, rng: np.random.Generator) -> int:
    """One exact Poisson(lam) draw from ``rng``."""
    lam = _check_rate(lam)
    return int(rng.poisson(float(lam)))


def poisson_counts(means, rng: np.random.Generator) -> np.ndarray:
    """Independent Poisson draws, one per entry of ``means``."""
    return rng.poisson(_check_rate(means))


def shifted_poisson_pmf(lam: float, x) -> float:
    """PMF of a Poisson(lam) variable with its mean subtracted.

    Support is {j - lam : j = 0, 1, 2, ...}; any other ``x`` has probability 0.
    """
    if lam < 0:
        return 0.0
    j = x + lam
    jr = round(j)
    if jr < 0 or abs(j - jr) > 1e-9 * max(1.0, abs(j)):
        return 0.0
    if lam == 0:
        return 1.0 if jr == 0 else 0.0
    return math.exp(jr * math.log(lam) - lam - gammaln(jr + 1))


def q_function(x):
    """Standard normal upper-tail probability."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def isi_patterns(l_taps: int) -> np.ndarray:
    """All 2^(L-1) ISI patterns, shape (2^(L-1), L-1).

    Column j holds the symbol sent j+1 intervals ago.
    """
    n = l_taps - 1
    if n < 0:
        raise ValueError("l_taps must be >= 1")
    if n > MAX_ENUM_BITS:
        raise ValueError(f"L-1 = {n} exceeds the enumeration limit of {MAX_ENUM_BITS}")
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=float).reshape(2**n, n)


def interference_mean(cir: Cir, s, c_ext: float) -> np.ndarray:
    """Mean interference count per sample given the previous L-1 symbols."""
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.size != cir.l_taps - 1:
        raise ValueError(f"pattern length {s.size} does not match L-1 = {cir.l_taps - 1}")
    return c_ext + s @ cir.isi


def interference_means(cir: Cir, c_ext: float) -> np.ndarray:
    """Interference means for every pattern of :func:`isi_patterns`, shape (P, M)."""
    return c_ext + isi_patterns(cir.l_taps) @ cir.isi


def interference_covariance(cir: Cir, c_ext: float) -> np.ndarray:
    """Covariance of the raw interference counts over equiprobable ISI patterns.

    Poisson variance enters the diagonal; the spread of the conditional means
    across patterns enters every entry.
    """
    means = interference_means(cir, c_ext)
    n = means.shape[0]
    avg = means.mean(axis=0)
    cov = means.T @ means / n - np.outer(avg, avg)
    cov[np.diag_indices_from(cov)] += avg
    return 0.5 * (cov + cov.T)

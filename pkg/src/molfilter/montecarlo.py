"""Poisson symbol-stream simulation and empirical BER / SINR estimation."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from molfilter.channel import Cir
from molfilter.detection import DetectorSpec
from molfilter.stats import make_stream, poisson_counts

BLOCK_SIZE = 10_000
SINR_BATCHES = 20
_CHUNK = 4096


@dataclass(frozen=True)
class SimConfig:
    trials: int = 100_000
    warmup: int = 2
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def check(self, cir: Cir):
        if self.warmup < cir.l_taps - 1:
            raise ValueError(f"warmup must be >= L-1 = {cir.l_taps - 1}, got {self.warmup}")


@dataclass(frozen=True)
class SimResult:
    empirical_ber: float
    ber_halfwidth: float
    empirical_sinr: float
    sinr_halfwidth: float
    trials_run: int
    errors: int


def _observe(cir: Cir, c_ext: float, bits: np.ndarray, history: np.ndarray, rng) -> np.ndarray:
    """Poisson counts for ``bits`` given the ``L-1`` symbols sent before them."""
    L = cir.l_taps
    padded = np.concatenate([history, bits])
    n = bits.size
    means = np.full((n, cir.m_samples), float(c_ext))
    for l in range(L):
        means += np.outer(padded[L - 1 - l : L - 1 - l + n], cir.taps[l])
    return poisson_counts(means, rng)


def simulate_block(cir: Cir, c_ext: float, n: int, warmup: int, rng):
    """Simulate ``warmup + n`` symbols from an all-zero history.

    Returns ``(bits, observations)`` for the last ``n`` symbols only.
    """
    bits = rng.integers(0, 2, size=warmup + n).astype(np.int8)
    obs = _observe(cir, c_ext, bits, np.zeros(cir.l_taps - 1, dtype=np.int8), rng)
    return bits[warmup:], obs[warmup:]


def simulate_symbol_stream(cir: Cir, c_ext: float, config: SimConfig, rng):
    """Lazily yield ``(bit, r, is_warmup)`` for ``config.warmup + config.trials`` symbols.

    Symbols are i.i.d. equiprobable; everything before the stream is zero.
    """
    config.check(cir)
    total = config.warmup + config.trials
    history = np.zeros(cir.l_taps - 1, dtype=np.int8)
    k = 0
    while k < total:
        n = min(_CHUNK, total - k)
        bits = rng.integers(0, 2, size=n).astype(np.int8)
        obs = _observe(cir, c_ext, bits, history, rng)
        if history.size:
            history = np.concatenate([history, bits])[-history.size :]
        for bit, r in zip(bits, obs):
            yield int(bit), r, k < config.warmup
            k += 1


def _blocks(trials: int):
    n_full, rest = divmod(trials, BLOCK_SIZE)
    return [BLOCK_SIZE] * n_full + ([rest] if rest else [])


def _run_block(args):
    cir, c_ext, weights, gains, thresholds, n, warmup, seed, index = args
    bits, obs = simulate_block(cir, c_ext, n, warmup, make_stream(seed, index))
    y = obs @ weights.T  # (n, F)
    decided = y >= thresholds
    errors = np.count_nonzero(decided != bits[:, None].astype(bool), axis=0)
    z = y - bits[:, None] * gains
    return errors, z


def _batch_halfwidth(z: np.ndarray, gain: float) -> float:
    nb = min(SINR_BATCHES, z.size // 2)
    if nb < 2:
        return math.inf
    batches = np.array_split(z, nb)
    est = np.array([0.5 * gain**2 / b.var(ddof=1) if b.var(ddof=1) > 0 else math.inf for b in batches])
    if not np.all(np.isfinite(est)):
        return math.inf
    return float(sps.t.ppf(0.975, nb - 1) * est.std(ddof=1) / math.sqrt(nb))


def run_trials_multi(cir: Cir, c_ext: float, specs, config: SimConfig) -> list[SimResult]:
    """Run several detectors on one shared set of simulated symbols.

    Trials are split into fixed blocks; block ``b`` always draws from stream
    ``(config.seed, b)``, so results do not depend on ``config.workers``.
    """
    config.check(cir)
    specs = list(specs)
    weights = np.array([s.filter.weights for s in specs])
    gains = weights @ cir.signal
    thresholds = np.array([s.threshold for s in specs])
    jobs = [
        (cir, c_ext, weights, gains, thresholds, n, config.warmup, config.seed, b)
        for b, n in enumerate(_blocks(config.trials))
    ]
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(j) for j in jobs]

    errors = np.sum([p[0] for p in parts], axis=0)
    z = np.concatenate([p[1] for p in parts], axis=0)
    n = config.trials
    zcrit = sps.norm.ppf(0.975)
    results = []
    for i in range(len(specs)):
        p = errors[i] / n
        v = z[:, i].var(ddof=1) if n > 1 else 0.0
        sinr = 0.5 * gains[i] ** 2 / v if v > 0 else math.inf
        results.append(
            SimResult(
                empirical_ber=float(p),
                ber_halfwidth=float(zcrit * math.sqrt(p * (1 - p) / n)),
                empirical_sinr=float(sinr),
                sinr_halfwidth=_batch_halfwidth(z[:, i], gains[i]),
                trials_run=n,
                errors=int(errors[i]),
            )
        )
    return results


def run_trials(cir: Cir, c_ext: float, spec: DetectorSpec, config: SimConfig) -> SimResult:
    """Empirical BER and SINR of one detector over ``config.trials`` symbols.

    The SINR estimate is 0.5 (f^T c_s)^2 / Var(f^T r - s f^T c_s), whose
    denominator has the analytical noise-plus-interference power as its mean.
    """
    return run_trials_multi(cir, c_ext, [spec], config)[0]

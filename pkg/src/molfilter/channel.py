"""Expected-count channel model for a transparent receiver in a flowing,
degrading, unbounded 3-D medium, and the multi-tap CIR built from it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from molfilter._optim import golden_section_max

# Unit conversions
NM_TO_M = 1e-9
PER_UM3_TO_PER_M3 = 1e18

# Reference time quoted for the default parameters; kept only as a cross-check.
PUBLISHED_T_REF = 0.176e-3


@dataclass(frozen=True)
class ChannelParams:
    """Physical parameters of the diffusive link.

    ``k_deg`` is the effective first-order degradation rate in s^-1, i.e. the
    product of the reaction rate and the enzyme concentration. Use
    :meth:`from_table` to build it from the two separate quantities.
    """

    n_tx: float
    v_rx: float
    d: float
    diff_coeff: float
    k_deg: float = 0.0
    v_par: float = 0.0
    v_perp: float = 0.0
    c_ext: float = 0.0

    def __post_init__(self):
        if not self.n_tx >= 0:
            raise ValueError(f"n_tx must be >= 0, got {self.n_tx}")
        if not self.v_rx > 0:
            raise ValueError(f"v_rx must be > 0, got {self.v_rx}")
        if not self.d > 0:
            raise ValueError(f"d must be > 0, got {self.d}")
        if not self.diff_coeff > 0:
            raise ValueError(f"diff_coeff must be > 0, got {self.diff_coeff}")
        if not self.k_deg >= 0:
            raise ValueError(f"k_deg (kappa * enzyme_conc) must be >= 0, got {self.k_deg}")
        if not self.c_ext >= 0:
            raise ValueError(f"c_ext must be >= 0, got {self.c_ext}")

    @classmethod
    def from_table(
        cls,
        n_tx: float,
        v_rx: float,
        d: float,
        diff_coeff: float,
        enzyme_conc: float,
        kappa: float,
        v_par: float = 0.0,
        v_perp: float = 0.0,
        c_ext: float = 0.0,
    ) -> "ChannelParams":
        """Build from a reaction rate and an enzyme concentration.

        ``enzyme_conc`` is given in molecule/um^3 and converted to molecule/m^3
        before multiplying with ``kappa``.
        """
        k_deg = kappa * enzyme_conc * PER_UM3_TO_PER_M3
        return cls(n_tx, v_rx, d, diff_coeff, k_deg, v_par, v_perp, c_ext)

    @classmethod
    def default(cls, n_tx: float = 1000.0, c_ext: float = 2.0) -> "ChannelParams":
        """Default link: 50 nm receiver radius, 500 nm distance, uniform flow."""
        return cls.from_table(
            n_tx=n_tx,
            v_rx=4.0 / 3.0 * math.pi * (50 * NM_TO_M) ** 3,
            d=500e-9,
            diff_coeff=4.3e-10,
            enzyme_conc=1e5,
            kappa=2e-19,
            v_par=1e-3,
            v_perp=1e-3,
            c_ext=c_ext,
        )

    def with_n_tx(self, n_tx: float) -> "ChannelParams":
        return replace(self, n_tx=n_tx)


@dataclass(frozen=True)
class TimingConfig:
    """Sampling layout of one symbol interval, in units of the reference time."""

    m_samples: int = 6
    l_taps: int = 3
    dt_norm: float = 0.25
    t_symb_norm: float = 1.5

    def __post_init__(self):
        if int(self.m_samples) != self.m_samples or self.m_samples < 1:
            raise ValueError(f"m_samples must be a positive integer, got {self.m_samples}")
        if int(self.l_taps) != self.l_taps or self.l_taps < 1:
            raise ValueError(f"l_taps must be a positive integer (l_taps >= 1), got {self.l_taps}")
        if not self.dt_norm > 0:
            raise ValueError(f"dt_norm must be > 0, got {self.dt_norm}")
        # small slack so that e.g. 6 * 0.25 <= 1.5 holds in floating point
        if self.m_samples * self.dt_norm > self.t_symb_norm * (1 + 1e-12):
            raise ValueError(
                "m_samples * dt_norm <= t_symb_norm violated: "
                f"{self.m_samples} * {self.dt_norm} > {self.t_symb_norm}"
            )


@dataclass(frozen=True)
class Cir:
    """L x M matrix of expected counts; row 0 is the desired-signal vector."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.array(self.taps, dtype=float, ndmin=2)
        if taps.ndim != 2 or taps.size == 0:
            raise ValueError("taps must be a non-empty L x M matrix")
        if not np.all(np.isfinite(taps)) or np.any(taps < 0):
            raise ValueError("taps must be finite and non-negative")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def signal(self) -> np.ndarray:
        return self.taps[0]

    @property
    def isi(self) -> np.ndarray:
        return self.taps[1:]

    @property
    def l_taps(self) -> int:
        return self.taps.shape[0]

    @property
    def m_samples(self) -> int:
        return self.taps.shape[1]


def expected_concentration(t, p: ChannelParams):
    """Expected number of molecules inside the receiver ``t`` seconds after
    a release of ``p.n_tx`` molecules. Zero for ``t <= 0``.

    Accepts scalars or arrays.
    """
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros_like(t_arr)
    pos = t_arr > 0
    tp = t_arr[pos]
    four_dt = 4.0 * p.diff_coeff * tp
    expo = -p.k_deg * tp - ((p.d - p.v_par * tp) ** 2 + (p.v_perp * tp) ** 2) / four_dt
    out[pos] = p.n_tx * p.v_rx / (math.pi * four_dt) ** 1.5 * np.exp(expo)
    if out.ndim == 0:
        return float(out)
    return out


def _log_shape(t: float, p: ChannelParams) -> float:
    """log of the concentration curve without its constant prefactor."""
    return -1.5 * math.log(t) - p.k_deg * t - ((p.d - p.v_par * t) ** 2 + (p.v_perp * t) ** 2) / (
        4.0 * p.diff_coeff * t
    )


def reference_time(p: ChannelParams) -> float:
    """Time (s) at which :func:`expected_concentration` peaks.

    Independent of ``n_tx`` and ``v_rx``; the search runs on the log of the
    unscaled curve.
    """
    hi = 10.0 * p.d**2 / (6.0 * p.diff_coeff)
    lo = 1e-9
    t_grid = np.geomspace(lo, hi, 2001)
    vals = expected_concentration(t_grid, replace(p, n_tx=1.0))
    if not np.any(vals > 0):
        raise ValueError("expected concentration is identically zero on the search bracket")
    i = int(np.argmax(vals))
    a = t_grid[max(i - 1, 0)]
    b = t_grid[min(i + 1, len(t_grid) - 1)]
    return float(golden_section_max(lambda t: _log_shape(t, p), a, b, rtol=1e-9))


def sample_times(tc: TimingConfig, t_ref: float) -> np.ndarray:
    """Absolute sampling instants, shape (L, M): release l-1 symbols back."""
    m = np.arange(1, tc.m_samples + 1)
    l = np.arange(tc.l_taps)[:, None]
    return (l * tc.t_symb_norm + m * tc.dt_norm) * t_ref


def build_cir(p: ChannelParams, tc: TimingConfig, t_ref: float | None = None) -> Cir:
    """Sample the concentration curve on the symbol grid for every tap.

    ``t_ref`` defaults to :func:`reference_time` of ``p``.
    """
    if t_ref is None:
        t_ref = reference_time(p)
    return Cir(expected_concentration(sample_times(tc, t_ref), p))

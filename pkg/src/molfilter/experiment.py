"""N^tx sweeps over all filters, written out as CSV tables plus a manifest."""
from __future__ import annotations

import csv
import json
import logging
import platform
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import scipy

from molfilter import __version__
from molfilter.channel import PUBLISHED_T_REF, ChannelParams, TimingConfig, build_cir, reference_time
from molfilter.detection import DetectorSpec, analytical_ber, optimize_threshold
from molfilter.filters import make_filter, sinr
from molfilter.montecarlo import SimConfig, run_trials_multi
from molfilter.stats import interference_covariance

log = logging.getLogger(__name__)

FILTER_NAMES = ("matched", "sum", "correlator", "peak")
SINR_COLUMNS = ("n_tx", "filter", "sinr_analytical", "sinr_empirical", "sinr_halfwidth")
BER_COLUMNS = ("n_tx", "filter", "threshold", "ber_analytical", "ber_empirical", "ber_halfwidth")
TAP_COLUMNS = ("n_tx", "tap_index", "weight")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    # channel (n_tx is only used by the single-point commands)
    n_tx: float = 1e4
    v_rx: float = ChannelParams.default().v_rx
    d: float = 500e-9
    diff_coeff: float = 4.3e-10
    enzyme_conc: float = 1e5
    kappa: float = 2e-19
    v_par: float = 1e-3
    v_perp: float = 1e-3
    c_ext: float = 2.0
    # timing
    m_samples: int = 6
    l_taps: int = 3
    dt_norm: float = 0.25
    t_symb_norm: tuple[float, ...] = (1.5, 3.0)
    # sweep
    n_tx_min: float = 1e2
    n_tx_max: float = 1e5
    n_tx_points: int = 13
    filters: tuple[str, ...] = FILTER_NAMES
    trials: int = 100_000
    warmup: int | None = None
    seed: int = 1
    workers: int = 1
    out_dir: str = "results"

    def __post_init__(self):
        if not self.t_symb_norm:
            raise ConfigError("t_symb_norm must list at least one value")
        bad = [f for f in self.filters if f not in FILTER_NAMES]
        if bad or not self.filters:
            raise ConfigError(f"filters must be a non-empty subset of {FILTER_NAMES}, got {self.filters}")
        if self.n_tx_points < 1:
            raise ConfigError("n_tx_points must be >= 1 (sweep grid nonempty)")
        if self.n_tx_points > 1 and not 0 < self.n_tx_min < self.n_tx_max:
            raise ConfigError("sweep grid must be strictly increasing: need 0 < n_tx_min < n_tx_max")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.warmup is not None and self.warmup < self.l_taps - 1:
            raise ConfigError(f"warmup must be >= L-1 = {self.l_taps - 1}")
        try:
            self.channel()
            for t in self.t_symb_norm:
                self.timing(t)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def channel(self, n_tx: float | None = None) -> ChannelParams:
        return ChannelParams.from_table(
            n_tx=self.n_tx if n_tx is None else n_tx,
            v_rx=self.v_rx,
            d=self.d,
            diff_coeff=self.diff_coeff,
            enzyme_conc=self.enzyme_conc,
            kappa=self.kappa,
            v_par=self.v_par,
            v_perp=self.v_perp,
            c_ext=self.c_ext,
        )

    def timing(self, t_symb_norm: float | None = None) -> TimingConfig:
        t = self.t_symb_norm[0] if t_symb_norm is None else t_symb_norm
        return TimingConfig(self.m_samples, self.l_taps, self.dt_norm, t)

    def grid(self) -> np.ndarray:
        if self.n_tx_points == 1:
            return np.array([float(self.n_tx_min)])
        return np.geomspace(self.n_tx_min, self.n_tx_max, self.n_tx_points)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    if kind in ("int", "int | None"):
        try:
            return int(raw)
        except ValueError:
            x = float(raw)  # allow 1e5-style integers
            if not x.is_integer():
                raise ValueError(f"{raw!r} is not an integer") from None
            return int(x)
    if kind == "float":
        return float(raw)
    if kind == "str":
        return raw
    if kind == "tuple[float, ...]":
        return tuple(float(v) for v in raw.split(",") if v.strip())
    if kind == "tuple[str, ...]":
        return tuple(v.strip() for v in raw.split(",") if v.strip())
    raise AssertionError(kind)


def parse_config(path) -> ExperimentConfig:
    """Read ``key = value`` lines; ``#`` starts a comment. Missing keys keep defaults."""
    path = Path(path)
    values = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if not sep or not key or not raw:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            try:
                values[key] = _convert(key, raw)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def _write_csv(path: Path, header, rows):
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def point_seed(seed: int, t_index: int, n_index: int) -> int:
    """64-bit seed for one (symbol duration, N^tx) sweep point."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(t_index, n_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sweep_point(cfg: ExperimentConfig, timing: TimingConfig, t_ref: float, n_tx: float, sim: SimConfig):
    """Analytical and empirical results of every configured filter at one N^tx."""
    p = cfg.channel(n_tx)
    cir = build_cir(p, timing, t_ref)
    cov = interference_covariance(cir, p.c_ext)
    flt = {name: make_filter(name, cir, cov) for name in cfg.filters}
    specs = [DetectorSpec(f, optimize_threshold(f, cir, p.c_ext)) for f in flt.values()]
    empirical = run_trials_multi(cir, p.c_ext, specs, sim)
    out = []
    for (name, f), spec, res in zip(flt.items(), specs, empirical):
        out.append(
            {
                "filter": name,
                "weights": f.weights,
                "sinr": sinr(f, cir, cov),
                "threshold": spec.threshold,
                "ber": analytical_ber(f, cir, p.c_ext, spec.threshold),
                "sim": res,
            }
        )
    return cir, out


def run_sweep(cfg: ExperimentConfig, out_dir=None) -> list[Path]:
    """Write sinr.csv, ber.csv, filter_taps.csv and manifest.json per symbol duration."""
    root = Path(out_dir if out_dir is not None else cfg.out_dir)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {root}: {exc}") from exc

    base = cfg.channel()
    t_ref = reference_time(base)
    grid = cfg.grid()
    warmup = cfg.l_taps - 1 if cfg.warmup is None else cfg.warmup
    written = []
    for ti, t_symb in enumerate(cfg.t_symb_norm):
        timing = cfg.timing(t_symb)
        sinr_rows, ber_rows, tap_rows, seeds = [], [], [], []
        for ni, n_tx in enumerate(grid):
            sim = SimConfig(cfg.trials, warmup, point_seed(cfg.seed, ti, ni), cfg.workers)
            seeds.append(sim.seed)
            log.info("t_symb=%g n_tx=%.6g", t_symb, n_tx)
            _, results = sweep_point(cfg, timing, t_ref, n_tx, sim)
            for r in results:
                s = r["sim"]
                sinr_rows.append((n_tx, r["filter"], r["sinr"], s.empirical_sinr, s.sinr_halfwidth))
                ber_rows.append((n_tx, r["filter"], r["threshold"], r["ber"], s.empirical_ber, s.ber_halfwidth))
                if r["filter"] == "matched":
                    tap_rows.extend((n_tx, m + 1, w) for m, w in enumerate(r["weights"]))

        sub = root / f"tsymb_{t_symb:g}"
        sub.mkdir(parents=True, exist_ok=True)
        _write_csv(sub / "sinr.csv", SINR_COLUMNS, sinr_rows)
        _write_csv(sub / "ber.csv", BER_COLUMNS, ber_rows)
        _write_csv(sub / "filter_taps.csv", TAP_COLUMNS, tap_rows)
        manifest = {
            "config": {**asdict(cfg), "t_symb_norm": t_symb, "warmup": warmup},
            "k_deg_per_s": base.k_deg,
            "t_ref_s": t_ref,
            "t_ref_published_s": PUBLISHED_T_REF,
            "n_tx_grid": [float(n) for n in grid],
            "seed": cfg.seed,
            "point_seeds": seeds,
            "versions": {
                "molfilter": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
        }
        (sub / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written += [sub / n for n in ("sinr.csv", "ber.csv", "filter_taps.csv", "manifest.json")]
    return written

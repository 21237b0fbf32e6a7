import csv
import json

import numpy as np
import pytest

from molfilter import cli
from molfilter.channel import ChannelParams, TimingConfig, build_cir, reference_time
from molfilter.experiment import (
    BER_COLUMNS,
    SINR_COLUMNS,
    TAP_COLUMNS,
    ConfigError,
    ExperimentConfig,
    parse_config,
    run_sweep,
)
from molfilter.filters import matched_filter, sinr, sum_filter
from molfilter.stats import interference_covariance


@pytest.fixture
def cfg_file(tmp_path):
    def _write(text):
        p = tmp_path / "exp.cfg"
        p.write_text(text)
        return p

    return _write


def small_config(**kw):
    base = dict(n_tx_min=1e3, n_tx_max=1e5, n_tx_points=3, trials=3000)
    return ExperimentConfig(**{**base, **kw})


def test_empty_file_gives_defaults(cfg_file):
    cfg = parse_config(cfg_file("# nothing here\n\n"))
    assert cfg == ExperimentConfig()
    assert (cfg.m_samples, cfg.l_taps, cfg.dt_norm, cfg.c_ext) == (6, 3, 0.25, 2.0)
    assert cfg.t_symb_norm[0] == 1.5
    assert cfg.channel().k_deg == pytest.approx(ChannelParams.default().k_deg)
    assert cfg.n_tx_points == 13 and cfg.grid()[0] == 1e2 and cfg.grid()[-1] == pytest.approx(1e5)


def test_override_and_comments(cfg_file):
    cfg = parse_config(cfg_file("t_symb_norm = 3   # longer symbols\nseed = 18446744073709551615\ntrials=1e4\n"))
    assert cfg.t_symb_norm == (3.0,)
    assert cfg.seed == 2**64 - 1
    assert cfg.trials == 10_000


def test_list_values(cfg_file):
    cfg = parse_config(cfg_file("t_symb_norm = 1.5, 3\nfilters = matched, peak\n"))
    assert cfg.t_symb_norm == (1.5, 3.0)
    assert cfg.filters == ("matched", "peak")


def test_invalid_l_taps_names_invariant(cfg_file):
    with pytest.raises(ConfigError, match="l_taps >= 1"):
        parse_config(cfg_file("l_taps = 0\n"))


@pytest.mark.parametrize(
    "text, match",
    [
        ("bogus = 1\n", ":1: unknown key 'bogus'"),
        ("\nm_samples\n", ":2: expected 'key = value'"),
        ("m_samples = six\n", ":1: bad value for 'm_samples'"),
        ("seed = 1\nseed = 2\n", ":2: duplicate key"),
        ("filters = matched, wiener\n", "subset"),
        ("n_tx_min = 10\nn_tx_max = 5\n", "strictly increasing"),
        ("m_samples = 7\n", "m_samples \\* dt_norm <= t_symb_norm"),
        ("warmup = 1\n", "warmup must be >= L-1"),
        ("d = -1\n", "d must be > 0"),
    ],
)
def test_config_errors(cfg_file, text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(cfg_file(text))


def test_sweep_file_contract(tmp_path):
    cfg = small_config()
    written = run_sweep(cfg, tmp_path)
    assert len(written) == 2 * 4
    for sub in ("tsymb_1.5", "tsymb_3"):
        d = tmp_path / sub
        with (d / "sinr.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == SINR_COLUMNS
        assert len(rows) == 1 + 3 * 4
        with (d / "ber.csv").open() as fh:
            assert tuple(next(csv.reader(fh))) == BER_COLUMNS
        with (d / "filter_taps.csv").open() as fh:
            taps = list(csv.reader(fh))
        assert tuple(taps[0]) == TAP_COLUMNS
        assert len(taps) == 1 + 3 * 6
        assert [int(r[1]) for r in taps[1:7]] == [1, 2, 3, 4, 5, 6]
        raw = (d / "sinr.csv").read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")


def test_manifest_reproduces_analytical_values(tmp_path):
    run_sweep(small_config(filters=("matched", "sum")), tmp_path)
    d = tmp_path / "tsymb_1.5"
    man = json.loads((d / "manifest.json").read_text())
    c = man["config"]
    assert man["t_ref_published_s"] == 0.176e-3
    assert 0.03e-3 <= man["t_ref_s"] <= 0.4e-3
    tc = TimingConfig(c["m_samples"], c["l_taps"], c["dt_norm"], c["t_symb_norm"])
    with (d / "sinr.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        p = ChannelParams.from_table(
            float(row["n_tx"]), c["v_rx"], c["d"], c["diff_coeff"], c["enzyme_conc"], c["kappa"],
            c["v_par"], c["v_perp"], c["c_ext"],
        )
        cir = build_cir(p, tc, man["t_ref_s"])
        cov = interference_covariance(cir, p.c_ext)
        f = matched_filter(cir, cov) if row["filter"] == "matched" else sum_filter(tc.m_samples)
        assert float(row["sinr_analytical"]) == sinr(f, cir, cov)


def test_sweep_is_byte_reproducible(tmp_path):
    cfg = small_config(trials=25_000)
    a, b = tmp_path / "a", tmp_path / "b"
    run_sweep(cfg, a)
    run_sweep(small_config(trials=25_000, workers=4), b)
    for sub in ("tsymb_1.5", "tsymb_3"):
        for name in ("sinr.csv", "ber.csv", "filter_taps.csv"):
            assert (a / sub / name).read_bytes() == (b / sub / name).read_bytes()


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        run_sweep(small_config(), blocker / "out")


def test_cli_tref_and_cir(cfg_file, capsys):
    path = cfg_file("n_tx = 1000\n")
    assert cli.main(["tref", "--config", str(path)]) == 0
    t = float(capsys.readouterr().out)
    assert t == reference_time(ChannelParams.default())
    assert cli.main(["cir", "--config", str(path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    got = np.array([[float(v) for v in ln.split(",")] for ln in lines])
    expected = build_cir(ChannelParams.default(1000.0), TimingConfig()).taps
    np.testing.assert_array_equal(got, expected)


def test_cli_run_overrides(cfg_file, tmp_path, capsys):
    path = cfg_file("n_tx_points = 2\nn_tx_min = 1000\nn_tx_max = 10000\nt_symb_norm = 3\n")
    out = tmp_path / "res"
    code = cli.main(["run", "--config", str(path), "--out", str(out), "--trials", "500", "--seed", "9",
                     "--filters", "sum,peak"])
    assert code == 0
    man = json.loads((out / "tsymb_3" / "manifest.json").read_text())
    assert man["seed"] == 9 and man["config"]["trials"] == 500
    with (out / "tsymb_3" / "sinr.csv").open() as fh:
        assert {r["filter"] for r in csv.DictReader(fh)} == {"sum", "peak"}
    # matched filter not requested -> header only
    assert (out / "tsymb_3" / "filter_taps.csv").read_text() == ",".join(TAP_COLUMNS) + "\n"


def test_cli_reports_config_errors(cfg_file, capsys):
    code = cli.main(["tref", "--config", str(cfg_file("l_taps = 0\n"))])
    assert code == 2
    assert "l_taps >= 1" in capsys.readouterr().err

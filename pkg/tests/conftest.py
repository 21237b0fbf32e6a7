import numpy as np
import pytest

from molfilter import ChannelParams, TimingConfig, build_cir

_REPORT = []


@pytest.fixture
def report():
    """Record a one-line acceptance verdict, printed in the terminal summary."""

    def _add(name, ok, detail=""):
        _REPORT.append((name, bool(ok), detail))
        return ok

    return _add


def pytest_terminal_summary(terminalreporter):
    if not _REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _REPORT:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


@pytest.fixture(scope="session")
def table_channel():
    return ChannelParams.default(n_tx=1000.0, c_ext=2.0)


@pytest.fixture(scope="session")
def default_cir(table_channel):
    return build_cir(table_channel, TimingConfig(6, 3, 0.25, 1.5))


def random_cir(rng, m_max=8, l_max=3, scale=20.0):
    from molfilter import Cir

    m = int(rng.integers(1, m_max + 1))
    l = int(rng.integers(1, l_max + 1))
    return Cir(rng.uniform(0.01, 1.0, size=(l, m)) * scale * rng.uniform(0.05, 1.0))

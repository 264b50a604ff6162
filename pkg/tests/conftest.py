import numpy as np
import pytest

from formbound.drift import DriftSpec, make_drift
from formbound.spectral import TorusGrid

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def grid8():
    return TorusGrid(3, 8)


@pytest.fixture(scope="session")
def grid16():
    return TorusGrid(3, 16)


@pytest.fixture(scope="session")
def grid32():
    return TorusGrid(3, 32)


@pytest.fixture(scope="session")
def hardy16(grid16):
    return make_drift(grid16, DriftSpec("hardy", c=0.2, cutoff=3.0, eps=0.01, name="hardy"))


@pytest.fixture(scope="session")
def smooth16(grid16):
    return make_drift(grid16, DriftSpec("smooth-trig", name="smooth"))


@pytest.fixture(scope="session")
def smooth8(grid8):
    return make_drift(grid8, DriftSpec("smooth-trig", name="smooth"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def small_config(drifts=None, **kw):
    """Default config shrunk to a 16^3 grid so that whole suites run in seconds."""
    from formbound.config import default_config

    cfg = default_config(**kw)
    cfg.grid.n = 16
    cfg.scaling.n = 8
    cfg.regularity.holder_n = 32
    cfg.regularity.holder_samples = 2
    cfg.regularity.smoothing_n = [8, 12, 16]
    cfg.resolvent.dense_n = 4
    cfg.resolvent.contraction_probes = 4
    cfg.semigroup.steps = 8
    cfg.semigroup.samples = 2
    cfg.trotter.steps = 8
    if drifts is not None:
        cfg.drift = drifts
    return cfg.validate()


def zero_config(**kw):
    return small_config([DriftSpec("zero", name="zero")], **kw)

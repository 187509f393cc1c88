import numpy as np
import pytest

from hubocsp import systems
from hubocsp.hubo import build_hubo
from hubocsp.potentials import load_model


@pytest.fixture(scope="session")
def kr_model():
    return load_model("kr_lj")


@pytest.fixture(scope="session")
def sw_model():
    return load_model("mos2_sw")


@pytest.fixture(scope="session")
def kr_poly_g2(kr_model):
    return build_hubo(systems.kr_grid(2), systems.kr_cell(), kr_model)


@pytest.fixture(scope="session")
def kr_poly_g3(kr_model):
    return build_hubo(systems.kr_grid(3), systems.kr_cell(), kr_model)


@pytest.fixture(scope="session")
def mos2_poly_g2(sw_model):
    return build_hubo(systems.mos2_grid(2), systems.mos2_cell(), sw_model)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def all_bitstrings(n):
    return ((np.arange(2**n)[:, None] >> np.arange(n)[::-1]) & 1).astype(np.int8)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)

import numpy as np
import pytest

from fracchoquard.config import STANDARD_CONFIG, parse_config
from fracchoquard.grid import make_grid
from fracchoquard.model import PotentialSpec, RegionSpec, make_config


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def standard_exp():
    return parse_config(STANDARD_CONFIG, "<standard>")


def small_model(eps=0.5, n=64, L=12.0, wells=((-2.0,), (2.0,))):
    pot = PotentialSpec("product_well", 1.0, 2.0, 1.0, wells)
    return make_config(dim=1, s=0.4, mu=0.5, q=3.0, eps=eps, potential=pot,
                       lambda_region=RegionSpec("box", (0.0,), (4.0,)), grid=make_grid(1, L, n))


@pytest.fixture
def model64():
    return small_model()


# acceptance criteria append (name, passed, detail) here; printed after the run
CRITERIA: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")

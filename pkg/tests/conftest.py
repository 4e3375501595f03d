import json
from pathlib import Path

import pytest

from singular_harvest import ArithmeticBM, DiffusionSpec, Logistic, PowerHalf, PriceSpec, Problem

HERE = Path(__file__).resolve().parent
ROOT = HERE.parent
GOLDEN = HERE / "golden"
CONFIGS = ROOT / "configs"


@pytest.fixture(scope="session")
def oracle():
    return json.loads((GOLDEN / "oracle_values.json").read_text())


def bm_problem(mus, sigmas, rho, thetas, extinction=None):
    dyn = DiffusionSpec([ArithmeticBM(m, s) for m, s in zip(mus, sigmas)])
    return Problem(dyn, PriceSpec(rho, [PowerHalf(t) for t in thetas]), extinction)


def logistic_problem(mu, K, sigma, rho, theta=1.0):
    return Problem(DiffusionSpec([Logistic(mu, K, sigma)]), PriceSpec(rho, [PowerHalf(theta)]))


@pytest.fixture
def regime_a_2d():
    return bm_problem([0.1, 0.1], [1.0, 1.0], 0.1, [1.0, 1.0])


@pytest.fixture
def regime_b_2d():
    return bm_problem([1.0, 1.0], [1.0, 1.0], 0.1, [1.0, 1.0])


_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")

import math

import numpy as np
import pytest

from qfrelay.scenario import Scenario, reference_three_ue, reference_two_ue, set_snr, validate


def random_scenario(rng: np.random.Generator, K: int, snr_db=None) -> Scenario:
    """Plausible layouts: the relay sits closer to the UEs than the macro BS."""
    N = int(rng.integers(K + 2, 80))
    M = int(rng.integers(N + K + 2, 700))
    s = Scenario(
        K=K, M=M, N=N, alpha=float(rng.uniform(2.2, 3.5)),
        d_d=tuple(rng.uniform(80.0, 200.0, K)),
        d_r=tuple(rng.uniform(10.0, 80.0, K)),
        d_dr=float(rng.uniform(60.0, 150.0)),
        P=tuple(rng.uniform(0.5, 2.0, K)),
        P_r=float(rng.uniform(1.0, 10.0)),
    )
    s = validate(s)
    return set_snr(s, float(rng.uniform(-5.0, 10.0)) if snr_db is None else snr_db)


def random_weights(rng: np.random.Generator, K: int) -> np.ndarray:
    w = rng.dirichlet(np.ones(K))
    return w / w.sum()


def symmetric_scenario(K: int = 2) -> Scenario:
    s = Scenario(K=K, M=400, N=40, alpha=2.7, d_d=(100.0,) * K, d_r=(30.0,) * K,
                 d_dr=90.0, P=(1.0,) * K, P_r=5.0)
    return set_snr(validate(s), 3.0)


@pytest.fixture
def near():
    return reference_two_ue("near")


@pytest.fixture
def far():
    return reference_two_ue("far")


@pytest.fixture
def three():
    return reference_three_ue()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def rel(x, y):
    return abs(x - y) / max(1.0, abs(y))


LOG2 = math.log(2.0)


# -- acceptance reporting -----------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(passed), detail)
    print(f"ACCEPTANCE {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

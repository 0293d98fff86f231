import numpy as np
import pytest

from nvcluster.emitter import ClusterModel, EmitterParams


@pytest.fixture
def emitter():
    return EmitterParams(gamma_bright=4e4, gamma_dark=2e3, k_ion=400.0, k_rec=150.0)


@pytest.fixture
def pair():
    return ClusterModel(
        (EmitterParams(gamma_bright=6e4, gamma_dark=1e3, k_ion=200.0, k_rec=80.0,
                       p_init_neg=0.63),
         EmitterParams(gamma_bright=3e4, gamma_dark=5e2, k_ion=150.0, k_rec=60.0,
                       p_init_neg=0.63)),
        readout_time=1e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash[ACCEPTANCE]

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"CRITERION {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)

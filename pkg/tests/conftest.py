import numpy as np
import pytest

from debrisrisk import _backend
from debrisrisk.datagen import generate_dataset


@pytest.fixture(params=_backend.available())
def backend(request):
    """Run the test once per available kernel backend."""
    previous = _backend.kernels
    _backend.use(request.param)
    yield request.param
    _backend.kernels = previous


@pytest.fixture(scope="session")
def full_size_dataset():
    return generate_dataset(1489, seed=1)


@pytest.fixture(scope="session")
def small_dataset():
    return generate_dataset(60, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def run_chain(workdir, n=200, seed=1):
    """gen-data -> train -> evaluate -> assess; returns each step's exit code."""
    from debrisrisk.cli import main

    w = str(workdir)
    steps = [
        ["gen-data", "--n", str(n), "--seed", str(seed), "--out", f"{w}/data.csv",
         "--grid-out", f"{w}/grid.csv", "--gdp-out", f"{w}/gdp.csv", "--cells", "50"],
        ["train", "--data", f"{w}/data.csv", "--models-out", f"{w}/models"],
        ["evaluate", "--data", f"{w}/data.csv", "--models", f"{w}/models",
         "--out", f"{w}/accuracy.csv"],
        ["assess", "--models", f"{w}/models", "--features", "10,20,80,80000,7000,-4",
         "--grid", f"{w}/grid.csv", "--gdp", f"{w}/gdp.csv", "--out", f"{w}/risk"],
    ]
    return [main(s) for s in steps]


@pytest.fixture(scope="session")
def chain_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("chain")
    codes = run_chain(d)
    return d, codes


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

import pytest

from riotfront.model import ModelParams


@pytest.fixture
def base() -> ModelParams:
    """gamma=4, beta=1, p=2, c=1: the reference set for the planar analysis."""
    return ModelParams(gamma=4.0, beta=1.0, p=2.0, omega=1.0, c=1.0)


@pytest.fixture
def steep() -> ModelParams:
    return ModelParams(gamma=1000.0, beta=20.0, p=2.0, omega=0.1, c=2.0)


_RUNS: dict = {}


@pytest.fixture(scope="session")
def fixture_run():
    """Run a named moving-frame fixture once per session and hand back (fixture, run)."""
    from riotfront.pde import front_fixture, simulate

    def get(name: str):
        if name not in _RUNS:
            fx = front_fixture(name)
            _RUNS[name] = (fx, simulate(fx.params, fx.grid, fx.initial, snapshot_every=fx.snapshot_every))
        return _RUNS[name]

    return get


def pytest_terminal_summary(terminalreporter):
    import sys

    results: dict = {}
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance"):
            results.update(getattr(mod, "RESULTS", {}))
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])

import pytest

from eba.core import FailurePattern, Scenario
from eba.simulator import enumerate_runs, generate_run


def make_scenario(n, t, context, protocol, inits, pattern=None, horizon=None):
    pattern = pattern or FailurePattern.failure_free(n)
    horizon = t + 3 if horizon is None else horizon
    return Scenario(n, t, context, protocol, tuple(inits), pattern, horizon)


def simulate(n, t, context, protocol, inits, pattern=None, horizon=None):
    return generate_run(make_scenario(n, t, context, protocol, inits, pattern, horizon))


def silent_example(protocol, context):
    """n=20, t=10, every init 1, agents 1..10 never send anything."""
    n, t = 20, 10
    pat = FailurePattern.silent(n, range(1, 11), t + 3)
    return make_scenario(n, t, context, protocol, (1,) * n, pat)


@pytest.fixture(scope="session")
def fip_popt_runs():
    return enumerate_runs(3, 1, "fip", "popt")


@pytest.fixture(scope="session")
def fip_popt_system(fip_popt_runs):
    from eba.epistemic import System

    return System(fip_popt_runs)


@pytest.fixture(scope="session")
def min_pmin_runs():
    return enumerate_runs(3, 1, "min", "pmin")


@pytest.fixture(scope="session")
def basic42_runs():
    return enumerate_runs(4, 2, "basic", "pbasic", collapse=True)


def locate(runs, run):
    """Index of the enumerated run with the same inits, nonfaulty set and states as ``run``."""
    key = (run.scenario.inits, run.nonfaulty, tuple(run.states))
    for k, r in enumerate(runs):
        if (r.scenario.inits, r.nonfaulty, tuple(r.states)) == key:
            return k
    raise LookupError("run not in the enumerated set")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

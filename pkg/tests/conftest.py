import numpy as np
import pytest

from timely_persuasion.model import ProblemInstance, SourceParams

FIVE_LAMBDA = [1.3, 1.8, 0.7, 2.3, 1.5]
FIVE_MU = [2.3, 3.8, 3.2, 5.3, 2.0]


def five_source_instance(budget: float) -> ProblemInstance:
    return ProblemInstance.from_rates(FIVE_LAMBDA, FIVE_MU, 0.5, budget)


def generator_stationary(lam, mu, s, c):
    """Stationary law of the joint chain from its generator matrix.

    Independent of the closed form: builds Q over states (00, 01, 10, 11)
    and solves pi Q = 0 with sum(pi) = 1 by least squares.
    """
    Q = np.zeros((4, 4))
    Q[0, 2] = lam          # (0,0) -> (1,0)
    Q[2, 0] = mu           # (1,0) -> (0,0)
    Q[2, 3] = s            # (1,0) -> (1,1)
    Q[3, 1] = mu           # (1,1) -> (0,1)
    Q[1, 0] = c            # (0,1) -> (0,0)
    Q[1, 3] = lam          # (0,1) -> (1,1)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    A = np.vstack([Q.T, np.ones(4)])
    b = np.zeros(5)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    return pi


def random_instance(rng: np.random.Generator, n: int, q: float = 0.5, budget_scale: float = 1.0):
    """Valid random instance: draws lambda, then mu above the IC floor."""
    lams = rng.uniform(0.2, 3.0, size=n)
    floor = (1 - q) * lams / q
    mus = floor * rng.uniform(1.1, 3.0, size=n)
    inst0 = ProblemInstance.from_rates(lams, mus, q, 0.0)
    budget = budget_scale * rng.uniform(0.0, 1.5) * sum(inst0.c_mins()) + rng.uniform(0, 3)
    return ProblemInstance(inst0.sources, q, budget)


@pytest.fixture
def rng():
    return np.random.default_rng(20251019)


@pytest.fixture
def src12():
    return SourceParams(1.0, 2.0)


_acceptance: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: package exit criteria")


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))
    elif "test_acceptance.py" in report.nodeid and report.when == "setup" and report.outcome != "passed":
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")

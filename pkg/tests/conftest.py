import numpy as np
import pytest

from stochalm.problem import CompositeProblem, ElasticNet, HuberLoss, QuadraticLoss, Ridge

_REPORT = []


@pytest.fixture(scope="session")
def report():
    """Collects one pass/fail line per acceptance criterion."""
    return _REPORT


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)


def scalar_quad(y=2.0, n=1):
    return QuadraticLoss([[1.0]], [y], n)


def random_problem(rng, n, p, m, reg="elastic_net", loss="quadratic", l1=0.1, l2=0.5):
    x_true = rng.uniform(-1, 1, p)
    comps = []
    for _ in range(n):
        A = rng.uniform(-1, 1, (m, p))
        y = A @ x_true + 0.1 * rng.standard_normal(m)
        comps.append(QuadraticLoss(A, y, n) if loss == "quadratic" else HuberLoss(A, y, n, 1.0))
    f0 = ElasticNet(l1, l2) if reg == "elastic_net" else Ridge(l2)
    return CompositeProblem(f0, comps)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from rwkplus.graph import AttributedGraph

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_graph(rng, n, d, p=0.5, labeled=True, weighted=False):
    upper = np.triu(rng.random((n, n)) < p, 1).astype(float)
    if weighted:
        upper = upper * rng.uniform(0.1, 1.0, size=(n, n))
    A = upper + upper.T
    if labeled:
        X = np.eye(d)[rng.integers(0, d, size=n)]
    else:
        X = rng.uniform(0.0, 1.0, size=(n, d))
    return AttributedGraph(A, X)


@st.composite
def labeled_graphs(draw, max_n=6, d=3):
    n = draw(st.integers(1, max_n))
    bits = draw(st.lists(st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
    labels = draw(st.lists(st.integers(0, d - 1), min_size=n, max_size=n))
    A = np.zeros((n, n))
    A[np.triu_indices(n, 1)] = bits
    A = A + A.T
    return AttributedGraph(A, np.eye(d)[labels])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria register one summary line each here
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])

import math

import numpy as np
from hypothesis import strategies as st

from smoothrenyi import make_dist, make_joint


def bern(p: float):
    return make_dist([1.0 - p, p])


def entropy_direct(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def renyi_direct(p, alpha: float) -> float:
    p = np.asarray(p, dtype=float)
    return math.log2(float(np.sum(p[p > 0] ** alpha))) / (1.0 - alpha)


@st.composite
def dists(draw, min_size=1, max_size=5):
    k = draw(st.integers(min_size, max_size))
    w = draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k))
    s = math.fsum(w)
    p = [v / s for v in w]
    p[-1] = 1.0 - math.fsum(p[:-1])
    return make_dist(p)


@st.composite
def joints(draw, max_x=4, max_y=3):
    nx = draw(st.integers(1, max_x))
    ny = draw(st.integers(1, max_y))
    w = draw(st.lists(st.floats(0.01, 1.0), min_size=nx * ny, max_size=nx * ny))
    s = math.fsum(w)
    m = [[w[x * ny + y] / s for y in range(ny)] for x in range(nx)]
    return make_joint(m)


alphas = st.floats(0.05, 0.95)
epsilons = st.floats(0.01, 0.9)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])


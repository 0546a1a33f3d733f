import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from lingw.measure import MmSpace  # noqa: E402

LINE_S = [0, 1, 2, 3, 6]
LINE_X = [0, 1, 2, 5, 7]
LINE_Y = [0, 2, 3, 6, 7]


def line_space(values, id):
    """Uniform measure on points of the real line with the absolute-value metric."""
    v = np.asarray(values, float)
    return MmSpace(id=id, weights=np.full(v.size, 1.0 / v.size), metric=np.abs(v[:, None] - v[None, :]),
                   metric_kind="euclidean", points=v[:, None])


@pytest.fixture
def line_triple():
    return line_space(LINE_S, "S"), line_space(LINE_X, "X"), line_space(LINE_Y, "Y")


def random_weights(rng, n):
    w = rng.random(n) + 0.2
    return w / w.sum()


def random_cloud(rng, n, dim=2, id="cloud", uniform=False):
    w = None if uniform else random_weights(rng, n)
    return MmSpace.from_points(rng.random((n, dim)), w, id=id)


# one summary line per acceptance criterion, printed at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])

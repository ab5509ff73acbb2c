import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from spraymetric import examples as ex  # noqa: E402
from spraymetric.fieldspec import Point  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def spiral():
    return ex.builtin_spray("spiral")


@pytest.fixture(scope="session")
def circle():
    return ex.builtin_spray("circle")


@pytest.fixture(scope="session")
def flat3():
    return ex.builtin_spray("flat", 3)


@pytest.fixture(scope="session")
def spiral_F():
    return ex.spiral_finsler()


@pytest.fixture(scope="session")
def circle_F():
    return ex.circle_finsler()


def shell_points(n, count, seed, box=1.0, rmin=0.5, rmax=2.0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        d = rng.normal(size=n)
        r = np.exp(rng.uniform(np.log(rmin), np.log(rmax)))
        out.append(Point(rng.uniform(-box, box, n), r * d / np.linalg.norm(d)))
    return out


def point_strategy(n, box=1.0, rmin=0.5, rmax=2.0):
    """Hypothesis strategy for points with |y| in [rmin, rmax]."""
    from hypothesis import strategies as st
    coord = st.floats(-box, box, allow_nan=False)
    comp = st.floats(-1.0, 1.0, allow_nan=False)

    def build(t):
        x, d, r = t
        d = np.asarray(d)
        if np.linalg.norm(d) < 1e-2:
            d = np.eye(n)[0]
        return Point(x, r * d / np.linalg.norm(d))

    return st.tuples(st.lists(coord, min_size=n, max_size=n), st.lists(comp, min_size=n, max_size=n),
                     st.floats(rmin, rmax)).map(build)


# acceptance criteria record one line each; printed at the end of the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, title, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {k:>2}. {title}: {detail}")

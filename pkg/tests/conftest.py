import numpy as np
import pytest
from hypothesis import strategies as st

from intermittent_attitude.attitude import InertiaModel
from intermittent_attitude.config import default_config

DEMO_J = np.array([[2.8, 0.002, 0.0076], [0.002, 2.6, 0.01], [0.0076, 0.01, 1.9]])


def unit_quaternions(min_abs_q0=0.0):
    comp = st.floats(-1.0, 1.0, allow_nan=False)

    def build(v):
        q = np.array(v)
        return q / np.linalg.norm(q)

    return (
        st.tuples(comp, comp, comp, comp)
        .filter(lambda v: sum(x * x for x in v) > 1e-3)
        .map(build)
        .filter(lambda q: abs(q[3]) >= min_abs_q0)
    )


def vec3(bound=1.0):
    f = st.floats(-bound, bound, allow_nan=False)
    return st.tuples(f, f, f).map(np.array)


def random_unit_quats(rng, n):
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def demo_inertia():
    return InertiaModel(DEMO_J)


@pytest.fixture(scope="session")
def default_scenario():
    return default_config().build()

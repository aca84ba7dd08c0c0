import os
import subprocess
import sys

import numpy as np
import pytest

from intermittent_attitude import _pykernel, kernels

from conftest import DEMO_J, random_unit_quats

needs_ext = pytest.mark.skipif("cython" not in kernels.available(), reason="compiled extension not built")


def random_states(rng, n):
    qe = random_unit_quats(rng, n)
    qd = random_unit_quats(rng, n)
    w = rng.normal(scale=0.05, size=(n, 3))
    return np.hstack([qe, w, qd])


@needs_ext
def test_backends_agree(rng):
    from intermittent_attitude import _ckernel

    J = np.asarray(DEMO_J)
    Ji = np.linalg.inv(J)
    ref = (np.radians(0.3), 80.0, 100.0)
    dist = (0.01, 1e-4)
    for y in random_states(rng, 200):
        u = rng.uniform(-0.05, 0.05, 3)
        t = rng.uniform(0.0, 150.0)
        a = _pykernel.rk4_plant_step(y, u, t, 0.1, J, Ji, ref, dist)
        b = _ckernel.rk4_plant_step(y, u, t, 0.1, J, Ji, ref, dist)
        np.testing.assert_allclose(b, a, rtol=0, atol=1e-13)


@needs_ext
def test_full_run_agrees(default_scenario):
    from intermittent_attitude.simkit import run_scenario

    prev = kernels.set_backend("python")
    try:
        a = run_scenario(default_scenario)
    finally:
        kernels.set_backend(prev)
    b = run_scenario(default_scenario)
    assert a.summary.action_count == b.summary.action_count
    assert [e.t for e in a.events] == [e.t for e in b.events]
    np.testing.assert_allclose(a.telemetry["q_ev"], b.telemetry["q_ev"], atol=1e-10)


def test_env_var_forces_fallback():
    env = dict(os.environ, INTERMITTENT_ATTITUDE_PURE_PYTHON="1")
    code = "from intermittent_attitude import kernels; print(kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_set_backend_round_trip():
    prev = kernels.set_backend("python")
    assert kernels.BACKEND == "python"
    assert kernels.set_backend(prev) == "python"
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")

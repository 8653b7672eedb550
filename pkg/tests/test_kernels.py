import os
import subprocess
import sys

import numpy as np
import pytest

from ihosim import _kernels

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not available")


@pytest.fixture
def sample(rng):
    x = np.linspace(-12, 12, 801)
    c = rng.normal(size=60) + 1j * rng.normal(size=60)
    return x, c


def test_hermite_functions_recurrence_stable_far_out():
    # level 3000 at its turning point: naive recurrences overflow or underflow here
    xi = np.array([0.0, 30.0, 77.0, 200.0])
    h = _kernels.hermite_functions_numpy(3001, xi)
    assert np.all(np.isfinite(h))
    assert abs(h[3000, 3]) < 1e-300 or h[3000, 3] == 0.0


@needs_numba
def test_backends_agree(sample):
    x, c = sample
    a = _kernels.hermite_functions_numpy(60, x)
    b = _kernels.hermite_functions_numba(60, x)
    assert np.allclose(a, b, atol=1e-13)
    f = _kernels.hermite_synthesize_numpy(c, x)
    assert np.allclose(f, _kernels.hermite_synthesize_numba(c, x), atol=1e-12)
    p1 = _kernels.hermite_project_numpy(60, x, f)
    assert np.allclose(p1, _kernels.hermite_project_numba(60, x, f), atol=1e-11)
    k = np.linspace(0, 5, 40)
    w = np.abs(f) ** 2
    for u, v in zip(_kernels.trig_moments_numpy(k, x, w), _kernels.trig_moments_numba(k, x, w)):
        assert np.allclose(u, v, atol=1e-10)
    ca, cb = np.cos(k), np.sin(k)
    assert np.allclose(_kernels.cosine_transform_numpy(x, k, ca, cb),
                       _kernels.cosine_transform_numba(x, k, ca, cb), atol=1e-12)


def test_synthesis_matches_table(sample):
    x, c = sample
    table = _kernels.hermite_functions_numpy(c.size, x)
    assert np.allclose(_kernels.hermite_synthesize_numpy(c, x), c @ table, atol=1e-12)
    f = np.exp(-x ** 2 / 3) * (1 + 0.2j * x)
    assert np.allclose(_kernels.hermite_project_numpy(c.size, x, f), table @ f, atol=1e-12)


def test_env_flag_selects_numpy_backend():
    code = "from ihosim import _kernels; print(_kernels.backend())"
    env = dict(os.environ, IHOSIM_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == "numpy"

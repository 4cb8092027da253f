"""The jitted kernels and their pure-Python fallback must agree."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from rabicat import _kernels
from rabicat._accel import NUMBA_ENABLED

pytestmark = pytest.mark.skipif(
    not NUMBA_ENABLED, reason="comparison needs the jitted path in-process"
)


def _py(func):
    return func.py_func


def test_rhs_and_jacobian_match_python_source():
    rng = np.random.default_rng(2)
    for _ in range(200):
        x, y, g, h = rng.uniform(-3, 3, size=4)
        h = abs(h)
        g = abs(g)
        assert _kernels.reduced_rhs_xy(x, y, g, h) == _py(_kernels.reduced_rhs_xy)(x, y, g, h)
        assert _kernels.jacobian_entries(x, y, g, h) == _py(_kernels.jacobian_entries)(
            x, y, g, h
        )


def test_lyapunov_scan_matches():
    jit = _kernels.lyapunov_scan(0.7, 0.4, 2.0, 41)
    plain = _py(_kernels.lyapunov_scan)(0.7, 0.4, 2.0, 41)
    assert np.allclose(jit, plain, rtol=0, atol=0)


def test_newton_grid_matches():
    axis = np.linspace(-3, 3, 11)
    sx, sy = np.meshgrid(axis, axis)
    seeds = np.column_stack([sx.ravel(), sy.ravel()])
    jit = _kernels.newton_grid(1.5, 1.0, seeds, 100, 1e-12, 1e-11)
    plain = _py(_kernels.newton_grid)(1.5, 1.0, seeds, 100, 1e-12, 1e-11)
    assert np.allclose(jit, plain, rtol=1e-12, atol=1e-14, equal_nan=True)


def test_rk45_reduced_matches():
    ts = np.linspace(0.0, 30.0, 40)
    jit = _kernels.rk45_reduced(0.9, -0.3, 0.8, 0.5, ts, 1e-9, 1e-11, -1.0, 10**7)
    plain = _py(_kernels.rk45_reduced)(0.9, -0.3, 0.8, 0.5, ts, 1e-9, 1e-11, -1.0, 10**7)
    assert np.allclose(jit[0], plain[0], rtol=1e-10, atol=1e-13)
    assert np.allclose(jit[1], plain[1], rtol=1e-10, atol=1e-13)
    assert jit[2:4] == plain[2:4]


def test_rk45_full_matches():
    ts = np.linspace(0.0, 10.0, 20)
    s0 = np.array([0.5, 0.1, 0.0, 0.0, -1.0])
    jit = _kernels.rk45_full(s0, 0.6, 0.25, 10.0, ts, 1e-9, 1e-11, -1.0, True, 10**7)
    plain = _py(_kernels.rk45_full)(s0, 0.6, 0.25, 10.0, ts, 1e-9, 1e-11, -1.0, True, 10**7)
    assert np.allclose(jit[0], plain[0], rtol=1e-10, atol=1e-13)
    assert jit[1:3] == plain[1:3]


_SUBPROCESS_SNIPPET = """
import json
import numpy as np
from rabicat import _kernels
from rabicat._accel import NUMBA_ENABLED
ts = np.linspace(0.0, 20.0, 10)
xs, ys, n, status, t, x, y, steps = _kernels.rk45_reduced(
    1.0, 0.0, 0.7, 0.3, ts, 1e-9, 1e-11, -1.0, 10**7)
print(json.dumps({"numba": NUMBA_ENABLED, "xs": xs.tolist(), "ys": ys.tolist(),
                  "steps": int(steps)}))
"""


def test_env_flag_selects_fallback_path():
    env = dict(os.environ, RABICAT_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", _SUBPROCESS_SNIPPET],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    payload = json.loads(out.stdout)
    assert payload["numba"] is False
    ts = np.linspace(0.0, 20.0, 10)
    xs, ys, *_ = _kernels.rk45_reduced(1.0, 0.0, 0.7, 0.3, ts, 1e-9, 1e-11, -1.0, 10**7)
    assert np.allclose(xs, payload["xs"], rtol=1e-10, atol=1e-13)
    assert np.allclose(ys, payload["ys"], rtol=1e-10, atol=1e-13)

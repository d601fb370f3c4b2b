import math
import os
import subprocess
import sys

import numpy as np
import pytest

from hmcflow import _pykernels as P
from hmcflow import kernels

try:
    from hmcflow import _ckernels as C
except ImportError:  # extension not built
    C = None

needs_ext = pytest.mark.skipif(C is None, reason="compiled kernels not built")


def _arrays(n=64, seed=0):
    rng = np.random.default_rng(seed)
    return (1 + 0.1 * rng.random(n), 0.05 * rng.random(n), rng.random(n),
            rng.random(n) - 0.5)


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


@needs_ext
def test_support_accel_identical():
    s, sth, p, pth = _arrays()
    a, b = np.empty(64), np.empty(64)
    assert C.support_accel(s, sth, p, pth, -0.5, a) == \
        P.support_accel(s, sth, p, pth, -0.5, b) == -1
    assert np.array_equal(a, b)


@needs_ext
def test_bad_node_identical():
    s, sth, p, pth = _arrays()
    sth[7] = -5.0
    a, b = np.empty(64), np.empty(64)
    assert C.support_accel(s, sth, p, pth, 0.0, a) == 7
    assert P.support_accel(s, sth, p, pth, 0.0, b) == 7


@needs_ext
def test_char_speed_identical():
    s, sth, _, pth = _arrays(seed=4)
    assert C.max_char_speed(s, sth, pth) == P.max_char_speed(s, sth, pth)


@needs_ext
@pytest.mark.parametrize("kind", [0, 1])
def test_dp54_identical(kind):
    args = (kind, 0.0 if kind else -0.4, 1.0, -0.3, math.inf, 1e-12, 1e-12,
            1e-6, 1e-3, 10 ** 7)
    a, b = C.radial_dp54(*args), P.radial_dp54(*args)
    for x, y in zip(a[:3], b[:3]):
        assert np.array_equal(np.asarray(x), np.asarray(y))
    assert a[3:] == b[3:]


@needs_ext
def test_string_accel_identical():
    rng = np.random.default_rng(1)
    cols = [rng.random(32) + (1.0 if i in (2, 3) else 0.0) for i in range(8)]
    ox1, oy1, ox2, oy2 = (np.empty(32) for _ in range(4))
    assert C.string_accel(*cols, ox1, oy1) == P.string_accel(*cols, ox2, oy2)
    assert np.array_equal(ox1, ox2) and np.array_equal(oy1, oy2)


def test_pure_python_switch():
    env = dict(os.environ, HMCF_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c",
                          "import hmcflow.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"

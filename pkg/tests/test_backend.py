import os
import subprocess
import sys

import numpy as np
import pytest

from nvcluster import _backend, _fallback

kernels = pytest.importorskip("nvcluster._kernels")

RATES = (8e4, 2e3, 300.0, 120.0)


def test_compiled_backend_selected_by_default():
    assert _backend.BACKEND == "cython"


def test_env_var_forces_fallback():
    env = {**os.environ, "NVCLUSTER_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c",
                          "from nvcluster import _backend; print(_backend.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("T", [0.0, 1e-4, 2e-3])
def test_telegraph_counts_bit_identical(T):
    init = (np.arange(3000) % 2).astype(np.uint8)
    a = kernels.telegraph_counts(np.random.default_rng(7), *RATES, T, init)
    b = _fallback.telegraph_counts(np.random.default_rng(7), *RATES, T, init)
    assert np.array_equal(np.asarray(a), np.asarray(b))


def test_rk4_identical():
    a = np.asarray(kernels.count_master_rk4(*RATES, 1e-3, 150, 400))
    b = np.asarray(_fallback.count_master_rk4(*RATES, 1e-3, 150, 400))
    assert a.shape == (2, 151)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)

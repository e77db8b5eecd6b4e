import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toa_lab import _backend, _kernels_py

compiled = pytest.importorskip("toa_lab._kernels")


def test_compiled_backend_selected():
    assert _backend.BACKEND == "cython"
    assert _backend.quadratic_phase_sum is compiled.quadratic_phase_sum


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 300), st.integers(1, 40), st.sampled_from([-1.0, 1.0]), st.integers(0, 2**32 - 1))
def test_phase_sum_backends_agree(nk, nt, sign, seed):
    rng = np.random.default_rng(seed)
    k = rng.uniform(-20, 20, nk)
    w = rng.normal(size=nk) + 1j * rng.normal(size=nk)
    taus = rng.uniform(-5, 5, nt)
    a = compiled.quadratic_phase_sum(k, w, taus, sign)
    b = _kernels_py.quadratic_phase_sum(k, w, taus, sign)
    assert np.max(np.abs(a - b)) <= 1e-11 * max(1.0, np.sum(np.abs(w)))


@pytest.mark.parametrize("jumps", [True, False])
def test_rank_one_integrators_agree(jumps):
    rng = np.random.default_rng(11)
    n = 24
    e = rng.uniform(0, 3, n)
    u = rng.normal(size=n) + 1j * rng.normal(size=n)
    u /= np.linalg.norm(u)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    ra, ta = compiled.rk4_diag_rank1(rho, e, u, 2.0, 1e-3, 150, jumps)
    rb, tb = _kernels_py.rk4_diag_rank1(rho, e, u, 2.0, 1e-3, 150, jumps)
    assert np.max(np.abs(ra - rb)) < 1e-13
    assert np.max(np.abs(ta - tb)) < 1e-13


def test_length_mismatch_rejected():
    for kern in (compiled.quadratic_phase_sum, _kernels_py.quadratic_phase_sum):
        with pytest.raises(ValueError):
            kern(np.zeros(3), np.zeros(4), np.zeros(2), 1.0)


def test_fallback_is_selected_on_request():
    code = "from toa_lab import _backend; print(_backend.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={**os.environ, "TOA_LAB_PURE_PYTHON": "1"}, check=True)
    assert out.stdout.strip() == "python"

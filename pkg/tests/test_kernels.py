import os
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from liebscher import _kernels as k
from liebscher.empirical import hilbert_keys, lattice

needs_numba = pytest.mark.skipif(not k.HAVE_NUMBA, reason="numba not installed")


def brute_dominance(px, py, qx, qy, strict_x, strict_y):
    cx = px[None, :] < qx[:, None] if strict_x else px[None, :] <= qx[:, None]
    cy = py[None, :] < qy[:, None] if strict_y else py[None, :] <= qy[:, None]
    return (cx & cy).sum(axis=1)


@pytest.mark.parametrize("impl", [k.dominance_counts_numpy,
                                  pytest.param(k.dominance_counts_numba, marks=needs_numba)])
@pytest.mark.parametrize("strict_x", [True, False])
@pytest.mark.parametrize("strict_y", [True, False])
@pytest.mark.parametrize("m", [1, 7, 600, 1500])
def test_dominance_counts_against_brute_force(impl, strict_x, strict_y, m):
    rng = np.random.default_rng(m)
    # coarse values force plenty of ties
    px, py = rng.integers(0, 20, m).astype(float), rng.integers(0, 20, m).astype(float)
    qx, qy = rng.integers(-1, 21, 300).astype(float), rng.integers(-1, 21, 300).astype(float)
    got = impl(px, py, qx, qy, strict_x, strict_y)
    assert np.array_equal(got, brute_dominance(px, py, qx, qy, strict_x, strict_y))


@needs_numba
@pytest.mark.parametrize("d, bits", [(1, 62), (2, 31), (3, 20), (4, 15)])
def test_hilbert_backends_agree(d, bits):
    rng = np.random.default_rng(d)
    lat = lattice(rng.random((5000, d)), bits)
    assert np.array_equal(k.hilbert_keys_numba(lat, bits), k.hilbert_keys_numpy(lat, bits))


@needs_numba
@pytest.mark.parametrize("nA", [1, 300])
@pytest.mark.parametrize("dy", [1, 3])
def test_power_iterate_backends_agree(nA, dy):
    rng = np.random.default_rng(nA + dy)
    n, K, d = 300, 6, 3
    x0 = rng.random((n, d))
    ys = rng.random((K - 1, n, dy))
    A = np.ones((nA, K, d))
    A[:, 1:] = rng.random((nA, K - 1, d))
    # different pow implementations: agreement to rounding, not bitwise
    assert_allclose(k.power_iterate_numba(x0, ys, A), k.power_iterate_numpy(x0, ys, A), rtol=1e-12, atol=0)


@needs_numba
def test_power_iterate_boundary_exponents():
    x0 = np.array([[0.3, 0.3]])
    ys = np.array([[[0.6]], [[0.2]]])
    A = np.array([[[1.0, 1.0], [1.0, 0.0], [0.5, 0.5]]])
    for impl in (k.power_iterate_numba, k.power_iterate_numpy):
        out = impl(x0, ys, A)
        # a = 1 resets to y; a = 0 keeps x
        assert_allclose(out, [[max(0.6**2, 0.2**2), max(0.3**2, 0.2**2)]], rtol=1e-15)


@pytest.mark.parametrize("d, bits", [(2, 3), (3, 2), (2, 5)])
def test_hilbert_bijective_and_local(d, bits):
    side = 2**bits
    cells = np.stack(np.meshgrid(*[np.arange(side)] * d, indexing="ij"), -1).reshape(-1, d)
    keys = k.hilbert_keys_numpy(cells.astype(np.uint64), bits)
    assert np.array_equal(np.sort(keys), np.arange(side**d, dtype=np.uint64))
    path = cells[np.argsort(keys)]
    steps = np.abs(np.diff(path.astype(int), axis=0)).sum(axis=1)
    assert np.all(steps == 1)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_hilbert_decode_round_trip(d):
    bits = 62 // d
    rng = np.random.default_rng(d)
    corners = np.stack(np.meshgrid(*[[0, 2**bits - 1]] * d, indexing="ij"), -1).reshape(-1, d)
    pts = np.vstack([corners, rng.integers(0, 2**bits, (10_000, d))]).astype(np.uint64)
    keys = k.hilbert_keys(pts, bits)
    assert np.array_equal(k.hilbert_decode(keys, d, bits), pts)


def test_hilbert_keys_range():
    x = np.random.default_rng(0).random((1000, 2))
    keys = hilbert_keys(x)
    assert keys.dtype == np.uint64
    assert int(keys.max()) < 2**62


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, LIEBSCHER_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import liebscher._kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"

"""Hot numeric kernels.

Each kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
version.  The public names at the bottom of this module point at the numba
implementations unless the environment variable ``LIEBSCHER_DISABLE_NUMBA``
is set to a truthy value (or numba cannot be imported), in which case the
numpy versions are used.  Both variants are always importable under their
``*_numba`` / ``*_numpy`` names so tests and the benchmark can compare them.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = "LIEBSCHER_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get(_FLAG, "").strip().lower() not in {
    "1",
    "true",
    "yes",
    "on",
}


def _njit(**kwargs):
    if not HAVE_NUMBA:  # pragma: no cover
        return lambda fn: fn
    return numba.njit(cache=True, nogil=True, **kwargs)


# ---------------------------------------------------------------------------
# Iterated max-power update (Algorithms 1 and 2 with power transforms)
# ---------------------------------------------------------------------------


@_njit(error_model="numpy")
def power_iterate_numba(x0, ys, A):
    """x <- max(x ** (1 / (1 - a_k)), y_k ** (1 / a_k)) for k = 1..K-1.

    ``x0`` is (n, d); ``ys`` is (K-1, n, dy) with dy in {1, d} (dy == 1 means
    one shared uniform per row and step); ``A`` is (nA, K, d) with nA in
    {1, n}; row 0 of each exponent matrix is ignored.
    """
    n, d = x0.shape
    steps = ys.shape[0]
    dy = ys.shape[2]
    nA = A.shape[0]
    out = np.empty((n, d))
    for i in range(n):
        ia = i if nA > 1 else 0
        for j in range(d):
            x = x0[i, j]
            jy = j if dy > 1 else 0
            for s in range(steps):
                a = A[ia, s + 1, j]
                left = x ** (1.0 / (1.0 - a))
                right = ys[s, i, jy] ** (1.0 / a)
                x = left if left > right else right
            out[i, j] = x
    return out


def power_iterate_numpy(x0, ys, A):
    x = np.array(x0, dtype=float, copy=True)
    steps = ys.shape[0]
    with np.errstate(divide="ignore"):
        for s in range(steps):
            a = A[:, s + 1, :]
            left = x ** (1.0 / (1.0 - a))
            right = ys[s] ** (1.0 / a)
            x = np.maximum(left, right)
    return x


# ---------------------------------------------------------------------------
# Hilbert curve keys (Skilling's transpose algorithm)
# ---------------------------------------------------------------------------


@_njit()
def hilbert_keys_numba(lattice, bits):
    """Hilbert index of each row of ``lattice`` (uint64, values < 2**bits)."""
    n, d = lattice.shape
    keys = np.empty(n, dtype=np.uint64)
    X = np.empty(d, dtype=np.uint64)
    one = np.uint64(1)
    top = one << np.uint64(bits - 1)
    for r in range(n):
        for i in range(d):
            X[i] = lattice[r, i]
        Q = top
        while Q > one:
            P = Q - one
            for i in range(d):
                if X[i] & Q:
                    X[0] ^= P
                else:
                    t = (X[0] ^ X[i]) & P
                    X[0] ^= t
                    X[i] ^= t
            Q >>= one
        for i in range(1, d):
            X[i] ^= X[i - 1]
        t = np.uint64(0)
        Q = top
        while Q > one:
            if X[d - 1] & Q:
                t ^= Q - one
            Q >>= one
        for i in range(d):
            X[i] ^= t
        key = np.uint64(0)
        for b in range(bits - 1, -1, -1):
            for i in range(d):
                key = (key << one) | ((X[i] >> np.uint64(b)) & one)
        keys[r] = key
    return keys


def hilbert_keys_numpy(lattice, bits):
    X = [np.array(lattice[:, i], dtype=np.uint64) for i in range(lattice.shape[1])]
    d = len(X)
    one = np.uint64(1)
    top = one << np.uint64(bits - 1)
    Q = top
    while Q > one:
        P = Q - one
        for i in range(d):
            hit = (X[i] & Q) != 0
            flip = np.where(hit, P, np.uint64(0))
            t = np.where(hit, np.uint64(0), (X[0] ^ X[i]) & P)
            X[0] = X[0] ^ flip ^ t
            if i:
                X[i] = X[i] ^ t
        Q >>= one
    for i in range(1, d):
        X[i] = X[i] ^ X[i - 1]
    t = np.zeros_like(X[0])
    Q = top
    while Q > one:
        t = np.where((X[d - 1] & Q) != 0, t ^ (Q - one), t)
        Q >>= one
    for i in range(d):
        X[i] = X[i] ^ t
    key = np.zeros_like(X[0])
    for b in range(bits - 1, -1, -1):
        for i in range(d):
            key = (key << one) | ((X[i] >> np.uint64(b)) & one)
    return key


def hilbert_decode(keys, d, bits):
    """Inverse of the key map; returns (n, d) uint64 lattice coordinates."""
    keys = np.asarray(keys, dtype=np.uint64)
    one = np.uint64(1)
    X = [np.zeros_like(keys) for _ in range(d)]
    pos = bits * d - 1
    for b in range(bits - 1, -1, -1):
        for i in range(d):
            X[i] |= ((keys >> np.uint64(pos)) & one) << np.uint64(b)
            pos -= 1
    N = np.uint64(2) << np.uint64(bits - 1)
    t = X[d - 1] >> one
    for i in range(d - 1, 0, -1):
        X[i] = X[i] ^ X[i - 1]
    X[0] = X[0] ^ t
    Q = np.uint64(2)
    while Q != N:
        P = Q - one
        for i in range(d - 1, -1, -1):
            hit = (X[i] & Q) != 0
            flip = np.where(hit, P, np.uint64(0))
            t = np.where(hit, np.uint64(0), (X[0] ^ X[i]) & P)
            X[0] = X[0] ^ flip ^ t
            if i:
                X[i] = X[i] ^ t
        Q <<= one
    return np.stack(X, axis=1)


# ---------------------------------------------------------------------------
# Bivariate dominance counts
# ---------------------------------------------------------------------------


@_njit()
def dominance_counts_numba(px, py, qx, qy, strict_x, strict_y):
    """For each query count points with px <(=) qx and py <(=) qy.

    Sweep over x with a Fenwick tree indexed by the rank of y.
    """
    m = px.shape[0]
    nq = qx.shape[0]
    ys = np.sort(py)
    po = np.argsort(px, kind="mergesort")
    qo = np.argsort(qx, kind="mergesort")
    tree = np.zeros(m + 1, dtype=np.int64)
    out = np.zeros(nq, dtype=np.int64)
    ptr = 0
    for t in range(nq):
        q = qo[t]
        xq = qx[q]
        while ptr < m:
            p = po[ptr]
            if strict_x:
                if not px[p] < xq:
                    break
            else:
                if not px[p] <= xq:
                    break
            pos = np.searchsorted(ys, py[p]) + 1
            while pos <= m:
                tree[pos] += 1
                pos += pos & (-pos)
            ptr += 1
        if strict_y:
            pos = np.searchsorted(ys, qy[q])
        else:
            pos = np.searchsorted(ys, qy[q], side="right")
        c = 0
        while pos > 0:
            c += tree[pos]
            pos -= pos & (-pos)
        out[q] = c
    return out


def dominance_counts_numpy(px, py, qx, qy, strict_x, strict_y, block=512):
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    qx = np.asarray(qx, dtype=float)
    qy = np.asarray(qy, dtype=float)
    order = np.argsort(px, kind="mergesort")
    sx = px[order]
    sy = py[order]
    side_x = "left" if strict_x else "right"
    side_y = "left" if strict_y else "right"
    # points sorted by x: query q sees the prefix sy[:limit[q]]
    limit = np.searchsorted(sx, qx, side=side_x)
    out = np.zeros(qx.shape[0], dtype=np.int64)
    m = sx.shape[0]
    chunk = limit // block
    prefix = np.empty(0)
    for c in range(m // block + 1):
        start = c * block
        sel = np.nonzero(chunk == c)[0]
        if sel.size:
            base = np.searchsorted(prefix, qy[sel], side=side_y)
            tail = sy[start : start + block]
            width = limit[sel] - start
            cmp = tail[None, :] < qy[sel, None] if strict_y else tail[None, :] <= qy[sel, None]
            cmp &= np.arange(tail.shape[0])[None, :] < width[:, None]
            out[sel] = base + cmp.sum(axis=1)
        if start < m:
            prefix = np.sort(np.concatenate([prefix, sy[start : start + block]]))
    return out


if USE_NUMBA:
    power_iterate = power_iterate_numba
    hilbert_keys = hilbert_keys_numba
    dominance_counts = dominance_counts_numba
else:
    power_iterate = power_iterate_numpy
    hilbert_keys = hilbert_keys_numpy
    dominance_counts = dominance_counts_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"

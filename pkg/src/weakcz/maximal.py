"""Uncentered Hardy-Littlewood maximal function on a grid.

The supremum runs over every axis-aligned cube with grid-aligned corners and
integer side ``s*h`` that contains the cell.  ``f`` is extended by zero, so
cubes may stick out of the extent box; their average is mass over the full
cube volume.  In 1D such intervals never win (their in-box part is a shorter
interval with a larger average), so the 1D kernel only scans in-box intervals.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from . import _accel
from ._accel import njit
from .grid import CellSet, GridFunction, l1_norm, superlevel_set


@njit
def _maximal_1d_nb(a):
    nc = a.shape[0]
    pre = np.zeros(nc + 1)
    for i in range(nc):
        pre[i + 1] = pre[i] + a[i]
    out = np.zeros(nc)
    for lo in range(nc):
        cur = 0.0
        for hi in range(nc, lo, -1):
            avg = (pre[hi] - pre[lo]) / (hi - lo)
            if avg > cur:
                cur = avg
            if cur > out[hi - 1]:
                out[hi - 1] = cur
    return out


def _forward_max(arr, s, axis, length):
    """``out[i] = max(arr[i:i+s])`` along ``axis`` for ``i < length``."""
    c = ndimage.maximum_filter1d(arr, size=s, axis=axis, mode="constant", cval=0.0)
    return np.take(c, np.arange(s // 2, s // 2 + length), axis=axis)


def _maximal_1d_np(a):
    nc = a.shape[0]
    pre = np.concatenate(([0.0], np.cumsum(a)))
    out = np.zeros(nc)
    for s in range(1, nc + 1):
        avg = (pre[s:] - pre[:-s]) / s          # interval [p, p+s), p = 0..nc-s
        # cell i lies in intervals with p in [i-s+1, i]
        padded = np.concatenate((np.zeros(s - 1), avg, np.zeros(s - 1)))
        np.maximum(out, _forward_max(padded, s, 0, nc), out=out)
    return out


@njit
def _sliding_max_fwd(src, s, dst):
    # dst[i] = max(src[i : i + s]) with a monotone deque
    nsrc = src.shape[0]
    nd = dst.shape[0]
    q = np.empty(nsrc, dtype=np.int64)
    head = 0
    tail = 0
    for p in range(nsrc):
        while tail > head and src[q[tail - 1]] <= src[p]:
            tail -= 1
        q[tail] = p
        tail += 1
        start = p - s + 1
        if start >= 0:
            while q[head] < start:
                head += 1
            if start < nd:
                dst[start] = src[q[head]]


@njit
def _maximal_2d_nb(a):
    n0, n1 = a.shape
    # zero-padded prefix table wide enough for every side
    out = np.zeros((n0, n1))
    pre = np.zeros((n0 + 1, n1 + 1))
    for i in range(n0):
        for j in range(n1):
            pre[i + 1, j + 1] = pre[i, j + 1] + pre[i + 1, j] - pre[i, j] + a[i, j]
    # a cube wider than the box can be shrunk to side max(n0, n1) without
    # losing mass, so larger sides never win
    for s in range(1, max(n0, n1) + 1):
        m0 = n0 + s - 1
        m1 = n1 + s - 1
        avg = np.empty((m0, m1))
        inv = 1.0 / (s * s)
        for q0 in range(m0):
            a0 = max(q0 - s + 1, 0)
            b0 = min(q0 + 1, n0)
            for q1 in range(m1):
                a1 = max(q1 - s + 1, 0)
                b1 = min(q1 + 1, n1)
                tot = pre[b0, b1] - pre[a0, b1] - pre[b0, a1] + pre[a0, a1]
                avg[q0, q1] = tot * inv
        tmp = np.empty((n0, m1))
        col = np.empty(n0)
        for q1 in range(m1):
            _sliding_max_fwd(avg[:, q1].copy(), s, col)
            tmp[:, q1] = col
        row = np.empty(n1)
        for i in range(n0):
            _sliding_max_fwd(tmp[i, :].copy(), s, row)
            for j in range(n1):
                if row[j] > out[i, j]:
                    out[i, j] = row[j]
    return out


def _maximal_nd_np(a):
    shape = np.array(a.shape)
    n = a.ndim
    out = np.zeros(a.shape)
    for s in range(1, int(shape.max()) + 1):
        padded = np.pad(a, s - 1)
        sums = padded
        for ax in range(n):
            c = np.cumsum(sums, axis=ax)
            c = np.concatenate((np.zeros_like(np.take(c, [0], axis=ax)), c), axis=ax)
            hi = np.take(c, np.arange(s, c.shape[ax]), axis=ax)
            lo = np.take(c, np.arange(0, c.shape[ax] - s), axis=ax)
            sums = hi - lo                       # window start positions
        avg = sums / float(s ** n)               # positions p in [-(s-1), N-1]
        for ax in range(n):
            avg = _forward_max(avg, s, ax, a.shape[ax])
        np.maximum(out, avg, out=out)
    return out


def maximal_function(f: GridFunction) -> GridFunction:
    """Uncentered maximal function of ``|f|`` over grid-aligned cubes.

    Every cell is a cube in the family, so ``Mf >= |f|`` holds exactly.
    """
    a = np.abs(np.asarray(f.values, dtype=float))
    if not a.any():
        return GridFunction(f.grid, np.zeros(a.shape))
    if f.grid.n == 1:
        vals = _maximal_1d_nb(a) if _accel.USE_NUMBA else _maximal_1d_np(a)
    elif f.grid.n == 2 and _accel.USE_NUMBA:
        vals = _maximal_2d_nb(np.ascontiguousarray(a))
    else:
        vals = _maximal_nd_np(a)
    return GridFunction(f.grid, vals)


def level_set_G(f: GridFunction, t: float, m: int, Mf: GridFunction | None = None) -> CellSet:
    """``{Mf > t**(1/m)}``; pass a precomputed ``Mf`` to reuse it across thresholds."""
    if not t > 0:
        raise ValueError("t must be positive")
    if m < 1:
        raise ValueError("m must be at least 1")
    if Mf is None:
        Mf = maximal_function(f)
    return superlevel_set(Mf, t ** (1.0 / m))


def weak_11_constant(f: GridFunction, Mf: GridFunction | None = None) -> float:
    """``sup_v v |{Mf >= v}| / ||f||_1`` over the finitely many values of ``Mf``.

    This equals the supremum over all ``t > 0`` of ``t |{Mf > t}| / ||f||_1``.
    """
    norm = l1_norm(f)
    if norm == 0:
        return 0.0
    if Mf is None:
        Mf = maximal_function(f)
    v = np.sort(Mf.values.ravel())[::-1]
    v = v[v > 0]
    if v.size == 0:
        return 0.0
    counts = np.arange(1, v.size + 1)
    # for tied values the largest count is the right one
    last = np.r_[v[1:] != v[:-1], True]
    best = np.max(v[last] * counts[last]) * f.grid.cell_volume
    return float(best / norm)

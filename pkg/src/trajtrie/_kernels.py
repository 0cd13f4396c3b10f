"""Compiled inner loops for the three distance measures.

Point arrays are ``(n, 2)`` float64.  Column kernels take the previous DP
column (or an empty array for the first column) and return a new array.
"""

import math

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True, fastmath=False)


@njit(**_OPTS)
def hausdorff(a, b):
    m = a.shape[0]
    n = b.shape[0]
    colmin = np.full(n, np.inf)
    best = 0.0
    for i in range(m):
        rmin = np.inf
        ax = a[i, 0]
        ay = a[i, 1]
        for j in range(n):
            d = math.hypot(ax - b[j, 0], ay - b[j, 1])
            if d < rmin:
                rmin = d
            if d < colmin[j]:
                colmin[j] = d
        if rmin > best:
            best = rmin
    for j in range(n):
        if colmin[j] > best:
            best = colmin[j]
    return best


@njit(**_OPTS)
def frechet(a, b):
    m = a.shape[0]
    n = b.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    for j in range(n):
        bx = b[j, 0]
        by = b[j, 1]
        for i in range(m):
            d = math.hypot(a[i, 0] - bx, a[i, 1] - by)
            if j == 0 and i == 0:
                best = d
            elif j == 0:
                best = max(d, cur[i - 1])
            elif i == 0:
                best = max(d, prev[0])
            else:
                best = max(d, min(prev[i - 1], prev[i], cur[i - 1]))
            cur[i] = best
        prev, cur = cur, prev
    return prev[m - 1]


@njit(**_OPTS)
def dtw(a, b):
    m = a.shape[0]
    n = b.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    for j in range(n):
        bx = b[j, 0]
        by = b[j, 1]
        for i in range(m):
            d = math.hypot(a[i, 0] - bx, a[i, 1] - by)
            if j == 0 and i == 0:
                best = d
            elif j == 0:
                best = d + cur[i - 1]
            elif i == 0:
                best = d + prev[0]
            else:
                best = d + min(prev[i - 1], prev[i], cur[i - 1])
            cur[i] = best
        prev, cur = cur, prev
    return prev[m - 1]


@njit(**_OPTS)
def hausdorff_column(q, px, py, r):
    """Fold one reference point into the running row minima.

    Returns ``(new_r, column_min, max(new_r))``.
    """
    m = q.shape[0]
    out = np.empty(m)
    c = np.inf
    rmax = 0.0
    for i in range(m):
        d = math.hypot(q[i, 0] - px, q[i, 1] - py)
        v = r[i]
        if d < v:
            v = d
        out[i] = v
        if d < c:
            c = d
        if v > rmax:
            rmax = v
    return out, c, rmax


@njit(**_OPTS)
def frechet_column(q, px, py, prev):
    m = q.shape[0]
    out = np.empty(m)
    first = prev.shape[0] == 0
    for i in range(m):
        d = math.hypot(q[i, 0] - px, q[i, 1] - py)
        if first:
            if i == 0:
                v = d
            else:
                v = max(d, out[i - 1])
        elif i == 0:
            v = max(d, prev[0])
        else:
            v = max(d, min(prev[i - 1], prev[i], out[i - 1]))
        out[i] = v
    return out


@njit(**_OPTS)
def dtw_column(q, x0, y0, x1, y1, prev):
    """DTW column against a cell, using point-to-square distances."""
    m = q.shape[0]
    out = np.empty(m)
    first = prev.shape[0] == 0
    for i in range(m):
        dx = max(x0 - q[i, 0], 0.0, q[i, 0] - x1)
        dy = max(y0 - q[i, 1], 0.0, q[i, 1] - y1)
        d = math.hypot(dx, dy)
        if first:
            if i == 0:
                v = d
            else:
                v = d + out[i - 1]
        elif i == 0:
            v = d + prev[0]
        else:
            v = d + min(prev[i - 1], prev[i], out[i - 1])
        out[i] = v
    return out


@njit(**_OPTS)
def column_min(col):
    c = np.inf
    for v in col:
        if v < c:
            c = v
    return c


@njit(**_OPTS)
def pivot_bound(d_qp, hr, slack):
    """Largest two-sided triangle-inequality bound over all pivots."""
    best = 0.0
    for i in range(d_qp.shape[0]):
        lo = d_qp[i] - hr[i, 1] - slack
        hi = hr[i, 0] - d_qp[i] - slack
        if lo > best:
            best = lo
        if hi > best:
            best = hi
    return best

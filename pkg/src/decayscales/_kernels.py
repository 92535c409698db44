"""Hot supremum loops, compiled with numba when available.

Set ``DECAYSCALES_NO_NUMBA=1`` to force the pure numpy versions.  Both paths
return identical results; the numpy path works in memory-bounded chunks.
"""

import os

import numpy as np

_DISABLED = os.environ.get("DECAYSCALES_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
    NUMBA_AVAILABLE = True
except ImportError:
    NUMBA_AVAILABLE = False

_CHUNK = 1 << 20


# ---------------------------------------------------------------- numpy versions

def weighted_max_numpy(t, q, r):
    """For each ``t_i``: max over j of ``r_j - t_i q_j`` and its argmax."""
    t = np.ascontiguousarray(t, float)
    out = np.full(t.size, -np.inf)
    arg = np.zeros(t.size, np.int64)
    step = max(1, _CHUNK // max(1, q.size))
    for k in range(0, t.size, step):
        vals = r[None, :] - t[k:k + step, None] * q[None, :]
        vals = np.where(np.isnan(vals), -np.inf, vals)
        arg[k:k + step] = np.argmax(vals, axis=1)
        out[k:k + step] = np.take_along_axis(vals, arg[k:k + step, None], axis=1)[:, 0]
    return out, arg


def interval_profile_numpy(x, y, lo, hi):
    """For each interval ``[lo_i, hi_i]``: max over j of ``-log hypot(x_j, dist(y_j, interval))``."""
    out = np.full(lo.size, -np.inf)
    step = max(1, _CHUNK // max(1, x.size))
    for k in range(0, lo.size, step):
        d = np.maximum(0.0, np.maximum(lo[k:k + step, None] - y[None, :], y[None, :] - hi[k:k + step, None]))
        with np.errstate(divide="ignore"):
            out[k:k + step] = np.max(-np.log(np.hypot(x[None, :], d)), axis=1)
    return out


def halfplane_numpy(zr, zi, x, y, r):
    """For each ``z``: max over j of ``r_j - log|z + lambda_j|``."""
    out = np.full(zr.size, -np.inf)
    step = max(1, _CHUNK // max(1, x.size))
    for k in range(0, zr.size, step):
        dist = np.hypot(zr[k:k + step, None] + x[None, :], zi[k:k + step, None] + y[None, :])
        out[k:k + step] = np.max(r[None, :] - np.log(dist), axis=1)
    return out


# ---------------------------------------------------------------- numba versions

if NUMBA_AVAILABLE:
    @njit(cache=True)
    def weighted_max_numba(t, q, r):
        out = np.empty(t.size)
        arg = np.zeros(t.size, np.int64)
        for i in range(t.size):
            best = -np.inf
            bj = 0
            ti = t[i]
            for j in range(q.size):
                v = r[j] - ti * q[j]
                if v > best:
                    best = v
                    bj = j
            out[i] = best
            arg[i] = bj
        return out, arg

    @njit(cache=True)
    def interval_profile_numba(x, y, lo, hi):
        out = np.empty(lo.size)
        for i in range(lo.size):
            best = -np.inf
            for j in range(x.size):
                d = 0.0
                if y[j] < lo[i]:
                    d = lo[i] - y[j]
                elif y[j] > hi[i]:
                    d = y[j] - hi[i]
                v = -np.log(np.hypot(x[j], d))
                if v > best:
                    best = v
            out[i] = best
        return out

    @njit(cache=True)
    def halfplane_numba(zr, zi, x, y, r):
        out = np.empty(zr.size)
        for i in range(zr.size):
            best = -np.inf
            for j in range(x.size):
                a = zr[i] + x[j]
                b = zi[i] + y[j]
                s = a * a + b * b
                # hypot is slow in compiled loops; only needed near the float range ends
                if 1e-300 < s < 1e300:
                    v = r[j] - 0.5 * np.log(s)
                else:
                    v = r[j] - np.log(np.hypot(a, b))
                if v > best:
                    best = v
            out[i] = best
        return out


def weighted_max(t, q, r):
    f = weighted_max_numba if NUMBA_AVAILABLE else weighted_max_numpy
    return f(np.ascontiguousarray(t, float), np.ascontiguousarray(q, float), np.ascontiguousarray(r, float))


def interval_profile(x, y, lo, hi):
    f = interval_profile_numba if NUMBA_AVAILABLE else interval_profile_numpy
    return f(*(np.ascontiguousarray(v, float) for v in (x, y, lo, hi)))


def halfplane(zr, zi, x, y, r):
    f = halfplane_numba if NUMBA_AVAILABLE else halfplane_numpy
    return f(*(np.ascontiguousarray(v, float) for v in (zr, zi, x, y, r)))

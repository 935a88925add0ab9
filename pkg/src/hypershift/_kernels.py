"""Compiled orbit kernel for the built-in families."""
import math

import numpy as np
from numba import njit

ULP = 2.0 ** -53


@njit(cache=True)
def orbit_builtin(left, right, scale, offset, height, eps, shear, x0, y0, a0, n, seed, refresh):
    """Iterate a built-in family ``n`` times.

    Returns ``(xs, ys, symbols, slopes, logdu)``; ``symbols[k] == 0`` marks an
    escape at step ``k``, after which the orbit restarts at a random point.
    With ``refresh`` the image abscissa receives a random perturbation of one
    unit roundoff propagated through ``f1x``, which keeps long orbits from
    collapsing onto dyadic rationals.
    """
    np.random.seed(seed)
    xs = np.empty(n)
    ys = np.empty(n)
    sym = np.zeros(n, np.int16)
    slopes = np.empty(n)
    logdu = np.empty(n)
    N = left.shape[0]
    x, y, a = x0, y0, a0
    for k in range(n):
        xs[k] = x
        ys[k] = y
        slopes[k] = a
        j = np.searchsorted(right, x, "right")
        inside = j < N and (y >= 0.0) and (y <= 1.0)
        if inside:
            inside = left[j] < x or (x == 0.0 and left[j] == 0.0)
        if not inside:
            logdu[k] = np.nan
            x = np.random.random()
            y = np.random.random()
            a = 0.0
            continue
        t = scale[j] * (x - left[j])
        kk = eps[j] * (1.0 + shear * y)
        f1 = t + kk * t * (1.0 - t)
        f1x = scale[j] * (1.0 + kk * (1.0 - 2.0 * t))
        f1y = eps[j] * shear * t * (1.0 - t)
        f2y = height[j]
        d = f1x + a * f1y
        logdu[k] = math.log(abs(d))
        a = f2y * a / d
        sym[k] = j + 1
        if refresh:
            f1 += (2.0 * np.random.random() - 1.0) * f1x * ULP
        if f1 < 0.0:
            f1 = -f1
        if f1 >= 1.0:
            f1 = 1.0 - ULP
        x = f1
        y = offset[j] + height[j] * y
    return xs, ys, sym, slopes, logdu


@njit(cache=True)
def window_codes(sym, rank, base):
    """Integer code of ``sym[k:k+rank]`` (-1 when the window contains an escape)."""
    n = sym.shape[0] - rank + 1
    out = np.empty(max(n, 0), np.int64)
    for k in range(n):
        c = 0
        for j in range(rank):
            s = sym[k + j]
            if s == 0:
                c = -1
                break
            c = c * base + s
        out[k] = c
    return out

"""Graph transforms and batched orbit-segment solves.

Unstable-type curves are graphs ``y = A(x)`` sampled on the uniform x-grid,
stable-type curves are graphs ``x = S(y)`` sampled on the uniform y-grid.
Pushing an unstable graph through ``f_i`` and pulling a stable graph back
through ``f_i`` are the two graph transforms; both are solved pointwise with
a safeguarded Newton iteration so that no resampling error is introduced.

`solve_segments` computes finite orbit pieces ``z_0 .. z_{L-1}`` with
prescribed itinerary by sweeping x backwards (contracting under inverse
branches) and y forwards (contracting under forward branches).
"""
import numpy as np

from .errors import NumericalFailure
from .map_model import GRAPH_SAMPLES, _uniform_interp, slope_transport, stable_slope_pullback

GRID = np.linspace(0.0, 1.0, GRAPH_SAMPLES)


def domain_bounds(fam, idx, y):
    """Left and right boundary of ``E_idx`` at height ``y`` (vectorised over idx)."""
    idx = np.asarray(idx)
    y = np.asarray(y, float)
    p = fam.builtin
    if p is not None:
        j = idx - 1
        return p.left[j] + 0 * y, p.right[j] + 0 * y
    idx_b, y_b = np.broadcast_arrays(idx, y)
    lo = np.empty(y_b.shape)
    hi = np.empty(y_b.shape)
    for i in np.unique(idx_b):
        m = idx_b == i
        d = fam.branch(int(i)).domain
        lo[m], hi[m] = d.left_at(y_b[m]), d.right_at(y_b[m])
    return lo, hi


def _newton_bracketed(g, lo, hi, x0=None, tol=1e-15, maxit=200):
    """Root of an increasing function ``g`` on ``[lo, hi]`` (elementwise).

    ``g(x)`` returns ``(value, derivative)``.
    """
    lo = np.array(lo, float)
    hi = np.array(hi, float)
    x = 0.5 * (lo + hi) if x0 is None else np.clip(np.array(x0, float), lo, hi)
    for _ in range(maxit):
        v, d = g(x)
        neg = v < 0
        lo = np.where(neg, x, lo)
        hi = np.where(neg, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - v / d
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        xn = np.where(v == 0, x, xn)
        step = np.max(np.abs(xn - x)) if xn.size else 0.0
        x = xn
        if step <= tol * max(1.0, float(np.max(np.abs(x))) if x.size else 1.0):
            return x
    return x


def pull_graph(fam, i, xs, slopes=None):
    """Preimage under ``f_i`` of the stable graph ``x = C(y)``, as a graph over the y-grid.

    Returns ``(x(y), dx/dy)``.
    """
    xs = np.asarray(xs, float)
    if slopes is None:
        slopes = np.gradient(xs, GRID)
    y = GRID
    idx = np.full(y.shape, i)
    lo, hi = domain_bounds(fam, idx, y)
    if not fam.f2_depends_on_x:
        Y = fam.jet_indexed(idx, 0.5 * (lo + hi), y).f2
        X = _uniform_interp(Y, xs)
        x, _ = fam.inverse_indexed(idx, X, Y)
        x = np.clip(x, lo, hi)
    else:
        def g(xv):
            j = fam.jet_indexed(idx, xv, y)
            c = _uniform_interp(j.f2, xs)
            cp = _uniform_interp(j.f2, slopes)
            return j.f1 - c, j.f1x - cp * j.f2x
        x = _newton_bracketed(g, lo, hi)
    jet = fam.jet_indexed(idx, x, y)
    b = stable_slope_pullback(jet, _uniform_interp(jet.f2, slopes))
    return x, b


def _entry_exit(fam, i, ys):
    """x-range where the unstable graph ``y = A(x)`` runs inside ``E_i``."""
    if fam.builtin is not None or fam.branch(i).domain.is_vertical:
        lo, hi = domain_bounds(fam, np.array(i), np.array(0.0))
        return float(lo), float(hi)
    d = fam.branch(i).domain
    out = []
    for side in (d.left_at, d.right_at):
        a, b = 0.0, 1.0
        for _ in range(80):
            m = 0.5 * (a + b)
            if m - side(_uniform_interp(m, ys)) < 0:
                a = m
            else:
                b = m
        out.append(0.5 * (a + b))
    return out[0], out[1]


def push_graph(fam, i, ys, slopes=None):
    """Image under ``f_i`` of the part of ``y = A(x)`` inside ``E_i``, over the x-grid.

    Returns ``(y(X), dy/dX)``; slopes are carried by exact slope transport.
    """
    ys = np.asarray(ys, float)
    if slopes is None:
        slopes = np.gradient(ys, GRID)
    xl, xr = _entry_exit(fam, i, ys)
    idx = np.full(GRID.shape, i)
    Xt = GRID

    def g(xv):
        yv = _uniform_interp(xv, ys)
        a = _uniform_interp(xv, slopes)
        j = fam.jet_indexed(idx, xv, yv)
        return j.f1 - Xt, j.f1x + a * j.f1y

    if fam.builtin is not None and not fam.f1_depends_on_y:
        x, _ = fam.inverse_indexed(idx, Xt, fam.builtin.offset[i - 1] + 0 * Xt)
    else:
        x = _newton_bracketed(g, np.full(GRID.shape, xl), np.full(GRID.shape, xr),
                              xl + Xt * (xr - xl))
    x = np.clip(x, xl, xr)
    yv = _uniform_interp(x, ys)
    a = _uniform_interp(x, slopes)
    jet = fam.jet_indexed(idx, x, yv)
    return jet.f2, slope_transport(jet, a)


def cross(ys, xs, tol=1e-12):
    """Intersection of an unstable graph ``y = A(x)`` with a stable graph ``x = S(y)``.

    ``x - S(A(x))`` is increasing because both slopes are below one, so
    bisection converges to the unique crossing.
    """
    lo, hi = 0.0, 1.0
    f_lo = lo - _uniform_interp(_uniform_interp(lo, ys), xs)
    if f_lo >= 0:
        return lo, float(_uniform_interp(lo, ys))
    if hi - _uniform_interp(_uniform_interp(hi, ys), xs) <= 0:
        return hi, float(_uniform_interp(hi, ys))
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        if m - _uniform_interp(_uniform_interp(m, ys), xs) < 0:
            lo = m
        else:
            hi = m
    x = 0.5 * (lo + hi)
    return float(x), float(_uniform_interp(x, ys))


def solve_segments(fam, words, start_y=None, start_curve=None, end_x=None, end="mid",
                   cyclic=False, tol=1e-15, maxit=1000):
    """Orbit pieces with prescribed itineraries.

    Parameters
    ----------
    words : int array, shape (W, L)
        Row ``w`` is the itinerary ``w_0 .. w_{L-1}``.
    start_y : array (W,), optional
        Fixed heights ``y_0``.
    start_curve : (ys, slopes), optional
        ``z_0`` lies on this unstable graph.
    end_x : array (W,), optional
        Fixed abscissae of ``z_{L-1}``; otherwise ``end`` picks the left edge,
        right edge or midline of ``E_{w_{L-1}}``.
    cyclic : bool
        Solve for period-L points instead (start/end ignored).

    Returns
    -------
    x, y, a : arrays (W, L)
        Points and unstable slopes transported along the piece.
    """
    words = np.atleast_2d(np.asarray(words, dtype=np.int64))
    W, L = words.shape
    x = np.empty((W, L))
    y = np.full((W, L), 0.5)
    for k in range(L):
        lo, hi = domain_bounds(fam, words[:, k], y[:, k])
        x[:, k] = 0.5 * (lo + hi)
    simple = not fam.f2_depends_on_x
    for it in range(maxit):
        x_old = x.copy()
        y_old = y.copy()
        if cyclic:
            y[:, 0] = fam.jet_indexed(words[:, -1], x[:, -1], y[:, -1]).f2
        elif start_y is not None:
            y[:, 0] = start_y
        elif start_curve is not None:
            y[:, 0] = _uniform_interp(x[:, 0], start_curve[0])
        for k in range(1, L):
            y[:, k] = fam.jet_indexed(words[:, k - 1], x[:, k - 1], y[:, k - 1]).f2
        if cyclic:
            x[:, -1], _ = fam.inverse_indexed(words[:, -1], x[:, 0], y[:, 0])
        elif end_x is not None:
            x[:, -1] = end_x
        else:
            lo, hi = domain_bounds(fam, words[:, -1], y[:, -1])
            x[:, -1] = {"mid": 0.5 * (lo + hi), "left": lo, "right": hi}[end]
        for k in range(L - 2, -1, -1):
            x[:, k], _ = fam.inverse_indexed(words[:, k], x[:, k + 1], y[:, k + 1])
        lo, hi = domain_bounds(fam, words, y)
        np.clip(x, lo, hi, out=x)
        np.clip(y, 0.0, 1.0, out=y)
        dx = np.max(np.abs(x - x_old))
        dy = np.max(np.abs(y - y_old))
        if dx <= tol and dy <= tol and (it > 0 or not cyclic):
            break
        if simple and not cyclic and start_curve is None and it >= 1:
            break
    else:
        if max(dx, dy) > 1e-12:
            raise NumericalFailure(f"orbit segment solve did not converge (residual {max(dx, dy):.3g})")
    # unstable slopes along the piece
    a = np.empty((W, L))
    if cyclic:
        s = np.zeros(W)
        for _ in range(200):
            s_prev = s
            for k in range(L):
                s = slope_transport(fam.jet_indexed(words[:, k], x[:, k], y[:, k]), s)
            if np.max(np.abs(s - s_prev)) <= 1e-16:
                break
        a[:, 0] = s
    elif start_curve is not None:
        a[:, 0] = _uniform_interp(x[:, 0], start_curve[1])
    else:
        a[:, 0] = 0.0
    for k in range(1, L):
        a[:, k] = slope_transport(fam.jet_indexed(words[:, k - 1], x[:, k - 1], y[:, k - 1]), a[:, k - 1])
    return x, y, a

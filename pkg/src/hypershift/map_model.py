"""Branch maps, the almost-everywhere map F and the built-in families.

A family is a finite list of branches ``f_i : E_i -> S_i`` (``i = 1..truncN``)
where ``E_i`` is a full-height curvilinear rectangle of the unit square and
``S_i`` a full-width strip. Everything is immutable; the vectorised helpers
(`MapFamily.jet_indexed`, `MapFamily.locate`, ...) accept numpy arrays so the
higher layers can work on whole batches of points at once.
"""
from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np

from .errors import ConeViolation, HyperbolicityViolation, InvalidArgument

BOUNDARY_TOL = 1e-9
GRAPH_SAMPLES = 257
FD_STEP = 1e-5


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        for v in (self.x, self.y):
            if not math.isfinite(v) or v < -BOUNDARY_TOL or v > 1 + BOUNDARY_TOL:
                raise InvalidArgument(f"point ({self.x}, {self.y}) outside the unit square")

    def dist(self, other):
        return max(abs(self.x - other.x), abs(self.y - other.y))


@dataclass(frozen=True)
class Vector2:
    v1: float
    v2: float

    def __post_init__(self):
        if not (math.isfinite(self.v1) and math.isfinite(self.v2)):
            raise InvalidArgument("vector components must be finite")

    def norm(self):
        return max(abs(self.v1), abs(self.v2))


class Escape:
    """Marker returned when an orbit leaves the interiors of the domains."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ESCAPE"

    def __bool__(self):
        return False


ESCAPE = Escape()

_JET_FIELDS = ("f1", "f2", "f1x", "f1y", "f2x", "f2y",
               "f1xx", "f1xy", "f1yy", "f2xx", "f2xy", "f2yy")


@dataclass(frozen=True)
class Jet2:
    """Image coordinates with first and second partials.

    Fields may be scalars or equally shaped arrays.
    """
    f1: object
    f2: object
    f1x: object
    f1y: object
    f2x: object
    f2y: object
    f1xx: object = 0.0
    f1xy: object = 0.0
    f1yy: object = 0.0
    f2xx: object = 0.0
    f2xy: object = 0.0
    f2yy: object = 0.0
    exact: bool = True

    def __post_init__(self):
        for name in _JET_FIELDS:
            if not np.all(np.isfinite(getattr(self, name))):
                raise InvalidArgument(f"jet entry {name} is not finite")
        if not np.all(np.abs(self.jacobian) > 0):
            raise InvalidArgument("jet has vanishing Jacobian")

    @property
    def jacobian(self):
        return self.f1x * self.f2y - self.f1y * self.f2x

    @property
    def d2max(self):
        """``|D^2 f|``: max modulus over the six second partials."""
        return np.max(np.abs(np.stack(np.broadcast_arrays(
            self.f1xx, self.f1xy, self.f1yy, self.f2xx, self.f2xy, self.f2yy))), axis=0)

    def image(self):
        return Point(float(self.f1), float(self.f2))

    def take(self, mask):
        """Restrict an array-valued jet to ``mask``."""
        vals = {n: np.broadcast_to(getattr(self, n), np.shape(self.f1))[mask] for n in _JET_FIELDS}
        return Jet2(**vals, exact=self.exact)


def unstable_derivative(jet, a, alpha=None):
    """``|F1x + a F1y|``, the expansion along the unstable direction ``(1, a)``."""
    if alpha is not None and np.any(np.abs(a) > alpha + 1e-12):
        raise InvalidArgument("slope outside the unstable cone")
    du = np.abs(jet.f1x + a * jet.f1y)
    if np.any(~(du > 0)):
        raise HyperbolicityViolation("unstable derivative is not positive")
    return du


def slope_transport(jet, a):
    """Slope of ``DF (1, a)``."""
    den = 1.0 + (jet.f1y / jet.f1x) * a
    if np.any(den == 0):
        raise ConeViolation("slope transport denominator vanishes")
    return (jet.f2x / jet.f1x + (jet.f2y / jet.f1x) * a) / den


def stable_slope_pullback(jet, b):
    """Slope ``dx/dy`` at the base point of the preimage of a curve of slope ``b``."""
    den = jet.f1x - b * jet.f2x
    if np.any(den == 0):
        raise ConeViolation("stable slope pullback denominator vanishes")
    return (b * jet.f2y - jet.f1y) / den


def _uniform_interp(t, values):
    """Linear interpolation of samples on the uniform grid of [0, 1]."""
    n = len(values) - 1
    u = np.clip(np.asarray(t, dtype=float), 0.0, 1.0) * n
    j = np.minimum(u.astype(np.int64), n - 1)
    w = u - j
    return values[j] * (1.0 - w) + values[j + 1] * w


@dataclass(frozen=True, eq=False)
class FullHeightRect:
    """Branch domain between two graphs ``x = left(y)``, ``x = right(y)``."""
    left: np.ndarray
    right: np.ndarray
    index: int = 0

    def __post_init__(self):
        left = np.array(self.left, dtype=float)
        right = np.array(self.right, dtype=float)
        if left.shape != right.shape or left.ndim != 1 or len(left) < 2:
            raise InvalidArgument("boundary graphs need matching 1-D samples")
        if np.any(left >= right):
            raise InvalidArgument("left boundary must stay left of the right boundary")
        left.flags.writeable = False
        right.flags.writeable = False
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def vertical(cls, lo, hi, index=0, samples=GRAPH_SAMPLES):
        return cls(np.full(samples, float(lo)), np.full(samples, float(hi)), index)

    @cached_property
    def is_vertical(self):
        return bool(np.all(self.left == self.left[0]) and np.all(self.right == self.right[0]))

    @property
    def ygrid(self):
        return np.linspace(0.0, 1.0, len(self.left))

    def left_at(self, y):
        return self.left[0] + 0 * np.asarray(y, float) if self.is_vertical else _uniform_interp(y, self.left)

    def right_at(self, y):
        return self.right[0] + 0 * np.asarray(y, float) if self.is_vertical else _uniform_interp(y, self.right)

    def width_at(self, y):
        return self.right_at(y) - self.left_at(y)

    @cached_property
    def width_max(self):
        return float(np.max(self.right - self.left))

    @cached_property
    def width_min(self):
        return float(np.min(self.right - self.left))

    @cached_property
    def area(self):
        return float(np.trapezoid(self.right - self.left, self.ygrid))

    def max_boundary_slope(self):
        h = 1.0 / (len(self.left) - 1)
        return float(max(np.max(np.abs(np.diff(self.left))), np.max(np.abs(np.diff(self.right)))) / h)

    def contains(self, x, y):
        """Strict interior membership; sides lying on the square's boundary count as inside."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        lo, hi = self.left_at(y), self.right_at(y)
        ok = ((lo < x) | ((x == 0.0) & (lo == 0.0))) & ((x < hi) | ((x == 1.0) & (hi == 1.0)))
        return ok & (y >= 0.0) & (y <= 1.0)


@dataclass(frozen=True, eq=False)
class FullWidthStrip:
    """Branch image between graphs ``y = bottom(X)`` and ``y = top(X)``."""
    bottom: np.ndarray
    top: np.ndarray

    def __post_init__(self):
        b = np.array(self.bottom, dtype=float)
        t = np.array(self.top, dtype=float)
        if b.shape != t.shape or np.any(b >= t):
            raise InvalidArgument("bottom boundary must stay below the top boundary")
        object.__setattr__(self, "bottom", b)
        object.__setattr__(self, "top", t)

    def bottom_at(self, X):
        return _uniform_interp(X, self.bottom)

    def top_at(self, X):
        return _uniform_interp(X, self.top)

    def max_boundary_slope(self):
        h = 1.0 / (len(self.bottom) - 1)
        return float(max(np.max(np.abs(np.diff(self.bottom))), np.max(np.abs(np.diff(self.top)))) / h)


def _fd_jet(map_fn, x, y, h=FD_STEP):
    """Central-difference jet for branches supplied without derivatives."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    f = np.asarray(map_fn(x, y))
    fxp, fxm = np.asarray(map_fn(x + h, y)), np.asarray(map_fn(x - h, y))
    fyp, fym = np.asarray(map_fn(x, y + h)), np.asarray(map_fn(x, y - h))
    fpp, fpm = np.asarray(map_fn(x + h, y + h)), np.asarray(map_fn(x + h, y - h))
    fmp, fmm = np.asarray(map_fn(x - h, y + h)), np.asarray(map_fn(x - h, y - h))
    dx = (fxp - fxm) / (2 * h)
    dy = (fyp - fym) / (2 * h)
    dxx = (fxp - 2 * f + fxm) / h ** 2
    dyy = (fyp - 2 * f + fym) / h ** 2
    dxy = (fpp - fpm - fmp + fmm) / (4 * h ** 2)
    return Jet2(f[0], f[1], dx[0], dy[0], dx[1], dy[1],
                dxx[0], dxy[0], dyy[0], dxx[1], dxy[1], dyy[1], exact=False)


@dataclass(frozen=True, eq=False)
class BranchMap:
    """One branch ``f_i``.

    ``jet_fn(x, y)`` returns a `Jet2`; ``inverse_fn(X, Y)`` returns ``(x, y)``.
    Both must accept numpy arrays.
    """
    index: int
    domain: FullHeightRect
    jet_fn: object
    inverse_fn: object
    strip: FullWidthStrip = None

    @classmethod
    def from_map(cls, index, domain, map_fn, inverse_fn):
        """Branch given by its values only; partials come from central differences."""
        return cls(index, domain, lambda x, y: _fd_jet(map_fn, x, y), inverse_fn)

    def jet(self, x, y):
        return self.jet_fn(x, y)

    def eval(self, z):
        return self.jet_fn(z.x, z.y)

    def apply(self, x, y):
        j = self.jet_fn(x, y)
        return j.f1, j.f2

    def inverse(self, z):
        x, y = self.inverse_fn(z.x, z.y)
        return Point(float(x), float(y))

    @property
    def exact_jets(self):
        return bool(self.jet_fn(0.5 * (self.domain.left[0] + self.domain.right[0]), 0.5).exact)

    @cached_property
    def image(self):
        """The strip ``S_i``, from the images of the bottom and top edges of ``E_i``."""
        if self.strip is not None:
            return self.strip
        n = 4 * GRAPH_SAMPLES
        grid = np.linspace(0.0, 1.0, GRAPH_SAMPLES)
        out = []
        for yv in (0.0, 1.0):
            s = np.linspace(0.0, 1.0, n)
            xs = self.domain.left_at(yv) + s * self.domain.width_at(yv)
            X, Y = self.apply(xs, np.full(n, yv))
            out.append(np.interp(grid, X, Y))
        return FullWidthStrip(out[0], out[1])


@dataclass(frozen=True)
class TailModel:
    """Analytic widths of the branches beyond the truncation.

    ``width_max(i)`` and ``log_width_min(i)`` take integer arrays.
    """
    width_max: object
    log_width_min: object
    description: str = ""


def _series(term, start, max_blocks=24):
    """Sum ``term(i)`` for ``i >= start`` by dyadic blocks.

    Returns ``(value, converged)``. Divergence is declared when a block fails
    to shrink by a factor below 0.9 or produces non-finite values.
    """
    total = 0.0
    prev = None
    lo = start
    for b in range(max_blocks):
        hi = start + (1 << (b + 1)) - 1
        idx = np.arange(lo, hi, dtype=np.float64)
        with np.errstate(over="ignore", invalid="ignore"):
            s = float(np.sum(term(idx)))
        if not math.isfinite(s):
            return math.inf, False
        total += s
        if prev is not None and b >= 3:
            if s >= 0.9 * prev and s > 1e-300:
                if b >= 6:
                    return math.inf, False
            elif s <= 1e-17 * max(abs(total), 1e-300) or s == 0.0:
                return total, True
        prev = s
        lo = hi
    r = s / prev if prev else 0.0
    if r >= 0.9:
        return math.inf, False
    return total + s * r / (1 - r), True


@dataclass(frozen=True)
class BuiltinParams:
    """Per-branch coefficients of the built-in families (arrays indexed by ``i - 1``)."""
    left: np.ndarray
    right: np.ndarray
    scale: np.ndarray
    offset: np.ndarray
    height: np.ndarray
    eps: np.ndarray
    shear: float


@dataclass(frozen=True, eq=False)
class MapFamily:
    branches: tuple
    alpha: float
    K0: float
    C0: float
    tail_model: TailModel = None
    name: str = "custom"
    params: dict = field(default_factory=dict)
    builtin: BuiltinParams = None
    f1_depends_on_y: bool = True
    f2_depends_on_x: bool = True
    locally_constant: bool = False

    def __post_init__(self):
        br = tuple(self.branches)
        object.__setattr__(self, "branches", br)
        if len(br) < 1:
            raise InvalidArgument("a family needs at least one branch")
        for k, b in enumerate(br, start=1):
            if b.index != k:
                raise InvalidArgument("branch indices must run 1..truncN")
        for v in (self.alpha, self.K0, self.C0):
            if not math.isfinite(v):
                raise InvalidArgument("alpha, K0, C0 must be finite")
        if not 0 < self.alpha < 1:
            raise InvalidArgument("alpha must lie in (0, 1)")
        if not self.K0 > 1:
            raise InvalidArgument("K0 must exceed 1")
        if not self.C0 > 0:
            raise InvalidArgument("C0 must be positive")
        g = np.linspace(0.0, 1.0, GRAPH_SAMPLES)
        total = np.zeros_like(g)
        for b in br:
            if b.domain.max_boundary_slope() > self.alpha + 1e-9:
                raise InvalidArgument(f"boundary of E_{b.index} is steeper than alpha")
            total += b.domain.width_at(g)
        if np.any(total > 1 + 1e-12):
            raise InvalidArgument("branch widths sum to more than 1")

    @property
    def truncN(self):
        return len(self.branches)

    def branch(self, i):
        if not 1 <= i <= self.truncN:
            raise InvalidArgument(f"symbol {i} outside the truncated alphabet 1..{self.truncN}")
        return self.branches[i - 1]

    @cached_property
    def _vertical_edges(self):
        """Sorted (lefts, rights) if every domain is a vertical strip and they do not overlap."""
        if not all(b.domain.is_vertical for b in self.branches):
            return None
        lo = np.array([b.domain.left[0] for b in self.branches])
        hi = np.array([b.domain.right[0] for b in self.branches])
        order = np.argsort(lo)
        if np.any(hi[order][:-1] > lo[order][1:]):
            return None
        return lo[order], hi[order], order + 1

    def locate(self, x, y):
        """Vectorised branch lookup; 0 marks boundaries and points beyond truncN."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        ve = self._vertical_edges
        if ve is not None:
            lo, hi, ids = ve
            n = len(lo)
            j = np.searchsorted(hi, x, side="right")
            jc = np.minimum(j, n - 1)
            ok = (j < n) & (((lo[jc] < x) | ((x == 0.0) & (lo[jc] == 0.0))) & (x < hi[jc]))
            ok |= (x == 1.0) & (hi[-1] == 1.0) & (jc == n - 1)
            ok &= (y >= 0.0) & (y <= 1.0)
            return np.where(ok, ids[jc], 0)
        out = np.zeros(np.broadcast(x, y).shape, dtype=np.int64)
        for b in self.branches:
            m = (out == 0) & b.domain.contains(x, y)
            out[m] = b.index
        return out

    def jet_indexed(self, idx, x, y):
        """Jets of branch ``idx[k]`` at ``(x[k], y[k])``."""
        idx = np.asarray(idx)
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        p = self.builtin
        if p is not None:
            j = idx - 1
            s, ep = p.scale[j], p.eps[j]
            t = s * (x - p.left[j])
            k = ep * (1.0 + p.shear * y)
            omt = t * (1.0 - t)
            zero = np.zeros_like(t)
            h = p.height[j] + zero
            return Jet2(t + k * omt, p.offset[j] + p.height[j] * y,
                        s * (1.0 + k * (1.0 - 2.0 * t)), ep * p.shear * omt,
                        zero, h,
                        -2.0 * s * s * k, s * ep * p.shear * (1.0 - 2.0 * t), zero,
                        zero, zero, zero)
        idx_b = np.broadcast_to(idx, x.shape)
        vals = {n: np.empty(x.shape) for n in _JET_FIELDS}
        exact = True
        for i in np.unique(idx_b):
            m = idx_b == i
            jt = self.branch(int(i)).jet(x[m], y[m])
            exact &= jt.exact
            for n in _JET_FIELDS:
                vals[n][m] = getattr(jt, n)
        return Jet2(**vals, exact=exact)

    def inverse_indexed(self, idx, X, Y):
        idx = np.asarray(idx)
        X, Y = np.broadcast_arrays(np.asarray(X, float), np.asarray(Y, float))
        p = self.builtin
        if p is not None:
            j = idx - 1
            y = (Y - p.offset[j]) / p.height[j]
            k = p.eps[j] * (1.0 + p.shear * y)
            t = 2.0 * X / ((1.0 + k) + np.sqrt(np.maximum((1.0 + k) ** 2 - 4.0 * k * X, 0.0)))
            return p.left[j] + t / p.scale[j], y
        idx_b = np.broadcast_to(idx, X.shape)
        x = np.empty(X.shape)
        y = np.empty(X.shape)
        for i in np.unique(idx_b):
            m = idx_b == i
            x[m], y[m] = self.branch(int(i)).inverse_fn(X[m], Y[m])
        return x, y

    @cached_property
    def exact_jets(self):
        return self.builtin is not None or all(b.exact_jets for b in self.branches)

    def tail_width_sum(self):
        """``sum_{i > truncN} delta_{i,max}`` from the tail model, or None."""
        if self.tail_model is None:
            return None
        return _series(self.tail_model.width_max, self.truncN + 1)

    def tail_g3_sum(self):
        if self.tail_model is None:
            return None
        tm = self.tail_model
        return _series(lambda i: -tm.width_max(i) * tm.log_width_min(i), self.truncN + 1)


def locate_branch(fam, z):
    """Branch index whose domain interior contains ``z``, or None."""
    i = int(fam.locate(z.x, z.y))
    return i if i > 0 else None


def apply_F(fam, z):
    """``f_i(z)`` for the branch containing ``z``; `ESCAPE` otherwise."""
    i = locate_branch(fam, z)
    if i is None:
        return ESCAPE
    j = fam.jet_indexed(np.array(i), z.x, z.y)
    return Point(float(np.clip(j.f1, 0.0, 1.0)), float(np.clip(j.f2, 0.0, 1.0)))


def apply_F_array(fam, x, y):
    """Vectorised `apply_F`: returns ``(X, Y, idx)`` with ``idx == 0`` on escape."""
    idx = fam.locate(x, y)
    safe = np.where(idx > 0, idx, 1)
    j = fam.jet_indexed(safe, x, y)
    X = np.where(idx > 0, j.f1, np.nan)
    Y = np.where(idx > 0, j.f2, np.nan)
    return X, Y, idx


def _dyadic_tail():
    ln2 = math.log(2.0)
    return TailModel(lambda i: np.exp2(-i), lambda i: -ln2 * i,
                     "delta_i = 2^-i (vertical dyadic strips)")


def _builtin_family(name, truncN, eps_i, shear, alpha, K0, C0, params):
    i = np.arange(1, truncN + 1, dtype=float)
    left = 1.0 - np.exp2(1.0 - i)
    right = 1.0 - np.exp2(-i)
    scale = np.exp2(i)
    offset = 0.5 - np.exp2(-i)
    height = np.exp2(-(i + 1.0))
    eps_i = np.asarray(eps_i, float)
    p = BuiltinParams(left, right, scale, offset, height, eps_i, float(shear))
    branches = []
    for k in range(truncN):
        dom = FullHeightRect.vertical(left[k], right[k], k + 1)
        strip = FullWidthStrip(np.full(GRAPH_SAMPLES, offset[k]), np.full(GRAPH_SAMPLES, offset[k] + height[k]))
        idx = k + 1
        branches.append(BranchMap(
            idx, dom,
            lambda x, y, idx=idx: fam_ref[0].jet_indexed(np.full(np.shape(np.broadcast_arrays(x, y)[0]), idx), x, y),
            lambda X, Y, idx=idx: fam_ref[0].inverse_indexed(np.full(np.shape(np.broadcast_arrays(X, Y)[0]), idx), X, Y),
            strip))
    fam_ref = []
    fam = MapFamily(tuple(branches), alpha, K0, C0, _dyadic_tail(), name, params, p,
                    f1_depends_on_y=bool(shear > 0 and np.any(eps_i > 0)),
                    f2_depends_on_x=False,
                    locally_constant=bool(np.all(eps_i == 0)))
    fam_ref.append(fam)
    return fam


def make_dyadic_family(truncN, alpha=0.5, K0=2.0, C0=1.0):
    """Affine family on the dyadic strips ``[1 - 2^(1-i), 1 - 2^-i]``."""
    if int(truncN) != truncN or truncN < 2:
        raise InvalidArgument("truncN must be an integer >= 2")
    truncN = int(truncN)
    params = dict(family="dyadic", truncN=truncN, alpha=alpha, K0=K0, C0=C0)
    return _builtin_family("dyadic", truncN, np.zeros(truncN), 0.0, alpha, K0, C0, params)


def make_perturbed_family(truncN, eps, decay="constant", shear=0.0, alpha=0.5, K0=None, C0=1.0):
    """Dyadic family with first coordinate ``t + eps_i t (1 - t)(1 + shear y)``.

    ``K0`` defaults to the exact infimum of ``|F1x| - alpha |F1y|``, which is
    attained at the right edge of the first branch: ``2 (1 - eps_1 (1 + shear))``.
    """
    if int(truncN) != truncN or truncN < 2:
        raise InvalidArgument("truncN must be an integer >= 2")
    truncN = int(truncN)
    if not (math.isfinite(eps) and 0 <= eps < 0.2):
        raise InvalidArgument("eps must lie in [0, 0.2)")
    if not (math.isfinite(shear) and 0 <= shear < 0.2):
        raise InvalidArgument("shear must lie in [0, 0.2)")
    i = np.arange(1, truncN + 1, dtype=float)
    if decay == "constant":
        eps_i = np.full(truncN, float(eps))
    elif decay == "geometric":
        eps_i = eps * np.exp2(-i)
    else:
        raise InvalidArgument("decay must be 'constant' or 'geometric'")
    if K0 is None:
        K0 = 2.0 * (1.0 - eps_i[0] * (1.0 + shear))
    params = dict(family="perturbed", truncN=truncN, eps=eps, decay=decay, shear=shear,
                  alpha=alpha, K0=K0, C0=C0)
    name = "dyadic" if eps == 0 and shear == 0 else "perturbed"
    return _builtin_family(name, truncN, eps_i, shear, alpha, K0, C0, params)

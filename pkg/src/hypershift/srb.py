"""Orbit statistics: Birkhoff averages, Lyapunov exponent, correlation decay,
an Ulam discretisation of the transfer operator and the Gibbs/SRB comparison."""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from . import _kernels
from ._fit import geometric_fit
from .errors import InvalidArgument, NumericalFailure
from .manifolds import cylinder_sections, reference_unstable
from .map_model import Point, slope_transport

ESCAPE_WARN = 0.01
MIN_CORRELATION_LENGTH = 10 ** 6


class TruncationWarning(UserWarning):
    """Escape rate or tail mass large enough to bias the statistics."""


class StatisticsWarning(UserWarning):
    """Sample size below the recommended minimum."""


@dataclass(frozen=True, eq=False)
class Orbit:
    """Orbit ``z_0 .. z_{n-1}`` stored as arrays.

    ``symbols[k]`` is the branch of ``z_k`` (0 on escape, after which
    ``z_{k+1}`` is a fresh random point). ``slopes[k]`` is the unstable slope
    carried to ``z_k`` and ``logdu[k] = log D^u F(z_k)``.
    """
    family: object
    seed: int
    start: Point
    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    symbols: np.ndarray = field(repr=False)
    slopes: np.ndarray = field(repr=False)
    logdu: np.ndarray = field(repr=False)
    refresh: bool = True

    @property
    def length(self):
        return len(self.xs)

    @property
    def valid(self):
        return self.symbols > 0

    @property
    def escape_positions(self):
        return np.nonzero(self.symbols == 0)[0]

    @property
    def escaped(self):
        return bool(np.any(self.symbols == 0))

    @property
    def escape_rate(self):
        return float(np.mean(self.symbols == 0))

    def point(self, k):
        return Point(float(self.xs[k]), float(self.ys[k]))

    @property
    def points(self):
        return [self.point(k) for k in range(self.length)]


def simulate(fam, start=None, length=10 ** 6, seed=0, refresh=None):
    """Deterministic orbit of ``length`` points.

    Without ``start`` a random start is drawn from ``seed``. ``refresh``
    defaults to True for random starts and False for given starts, so that
    exact orbits (fixed points, periodic points) are reproduced exactly.
    """
    if int(length) != length or length < 1:
        raise InvalidArgument("length must be a positive integer")
    length = int(length)
    seed = int(seed)
    rng = np.random.default_rng(seed)
    if start is None:
        start = Point(float(rng.random()), float(rng.random()))
        refresh = True if refresh is None else refresh
    else:
        start = start if isinstance(start, Point) else Point(*start)
        refresh = False if refresh is None else refresh
    kseed = int(rng.integers(0, 2 ** 31 - 1))
    p = fam.builtin
    if p is not None:
        xs, ys, sym, sl, ldu = _kernels.orbit_builtin(
            p.left, p.right, p.scale, p.offset, p.height, p.eps, p.shear,
            start.x, start.y, 0.0, length, kseed, bool(refresh))
    else:
        xs, ys, sym, sl, ldu = _orbit_generic(fam, start, length, np.random.default_rng(kseed), refresh)
    orb = Orbit(fam, seed, start, xs, ys, sym, sl, ldu, bool(refresh))
    if orb.escape_rate > ESCAPE_WARN:
        warnings.warn(f"escape rate {orb.escape_rate:.3g} exceeds {ESCAPE_WARN}: truncN too small",
                      TruncationWarning, stacklevel=2)
    return orb


def _orbit_generic(fam, start, n, rng, refresh):
    xs, ys, sl, ldu = (np.empty(n) for _ in range(4))
    sym = np.zeros(n, np.int16)
    x, y, a = start.x, start.y, 0.0
    for k in range(n):
        xs[k], ys[k], sl[k] = x, y, a
        i = int(fam.locate(x, y))
        if i == 0:
            ldu[k] = np.nan
            x, y, a = rng.random(), rng.random(), 0.0
            continue
        j = fam.jet_indexed(np.array(i), x, y)
        d = float(j.f1x + a * j.f1y)
        ldu[k] = math.log(abs(d))
        a = float(slope_transport(j, a))
        sym[k] = i
        X = float(j.f1)
        if refresh:
            X += (2 * rng.random() - 1) * abs(float(j.f1x)) * _kernels.ULP
        x, y = min(max(X, 0.0), 1.0), min(max(float(j.f2), 0.0), 1.0)
    return xs, ys, sym, sl, ldu


@dataclass(frozen=True)
class Observable:
    """Real function on the square with a Holder exponent and constant.

    ``fn(x, y)`` is evaluated on arrays.
    """
    name: str
    fn: object = field(repr=False)
    holder_exponent: float = 1.0
    holder_constant: float = 1.0

    def __post_init__(self):
        if not 0 < self.holder_exponent <= 1:
            raise InvalidArgument("Holder exponent must lie in (0, 1]")

    def __call__(self, x, y):
        return np.broadcast_to(np.asarray(self.fn(np.asarray(x, float), np.asarray(y, float)), float),
                               np.broadcast(x, y).shape)

    def on_orbit(self, orbit):
        return self(orbit.xs, orbit.ys)

    def spot_check(self, pairs=1000, seed=0):
        """Largest ``|f(p) - f(q)| / |p - q|^gamma`` over random pairs, divided by the constant."""
        rng = np.random.default_rng(seed)
        p, q = rng.random((2, pairs, 2))
        d = np.max(np.abs(p - q), axis=1)
        df = np.abs(self(p[:, 0], p[:, 1]) - self(q[:, 0], q[:, 1]))
        return float(np.max(df / d ** self.holder_exponent) / self.holder_constant) if self.holder_constant else 0.0

    @classmethod
    def x(cls):
        return cls("x", lambda x, y: x)

    @classmethod
    def y(cls):
        return cls("y", lambda x, y: y)

    @classmethod
    def constant(cls, c=1.0):
        return cls(f"const({c:g})", lambda x, y: np.full(np.broadcast(x, y).shape, float(c)), 1.0, 0.0)


@dataclass(frozen=True)
class LogUnstableDerivative:
    """``log D^u F`` along an orbit, from the stored unstable slopes."""
    name: str = "logDu"

    def on_orbit(self, orbit):
        v = orbit.valid
        idx = np.where(v, orbit.symbols, 1).astype(np.int64)
        j = orbit.family.jet_indexed(idx, orbit.xs, orbit.ys)
        out = np.log(np.abs(j.f1x + orbit.slopes * j.f1y))
        return np.where(v, out, np.nan)


def _values(orbit, obs):
    if isinstance(obs, (int, float)):
        obs = Observable.constant(obs)
    return np.asarray(obs.on_orbit(orbit), float)


def birkhoff(orbit, obs):
    """Time average of ``obs`` over the non-escaped points of the orbit."""
    if orbit.length < 1000:
        raise InvalidArgument("Birkhoff averages need at least 1000 points")
    v = _values(orbit, obs)[orbit.valid]
    return float(np.mean(v))


def lyapunov(fam, orbit):
    """``(1/n) sum log D^u F`` with slopes carried from ``a_0 = 0`` by slope transport."""
    if orbit.length < 10 ** 4:
        raise InvalidArgument("the Lyapunov estimate needs at least 10^4 points")
    if orbit.family is not fam:
        raise InvalidArgument("orbit belongs to a different family")
    return float(np.mean(orbit.logdu[orbit.valid]))


def entropy_check(fam, orbit):
    """``|birkhoff(log D^u F) - lyapunov|``: the two sides of the entropy formula on one data stream."""
    return abs(birkhoff(orbit, LogUnstableDerivative()) - lyapunov(fam, orbit))


@dataclass(frozen=True)
class DecayFit:
    lags: tuple
    correlations: tuple
    fitted_c: float
    fitted_eta: float
    method: str
    status: str = "ok"
    noise_floor: float = 0.0
    residual: float = 0.0
    used_lags: tuple = ()
    eigenvalues: tuple = ()
    correlation_eta: float = math.nan
    note: str = ""

    def __post_init__(self):
        if self.method not in ("orbit", "operator"):
            raise InvalidArgument("method is 'orbit' or 'operator'")
        if self.status not in ("ok", "zero", "noise"):
            raise InvalidArgument("status is 'ok', 'zero' or 'noise'")

    @property
    def ok(self):
        return self.status in ("ok", "zero")


def _check_lags(lags):
    lags = tuple(int(n) for n in lags)
    if not lags or min(lags) < 0 or max(lags) > 20:
        raise InvalidArgument("lags must lie in 0..20")
    return lags


def orbit_correlations(orbit, obs1, obs2, lags):
    """``C(n) = mean f(z_k) g(z_{k+n}) - mean f mean g`` over pairs of non-escaped points."""
    f = _values(orbit, obs1)
    g = _values(orbit, obs2)
    v = orbit.valid
    out = []
    for n in lags:
        m = v[:len(v) - n] & v[n:]
        a = f[:len(f) - n][m]
        b = g[n:][m]
        out.append(float(np.mean((a - a.mean()) * (b - b.mean()))))
    return np.array(out)


def _fit_correlations(lags, corr, floor, method, **extra):
    lags = np.asarray(lags)
    corr = np.asarray(corr)
    if np.all(np.abs(corr) <= floor) and np.all(np.abs(corr) < 1e-14):
        return DecayFit(tuple(lags.tolist()), tuple(corr.tolist()), 0.0, 0.0, method, "zero", floor,
                        note="observable has zero variance", **extra)
    keep = np.abs(corr) > floor
    if keep.sum() < 2:
        return DecayFit(tuple(lags.tolist()), tuple(corr.tolist()), math.nan, math.nan, method, "noise",
                        floor, note=f"fewer than two lags above the noise floor {floor:.3g}", **extra)
    f = geometric_fit(lags[keep], np.abs(corr[keep]))
    return DecayFit(tuple(lags.tolist()), tuple(corr.tolist()), f.c, f.theta, method, "ok", floor,
                    f.residual, tuple(lags[keep].tolist()), **extra)


def correlation(fam, obs1, obs2, orbit_length, lags=range(0, 11), seed=0, orbit=None):
    """Correlation decay from one long orbit.

    Lags with ``|C(n)|`` below ``3 / sqrt(N)`` are excluded and ``(C, eta)``
    is fitted log-linearly on the rest. Status ``noise`` means fewer than two
    lags remain.
    """
    lags = _check_lags(lags)
    orbit_length = int(orbit_length)
    if orbit_length < MIN_CORRELATION_LENGTH:
        warnings.warn(f"orbit length {orbit_length} is below {MIN_CORRELATION_LENGTH}",
                      StatisticsWarning, stacklevel=2)
    if orbit is None:
        orbit = simulate(fam, None, orbit_length, seed)
    corr = orbit_correlations(orbit, obs1, obs2, lags)
    floor = 3.0 / math.sqrt(orbit.length)
    return _fit_correlations(lags, corr, floor, "orbit")


# Ulam discretisation

def _ulam_x_factor(fam, bins):
    """Bin-to-bin transition probabilities of the x-factor map.

    Row ``s``, column ``t`` holds ``|B_s ∩ f^-1 B_t| / |B_s|``. Each branch
    pulls the bin edges back exactly by its inverse; the part of ``[0, 1]``
    beyond the last branch is spread uniformly (restart at a random point).
    """
    edges = np.linspace(0.0, 1.0, bins + 1)
    rows, cols, vals = [], [], []
    covered = np.zeros(bins)
    for b in fam.branches:
        lo = float(b.domain.left[0])
        hi = float(b.domain.right[0])
        pre, _ = fam.inverse_indexed(np.full(bins + 1, b.index), edges, np.full(bins + 1, 0.5))
        pre = np.clip(pre, lo, hi)
        inner = edges[(edges > lo) & (edges < hi)]
        bp = np.union1d(pre, inner)
        mid = 0.5 * (bp[:-1] + bp[1:])
        ln = np.diff(bp)
        keep = ln > 0
        src = np.minimum((mid[keep] * bins).astype(np.int64), bins - 1)
        tgt = np.clip(np.searchsorted(pre, mid[keep]) - 1, 0, bins - 1)
        rows.append(src)
        cols.append(tgt)
        vals.append(ln[keep] * bins)
        np.add.at(covered, src, ln[keep] * bins)
    miss = np.clip(1.0 - covered, 0.0, None)
    nz = np.nonzero(miss > 0)[0]
    rows.append(np.repeat(nz, bins))
    cols.append(np.tile(np.arange(bins), len(nz)))
    vals.append(np.repeat(miss[nz] / bins, bins))
    P = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(bins, bins))
    centers = 0.5 * (edges[:-1] + edges[1:])
    return P, [centers], (bins,)


def _ulam_2d(fam, bins, ybins, per_cell, seed):
    """Monte Carlo Ulam matrix on a ``bins x ybins`` grid (x bins aligned with dyadic edges)."""
    rng = np.random.default_rng(seed)
    nc = bins * ybins
    cell = np.repeat(np.arange(nc), per_cell)
    ix, iy = cell // ybins, cell % ybins
    x = (ix + rng.random(len(cell))) / bins
    y = (iy + rng.random(len(cell))) / ybins
    idx = fam.locate(x, y)
    ok = idx > 0
    j = fam.jet_indexed(np.where(ok, idx, 1), x, y)
    X = np.clip(np.where(ok, j.f1, 0.0), 0.0, 1.0 - 1e-16)
    Y = np.clip(np.where(ok, j.f2, 0.0), 0.0, 1.0 - 1e-16)
    tgt = (X * bins).astype(np.int64) * ybins + (Y * ybins).astype(np.int64)
    rows = [cell[ok]]
    cols = [tgt[ok]]
    vals = [np.full(ok.sum(), 1.0 / per_cell)]
    miss = np.bincount(cell[~ok], minlength=nc) / per_cell
    nz = np.nonzero(miss > 0)[0]
    rows.append(np.repeat(nz, nc))
    cols.append(np.tile(np.arange(nc), len(nz)))
    vals.append(np.repeat(miss[nz] / nc, nc))
    P = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nc, nc))
    cx = (np.arange(bins) + 0.5) / bins
    cy = (np.arange(ybins) + 0.5) / ybins
    return P, [np.repeat(cx, ybins), np.tile(cy, bins)], (bins, ybins)


def ulam_matrix(fam, bins, ybins=16, per_cell=16, seed=0):
    """Row-stochastic Ulam matrix with bin centres.

    Families whose first coordinate does not depend on ``y`` (and whose
    domains are vertical strips) use the exact x-factor matrix; otherwise a
    2-D Monte Carlo matrix.
    """
    if int(bins) != bins or bins < 256 or int(bins) & (int(bins) - 1):
        raise InvalidArgument("bins must be a power of two >= 2^8")
    bins = int(bins)
    vertical = all(b.domain.is_vertical for b in fam.branches)
    if vertical and not fam.f1_depends_on_y:
        return _ulam_x_factor(fam, bins)
    return _ulam_2d(fam, bins, ybins, per_cell, seed)


def ulam_decay(fam, bins=2 ** 12, lags=range(0, 11), obs=None, k=6, seed=0):
    """Operator-method decay: leading eigenvalues of the Ulam matrix and ``C(n)``.

    ``fitted_eta`` is the modulus of the second eigenvalue;
    ``correlation_eta`` is the log-linear fit of the operator ``C(n)``.
    """
    lags = _check_lags(lags)
    obs = Observable.x() if obs is None else obs
    P, centers, shape = ulam_matrix(fam, bins, seed=seed)
    n = P.shape[0]
    ev = sla.eigs(P.T.tocsc(), k=k, which="LM", return_eigenvectors=False,
                  v0=np.full(n, 1.0 / n), maxiter=100 * n, tol=1e-14)
    ev = np.array(sorted(ev, key=lambda z: -abs(z)))
    # stationary density: power iteration from the uniform density
    pi = np.full(n, 1.0 / n)
    PT = P.T.tocsr()
    for _ in range(10_000):
        nxt = PT @ pi
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < 1e-15:
            pi = nxt
            break
        pi = nxt
    c = np.asarray(obs(centers[0], centers[1] if len(centers) > 1 else 0.5 * np.ones(n)), float)
    if np.ptp(c) == 0:
        corr = np.zeros(len(lags))
    else:
        mean = pi @ c
        psi = c - mean
        corr = np.empty(len(lags))
        w = psi.copy()
        step = 0
        for k_, lag in sorted(enumerate(lags), key=lambda t: t[1]):
            while step < lag:
                w = P @ w
                step += 1
            corr[k_] = float(pi @ (psi * w))
    lam2 = float(abs(ev[1])) if len(ev) > 1 else 0.0
    fit = _fit_correlations(lags, corr, 1e-12, "operator")
    return DecayFit(tuple(lags), tuple(corr.tolist()), fit.fitted_c, lam2, "operator",
                    "zero" if fit.status == "zero" else "ok", 1e-12, fit.residual, fit.used_lags,
                    tuple(complex(z) for z in ev), fit.fitted_eta,
                    note=f"leading eigenvalue {abs(ev[0]):.15g}; matrix size {n}")


# Gibbs versus SRB

@dataclass(frozen=True)
class GibbsRow:
    word: tuple
    visits: int
    frequency: float
    length: float

    @property
    def ratio(self):
        return self.frequency / self.length


@dataclass(frozen=True)
class GibbsReport:
    rows: tuple
    orbit_length: int
    min_ratio: float
    max_ratio: float
    rank1_min: float
    rank1_max: float

    def rank(self, r):
        return [row for row in self.rows if len(row.word) == r]


def gibbs_vs_srb(fam, max_rank=4, orbit_length=10 ** 6, seed=0, min_visits=100, orbit=None):
    """Visit frequency of each cylinder of rank ``<= max_rank`` against its ``W0u`` cross-section."""
    if not 1 <= max_rank <= 4:
        raise InvalidArgument("max_rank must lie in 1..4")
    if orbit is None:
        orbit = simulate(fam, None, orbit_length, seed)
    base = fam.truncN + 1
    ref = reference_unstable(fam)
    rows = []
    for r in range(1, max_rank + 1):
        codes = _kernels.window_codes(orbit.symbols, r, base)
        codes = codes[codes >= 0]
        if len(codes) == 0:
            continue
        u, cnt = np.unique(codes, return_counts=True)
        sel = cnt >= min_visits
        u, cnt = u[sel], cnt[sel]
        if len(u) == 0:
            continue
        words = np.empty((len(u), r), np.int64)
        c = u.copy()
        for j in range(r - 1, -1, -1):
            words[:, j] = c % base
            c //= base
        lens = cylinder_sections(fam, words, ref)
        tot = len(codes)
        for wd, n_, ln in zip(words, cnt, lens):
            rows.append(GibbsRow(tuple(int(s) for s in wd), int(n_), float(n_ / tot), float(ln)))
    if not rows:
        raise NumericalFailure("no cylinder reached the visit threshold")
    ratios = np.array([r.ratio for r in rows])
    r1 = np.array([r.ratio for r in rows if len(r.word) == 1])
    return GibbsReport(tuple(rows), orbit.length, float(ratios.min()), float(ratios.max()),
                       float(r1.min()), float(r1.max()))

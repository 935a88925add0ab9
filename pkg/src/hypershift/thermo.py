"""Thermodynamic formalism on the one-sided coding.

The geometric potential is ``phi = -log D^u F``. Its cohomologous version
``phi^u`` depends only on the future itinerary and is evaluated on the
reference unstable curve ``W0u``::

    phi^u(x) = phi(z_0) + sum_k [ phi(F^(k+1) z) - phi(F^k z') ]

where ``z`` (resp. ``z'``) is the point of ``W0u`` on the stable curve of
``x`` (resp. of the shifted word ``sigma x``). Both orbit pieces are
computed by `_curves.solve_segments`, so the series is evaluated without
interpolating stable curves.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import _curves
from ._fit import geometric_fit
from .errors import HolderFailure, InvalidArgument, NumericalFailure
from .manifolds import ManifoldCurve, cylinder_sections, reference_unstable
from .map_model import Point, _series, locate_branch, slope_transport, unstable_derivative
from .symbolic import (Word, check_finitely_many_images, check_topological_mixing, is_mixing,
                       itinerary, transition_structure)


@dataclass(frozen=True, eq=False)
class PotentialContext:
    family: object
    reference_unstable: ManifoldCurve
    series_tolerance: float = 1e-10
    max_series_terms: int = 60
    potential_shift: float = 0.0
    potential_index_shift: float = 0.0

    def __post_init__(self):
        if not self.series_tolerance > 0:
            raise InvalidArgument("series tolerance must be positive")
        if self.reference_unstable.kind != "unstable":
            raise InvalidArgument("the reference curve must be unstable")

    @property
    def start_curve(self):
        return self.reference_unstable.ordinate, self.reference_unstable.slopes

    @property
    def shifted(self):
        return self.potential_shift != 0.0 or self.potential_index_shift != 0.0


def make_context(fam, series_tolerance=1e-10, max_series_terms=60, potential_shift=0.0,
                 potential_index_shift=0.0, reference_depth=30):
    return PotentialContext(fam, reference_unstable(fam, reference_depth), series_tolerance,
                            max_series_terms, potential_shift, potential_index_shift)


def _phi(ctx, idx, x, y, a):
    jet = ctx.family.jet_indexed(idx, x, y)
    v = -np.log(unstable_derivative(jet, a))
    if ctx.shifted:
        v = v + ctx.potential_shift + ctx.potential_index_shift * idx
    return v


def phi(ctx, z, a, branch=None):
    """``-log D^u F(z)`` for the unstable slope ``a`` at ``z``."""
    if abs(a) > ctx.family.alpha + 1e-12:
        raise InvalidArgument("slope outside the unstable cone")
    i = branch if branch is not None else locate_branch(ctx.family, z)
    if i is None:
        raise InvalidArgument("point is not inside a branch domain")
    return float(_phi(ctx, np.array(i), z.x, z.y, a))


def _as_word_array(words):
    w = np.atleast_2d(np.asarray(words, dtype=np.int64))
    if w.shape[1] < 2:
        raise InvalidArgument("phi_u needs words of length >= 2")
    return w


def phi_u_batch(ctx, words):
    """``phi^u`` for each row of an integer array of equal-length words."""
    w = _as_word_array(words)
    fam = ctx.family
    if np.any(w > fam.truncN) or np.any(w < 1):
        raise InvalidArgument("symbols outside the truncated alphabet")
    sc = ctx.start_curve
    x1, y1, a1 = _curves.solve_segments(fam, w, start_curve=sc)
    x2, y2, a2 = _curves.solve_segments(fam, w[:, 1:], start_curve=sc)
    p1 = _phi(ctx, w, x1, y1, a1)
    p2 = _phi(ctx, w[:, 1:], x2, y2, a2)
    terms = p1[:, 1:] - p2
    # smallest terms first
    return p1[:, 0] + np.sum(terms[:, ::-1], axis=1)


def phi_u(ctx, word):
    """``phi^u`` of a one-sided word truncated at ``len(word)`` symbols."""
    return float(phi_u_batch(ctx, [tuple(Word.of(word))])[0])


def u_series(ctx, z, slope=0.0, return_terms=False):
    """Coboundary ``u(z) = sum_k phi(F^k z) - phi(F^k z0)`` with ``z0`` on ``W0u``.

    The orbit of ``z`` is followed for at most ``max_series_terms`` steps;
    both orbit pieces end on the same vertical through ``F^(L-1) z`` so that
    they share stable curves. Summation stops at the first term below the
    series tolerance.
    """
    fam = ctx.family
    it = itinerary(fam, z, ctx.max_series_terms)
    word = np.array(it.word.symbols, dtype=np.int64)
    L = len(word)
    if L < 2:
        raise InvalidArgument("the orbit of z escapes immediately")
    xe = z.x
    ye = z.y
    for k in range(L - 1):
        j = fam.jet_indexed(np.array(word[k]), xe, ye)
        xe, ye = float(j.f1), float(j.f2)
    xA, yA, _ = _curves.solve_segments(fam, word[None, :], start_y=np.array([z.y]), end_x=np.array([xe]))
    aA = np.empty(L)
    aA[0] = slope
    for k in range(1, L):
        aA[k] = slope_transport(fam.jet_indexed(np.array(word[k - 1]), xA[0, k - 1], yA[0, k - 1]), aA[k - 1])
    xB, yB, aB = _curves.solve_segments(fam, word[None, :], start_curve=ctx.start_curve, end_x=np.array([xe]))
    terms = _phi(ctx, word, xA[0], yA[0], aA) - _phi(ctx, word, xB[0], yB[0], aB[0])
    small = np.nonzero(np.abs(terms) < ctx.series_tolerance)[0]
    if len(small) == 0:
        raise HolderFailure(f"u-series terms do not decay below {ctx.series_tolerance} in {L} steps")
    n = int(small[0]) + 1
    total = float(np.sum(terms[:n][::-1]))
    return (total, terms[:n]) if return_terms else total


@dataclass(frozen=True)
class HolderEstimate:
    per_n: tuple
    fitted_c: float
    fitted_theta: float
    residual: float
    exact: bool = False

    @property
    def values(self):
        return np.array([v for _, v in self.per_n])


def _random_symbols(rng, shape, max_symbol):
    p = np.exp2(-np.arange(1, max_symbol + 1, dtype=float))
    return rng.choice(np.arange(1, max_symbol + 1), size=shape, p=p / p.sum())


def holder_variation(ctx, n_max, samples_per_cyl=6, seed=0, prefixes=12, tail=8, max_symbol=6,
                     fit_from=2):
    """``V_n(phi^u)`` for ``n = 1..n_max`` and a geometric fit ``V_n ~ C theta^n``.

    Words of length ``n_max + tail`` are generated from base words: for every
    base, every ``n`` and every sample the first ``n`` symbols are kept and
    the rest redrawn, plus the two extreme continuations (all ones and all
    ``max_symbol``). Groups for ``n + 1`` refine groups for ``n``, so the
    sampled ``V_n`` is nonincreasing.
    """
    if n_max < 2:
        raise InvalidArgument("n_max must be >= 2")
    rng = np.random.default_rng(seed)
    ms = min(max_symbol, ctx.family.truncN)
    L = n_max + tail
    bases = _random_symbols(rng, (prefixes, L), ms)
    bases[0] = 1
    if prefixes > 1:
        bases[1] = 2
    rows = []
    for b in bases:
        for n in range(1, n_max + 1):
            for s in range(samples_per_cyl + 2):
                w = b.copy()
                if s == 0:
                    w[n:] = 1
                elif s == 1:
                    w[n:] = ms
                else:
                    w[n:] = _random_symbols(rng, L - n, ms)
                rows.append(w)
    W = np.array(rows)
    vals = phi_u_batch(ctx, W)
    per = []
    for n in range(1, n_max + 1):
        keys = [tuple(r[:n]) for r in W]
        groups = {}
        for k, v in zip(keys, vals):
            lo, hi = groups.get(k, (v, v))
            groups[k] = (min(lo, v), max(hi, v))
        per.append((n, float(max(hi - lo for lo, hi in groups.values()))))
    ns = [n for n, _ in per if n >= fit_from]
    vs = [v for n, v in per if n >= fit_from]
    f = geometric_fit(ns, vs)
    return HolderEstimate(tuple(per), f.c, f.theta, f.residual, f.exact_zero)


# periodic orbits and partition sums

def periodic_orbits(fam, words, check=True):
    """Period-L orbits for each row of ``words``; returns ``(x, y, a)`` arrays."""
    w = np.atleast_2d(np.asarray(words, dtype=np.int64))
    x, y, a = _curves.solve_segments(fam, w, cyclic=True)
    if check:
        xn = np.roll(x, -1, axis=1)
        yn = np.roll(y, -1, axis=1)
        xi, _ = fam.inverse_indexed(w, xn, yn)
        yf = fam.jet_indexed(w, x, y).f2
        res = max(float(np.max(np.abs(xi - x))), float(np.max(np.abs(yf - yn))))
        if res > 1e-10:
            raise NumericalFailure(f"periodic orbit residual {res:.3g}")
    return x, y, a


def periodic_point(fam, word):
    """The period-``len(word)`` point whose itinerary repeats ``word``."""
    w = Word.of(word)
    if len(w) == 0 or any(s > fam.truncN for s in w):
        raise InvalidArgument("word must be nonempty over the truncated alphabet")
    x, y, _ = periodic_orbits(fam, [tuple(w)])
    return Point(float(x[0, 0]), float(y[0, 0]))


def _branch_weights(ctx, n_sym):
    """``exp(phi)`` at the fixed point of each branch ``1..n_sym``."""
    fam = ctx.family
    idx = np.arange(1, n_sym + 1)
    x, y, a = periodic_orbits(fam, idx[:, None], check=False)
    return np.exp(_phi(ctx, idx, x[:, 0], y[:, 0], a[:, 0]))


def _tail_weight(ctx):
    """Series ``sum_{i > truncN} exp(phi_i)`` modelled by tail widths; ``(value, converged)``."""
    fam = ctx.family
    tm = fam.tail_model
    if tm is None:
        return 0.0, True
    c, s = ctx.potential_shift, ctx.potential_index_shift
    return _series(lambda i: tm.width_max(i) * np.exp(c + s * i), fam.truncN + 1)


@dataclass(frozen=True)
class PartitionDetail:
    value: float
    words: int
    alphabet: int
    correction: float


def _partition_detail(ctx, a, n, max_words=200_000):
    fam = ctx.family
    N = fam.truncN
    if not 1 <= a <= N:
        raise InvalidArgument("anchor must lie in the truncated alphabet")
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    if fam.locally_constant:
        w = _branch_weights(ctx, N)
        return PartitionDetail(float(w[a - 1] * math.fsum(w) ** (n - 1)), N ** (n - 1), N, 1.0)
    M = N if n == 1 else max(2, min(N, int(max_words ** (1.0 / (n - 1)))))
    tails = np.indices((M,) * (n - 1)).reshape(n - 1, -1).T + 1 if n > 1 else np.zeros((1, 0), int)
    words = np.hstack([np.full((len(tails), 1), a), tails]).astype(np.int64)
    total = 0.0
    for s in range(0, len(words), 20_000):
        chunk = words[s:s + 20_000]
        x, y, sl = periodic_orbits(fam, chunk)
        total += math.fsum(np.exp(np.sum(_phi(ctx, chunk, x, y, sl), axis=1)))
    corr = 1.0
    if M < N:
        w = _branch_weights(ctx, N)
        corr = (math.fsum(w) / math.fsum(w[:M])) ** (n - 1)
    return PartitionDetail(total * corr, len(words), M, corr)


def partition_sum(ctx, a, n):
    """``Z_n(phi, a)``: sum of ``exp(phi_n)`` over period-n points in ``E_a``.

    Locally constant potentials use the product structure
    ``Z_n = w_a (sum_i w_i)^(n-1)``. Otherwise words are enumerated over the
    first ``M`` symbols (``M^(n-1)`` bounded by 2e5) and the remaining symbols
    enter through the product correction ``(sum_{i<=N} w_i / sum_{i<=M} w_i)^(n-1)``.
    """
    return _partition_detail(ctx, a, n).value


def coboundary_gap(ctx, word, depth=48):
    """``|sum phi^u - sum phi|`` over the periodic orbit of ``word``."""
    w = tuple(Word.of(word))
    n = len(w)
    x, y, a = periodic_orbits(ctx.family, [w])
    s_phi = float(np.sum(_phi(ctx, np.array(w), x[0], y[0], a[0])))
    reps = -(-depth // n)
    rows = [(w[k:] + w[:k]) * reps for k in range(n)]
    s_u = float(np.sum(phi_u_batch(ctx, rows)))
    return abs(s_u - s_phi)


def gibbs_length_ratio(ctx, word, depth=24):
    """``exp(sum_{k<n} phi^u(sigma^k x)) / |W0u ∩ E_word|`` for ``x`` = word followed by ones."""
    w = tuple(Word.of(word))
    n = len(w)
    x = w + (1,) * (depth + 1)
    s = float(np.sum(phi_u_batch(ctx, [x[k:k + depth] for k in range(n)])))
    return math.exp(s) / float(cylinder_sections(ctx.family, [w], ctx.reference_unstable)[0])


@dataclass(frozen=True)
class PressureEstimate:
    values: tuple
    anchor: int
    lam: float
    band: tuple
    P: float
    divergent: bool = False
    tail_mass: float = 0.0
    alphabet: int = 0
    correction: float = 1.0

    @property
    def finite(self):
        return math.isfinite(self.P)


def pressure(ctx, a, n_max):
    """Pressure from ``log Z_n - log Z_(n-1)`` at ``n = n_max`` and the recurrence band ``Z_n / lambda^n``."""
    if int(n_max) != n_max or n_max < 3:
        raise InvalidArgument("n_max must be an integer >= 3")
    n_max = int(n_max)
    tw, ok = _tail_weight(ctx)
    if not ok:
        return PressureEstimate((), a, math.inf, (math.nan, math.nan), math.inf, True, math.inf)
    vals = []
    det = None
    for n in range(1, n_max + 1):
        det = _partition_detail(ctx, a, n)
        vals.append((n, det.value, math.log(det.value) / n))
    P = math.log(vals[-1][1]) - math.log(vals[-2][1])
    lam = math.exp(P)
    ratios = [z / lam ** n for n, z, _ in vals]
    w = _branch_weights(ctx, ctx.family.truncN)
    tail_mass = tw / (math.fsum(w) + tw) if tw > 0 else 0.0
    return PressureEstimate(tuple(vals), a, lam, (min(ratios), max(ratios)), P, False, tail_mass,
                            det.alphabet, det.correction)


def ruelle_apply(ctx, f, word, truncN=None):
    """``sum_{i <= truncN} exp(phi^u(i x)) f(i x)``.

    ``f`` is a number (constant function) or a callable on `Word`.
    """
    N = ctx.family.truncN if truncN is None else min(int(truncN), ctx.family.truncN)
    x = tuple(Word.of(word))
    if len(x) < 1:
        raise InvalidArgument("word must be nonempty")
    rows = [(i,) + x for i in range(1, N + 1)]
    e = np.exp(phi_u_batch(ctx, rows))
    if callable(f):
        fv = np.array([float(f(Word(r))) for r in rows])
    else:
        fv = np.full(N, float(f))
    return float(np.sum(e * fv))


def ruelle_sup(ctx, samples=1000, length=8, seed=0, max_symbol=None):
    """``max L_phi 1`` over random words; returns ``(sup, inf)``."""
    fam = ctx.family
    rng = np.random.default_rng(seed)
    ms = fam.truncN if max_symbol is None else min(max_symbol, fam.truncN)
    xs = _random_symbols(rng, (samples, length), ms)
    N = fam.truncN
    rows = np.hstack([np.repeat(np.arange(1, N + 1), samples)[:, None], np.tile(xs, (N, 1))])
    e = np.exp(phi_u_batch(ctx, rows)).reshape(N, samples)
    L1 = np.sum(e, axis=0)
    return float(L1.max()), float(L1.min())


@dataclass(frozen=True)
class HypothesisItem:
    key: str
    passed: bool
    value: float
    detail: str
    flags: tuple = ()


@dataclass(frozen=True)
class HypothesesReport:
    items: tuple
    chain: str = ("finitely many images + bounded L_phi 1 => positive recurrence; "
                  "with mixing and locally Holder potential the Gibbs/equilibrium theory applies")
    pressure: PressureEstimate = field(default=None, repr=False)
    holder: HolderEstimate = field(default=None, repr=False)

    @property
    def passed(self):
        return all(i.passed for i in self.items)

    @property
    def flags(self):
        return tuple(f for i in self.items for f in i.flags)


def verify_hypotheses(ctx, pressure_n=None, tol=1e-3, holder_n=8, ruelle_samples=1000, seed=0):
    """Check (a) mixing with finitely many images, (b) locally Holder ``phi^u``,
    (c) finite pressure near zero and (d) bounded ``L_phi 1``."""
    fam = ctx.family
    items = []
    ts = transition_structure(fam)
    rows = check_finitely_many_images(ts)
    mix = is_mixing(ts) and check_topological_mixing(ts, (1,), (fam.truncN,), fam.truncN + 4).mixing
    items.append(HypothesisItem("a", bool(mix and rows < math.inf), float(rows),
                                f"mixing={mix}, distinct rows={rows}"))
    h = holder_variation(ctx, holder_n, seed=seed)
    ok_b = h.exact or (math.isfinite(h.fitted_theta) and h.fitted_theta < 1)
    items.append(HypothesisItem("b", bool(ok_b), 0.0 if h.exact else h.fitted_theta,
                                "V_n identically zero" if h.exact else
                                f"theta={h.fitted_theta:.4g}, C={h.fitted_c:.4g}"))
    if pressure_n is None:
        pressure_n = 8 if fam.locally_constant else 6
    p = pressure(ctx, 1, pressure_n)
    flags = []
    allowance = tol
    if p.finite and p.tail_mass > 0:
        allowance = tol - math.log1p(-min(p.tail_mass, 0.999999))
    ok_c = p.finite and abs(p.P) <= allowance
    if p.correction > 1.01:
        flags.append(f"alphabet truncated to {p.alphabet} symbols (correction factor {p.correction:.4g})")
    if ok_c and abs(p.P) > tol:
        flags.append(f"pressure {p.P:.4g} within truncation allowance (tail mass {p.tail_mass:.3g})")
    items.append(HypothesisItem("c", bool(ok_c), p.P,
                                "P = +inf (tail weights diverge)" if p.divergent else
                                f"P={p.P:.6g}, band=[{p.band[0]:.4g}, {p.band[1]:.4g}]", tuple(flags)))
    sup, _ = ruelle_sup(ctx, ruelle_samples, seed=seed)
    items.append(HypothesisItem("d", bool(math.isfinite(sup)), sup, f"sup L_phi 1 = {sup:.12g}"))
    return HypothesesReport(tuple(items), pressure=p, holder=h)

"""Stable and unstable curves by graph transform, slope gaps and variation estimates."""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _curves
from ._fit import geometric_fit
from .errors import InvalidArgument
from .symbolic import MixedRect, Word, _check_word, build_cylinder, build_mixed

GRID = _curves.GRID


@dataclass(frozen=True, eq=False)
class ManifoldCurve:
    """Sampled graph: ``y(x)`` for unstable curves, ``x(y)`` for stable ones."""
    kind: str
    abscissa: np.ndarray
    ordinate: np.ndarray
    slopes: np.ndarray
    word: Word
    depth: int

    def __post_init__(self):
        if self.kind not in ("stable", "unstable"):
            raise InvalidArgument("kind is 'stable' or 'unstable'")

    def __call__(self, t):
        return np.interp(t, self.abscissa, self.ordinate)

    @property
    def max_slope(self):
        return float(np.max(np.abs(self.slopes)))


def unstable_curve(fam, neg_word, depth, seed_y=0.0, seed_slope=0.0):
    """Push the segment ``y = seed_y + seed_slope (x - 1/2)`` through the last ``depth`` symbols."""
    neg = _check_word(fam, neg_word)
    if not 1 <= depth <= len(neg):
        raise InvalidArgument("depth must lie in 1..len(neg_word)")
    ys, a = _push_seed(fam, tuple(neg.symbols[len(neg) - depth:]), float(seed_y), float(seed_slope))
    return ManifoldCurve("unstable", GRID, ys, a, neg, depth)


@lru_cache(maxsize=4096)
def _push_seed(fam, syms, seed_y, seed_slope):
    if not syms:
        ys = seed_y + seed_slope * (GRID - 0.5)
        return ys, np.full_like(GRID, seed_slope)
    ys, a = _push_seed(fam, syms[:-1], seed_y, seed_slope)
    return _curves.push_graph(fam, syms[-1], ys, a)


def stable_curve(fam, pos_word):
    """Midline of ``E_{i(n-1)}`` pulled back through ``i0 .. i(n-2)``."""
    pos = _check_word(fam, pos_word)
    xs, b = _pull_mid(fam, tuple(pos.symbols))
    return ManifoldCurve("stable", GRID, xs, b, pos, len(pos))


@lru_cache(maxsize=4096)
def _pull_mid(fam, syms):
    if len(syms) == 1:
        d = fam.branch(syms[0]).domain
        xs = 0.5 * (d.left_at(GRID) + d.right_at(GRID))
        return xs, np.gradient(xs, GRID)
    xs, b = _pull_mid(fam, syms[1:])
    return _curves.pull_graph(fam, syms[0], xs, b)


def reference_unstable(fam, depth=30):
    """``W0u``: the unstable curve through the fixed point of branch 1."""
    return unstable_curve(fam, (1,) * depth, depth)


@dataclass(frozen=True)
class GapResult:
    gap: float
    crossings: int
    slopes: np.ndarray = field(repr=False, default=None)


def slope_field_gap(fam, mixed, samples, seeds="horizontal", seed=0):
    """Largest difference of unstable slopes where sampled unstable curves cross one stable curve of ``mixed``.

    Curves are seeds pushed through ``mixed.neg_word``. ``seeds='horizontal'``
    uses horizontal seed segments at random heights; ``seeds='cone'`` also
    draws the seed slope uniformly from ``[-alpha, alpha]``, which exercises
    the contraction of slopes when the true unstable leaves are all parallel.
    """
    if not isinstance(mixed, MixedRect) or mixed.m < 1:
        raise InvalidArgument("slope gaps need a rectangle with m >= 1")
    if seeds not in ("horizontal", "cone"):
        raise InvalidArgument("seeds is 'horizontal' or 'cone'")
    rng = np.random.default_rng(seed)
    st = stable_curve(fam, mixed.pos_word)
    a_out = []
    for _ in range(int(samples)):
        y0 = rng.uniform(0.05, 0.95)
        sl = rng.uniform(-fam.alpha, fam.alpha) if seeds == "cone" else 0.0
        # keep the seed inside the unit square
        sl = float(np.clip(sl, -2 * min(y0, 1 - y0), 2 * min(y0, 1 - y0)))
        ys, a = _push_seed(fam, tuple(mixed.neg_word.symbols), y0, sl)
        x, y = _curves.cross(ys, st.ordinate)
        if mixed.strip is None or (mixed.strip.bottom_at(x) - 1e-12 <= y <= mixed.strip.top_at(x) + 1e-12):
            a_out.append(float(np.interp(x, GRID, a)))
    a_out = np.array(a_out)
    if len(a_out) < 2:
        return GapResult(float("nan"), len(a_out), a_out)
    return GapResult(float(np.ptp(a_out)), len(a_out), a_out)


def gap_sequence(fam, m_max=6, samples=16, seeds="cone", seed=0, pos_word=(1,)):
    """Slope gaps for ``m = 1..m_max``; each is the max over the rectangles with
    negative words ``1^m``, ``2 1^(m-1)`` and ``1^(m-1) 2``."""
    gaps = []
    for m in range(1, m_max + 1):
        words = {(1,) * m, (2,) + (1,) * (m - 1), (1,) * (m - 1) + (2,)}
        g = 0.0
        for w in sorted(words):
            r = build_mixed(fam, w, pos_word)
            g = max(g, slope_field_gap(fam, r, samples, seeds, seed).gap)
        gaps.append(g)
    return np.array(gaps)


@dataclass(frozen=True)
class VariationFit:
    c0: float
    theta0: float
    residual: float
    depths_used: tuple
    values: tuple = ()
    exact_zero: bool = False


def fit_decay(depths, values):
    f = geometric_fit(depths, values)
    return VariationFit(f.c, f.theta, f.residual, tuple(depths), tuple(map(float, values)), f.exact_zero)


def attractor_points(fam, neg_word, pos_word, samples, depth=30, seed=0, max_symbol=6):
    """Approximate attractor points of ``R(neg, pos)`` with their unstable slopes.

    Each point has a random past extending ``neg_word`` to ``depth`` symbols
    and a random future extending ``pos_word``; the first and last samples
    use the extreme continuations (all ones and all ``max_symbol``).
    Returns ``(x, y, a, branch)``.
    """
    neg = tuple(Word.of(neg_word).symbols)
    pos = tuple(Word.of(pos_word).symbols)
    rng = np.random.default_rng(seed)
    ms = min(max_symbol, fam.truncN)
    npast = max(depth - len(neg), 0)
    nfut = max(depth - len(pos), 1)
    past = rng.integers(1, ms + 1, (samples, npast))
    fut = rng.integers(1, ms + 1, (samples, nfut))
    if samples >= 2:
        past[0], fut[0] = 1, 1
        past[1], fut[1] = ms, ms
    W = np.hstack([past, np.tile(neg, (samples, 1)), np.tile(pos, (samples, 1)), fut]).astype(np.int64)
    y0 = rng.uniform(0.0, 1.0, samples)
    x, y, a = _curves.solve_segments(fam, W, start_y=y0)
    k = npast + len(neg)
    return x[:, k], y[:, k], a[:, k], W[:, k]


def log_du(fam, x, y, a, idx):
    j = fam.jet_indexed(idx, x, y)
    return np.log(np.abs(j.f1x + a * j.f1y))


def variation_log_Du(fam, mixed, samples=64, seed=0, depth=30):
    """Range of ``log D^u F`` over sampled attractor points of ``mixed``."""
    x, y, a, idx = attractor_points(fam, mixed.neg_word, mixed.pos_word, samples, depth, seed)
    v = log_du(fam, x, y, a, idx)
    return float(np.ptp(v))


def variation_sequence(fam, k_max=6, samples=64, seed=0):
    """Variation on the nested rectangles ``R_{1^k, 1^k}``, ``k = 1..k_max``."""
    return np.array([variation_log_Du(fam, build_mixed(fam, (1,) * k, (1,) * k), samples, seed)
                     for k in range(1, k_max + 1)])


@dataclass(frozen=True)
class RatioReport:
    """Max ratios per corollary; ``per_branch`` maps a key to per-branch maxima."""
    derivative: float      # f_ix within E_i
    width: float           # z-widths within E_i
    unstable_derivative: float
    section: float         # unstable cross-sections within E_i
    cylinder_section: float  # unstable cross-sections within depth-n cylinders
    per_branch: dict = field(default_factory=dict, repr=False)

    def as_dict(self):
        return dict(derivative=self.derivative, width=self.width,
                    unstable_derivative=self.unstable_derivative,
                    section=self.section, cylinder_section=self.cylinder_section)


def _section_length(ys, left, right):
    xl, _ = _curves.cross(ys, left)
    xr, _ = _curves.cross(ys, right)
    return xr - xl


def bounded_ratio_suite(fam, depth, max_branch=10, samples=32, seed=0):
    """Distortion-type ratio bounds, each the max over sampled pairs of points or curves."""
    if not 1 <= depth <= 6:
        raise InvalidArgument("depth must lie in 1..6")
    rng = np.random.default_rng(seed)
    nb = min(max_branch, fam.truncN)
    t = np.linspace(0.0, 1.0, 33)
    yy, tt = np.meshgrid(t, t, indexing="ij")
    curves = []
    for _ in range(samples):
        past = tuple(int(s) for s in rng.integers(1, min(6, fam.truncN) + 1, depth))
        curves.append(unstable_curve(fam, past, depth, seed_y=rng.uniform(0, 1)).ordinate)
    per = {k: [] for k in ("derivative", "width", "unstable_derivative", "section")}
    for i in range(1, nb + 1):
        d = fam.branch(i).domain
        lo, hi = d.left_at(yy), d.right_at(yy)
        jet = fam.jet_indexed(np.full(yy.shape, i), lo + tt * (hi - lo), yy)
        f1x = np.abs(jet.f1x)
        per["derivative"].append(float(f1x.max() / f1x.min()))
        w = d.width_at(t)
        per["width"].append(float(w.max() / w.min()))
        v = variation_log_Du(fam, build_mixed(fam, (), (i,)), samples, seed)
        per["unstable_derivative"].append(float(np.exp(v)))
        cyl = build_cylinder(fam, (i,))
        lens = np.array([_section_length(c, cyl.left, cyl.right) for c in curves])
        per["section"].append(float(lens.max() / lens.min()))
    cyl_ratio = 1.0
    for _ in range(8):
        word = tuple(int(s) for s in rng.integers(1, min(4, fam.truncN) + 1, depth))
        cyl = build_cylinder(fam, word)
        lens = np.array([_section_length(c, cyl.left, cyl.right) for c in curves])
        cyl_ratio = max(cyl_ratio, float(lens.max() / lens.min()))
    return RatioReport(max(per["derivative"]), max(per["width"]), max(per["unstable_derivative"]),
                       max(per["section"]), cyl_ratio, {k: tuple(v) for k, v in per.items()})


def cylinder_sections(fam, words, reference=None):
    """Length of ``W0u ∩ E_word`` for each row of ``words``."""
    ref = reference_unstable(fam) if reference is None else reference
    sc = (ref.ordinate, ref.slopes)
    w = np.atleast_2d(np.asarray(words, dtype=np.int64))
    xl = _curves.solve_segments(fam, w, start_curve=sc, end="left")[0][:, 0]
    xr = _curves.solve_segments(fam, w, start_curve=sc, end="right")[0][:, 0]
    # arc length of the graph between the two crossings
    xs = np.linspace(0.0, 1.0, len(ref.ordinate))
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(xs), np.diff(ref.ordinate)))])
    return np.interp(xr, xs, arc) - np.interp(xl, xs, arc)

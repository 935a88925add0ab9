"""Symbolic dynamics: itineraries, cylinders, strips and mixed rectangles.

Cylinders ``E_{i0..i(n-1)}`` are full-height sets whose left/right boundaries
are graphs ``x(y)``; strips ``S_{i(-m)..i(-1)}`` are full-width sets bounded
by graphs ``y(X)``. Both are sampled on the shared 257-point grid and built
recursively (with memoisation) from the graph transforms in `_curves`.
"""
from dataclasses import dataclass
from functools import lru_cache
import itertools

import numpy as np

from . import _curves
from .errors import InvalidArgument
from .map_model import _uniform_interp, apply_F, locate_branch

GRID = _curves.GRID


@dataclass(frozen=True)
class Word:
    symbols: tuple

    def __post_init__(self):
        syms = tuple(int(s) for s in self.symbols)
        if any(s < 1 for s in syms):
            raise InvalidArgument("symbols are positive integers")
        object.__setattr__(self, "symbols", syms)

    @classmethod
    def of(cls, w):
        return w if isinstance(w, Word) else cls(tuple(w))

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, k):
        r = self.symbols[k]
        return Word(r) if isinstance(k, slice) else r

    def __add__(self, other):
        return Word(self.symbols + Word.of(other).symbols)

    def __str__(self):
        return "-".join(map(str, self.symbols))


def _check_word(fam, word, allow_empty=False):
    word = Word.of(word)
    if not allow_empty and len(word) == 0:
        raise InvalidArgument("word must be nonempty")
    if any(s > fam.truncN for s in word):
        raise InvalidArgument(f"word {word} uses symbols beyond truncN = {fam.truncN}")
    return word


@dataclass(frozen=True)
class Itinerary:
    word: Word
    escaped_at: int = None

    @property
    def escaped(self):
        return self.escaped_at is not None


def itinerary(fam, z, n):
    """Symbols of ``z, F z, ..., F^(n-1) z``; stops at the first escape."""
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    syms = []
    for k in range(n):
        i = locate_branch(fam, z)
        if i is None:
            return Itinerary(Word(tuple(syms)), k)
        syms.append(i)
        z = apply_F(fam, z)
    return Itinerary(Word(tuple(syms)))


@dataclass(frozen=True, eq=False)
class CylinderRect:
    word: Word
    left: np.ndarray
    right: np.ndarray

    def left_at(self, y):
        return _uniform_interp(y, self.left)

    def right_at(self, y):
        return _uniform_interp(y, self.right)

    def width_at(self, y):
        return self.right_at(y) - self.left_at(y)

    @property
    def max_width(self):
        return float(np.max(self.right - self.left))

    def contains(self, x, y):
        return (self.left_at(y) <= x) & (x <= self.right_at(y))


@dataclass(frozen=True, eq=False)
class StripRect:
    word: Word
    bottom: np.ndarray
    top: np.ndarray

    def bottom_at(self, X):
        return _uniform_interp(X, self.bottom)

    def top_at(self, X):
        return _uniform_interp(X, self.top)

    @property
    def max_height(self):
        return float(np.max(self.top - self.bottom))


@lru_cache(maxsize=65536)
def _cylinder(fam, word):
    if len(word) == 1:
        d = fam.branch(word[0]).domain
        return d.left_at(GRID).copy(), d.right_at(GRID).copy()
    left, right = _cylinder(fam, word[1:])
    return (_curves.pull_graph(fam, word[0], left)[0],
            _curves.pull_graph(fam, word[0], right)[0])


def build_cylinder(fam, word):
    """``E_{i0 .. i(n-1)}``, by pulling back the boundaries of ``E_{i(n-1)}``."""
    word = _check_word(fam, word)
    left, right = _cylinder(fam, word)
    if np.any(right - left <= 0):
        raise InvalidArgument(f"cylinder {word} is empty")
    return CylinderRect(word, left, right)


@lru_cache(maxsize=65536)
def _strip(fam, word):
    if len(word) == 1:
        s = fam.branch(word[0]).image
        return s.bottom_at(GRID).copy(), s.top_at(GRID).copy()
    bottom, top = _strip(fam, word[:-1])
    return (_curves.push_graph(fam, word[-1], bottom)[0],
            _curves.push_graph(fam, word[-1], top)[0])


def build_strip(fam, word):
    """``S_{i(-m) .. i(-1)}`` with ``word = (i(-m), ..., i(-1))``."""
    word = _check_word(fam, word)
    bottom, top = _strip(fam, word)
    return StripRect(word, bottom, top)


@dataclass(frozen=True, eq=False)
class MixedRect:
    neg_word: Word
    pos_word: Word
    strip: StripRect
    cylinder: CylinderRect

    @property
    def m(self):
        return len(self.neg_word)

    @property
    def n(self):
        return len(self.pos_word)

    @property
    def bottom(self):
        return np.zeros_like(GRID) if self.strip is None else self.strip.bottom

    @property
    def top(self):
        return np.ones_like(GRID) if self.strip is None else self.strip.top

    @property
    def left(self):
        return self.cylinder.left

    @property
    def right(self):
        return self.cylinder.right

    def corners(self):
        """Crossings (bottom-left, bottom-right, top-left, top-right)."""
        return [_curves.cross(h, v) for h in (self.bottom, self.top) for v in (self.left, self.right)]

    def boundary_samples(self, k=129):
        (bl, br, tl, tr) = self.corners()
        pts = []
        for h, c0, c1 in ((self.bottom, bl, br), (self.top, tl, tr)):
            xs = np.linspace(c0[0], c1[0], k)
            pts.append(np.column_stack([xs, _uniform_interp(xs, h)]))
        for v, c0, c1 in ((self.left, bl, tl), (self.right, br, tr)):
            ys = np.linspace(c0[1], c1[1], k)
            pts.append(np.column_stack([_uniform_interp(ys, v), ys]))
        return np.vstack(pts)

    def diameter(self):
        """Max-norm diameter: the larger of the x- and y-extents."""
        p = self.boundary_samples()
        return float(max(np.ptp(p[:, 0]), np.ptp(p[:, 1])))

    def contains(self, x, y):
        return (self.cylinder.contains(x, y)
                & (_uniform_interp(x, self.bottom) <= y) & (y <= _uniform_interp(x, self.top)))


def build_mixed(fam, neg_word, pos_word):
    """``R = S_{neg} ∩ E_{pos}``; an empty ``neg_word`` means the whole height."""
    pos = _check_word(fam, pos_word)
    neg = _check_word(fam, neg_word, allow_empty=True)
    strip = build_strip(fam, neg) if len(neg) else None
    return MixedRect(neg, pos, strip, build_cylinder(fam, pos))


# transition structure

@dataclass(frozen=True, eq=False)
class TransitionStructure:
    """0/1 transition matrix over the truncated alphabet.

    ``tail_row`` is the common row of all symbols beyond the truncation
    (None when there is no tail).
    """
    matrix: np.ndarray
    tail_row: np.ndarray = None

    def __post_init__(self):
        a = np.asarray(self.matrix)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.all((a == 0) | (a == 1)):
            raise InvalidArgument("transition matrix must be square with 0/1 entries")
        object.__setattr__(self, "matrix", a.astype(np.int64))

    @classmethod
    def full_shift(cls, n, tail=True):
        return cls(np.ones((n, n), dtype=np.int64), np.ones(n, dtype=np.int64) if tail else None)

    @property
    def size(self):
        return self.matrix.shape[0]

    def admissible(self, word):
        w = [s - 1 for s in word]
        if any(s < 0 or s >= self.size for s in w):
            return False
        return all(self.matrix[a, b] for a, b in zip(w, w[1:]))


def transition_structure(fam):
    """Full-height domains and full-width images make every transition admissible."""
    return TransitionStructure.full_shift(fam.truncN, tail=fam.tail_model is not None)


@dataclass(frozen=True)
class MixingResult:
    mixing: bool
    first: int = None


def check_topological_mixing(ts, c1, c2, horizon):
    """Whether ``C1 ∩ T^-n C2`` is nonempty for every n from ``first`` to ``horizon``.

    Only non-overlapping times ``n >= |C1|`` are scanned, so for the full
    shift ``first == |C1|``. A positive answer also requires the final run of
    connecting times to be at least as long as the alphabet, which rules out
    periodic coincidences on short horizons.
    """
    if horizon < 1:
        raise InvalidArgument("horizon must be >= 1")
    c1, c2 = Word.of(c1), Word.of(c2)
    if not (ts.admissible(c1) and ts.admissible(c2)):
        return MixingResult(False)
    a = ts.matrix
    n0 = len(c1)
    if horizon < n0:
        return MixingResult(False)
    p = np.eye(ts.size, dtype=np.int64)
    first = None
    for n in range(n0, horizon + 1):
        p = np.minimum(p @ a, 1)
        if p[c1[-1] - 1, c2[0] - 1]:
            first = n if first is None else first
        else:
            first = None
    if first is None or horizon - first + 1 < ts.size:
        return MixingResult(False, first)
    return MixingResult(True, first)


def is_mixing(ts):
    """Primitivity test: some power of the matrix is strictly positive (Wielandt bound)."""
    n = ts.size
    p = np.minimum(ts.matrix, 1)
    for _ in range((n - 1) ** 2 + 1):
        if np.all(p > 0):
            return True
        p = np.minimum(p @ ts.matrix, 1)
    return bool(np.all(p > 0))


def check_finitely_many_images(ts):
    """Number of distinct rows, counting the tail-row class."""
    rows = {tuple(r) for r in ts.matrix}
    if ts.tail_row is not None:
        rows.add(tuple(ts.tail_row))
    return len(rows)


def words_upto(length, max_symbol):
    """All words of length 1..length over symbols 1..max_symbol."""
    for n in range(1, length + 1):
        for w in itertools.product(range(1, max_symbol + 1), repeat=n):
            yield Word(w)

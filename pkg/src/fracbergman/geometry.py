"""Intervals, the shifted dyadic grids, Carleson squares and covering.

The two grids are

    D^beta = { 2^j ([0, 1) + m + (-1)^j beta) : j, m integers },  beta in {0, 1/3}.

Every realized interval is half-open.  Index arithmetic is done exactly with
``fractions.Fraction``; floats only appear when an interval is realized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

__all__ = [
    "BETAS",
    "J_MIN",
    "J_MAX",
    "ScaleRangeError",
    "Interval",
    "Rectangle",
    "CarlesonSquare",
    "DyadicIndex",
    "as_beta",
    "dyadic_interval",
    "dyadic_parent",
    "cell_index",
    "cell_indices",
    "find_dyadic_cover",
    "find_adjacent_cover",
    "dyadic_squares_containing",
    "dyadic_indices_meeting",
]

# 2^j stays exactly representable (and far from overflow) inside this window.
J_MIN = -40
J_MAX = 40

BETAS = (Fraction(0), Fraction(1, 3))


class ScaleRangeError(ValueError):
    """A dyadic scale fell outside the supported window [J_MIN, J_MAX]."""


def as_beta(beta) -> Fraction:
    """Normalize a grid tag (0, 1/3, 0.333..., Fraction) to an exact Fraction."""
    if isinstance(beta, Fraction):
        b = beta
    elif isinstance(beta, int):
        b = Fraction(beta)
    else:
        b = Fraction(1, 3) if abs(float(beta) - 1.0 / 3.0) < 1e-12 else Fraction(float(beta))
    if b not in BETAS:
        raise ValueError(f"grid shift must be 0 or 1/3, got {beta!r}")
    return b


def _check_scale(j: int) -> None:
    if not J_MIN <= j <= J_MAX:
        raise ScaleRangeError(f"scale j={j} outside [{J_MIN}, {J_MAX}]")


def _shift(j: int, beta: Fraction) -> Fraction:
    return beta if j % 2 == 0 else -beta


@dataclass(frozen=True)
class Interval:
    """Half-open interval [left, left + length)."""

    left: float
    length: float

    def __post_init__(self):
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValueError(f"interval length must be positive and finite, got {self.length}")
        if not math.isfinite(self.left + self.length):
            raise ValueError("interval right endpoint overflows")

    @classmethod
    def from_endpoints(cls, a: float, b: float) -> "Interval":
        return cls(float(a), float(b) - float(a))

    @property
    def right(self) -> float:
        return self.left + self.length

    @property
    def exact_left(self) -> Fraction:
        return Fraction(self.left)

    @property
    def exact_right(self) -> Fraction:
        return Fraction(self.left) + Fraction(self.length)

    def contains(self, x: float) -> bool:
        return self.left <= x < self.right

    def contains_interval(self, other: "Interval") -> bool:
        return self.exact_left <= other.exact_left and other.exact_right <= self.exact_right

    def square(self) -> "CarlesonSquare":
        return CarlesonSquare(self)


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned box [x0, x1] x [y0, y1] in the closed upper half-plane."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and 0 <= self.y0 < self.y1):
            raise ValueError(f"invalid rectangle {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def contains_point(self, x: float, y: float) -> bool:
        return self.x0 <= x < self.x1 and self.y0 <= y < self.y1

    def contains_rect(self, other: "Rectangle") -> bool:
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.y0 <= other.y0 and other.y1 <= self.y1)

    def intersect(self, other: "Rectangle") -> "Rectangle | None":
        x0, x1 = max(self.x0, other.x0), min(self.x1, other.x1)
        y0, y1 = max(self.y0, other.y0), min(self.y1, other.y1)
        if x0 < x1 and y0 < y1:
            return Rectangle(x0, x1, y0, y1)
        return None

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x0, self.x1, self.y0, self.y1)


@dataclass(frozen=True)
class CarlesonSquare:
    """Q_I = I x (0, |I|), split into a top half T_I and a bottom half B_I."""

    base: Interval

    @property
    def side(self) -> float:
        return self.base.length

    def region(self) -> Rectangle:
        return Rectangle(self.base.left, self.base.right, 0.0, self.side)

    def top(self) -> Rectangle:
        return Rectangle(self.base.left, self.base.right, 0.5 * self.side, self.side)

    def bottom(self) -> Rectangle:
        return Rectangle(self.base.left, self.base.right, 0.0, 0.5 * self.side)

    def contains_point(self, x: float, y: float) -> bool:
        return self.base.contains(x) and 0 < y < self.side


@dataclass(frozen=True, order=True)
class DyadicIndex:
    """Member 2^j([0,1) + m + (-1)^j beta) of the grid D^beta."""

    beta: Fraction
    j: int
    m: int

    def __post_init__(self):
        object.__setattr__(self, "beta", as_beta(self.beta))
        _check_scale(self.j)

    @property
    def exact_left(self) -> Fraction:
        return Fraction(2) ** self.j * (self.m + _shift(self.j, self.beta))

    @property
    def exact_right(self) -> Fraction:
        return self.exact_left + Fraction(2) ** self.j

    @property
    def length(self) -> float:
        return math.ldexp(1.0, self.j)

    def interval(self) -> Interval:
        return dyadic_interval(self)

    def square(self) -> CarlesonSquare:
        return CarlesonSquare(self.interval())

    def parent(self) -> "DyadicIndex":
        return dyadic_parent(self)

    def children(self) -> tuple["DyadicIndex", "DyadicIndex"]:
        j = self.j - 1
        _check_scale(j)
        # left end of self, in units of 2^j, minus the child shift
        first = math.floor(self.exact_left / Fraction(2) ** j - _shift(j, self.beta))
        return DyadicIndex(self.beta, j, first), DyadicIndex(self.beta, j, first + 1)

    def contains_index(self, other: "DyadicIndex") -> bool:
        """True when other's interval is a subset of self's (same grid)."""
        return (self.beta == other.beta and other.j <= self.j
                and self.exact_left <= other.exact_left
                and other.exact_right <= self.exact_right)

    def neighbor(self, step: int) -> "DyadicIndex":
        return DyadicIndex(self.beta, self.j, self.m + step)


def dyadic_interval(index: DyadicIndex) -> Interval:
    """Realize a grid index as a float interval; its length is exactly 2^j."""
    return Interval(float(index.exact_left), math.ldexp(1.0, index.j))


def dyadic_parent(index: DyadicIndex) -> DyadicIndex:
    j = index.j + 1
    _check_scale(j)
    m = math.floor(index.exact_left / Fraction(2) ** j - _shift(j, index.beta))
    return DyadicIndex(index.beta, j, m)


def cell_index(x, j: int, beta) -> int:
    """Position m of the scale-j cell of D^beta containing x (exact)."""
    beta = as_beta(beta)
    _check_scale(j)
    return math.floor(Fraction(x) / Fraction(2) ** j - _shift(j, beta))


def _cell_index_left_of(x, j: int, beta: Fraction) -> int:
    # cell containing points immediately to the left of x
    return math.ceil(Fraction(x) / Fraction(2) ** j - _shift(j, beta)) - 1


def cell_indices(x: np.ndarray, j: int, beta) -> np.ndarray:
    """Vectorized float version of :func:`cell_index` (floor of scaled coordinate)."""
    beta = as_beta(beta)
    _check_scale(j)
    s = float(_shift(j, beta))
    return np.floor(np.ldexp(np.asarray(x, dtype=float), -j) - s).astype(np.int64)


def _scale_bounds(length: float) -> tuple[int, int]:
    """(e, exact) with length = mant * 2^e, mant in [1/2, 1)."""
    mant, e = math.frexp(length)
    return e, mant == 0.5


def find_dyadic_cover(interval: Interval) -> tuple[Fraction, DyadicIndex]:
    """Some J in D^0 or D^{1/3} with I inside J and |J| <= 8|I|.

    Tries beta = 0 first, then beta = 1/3; within a grid the smallest
    admissible scale wins.
    """
    e, exact = _scale_bounds(interval.length)
    j_lo = e - 1 if exact else e     # smallest j with 2^j >= |I|
    j_hi = e + 2                     # largest j with 2^j <= 8|I|
    if j_lo < J_MIN or j_hi > J_MAX:
        raise ScaleRangeError(f"interval length {interval.length} outside supported scales")
    a, b = interval.exact_left, interval.exact_right
    for beta in BETAS:
        for j in range(j_lo, j_hi + 1):
            idx = DyadicIndex(beta, j, cell_index(a, j, beta))
            if b <= idx.exact_right:
                return beta, idx
    raise AssertionError(f"no dyadic cover found for {interval}")  # pragma: no cover


def find_adjacent_cover(interval: Interval, beta) -> tuple[DyadicIndex, DyadicIndex]:
    """Adjacent I1, I2 in D^beta with |I| < |I1| = |I2| <= 2|I| covering I.

    I2 is the cell holding the last points of I, I1 its left neighbour.
    """
    beta = as_beta(beta)
    j, _ = _scale_bounds(interval.length)
    if not J_MIN <= j <= J_MAX:
        raise ScaleRangeError(f"interval length {interval.length} outside supported scales")
    right = DyadicIndex(beta, j, _cell_index_left_of(interval.exact_right, j, beta))
    return right.neighbor(-1), right


def dyadic_squares_containing(x: float, y: float, beta, j_min: int, j_max: int) -> list[DyadicIndex]:
    """Indices I in D^beta with scales in [j_min, j_max] and (x, y) in Q_I."""
    if y <= 0:
        raise ValueError("point must lie in the open upper half-plane")
    if j_min > j_max:
        raise ValueError("empty scale window")
    beta = as_beta(beta)
    out = []
    for j in range(j_min, j_max + 1):
        if y < math.ldexp(1.0, j):
            out.append(DyadicIndex(beta, j, cell_index(x, j, beta)))
    return out


def dyadic_indices_meeting(x0: float, x1: float, beta, j: int) -> Iterator[DyadicIndex]:
    """All scale-j members of D^beta whose interval meets [x0, x1)."""
    beta = as_beta(beta)
    m0 = cell_index(x0, j, beta)
    m1 = _cell_index_left_of(x1, j, beta)
    for m in range(m0, m1 + 1):
        yield DyadicIndex(beta, j, m)

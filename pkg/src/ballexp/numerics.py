"""Exact rational scalars and the three metrics used throughout the package.

Scalars are :class:`fractions.Fraction` values.  Points come in two shapes:

* a single ``Fraction`` for the interval-like spaces and the circle
  (the circle is ``[0, 1)`` with unit circumference);
* a ``tuple`` of ``Fraction`` for truncated sequence spaces, where
  coordinate ``j`` (1-based) carries weight ``2**-j``.

Nothing here rounds.  Floats only appear in :func:`as_float`, which is for
human-readable report fields.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Sequence, Tuple, Union

from .errors import ShapeError

Rational = Fraction
WordPoint = Tuple[Fraction, ...]
Point = Union[Fraction, WordPoint]

ZERO = Fraction(0)
ONE = Fraction(1)

INTERVAL = "interval"
CIRCLE = "circle"
WORD = "word"
METRIC_KINDS = (INTERVAL, CIRCLE, WORD)

_DECIMAL = re.compile(r"^(-?)(\d*)\.(\d+)$")


def rational_arith(op: str, a: Fraction, b: Fraction):
    """Apply one of ``add, sub, mul, min, max, abs, cmp`` to two rationals.

    ``abs`` ignores ``b`` and ``cmp`` returns -1, 0 or 1.  Division is
    deliberately absent.
    """
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "min":
        return min(a, b)
    if op == "max":
        return max(a, b)
    if op == "abs":
        return abs(a)
    if op == "cmp":
        return (a > b) - (a < b)
    raise ValueError(f"unknown rational operation {op!r}")


def dyadic(k: int) -> Fraction:
    """``2**k`` as an exact rational (``k`` may be negative)."""
    return Fraction(2) ** k


def interval_dist(p: Fraction, q: Fraction) -> Fraction:
    return abs(p - q)


def circle_dist(p: Fraction, q: Fraction) -> Fraction:
    d = abs(p - q) % 1
    return min(d, 1 - d)


def word_dist(p: Sequence[Fraction], q: Sequence[Fraction]) -> Fraction:
    if len(p) != len(q):
        raise ShapeError(f"word lengths differ: {len(p)} vs {len(q)}")
    best = ZERO
    w = Fraction(1, 2)
    for a, b in zip(p, q):
        d = w * abs(a - b)
        if d > best:
            best = d
        w /= 2
    return best


def metric_dist(kind: str, p: Point, q: Point) -> Fraction:
    """Distance between two points of a space of the given metric kind."""
    if kind == WORD:
        if not isinstance(p, tuple) or not isinstance(q, tuple):
            raise ShapeError("word metric needs tuple points")
        return word_dist(p, q)
    if isinstance(p, tuple) or isinstance(q, tuple):
        raise ShapeError(f"{kind} metric needs scalar points")
    if kind == INTERVAL:
        return interval_dist(p, q)
    if kind == CIRCLE:
        return circle_dist(p, q)
    raise ShapeError(f"unknown metric kind {kind!r}")


def pad_word(p: WordPoint, m: int) -> WordPoint:
    """Zero-pad a word to length ``m``.

    Padding is how a truncated word embeds into the infinite product, so
    distances between padded words equal the infinite-product distance.
    """
    if len(p) > m:
        raise ShapeError(f"cannot pad a length-{len(p)} word to {m}")
    return tuple(p) + (ZERO,) * (m - len(p))


def fmt_rational(x: Fraction) -> str:
    """Canonical ``"p/q"`` string; zero is ``"0/1"``."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"``, an integer, or a dyadic decimal such as ``"0.375"``.

    Decimals must denote a rational with a power-of-two denominator; the
    point is to reject inputs like ``"0.1"`` that a user probably did not
    mean as an exact value.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    s = str(text).strip()
    if "/" in s:
        num, den = (int(part) for part in s.split("/", 1))
        if den <= 0:
            raise ValueError(f"denominator must be positive in {s!r}")
        return Fraction(num, den)
    m = _DECIMAL.match(s)
    if m:
        value = Fraction(s)
        den = value.denominator
        if den & (den - 1):
            raise ValueError(f"decimal {s!r} is not a dyadic rational")
        return value
    return Fraction(int(s))


def fmt_point(p: Point):
    """JSON form of a point: a rational string or a list of them."""
    if isinstance(p, tuple):
        return [fmt_rational(c) for c in p]
    return fmt_rational(p)


def parse_point(obj) -> Point:
    if isinstance(obj, (list, tuple)):
        return tuple(parse_rational(c) for c in obj)
    return parse_rational(obj)


def as_float(x: Fraction) -> float:
    """Lossy rendering for human-readable report fields only."""
    return float(x)

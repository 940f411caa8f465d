"""Exact unions of closed rational intervals and branchwise pushforward/pullback."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple

from .systems import Branch

Span = Tuple[Fraction, Fraction]


def normalize(spans: Iterable[Span]) -> List[Span]:
    """Sort and merge overlapping or touching closed intervals."""
    out: List[Span] = []
    for lo, hi in sorted(s for s in spans if s[0] <= s[1]):
        if out and lo <= out[-1][1]:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


def intersect(a: Sequence[Span], b: Sequence[Span]) -> List[Span]:
    """Intersection of two normalized unions (two-pointer sweep)."""
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo <= hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return normalize(out)


def contains_all(outer: Sequence[Span], inner: Sequence[Span]) -> bool:
    """Is every interval of ``inner`` inside a single interval of ``outer``?"""
    return all(any(a <= lo and hi <= b for a, b in outer) for lo, hi in inner)


def ball(center: Fraction, radius: Fraction, circle: bool = False) -> List[Span]:
    """Closed ball as a union inside ``[0, 1]`` (wrapping on the circle)."""
    lo, hi = center - radius, center + radius
    if not circle:
        return [(lo, hi)]
    if radius >= Fraction(1, 2):
        return [(Fraction(0), Fraction(1))]
    if lo < 0:
        return normalize([(Fraction(0), hi), (lo + 1, Fraction(1))])
    if hi > 1:
        return normalize([(Fraction(0), hi - 1), (lo, Fraction(1))])
    return [(lo, hi)]


def pullback(branches: Sequence[Branch], spans: Sequence[Span]) -> List[Span]:
    """Preimage of a union under a piecewise-affine map."""
    out = []
    for br in branches:
        for a, b in spans:
            pre = br.preimage(a, b)
            if pre is not None:
                out.append(pre)
    return normalize(out)


def pushforward(branches: Sequence[Branch], spans: Sequence[Span]) -> List[Span]:
    """Image of a union under a piecewise-affine map."""
    out = []
    for br in branches:
        for a, b in spans:
            lo, hi = max(a, br.lo), min(b, br.hi)
            if lo <= hi:
                out.append(br.image(lo, hi))
    return normalize(out)


def overlaps(a: Sequence[Span], b: Sequence[Span], circle: bool = False) -> bool:
    if intersect(a, b):
        return True
    if circle:
        # 0 and 1 are the same point of the circle
        has = lambda u, x: any(lo <= x <= hi for lo, hi in u)
        return (has(a, 1) and has(b, 0)) or (has(a, 0) and has(b, 1))
    return False

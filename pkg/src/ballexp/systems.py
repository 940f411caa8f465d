"""Spaces, finite nets and the maps acting on them.

A :class:`SpaceSpec` names one of the supported compact spaces (possibly a
truncation of an infinite one), :func:`build_net` turns it into a sorted,
exact :class:`NetSpace`, and a :class:`SystemDef` is a map on the space that
can be evaluated exactly with :func:`eval_map`.
"""

from __future__ import annotations

import bisect
import dataclasses
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ContractError, DomainError, ResourceError, ShapeError, UnsupportedSystemError
from .numerics import (
    CIRCLE,
    INTERVAL,
    ONE,
    WORD,
    ZERO,
    Point,
    dyadic,
    fmt_point,
    fmt_rational,
    metric_dist,
    pad_word,
    parse_rational,
)

DEFAULT_NET_CAP = 1 << 20

SPACE_KINDS = ("interval01", "ex21_set", "ex22_set", "circle", "word_shift", "ex21_product")
CORPUS_TAGS = ("ex21", "ex21_product", "ex22", "tent", "doubling", "logistic", "shift")
TRUNCATED_KINDS = ("ex21_set", "ex22_set", "word_shift", "ex21_product")

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)
TWO = Fraction(2)


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def in_ex21_set(x: Fraction) -> bool:
    """Membership in ``{0} U {2**-n : n >= 0}``."""
    return x == 0 or (x.numerator == 1 and _is_power_of_two(x.denominator))


def ex22_level(x: Fraction) -> Optional[int]:
    """Return ``n >= 1`` with ``x`` in ``[4**-n, 2*4**-n]``, else ``None``."""
    if x <= 0 or x > HALF:
        return None
    n = 1
    lo = QUARTER
    while lo > x:
        lo /= 4
        n += 1
    return n if x <= 2 * lo else None


def in_ex22_set(x: Fraction) -> bool:
    return x == 0 or x == 2 or ex22_level(x) is not None


def ex21_values(N: int) -> List[Fraction]:
    return [ZERO] + sorted(dyadic(-n) for n in range(N + 1))


@dataclass(frozen=True)
class SpaceSpec:
    """A compact space, or a finite-depth truncation of one.

    ``N`` is the depth of the countable part (``ex21_set``, ``ex22_set`` and
    the factor of ``ex21_product``); ``m`` is the number of retained
    coordinates of a sequence space.
    """

    kind: str
    N: Optional[int] = None
    m: Optional[int] = None
    alphabet: Tuple[Fraction, ...] = ()
    description: str = ""

    def __post_init__(self):
        if self.kind not in SPACE_KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.kind in ("ex21_set", "ex22_set", "ex21_product") and (self.N is None or self.N < 1):
            raise ValueError(f"{self.kind} needs depth N >= 1")
        if self.kind in ("word_shift", "ex21_product") and (self.m is None or self.m < 1):
            raise ValueError(f"{self.kind} needs depth m >= 1")
        if self.kind == "word_shift":
            alpha = tuple(sorted(set(Fraction(a) for a in self.alphabet)))
            if ZERO not in alpha:
                raise ValueError("word_shift alphabet must contain the padding symbol 0")
            object.__setattr__(self, "alphabet", alpha)

    @property
    def metric(self) -> str:
        if self.kind == "circle":
            return CIRCLE
        if self.kind in ("word_shift", "ex21_product"):
            return WORD
        return INTERVAL

    @property
    def family(self):
        """Identity of the ambient space, ignoring truncation depths."""
        return (self.kind, self.alphabet)

    @property
    def truncated(self) -> bool:
        return self.kind in TRUNCATED_KINDS

    def factor_values(self) -> List[Fraction]:
        """Sorted coordinate values of a sequence space."""
        if self.kind == "word_shift":
            return list(self.alphabet)
        if self.kind == "ex21_product":
            return ex21_values(self.N)
        raise ShapeError(f"{self.kind} is not a sequence space")

    def contains(self, p: Point) -> bool:
        """Membership in the untruncated ambient space."""
        if self.metric == WORD:
            if not isinstance(p, tuple):
                return False
            if self.kind == "word_shift":
                return all(c in self.alphabet for c in p)
            return all(in_ex21_set(c) for c in p)
        if isinstance(p, tuple):
            return False
        if self.kind == "interval01":
            return 0 <= p <= 1
        if self.kind == "circle":
            return 0 <= p < 1
        if self.kind == "ex21_set":
            return in_ex21_set(p)
        return in_ex22_set(p)

    def pieces(self) -> List[Tuple[Fraction, Fraction]]:
        """The truncated 1-D space as sorted disjoint closed intervals."""
        if self.kind in ("interval01", "circle"):
            return [(ZERO, ONE)]
        if self.kind == "ex21_set":
            return [(v, v) for v in ex21_values(self.N)]
        if self.kind == "ex22_set":
            out = [(ZERO, ZERO)]
            out += sorted((Fraction(1, 4**n), Fraction(2, 4**n)) for n in range(1, self.N + 1))
            out.append((TWO, TWO))
            return out
        raise ShapeError(f"{self.kind} is not a 1-D space")

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.N is not None:
            out["N"] = self.N
        if self.m is not None:
            out["m"] = self.m
        if self.alphabet:
            out["alphabet"] = [fmt_rational(a) for a in self.alphabet]
        if self.description:
            out["description"] = self.description
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SpaceSpec":
        return cls(
            kind=obj["kind"],
            N=obj.get("N"),
            m=obj.get("m"),
            alphabet=tuple(parse_rational(a) for a in obj.get("alphabet", ())),
            description=obj.get("description", ""),
        )


def net_size(spec: SpaceSpec, r: int) -> int:
    if spec.kind == "interval01":
        return 2**r + 1
    if spec.kind == "circle":
        return 2**r
    if spec.kind == "ex21_set":
        return spec.N + 2
    if spec.kind == "ex22_set":
        return len(_ex22_points(spec.N, r))
    if spec.kind == "word_shift":
        return len(spec.alphabet) ** spec.m
    return (spec.N + 2) ** spec.m


def _ex22_points(N: int, r: int) -> List[Fraction]:
    pts = {ZERO, TWO}
    step = dyadic(-r)
    for n in range(1, N + 1):
        lo, hi = Fraction(1, 4**n), Fraction(2, 4**n)
        pts.update((lo, hi))
        k = -(-lo // step)
        while k * step <= hi:
            pts.add(k * step)
            k += 1
    return sorted(pts)


@dataclass(frozen=True, eq=False)
class NetSpace:
    """A finite, canonically sorted point set standing in for a space."""

    spec: SpaceSpec
    resolution: int
    points: Tuple[Point, ...]
    _index: Dict[Point, int] = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(self.points)})

    def __len__(self) -> int:
        return len(self.points)

    @property
    def metric(self) -> str:
        return self.spec.metric

    @property
    def depth(self) -> Optional[int]:
        """Word length for sequence nets."""
        return self.spec.m if self.metric == WORD else None

    @property
    def density(self) -> Fraction:
        """Upper bound on the distance from a space point to the net.

        For truncated spaces this is the size of the discarded tail, so it
        is measured against the untruncated space.
        """
        spec = self.spec
        if spec.kind in ("interval01", "circle"):
            return dyadic(-self.resolution)
        if spec.kind == "ex21_set":
            return dyadic(-(spec.N + 1))
        if spec.kind == "ex22_set":
            return max(dyadic(-self.resolution), Fraction(2, 4 ** (spec.N + 1)))
        if spec.kind == "word_shift":
            return dyadic(-(spec.m + 1)) * max(abs(a) for a in spec.alphabet)
        return max(dyadic(-(spec.m + 1)), dyadic(-(spec.N + 2)))

    def embed(self, p: Point) -> Point:
        """Bring a point of the same ambient space into this net's shape."""
        if self.metric != WORD:
            return p
        m = self.depth
        if len(p) <= m:
            return pad_word(p, m)
        if any(c != 0 for c in p[m:]):
            return p
        return tuple(p[:m])

    def index_of(self, p: Point) -> Optional[int]:
        return self._index.get(self.embed(p))

    def contains(self, p: Point) -> bool:
        return self.index_of(p) is not None

    def dist(self, p: Point, q: Point) -> Fraction:
        if self.metric == WORD:
            m = max(len(p), len(q))
            return metric_dist(WORD, pad_word(p, m), pad_word(q, m))
        return metric_dist(self.metric, p, q)

    def ball(self, center: Point, radius: Fraction) -> List[int]:
        """Sorted indices of the net points within ``radius`` of ``center``.

        ``center`` may lie off the net.  Uses sorted range queries: one
        bisection for 1-D spaces, two for the circle, and a per-coordinate
        box for the weighted sequence metric.
        """
        if radius < 0:
            return []
        pts = self.points
        if self.metric == INTERVAL:
            lo = bisect.bisect_left(pts, center - radius)
            hi = bisect.bisect_right(pts, center + radius)
            return list(range(lo, hi))
        if self.metric == CIRCLE:
            if radius >= HALF:
                return list(range(len(pts)))
            lo, hi = center - radius, center + radius
            if lo < 0:
                spans = [(ZERO, hi), (lo + 1, ONE)]
            elif hi >= 1:
                spans = [(ZERO, hi - 1), (lo, ONE)]
            else:
                spans = [(lo, hi)]
            out = set()
            for a, b in spans:
                i = bisect.bisect_left(pts, a)
                j = bisect.bisect_right(pts, b)
                out.update(range(i, j))
            return sorted(out)
        return self._word_ball(center, radius)

    def _word_ball(self, center, radius):
        m = self.depth
        vals = self.spec.factor_values()
        c = tuple(center)
        if len(c) > m:
            w = dyadic(-(m + 1))
            for extra in c[m:]:
                if w * abs(extra) > radius:
                    return []
                w /= 2
            c = c[:m]
        else:
            c = pad_word(c, m)
        allowed = []
        for j, cj in enumerate(c, start=1):
            r = radius * dyadic(j)
            lo = bisect.bisect_left(vals, cj - r)
            hi = bisect.bisect_right(vals, cj + r)
            if lo == hi:
                return []
            allowed.append(range(lo, hi))
        base = len(vals)
        out = []
        for combo in itertools.product(*allowed):
            idx = 0
            for k in combo:
                idx = idx * base + k
            out.append(idx)
        return out

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "resolution": self.resolution,
            "size": len(self.points),
            "density": fmt_rational(self.density),
            "points": [fmt_point(p) for p in self.points],
        }


def build_net(spec: SpaceSpec, resolution: int = 1, cap: int = DEFAULT_NET_CAP) -> NetSpace:
    """Exact finite net of ``spec`` at dyadic depth ``resolution``.

    The resolution only matters for continuum parts (``interval01``,
    ``circle`` and the intervals of ``ex22_set``); truncated countable and
    sequence spaces are listed exactly.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    size = net_size(spec, resolution) if spec.kind != "ex22_set" else None
    if size is not None and size > cap:
        raise ResourceError("net_size", cap, size)
    kind = spec.kind
    if kind == "interval01":
        pts = [Fraction(k, 2**resolution) for k in range(2**resolution + 1)]
    elif kind == "circle":
        pts = [Fraction(k, 2**resolution) for k in range(2**resolution)]
    elif kind == "ex21_set":
        pts = ex21_values(spec.N)
    elif kind == "ex22_set":
        pts = _ex22_points(spec.N, resolution)
        if len(pts) > cap:
            raise ResourceError("net_size", cap, len(pts))
    else:
        vals = spec.factor_values()
        pts = list(itertools.product(vals, repeat=spec.m))
    return NetSpace(spec, resolution, tuple(pts))


def refine_net(net: NetSpace, extra: int = 1, cap: int = DEFAULT_NET_CAP) -> NetSpace:
    """A net of the same ambient space, ``extra`` levels deeper.

    Truncated spaces gain depth (``N`` for countable parts, ``m`` for
    words); continuum parts gain resolution.
    """
    spec = net.spec
    if spec.kind in ("ex21_set", "ex22_set", "ex21_product"):
        spec = dataclasses.replace(spec, N=spec.N + extra)
    if spec.kind == "word_shift":
        spec = dataclasses.replace(spec, m=spec.m + extra)
    res = net.resolution + extra if spec.kind in ("interval01", "circle", "ex22_set") else net.resolution
    return build_net(spec, res, cap)


@dataclass(frozen=True)
class Branch:
    """``x -> slope * x + intercept`` on the closed interval ``[lo, hi]``.

    ``code`` records which base branches produced a composed branch.
    """

    lo: Fraction
    hi: Fraction
    slope: Fraction
    intercept: Fraction
    code: Tuple[int, ...] = ()

    def __call__(self, x: Fraction) -> Fraction:
        return self.slope * x + self.intercept

    def covers(self, x: Fraction) -> bool:
        return self.lo <= x <= self.hi

    def preimage(self, a: Fraction, b: Fraction) -> Optional[Tuple[Fraction, Fraction]]:
        """Sub-interval of the domain mapped into ``[a, b]``."""
        s, t = self.slope, self.intercept
        if s == 0:
            return (self.lo, self.hi) if a <= t <= b else None
        u, v = (a - t) / s, (b - t) / s
        if s < 0:
            u, v = v, u
        lo, hi = max(u, self.lo), min(v, self.hi)
        return (lo, hi) if lo <= hi else None

    def image(self, a: Fraction, b: Fraction) -> Tuple[Fraction, Fraction]:
        """Image of ``[a, b]`` (assumed inside the domain)."""
        u, v = self(a), self(b)
        return (u, v) if u <= v else (v, u)

    def to_json(self) -> dict:
        return {
            "lo": fmt_rational(self.lo),
            "hi": fmt_rational(self.hi),
            "slope": fmt_rational(self.slope),
            "intercept": fmt_rational(self.intercept),
            "code": list(self.code),
        }


def _corpus_branches(tag: str) -> List[Branch]:
    if tag == "tent":
        return [Branch(ZERO, HALF, TWO, ZERO, (0,)), Branch(HALF, ONE, -TWO, TWO, (1,))]
    if tag == "doubling":
        # closed lift of x -> 2x mod 1; the value 1 stands for 0
        return [Branch(ZERO, HALF, TWO, ZERO, (0,)), Branch(HALF, ONE, TWO, -ONE, (1,))]
    if tag == "ex21":
        return [Branch(ZERO, HALF, TWO, ZERO, (0,)), Branch(ONE, ONE, ZERO, ONE, (1,))]
    if tag == "ex22":
        return [
            Branch(ZERO, Fraction(1, 8), Fraction(4), ZERO, (0,)),
            Branch(QUARTER, HALF, ZERO, TWO, (1,)),
            Branch(TWO, TWO, ZERO, TWO, (2,)),
        ]
    raise UnsupportedSystemError(f"{tag} is not piecewise affine")


def compose_branches(first: Sequence[Branch], then: Sequence[Branch]) -> List[Branch]:
    """Branches of ``then o first``, with concatenated branch codes."""
    out = []
    for b in first:
        for c in then:
            dom = b.preimage(c.lo, c.hi)
            if dom is None:
                continue
            out.append(
                Branch(
                    dom[0],
                    dom[1],
                    c.slope * b.slope,
                    c.slope * b.intercept + c.intercept,
                    b.code + c.code,
                )
            )
    out.sort(key=lambda br: (br.lo, br.hi, br.code))
    return out


@dataclass(frozen=True)
class SystemDef:
    """A named map on a space: a corpus tag or user affine branches.

    ``power`` is the number of times the base map is applied, so
    ``iterate_system`` never builds closures.
    """

    name: str
    space: SpaceSpec
    tag: Optional[str] = None
    affine: Optional[Tuple[Branch, ...]] = None
    power: int = 1

    def __post_init__(self):
        if (self.tag is None) == (self.affine is None):
            raise ValueError("a system needs exactly one of a corpus tag or affine branches")
        if self.tag is not None and self.tag not in CORPUS_TAGS:
            raise ValueError(f"unknown corpus tag {self.tag!r}")
        if self.power < 1:
            raise ValueError("power must be >= 1")

    @property
    def is_piecewise_affine(self) -> bool:
        return self.affine is not None or self.tag in ("tent", "doubling", "ex21", "ex22")

    def base_branches(self) -> List[Branch]:
        if self.affine is not None:
            return list(self.affine)
        return _corpus_branches(self.tag)

    def branches(self) -> List[Branch]:
        """Affine branches of the full ``power``-fold map."""
        base = self.base_branches()
        out = base
        for _ in range(self.power - 1):
            out = compose_branches(out, base)
        return out

    def to_json(self) -> dict:
        out = {"name": self.name, "space": self.space.to_json(), "power": self.power}
        if self.tag is not None:
            out["tag"] = self.tag
        else:
            out["branches"] = [b.to_json() for b in self.affine]
        return out


def _base_eval(system: SystemDef, p: Point) -> Point:
    tag = system.tag
    if tag == "tent":
        return 1 - abs(1 - 2 * p)
    if tag == "doubling":
        return (2 * p) % 1
    if tag == "logistic":
        return 4 * p * (1 - p)
    if tag == "ex21":
        return p if p == 1 else 2 * p
    if tag == "ex22":
        return TWO if (p == 2 or QUARTER <= p <= HALF) else 4 * p
    if tag == "shift":
        return tuple(p[1:]) + (ZERO,)
    if tag == "ex21_product":
        return tuple(c if c == 1 else 2 * c for c in p)
    for br in system.affine:
        if br.covers(p):
            y = br(p)
            return y % 1 if system.space.kind == "circle" else y
    raise DomainError(f"no branch covers {p}")


def eval_map(system: SystemDef, p: Point) -> Point:
    """Exact image of ``p`` under the (possibly iterated) system map."""
    if not system.space.contains(p):
        raise DomainError(f"{fmt_point(p)} is outside the space of {system.name}")
    for _ in range(system.power):
        p = _base_eval(system, p)
    return p


def orbit(system: SystemDef, p: Point, n: int) -> List[Point]:
    """``[p, f(p), ..., f^(n-1)(p)]``."""
    out = [p]
    for _ in range(n - 1):
        p = eval_map(system, p)
        out.append(p)
    return out


def iterate_system(system: SystemDef, i: int) -> SystemDef:
    """The ``i``-fold composition of ``system`` with itself."""
    if i < 1:
        raise ValueError("iterate count must be >= 1")
    if i == 1:
        return system
    return dataclasses.replace(system, name=f"{system.name}^{i}", power=system.power * i)


def project_to_net(net: NetSpace, p: Point) -> Point:
    """Nearest net point to ``p``; ties go to the smaller point."""
    if net.metric == WORD:
        best = min(range(len(net.points)), key=lambda i: (net.dist(net.points[i], p), i))
        return net.points[best]
    pts = net.points
    k = bisect.bisect_left(pts, p)
    cand = {i for i in (k - 1, k) if 0 <= i < len(pts)}
    if net.metric == CIRCLE:
        cand.update((0, len(pts) - 1))
    best = min(cand, key=lambda i: (net.dist(pts[i], p), i))
    return pts[best]


def corpus_system(tag: str, N: int = 8, m: int = 8, alphabet=(0, 1)) -> SystemDef:
    """One of the built-in example systems."""
    if tag in ("tent", "logistic"):
        space = SpaceSpec("interval01")
    elif tag == "doubling":
        space = SpaceSpec("circle", description="unit-circumference circle [0,1)")
    elif tag == "ex21":
        space = SpaceSpec("ex21_set", N=N)
    elif tag == "ex22":
        space = SpaceSpec("ex22_set", N=N)
    elif tag == "shift":
        space = SpaceSpec("word_shift", m=m, alphabet=tuple(Fraction(a) for a in alphabet))
    elif tag == "ex21_product":
        space = SpaceSpec("ex21_product", m=m, N=N)
    else:
        raise ValueError(f"unknown corpus tag {tag!r}")
    return SystemDef(tag, space, tag=tag)


def affine_system(name: str, space: SpaceSpec, branches) -> SystemDef:
    """User piecewise-affine map on ``interval01`` or ``circle``.

    ``branches`` is a sequence of ``(lo, hi, slope, intercept)``.  The
    branches must tile ``[0, 1]``, agree where they meet (modulo 1 on the
    circle) and send the space into itself.
    """
    if space.kind not in ("interval01", "circle"):
        raise ContractError("affine systems are supported on interval01 and circle only")
    brs = []
    for i, (lo, hi, s, t) in enumerate(branches):
        lo, hi, s, t = (parse_rational(v) for v in (lo, hi, s, t))
        if lo > hi:
            raise ContractError(f"branch {i} has lo > hi")
        brs.append(Branch(lo, hi, s, t, (i,)))
    brs.sort(key=lambda b: b.lo)
    if not brs or brs[0].lo != 0 or brs[-1].hi != 1:
        raise ContractError("branches must cover [0, 1]")
    circle = space.kind == "circle"
    for a, b in zip(brs, brs[1:]):
        if a.hi != b.lo:
            raise ContractError(f"gap or overlap between branches at {a.hi} and {b.lo}")
        ya, yb = a(a.hi), b(b.lo)
        if (ya - yb) % 1 != 0 if circle else ya != yb:
            raise ContractError(f"branches disagree at {a.hi}")
    if not circle:
        for b in brs:
            for y in (b(b.lo), b(b.hi)):
                if not 0 <= y <= 1:
                    raise ContractError(f"branch on [{b.lo}, {b.hi}] leaves [0, 1]")
    brs = [dataclasses.replace(b, code=(i,)) for i, b in enumerate(brs)]
    return SystemDef(name, space, affine=tuple(brs))


def system_from_config(obj: dict) -> SystemDef:
    """Build a system from a JSON config document.

    Either ``{"system": tag, "N": .., "m": ..}`` for a corpus entry, or
    ``{"name": .., "space": {...}, "branches": [[lo, hi, slope, intercept], ...]}``.
    """
    if "system" in obj:
        return corpus_system(
            obj["system"],
            N=obj.get("N", 8),
            m=obj.get("m", 8),
            alphabet=tuple(parse_rational(a) for a in obj.get("alphabet", (0, 1))),
        )
    space = SpaceSpec.from_json(obj["space"])
    branches = []
    for b in obj["branches"]:
        if isinstance(b, dict):
            b = (b["lo"], b["hi"], b["slope"], b["intercept"])
        branches.append(tuple(b))
    return affine_system(obj.get("name", "affine"), space, branches)

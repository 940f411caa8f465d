"""Entropy estimates, the zero-entropy trichotomy, and eventually-onto / mixing checks."""

from __future__ import annotations

import csv
import io
import itertools
import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import intervals
from .chaingraph import DEFAULT_DELTA_GRID, build_transition_graph, chain_analysis
from .errors import ContractError, UnsupportedSystemError
from .numerics import dyadic, fmt_point, fmt_rational
from .systems import NetSpace, SystemDef, eval_map, orbit

POSITIVE_THRESHOLD = 0.1
ZERO_THRESHOLD = 0.05


def _orbit_table(system: SystemDef, net: NetSpace, n: int) -> List[list]:
    return [orbit(system, p, n) for p in net.points]


def _separated(net, a, b, n, eps) -> bool:
    return any(net.dist(a[i], b[i]) > eps for i in range(n))


def separated_count(system: SystemDef, net: NetSpace, n: int, eps: Fraction, _orbits=None) -> Tuple[int, List]:
    """Greedy maximal ``(n, eps)``-separated subset of the net, in canonical order.

    Returns the count and the chosen points.  The pairwise separation of
    the result is re-verified before returning.
    """
    if n < 1:
        raise ContractError("n must be >= 1")
    orbits = _orbits or _orbit_table(system, net, n)
    chosen: List[int] = []
    for i, orb in enumerate(orbits):
        if all(_separated(net, orb, orbits[j], n, eps) for j in chosen):
            chosen.append(i)
    for a, b in itertools.combinations(chosen, 2):
        if not _separated(net, orbits[a], orbits[b], n, eps):
            raise AssertionError("greedy set is not separated")
    return len(chosen), [net.points[i] for i in chosen]


def entropy_verdict(slope: float, positive: float = POSITIVE_THRESHOLD, zero: float = ZERO_THRESHOLD) -> str:
    if slope >= positive:
        return "positive"
    if slope <= zero:
        return "zero-consistent"
    return "inconclusive"


@dataclass
class EntropyEstimate:
    eps: Fraction
    n_min: int
    n_max: int
    counts: Dict[int, int]
    slope: float
    verdict: str
    thresholds: Tuple[float, float] = (POSITIVE_THRESHOLD, ZERO_THRESHOLD)

    def to_json(self) -> dict:
        return {
            "eps": fmt_rational(self.eps),
            "n_min": self.n_min,
            "n_max": self.n_max,
            "counts": {str(n): c for n, c in sorted(self.counts.items())},
            "slope": self.slope,
            "slope_note": "least-squares slope of ln s(n, eps) against n; a lower-bound estimate",
            "verdict": self.verdict,
            "thresholds": {"positive": self.thresholds[0], "zero": self.thresholds[1]},
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "count"])
        for n, c in sorted(self.counts.items()):
            w.writerow([n, c])
        return buf.getvalue()


def entropy_estimate(
    system: SystemDef,
    net: NetSpace,
    eps: Fraction,
    n_min: int,
    n_max: int,
    positive: float = POSITIVE_THRESHOLD,
    zero: float = ZERO_THRESHOLD,
) -> EntropyEstimate:
    if not 1 <= n_min < n_max:
        raise ContractError("need 1 <= n_min < n_max")
    eps = Fraction(eps)
    table = _orbit_table(system, net, n_max)
    counts = {}
    for n in range(n_min, n_max + 1):
        counts[n], _ = separated_count(system, net, n, eps, _orbits=table)
    ns = list(counts)
    slope, _ = statistics.linear_regression(ns, [math.log(counts[n]) for n in ns])
    return EntropyEstimate(eps, n_min, n_max, counts, slope, entropy_verdict(slope, positive, zero), (positive, zero))


def continuum_spacing(net: NetSpace) -> Optional[Fraction]:
    """Grid spacing of the net's continuum part, if the space has one."""
    if net.spec.kind in ("interval01", "circle", "ex22_set"):
        return dyadic(-net.resolution)
    return None


@dataclass
class TrichotomyResult:
    entropy: EntropyEstimate
    cr_by_delta: Dict[Fraction, List[int]]
    stable_cr: Optional[List]
    zero_entropy: bool
    finite_cr: bool
    bijective: bool
    stable_deltas: List[Fraction] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def verdicts(self) -> Tuple[bool, bool, bool]:
        return (self.zero_entropy, self.finite_cr, self.bijective)

    @property
    def consistent(self) -> bool:
        return len(set(self.verdicts)) == 1

    def to_json(self) -> dict:
        return {
            "zero_entropy": self.zero_entropy,
            "finite_chain_recurrent_set": self.finite_cr,
            "bijective_on_chain_recurrent_set": self.bijective,
            "consistent": self.consistent,
            "stable_cr": None if self.stable_cr is None else [fmt_point(p) for p in self.stable_cr],
            "cr_sizes": {fmt_rational(d): len(v) for d, v in self.cr_by_delta.items()},
            "stable_deltas": [fmt_rational(d) for d in self.stable_deltas],
            "entropy": self.entropy.to_json(),
            "notes": self.notes,
        }


def entropy_trichotomy(
    system: SystemDef,
    net: NetSpace,
    delta_grid: Sequence[Fraction] = DEFAULT_DELTA_GRID,
    eps: Fraction = Fraction(1, 8),
    n_range: Tuple[int, int] = (1, 4),
    tail: int = 3,
) -> TrichotomyResult:
    """Evaluate the three equivalent zero-entropy conditions on a net.

    1. the entropy estimate is zero-consistent;
    2. ``CR_delta`` is the same over the ``tail`` smallest grid values, and
       its points are isolated: pairwise further apart than twice the net
       density, so the set is not just a sampled continuum;
    3. the exact net map restricted to that set is a bijection onto it.

    On spaces with a continuum part, grid values below the dyadic grid
    spacing are dropped: there the graph only follows the exact orbits of
    the grid points (all dyadic) and stops seeing chains.
    """
    notes = []
    floor = continuum_spacing(net)
    grid = sorted({Fraction(d) for d in delta_grid if floor is None or d >= floor}, reverse=True)
    dropped = len(set(delta_grid)) - len(grid)
    if dropped:
        notes.append(f"{dropped} delta value(s) below the grid spacing {fmt_rational(floor)} ignored")
    if len(grid) < tail:
        raise ContractError(f"need at least {tail} usable delta values")
    est = entropy_estimate(system, net, eps, *n_range)

    cr = {}
    for d in grid:
        cr[d] = chain_analysis(build_transition_graph(system, net, d)).recurrent
    last = [tuple(cr[d]) for d in grid[-tail:]]
    stable = list(last[-1]) if len(set(last)) == 1 else None
    finite = False
    bijective = False
    stable_pts = None
    if stable is not None:
        stable_pts = [net.points[i] for i in stable]
        gaps = [net.dist(a, b) for a, b in itertools.combinations(stable_pts, 2)]
        finite = not gaps or min(gaps) > 2 * net.density
        images = []
        for p in stable_pts:
            j = net.index_of(eval_map(system, p))
            if j is None:
                raise ContractError("net is not invariant on the chain recurrent set")
            images.append(j)
        bijective = sorted(images) == sorted(stable)
    else:
        notes.append("CR_delta not stable over the grid tail")
    return TrichotomyResult(
        est, cr, stable_pts, est.verdict == "zero-consistent", finite, bijective,
        grid[-tail:] if stable is not None else [], notes,
    )


@dataclass(frozen=True)
class IntervalUnion:
    """Closed rational intervals (1-D systems) or cylinder prefixes (word systems)."""

    kind: str
    spans: Tuple[Tuple[Fraction, Fraction], ...] = ()
    prefixes: Tuple[Tuple[Fraction, ...], ...] = ()

    @classmethod
    def of_intervals(cls, spans) -> "IntervalUnion":
        return cls("interval", tuple(intervals.normalize((Fraction(a), Fraction(b)) for a, b in spans)))

    @classmethod
    def of_cylinders(cls, prefixes) -> "IntervalUnion":
        return cls("cylinder", prefixes=tuple(sorted(set(tuple(Fraction(c) for c in p) for p in prefixes))))

    @property
    def empty(self) -> bool:
        return not (self.spans or self.prefixes)

    def to_json(self) -> dict:
        if self.kind == "interval":
            return {"kind": "interval", "spans": [[fmt_rational(a), fmt_rational(b)] for a, b in self.spans]}
        return {"kind": "cylinder", "prefixes": [[fmt_rational(c) for c in p] for p in self.prefixes]}


def _support(system: SystemDef, U: IntervalUnion) -> str:
    if U.kind == "interval" and system.is_piecewise_affine and system.space.metric != "word":
        return "interval"
    if U.kind == "cylinder" and system.space.kind == "word_shift" and system.tag == "shift":
        return "cylinder"
    raise UnsupportedSystemError(f"no exact image iteration for {system.name} on {U.kind} sets")


def push(system: SystemDef, U: IntervalUnion) -> IntervalUnion:
    """Exact image of ``U`` under one application of the system."""
    kind = _support(system, U)
    if kind == "interval":
        W = U.spans
        for _ in range(system.power):
            W = intervals.pushforward(system.base_branches(), intervals.intersect(W, system.space.pieces()))
            if system.space.kind == "circle":
                W = _wrap(W)
        return IntervalUnion("interval", tuple(W))
    P = U.prefixes
    for _ in range(system.power):
        P = {p[1:] for p in P}
    return IntervalUnion.of_cylinders(P)


def _wrap(spans):
    # closed lift: 1 and 0 are the same circle point
    out = []
    for a, b in spans:
        if b <= 1:
            out.append((a, b))
        else:
            out.append((a, Fraction(1)))
            out.append((Fraction(0), min(b - 1, Fraction(1))))
    return intervals.normalize(out)


def is_whole(system: SystemDef, U: IntervalUnion) -> bool:
    _support(system, U)
    if U.kind == "interval":
        return intervals.contains_all(U.spans, system.space.pieces())
    if () in U.prefixes:
        return True
    k = max(len(p) for p in U.prefixes) if U.prefixes else 0
    alpha = system.space.alphabet
    return all(any(w[: len(p)] == p for p in U.prefixes) for w in itertools.product(alpha, repeat=k))


def meets(system: SystemDef, U: IntervalUnion, V: IntervalUnion) -> bool:
    if U.kind != V.kind:
        raise ContractError("sets must be of the same kind")
    if U.kind == "interval":
        return intervals.overlaps(U.spans, V.spans, system.space.kind == "circle")
    return any(p[: len(q)] == q or q[: len(p)] == p for p in U.prefixes for q in V.prefixes)


def leo_check(system: SystemDef, U: IntervalUnion, cap: int = 64) -> Optional[int]:
    """Least ``i <= cap`` with ``f^i(U)`` the whole space, or ``None``."""
    if U.empty:
        raise ContractError("U must be nonempty")
    W = U
    for i in range(cap + 1):
        if is_whole(system, W):
            return i
        W = push(system, W)
    return None


@dataclass
class MixingVerdict:
    passed: bool
    window: Tuple[int, int]
    first_miss: Optional[int]
    leo_index: Optional[int]

    def to_json(self) -> dict:
        return {"passed": self.passed, "window": list(self.window), "first_miss": self.first_miss, "leo_index": self.leo_index}


def mixing_check(
    system: SystemDef,
    U: IntervalUnion,
    V: IntervalUnion,
    window_start: Optional[int] = None,
    window_end: Optional[int] = None,
    cap: int = 64,
) -> MixingVerdict:
    """Does ``f^j(U)`` meet ``V`` for every ``j`` in the window?

    Without an explicit start the window opens at the covering index of
    ``U`` when there is one (else at 0); the default length is 10.
    """
    if U.empty or V.empty:
        raise ContractError("U and V must be nonempty")
    leo = leo_check(system, U, cap)
    start = window_start if window_start is not None else (leo or 0)
    end = window_end if window_end is not None else start + 10
    if end < start:
        raise ContractError("window end precedes its start")
    W = U
    for j in range(end + 1):
        if j >= start and not meets(system, W, V):
            return MixingVerdict(False, (start, end), j, leo)
        W = push(system, W)
    return MixingVerdict(True, (start, end), None, leo)

"""Pseudo-orbits, shadowing searches and the pullback construction.

Every check here is finite-horizon: a finite pseudo-orbit being shadowed is a
necessary condition for the infinite-orbit property, never a proof of it.

Two shadow searches are available.  ``net`` scans every net point and is the
exhaustive reference.  ``interval`` works for 1-D piecewise-affine maps: it
computes the exact set of points whose orbit stays within ``eps`` of the
pseudo-orbit by pulling balls back through the affine branches, so long
orbits of expanding maps (whose shadows are far finer than any net) can be
handled exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

from . import intervals
from .chaingraph import build_transition_graph
from .errors import ContractError, ResourceError, ShapeError, UnsupportedSystemError
from .numerics import WORD, fmt_point, fmt_rational
from .systems import NetSpace, SystemDef, eval_map, orbit, refine_net

DEFAULT_CHAIN_CAP = 200_000


@dataclass(frozen=True)
class PseudoOrbit:
    delta: Fraction
    points: tuple
    seed: Optional[int] = None

    def __len__(self):
        return len(self.points)

    def gaps(self, system: SystemDef, net: NetSpace) -> List[Fraction]:
        return [net.dist(eval_map(system, a), b) for a, b in zip(self.points, self.points[1:])]

    def validate(self, system: SystemDef, net: NetSpace) -> None:
        for i, g in enumerate(self.gaps(system, net)):
            if g > self.delta:
                raise ContractError(f"gap {fmt_rational(g)} at step {i} exceeds delta {fmt_rational(self.delta)}")


def gen_pseudo_orbit(system: SystemDef, net: NetSpace, delta: Fraction, length: int, seed: int) -> PseudoOrbit:
    """Seeded random delta-pseudo-orbit on ``net``.

    ``x_0`` is uniform on the net and each ``x_{i+1}`` is uniform on the net
    points within ``delta`` of ``f(x_i)``.  Uses :class:`random.Random`, so a
    seed reproduces the orbit exactly within this implementation.
    """
    rng = random.Random(seed)
    pts = net.points
    x = pts[rng.randrange(len(pts))]
    out = [x]
    for _ in range(length - 1):
        nbrs = net.ball(eval_map(system, x), delta)
        if not nbrs:
            raise ContractError(
                f"no net point within {fmt_rational(delta)} of f({fmt_point(x)}); delta is below the net density"
            )
        x = pts[nbrs[rng.randrange(len(nbrs))]]
        out.append(x)
    po = PseudoOrbit(Fraction(delta), tuple(out), seed)
    po.validate(system, net)
    return po


def sup_distance(system: SystemDef, net: NetSpace, x, points: Sequence) -> Fraction:
    """``max_i d(f^i(x), x_i)`` computed exactly."""
    best = Fraction(0)
    for q, p in zip(orbit(system, x, len(points)), points):
        d = net.dist(q, p)
        if d > best:
            best = d
    return best


@dataclass
class ShadowResult:
    point: object
    sup_dist: Fraction
    eps: Fraction
    method: str

    @property
    def found(self) -> bool:
        return self.sup_dist <= self.eps


def _net_search(system, net, points, eps) -> ShadowResult:
    best_x, best_d = None, None
    n = len(points)
    for x in net.points:
        q = x
        worst = Fraction(0)
        for i in range(n):
            if i:
                q = eval_map(system, q)
            d = net.dist(q, points[i])
            if d > worst:
                worst = d
                if best_d is not None and worst >= best_d:
                    break
        else:
            if best_d is None or worst < best_d:
                best_x, best_d = x, worst
    return ShadowResult(best_x, best_d, Fraction(eps), "net")


def supports_interval_search(system: SystemDef) -> bool:
    return system.is_piecewise_affine and system.space.metric != WORD


def feasible_set(system: SystemDef, points: Sequence, eps: Fraction):
    """Exact set of space points ``x`` with ``d(f^i(x), x_i) <= eps`` for all ``i``.

    Returned as a normalized interval union (on the circle, inside the
    lift ``[0, 1]``).
    """
    circle = system.space.kind == "circle"
    space = system.space.pieces()
    branches = system.branches()
    W = intervals.intersect(intervals.ball(points[-1], eps, circle), space)
    for p in reversed(points[:-1]):
        if not W:
            return []
        W = intervals.pullback(branches, W)
        W = intervals.intersect(W, intervals.intersect(intervals.ball(p, eps, circle), space))
    return W


def _pick(system, W):
    lo, hi = W[0]
    x = (lo + hi) / 2
    if system.space.kind == "circle":
        x %= 1
    if not system.space.contains(x):
        x = lo
    return x


def _interval_search(system, net, points, eps, tol) -> ShadowResult:
    eps = Fraction(eps)
    hi = eps
    W = feasible_set(system, points, hi)
    if not W:
        lo = hi
        hi = max(2 * hi, Fraction(1, 2**20))
        while not feasible_set(system, points, hi):
            lo, hi = hi, 2 * hi
    else:
        lo = Fraction(0)
    # bisection on eps; the last feasible radius gives the reported point
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if feasible_set(system, points, mid):
            hi = mid
        else:
            lo = mid
    x = _pick(system, feasible_set(system, points, hi))
    return ShadowResult(x, sup_distance(system, net, x, points), eps, "interval")


def shadow_search(
    system: SystemDef,
    net: NetSpace,
    orbit_points: Sequence,
    eps: Fraction,
    method: str = "net",
    tol: Optional[Fraction] = None,
) -> ShadowResult:
    """Best shadow of a finite sequence of points.

    ``method="net"`` returns the net point minimizing the sup-distance, ties
    to the smallest point.  ``method="interval"`` returns a space point whose
    sup-distance is within ``tol`` of the exact optimum.  ``"auto"`` picks
    ``interval`` whenever the system supports it.  The result is a shadow
    when ``result.found``.
    """
    pts = list(orbit_points.points if isinstance(orbit_points, PseudoOrbit) else orbit_points)
    if method == "auto":
        method = "interval" if supports_interval_search(system) else "net"
    if method == "net":
        return _net_search(system, net, pts, eps)
    if method == "interval":
        if not supports_interval_search(system):
            raise UnsupportedSystemError(f"interval shadow search needs a 1-D piecewise-affine map, not {system.name}")
        if tol is None:
            tol = max(Fraction(eps), Fraction(1, 2**10)) / 2**12
        return _interval_search(system, net, pts, eps, tol)
    raise ValueError(f"unknown shadow search method {method!r}")


@dataclass(frozen=True)
class ShadowingParams:
    """Ball-expanding constants and the shadowing constants they imply."""

    L: Fraction
    delta0: Fraction

    def __post_init__(self):
        if not 0 < self.L < 1:
            raise ValueError("L must lie in (0, 1)")
        if self.delta0 <= 0:
            raise ValueError("delta0 must be positive")

    @property
    def M(self) -> Fraction:
        return self.L / (1 - self.L)

    def M_i(self, i: int) -> Fraction:
        Li = self.L**i
        return Li / (1 - Li)

    def power(self, i: int) -> "ShadowingParams":
        """Constants for the ``i``-th iterate: ``L**i`` with the same ``delta0``."""
        return ShadowingParams(self.L**i, self.delta0)

    def to_json(self) -> dict:
        return {"L": fmt_rational(self.L), "delta0": fmt_rational(self.delta0), "M": fmt_rational(self.M)}


@dataclass
class ShadowingReport:
    params: Optional[ShadowingParams]
    delta: Fraction
    eps: Fraction
    slack: Fraction
    method: str
    trials: List[dict] = field(default_factory=list)
    horizon: str = "finite-horizon"

    @property
    def passed(self) -> bool:
        return all(t["pass"] for t in self.trials)

    @property
    def worst(self) -> Optional[dict]:
        if not self.trials:
            return None
        return max(self.trials, key=lambda t: (not t["pass"], t["sup_dist"] is not None and t["sup_dist"]))

    def to_json(self) -> dict:
        def trial(t):
            out = dict(t)
            out["sup_dist"] = None if t["sup_dist"] is None else fmt_rational(t["sup_dist"])
            for key in ("shadow_point", "chain"):
                if key in out and out[key] is not None:
                    out[key] = fmt_point(out[key]) if key == "shadow_point" else [fmt_point(p) for p in out[key]]
            return out

        worst = self.worst
        return {
            "params": self.params.to_json() if self.params else None,
            "delta": fmt_rational(self.delta),
            "eps": fmt_rational(self.eps),
            "slack": fmt_rational(self.slack),
            "method": self.method,
            "horizon": self.horizon,
            "trials": [trial(t) for t in self.trials],
            "worst": trial(worst) if worst else None,
            "passed": self.passed,
        }


def lipschitz_shadowing_test(
    system: SystemDef,
    net: NetSpace,
    params: ShadowingParams,
    delta: Fraction,
    trials: int = 100,
    length: int = 40,
    slack: Optional[Fraction] = None,
    seed: int = 0,
    method: str = "auto",
) -> ShadowingReport:
    """Are seeded delta-pseudo-orbits shadowed within ``M * delta + slack``?

    Trial ``t`` uses seed ``seed + t``.
    """
    delta = Fraction(delta)
    if delta > params.delta0:
        raise ContractError("delta must not exceed delta0")
    if slack is None:
        slack = 2 * net.density
    eps = params.M * delta + slack
    if method == "auto":
        method = "interval" if supports_interval_search(system) else "net"
    report = ShadowingReport(params, delta, eps, Fraction(slack), method)
    for t in range(trials):
        po = gen_pseudo_orbit(system, net, delta, length, seed + t)
        res = shadow_search(system, net, po, eps, method=method)
        if res.point is not None and sup_distance(system, net, res.point, po.points) != res.sup_dist:
            raise AssertionError("reported sup-distance does not re-verify")
        report.trials.append(
            {"seed": seed + t, "shadow_point": res.point, "sup_dist": res.sup_dist, "pass": res.found}
        )
    return report


def enumerate_chains(graph, max_len: int, cap: int = DEFAULT_CHAIN_CAP):
    """All delta-chains with 1..max_len steps, as tuples of node indices."""
    out = []
    stack = [(u,) for u in range(graph.n_nodes)]
    while stack:
        path = stack.pop()
        if len(path) > 1:
            out.append(path)
            if len(out) > cap:
                raise ResourceError("chain_count", cap, len(out))
        if len(path) <= max_len:
            for v in graph.succ[path[-1]]:
                stack.append(path + (v,))
    out.sort()
    return out


def h_shadowing_test(
    system: SystemDef,
    net: NetSpace,
    eps: Fraction,
    delta: Fraction,
    max_len: int,
    cap: int = DEFAULT_CHAIN_CAP,
    candidate_net: Optional[NetSpace] = None,
) -> ShadowingReport:
    """Endpoint-exact shadowing of every delta-chain of length <= ``max_len``.

    A chain ``(x_0..x_k)`` passes when some candidate point ``x`` has
    ``d(f^i(x), x_i) <= eps`` for ``i < k`` and ``f^k(x) = x_k`` exactly.
    On truncated spaces the deepest net points have their exact ``k``-step
    preimages cut off, so candidates default to the net refined by
    ``max_len`` levels; elsewhere they default to ``net`` itself.
    """
    if candidate_net is None:
        candidate_net = refine_net(net, max_len) if net.spec.truncated else net
    if candidate_net.spec.family != net.spec.family:
        raise ShapeError("candidate net lives in a different space")
    graph = build_transition_graph(system, net, delta)
    chains = enumerate_chains(graph, max_len, cap)
    cands = candidate_net.points
    orbits = [orbit(system, p, max_len + 1) for p in cands]
    pts = net.points
    report = ShadowingReport(None, Fraction(delta), Fraction(eps), Fraction(0), "net")
    for ch in chains:
        k = len(ch) - 1
        target = pts[ch[-1]]
        best = None
        for xi, orb in enumerate(orbits):
            if net.dist(orb[k], target) != 0:
                continue
            d = max(net.dist(orb[i], pts[ch[i]]) for i in range(k))
            if best is None or d < best[1]:
                best = (xi, d)
        ok = best is not None and best[1] <= eps
        report.trials.append(
            {
                "chain": [pts[i] for i in ch],
                "shadow_point": cands[best[0]] if best else None,
                "sup_dist": best[1] if best else None,
                "pass": ok,
                "endpoint_hit": best is not None,
            }
        )
    return report


@dataclass
class PullbackTrace:
    points: list
    margins: List[dict]
    completed: bool
    failed_step: Optional[int] = None
    slack: Fraction = Fraction(0)

    def to_json(self) -> dict:
        return {
            "points": [fmt_point(p) for p in self.points],
            "margins": [{k: fmt_rational(v) for k, v in m.items()} for m in self.margins],
            "completed": self.completed,
            "failed_step": self.failed_step,
            "slack": fmt_rational(self.slack),
        }


def pullback_trace(
    system: SystemDef,
    net: NetSpace,
    C: Sequence[int],
    x,
    params: ShadowingParams,
    steps: int,
    slack: Fraction = Fraction(0),
) -> PullbackTrace:
    """Inductive construction of points ``x_i`` near ``C`` with ``f^i(x_i)`` near ``x``.

    Step ``i`` picks ``y`` in ``C`` nearest ``x_i`` and ``z`` in ``C`` with
    ``f(z) = y``, forms the chain ``(z, x_i, f(x_i), ..., f^(i-1)(x_i), x)``
    and shadows it on the net within ``L**(i+1) * delta0 + slack``.  Margins
    record ``d(x_i, C)`` and ``d(f^i(x_i), x)`` against ``L**i * delta0``.
    """
    C = sorted(set(C))
    if not C:
        raise ContractError("C must be nonempty")
    pts = net.points
    Cpts = [pts[c] for c in C]
    image_of = {}
    for c in C:
        img = eval_map(system, pts[c])
        j = net.index_of(img)
        if j is None or j not in C:
            raise ContractError("C must be invariant on the net")
        image_of.setdefault(j, c)
    if set(image_of) != set(C):
        raise ContractError("f(C) must equal C")

    def dist_C(p):
        return min(net.dist(p, q) for q in Cpts)

    if dist_C(x) > params.delta0:
        raise ContractError("d(x, C) must not exceed delta0")

    L, d0 = params.L, params.delta0
    xi = x
    trace = [xi]
    margins = [{"dist_C": dist_C(xi), "dist_end": Fraction(0), "bound": d0}]
    for i in range(steps):
        y_idx = min(C, key=lambda c: (net.dist(xi, pts[c]), c))
        z = pts[image_of[y_idx]]
        chain = [z] + orbit(system, xi, i) + [x] if i else [z, x]
        bound = L ** (i + 1) * d0
        res = shadow_search(system, net, chain, bound + slack, method="net")
        if not res.found:
            return PullbackTrace(trace, margins, False, i + 1, Fraction(slack))
        xi = res.point
        trace.append(xi)
        end = orbit(system, xi, i + 2)[-1]
        margins.append({"dist_C": dist_C(xi), "dist_end": net.dist(end, x), "bound": bound})
    return PullbackTrace(trace, margins, True, None, Fraction(slack))

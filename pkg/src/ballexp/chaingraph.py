"""Transition graphs of one-step delta-chains and everything computed from them.

A node ``x`` of a net has an edge to ``y`` exactly when ``d(f(x), y) <= delta``.
Chain recurrence, chain components, the reachability order between them,
terminal components, omega-limits and periodic points are all read off this
graph (or off the exact functional graph when ``delta == 0`` on an invariant
net).  Results are labelled outer approximations at ``(delta, resolution)``.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import ContractError, DomainError, ResourceError, UnsupportedSystemError
from .numerics import fmt_point, fmt_rational, parse_point, parse_rational
from .systems import (
    NetSpace,
    SpaceSpec,
    SystemDef,
    build_net,
    compose_branches,
    eval_map,
)

DEFAULT_EDGE_CAP = 5_000_000
DEFAULT_DELTA_GRID = tuple(Fraction(1, 2**k) for k in range(3, 13))


@dataclass(eq=False)
class TransitionGraph:
    net: NetSpace
    system: SystemDef
    delta: Fraction
    images: List = field(repr=False)
    succ: List[List[int]] = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.succ)

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self.succ)

    def edges(self):
        for u, vs in enumerate(self.succ):
            for v in vs:
                yield u, v

    def image_node(self, u: int) -> Optional[int]:
        """Index of ``f(x_u)`` if it is itself a net point."""
        return self.net.index_of(self.images[u])

    def point(self, u: int):
        return self.net.points[u]


def build_transition_graph(
    system: SystemDef, net: NetSpace, delta: Fraction, edge_cap: int = DEFAULT_EDGE_CAP
) -> TransitionGraph:
    """Delta-transition graph of ``system`` on ``net``."""
    delta = Fraction(delta)
    if delta < 0:
        raise ContractError("delta must be non-negative")
    images = [eval_map(system, p) for p in net.points]
    succ = []
    total = 0
    for img in images:
        nbrs = net.ball(img, delta)
        total += len(nbrs)
        if total > edge_cap:
            raise ResourceError("edge_count", edge_cap, total)
        succ.append(nbrs)
    return TransitionGraph(net, system, delta, images, succ)


def tarjan_scc(succ: Sequence[Sequence[int]]) -> List[List[int]]:
    """Strongly connected components, sinks of the condensation first.

    Iterative, so deep graphs do not hit the recursion limit.
    """
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: List[int] = []
    out: List[List[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            nbrs = succ[v]
            if i < len(nbrs):
                work[-1] = (v, i + 1)
                w = nbrs[i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comp.sort()
                out.append(comp)
    return out


def _has_cycle(comp: Sequence[int], succ) -> bool:
    if len(comp) > 1:
        return True
    v = comp[0]
    return v in succ[v]


@dataclass
class ChainAnalysis:
    """Chain-recurrence structure of one transition graph.

    ``components`` are the cycle-bearing strongly connected classes, sorted by
    smallest node.  ``order`` holds pairs ``(i, j)`` of component indices with
    a path from component ``i`` to component ``j`` (``i != j``).
    """

    delta: Fraction
    n_nodes: int
    recurrent: List[int]
    components: List[Tuple[int, ...]]
    order: List[Tuple[int, int]]
    terminal: List[int]
    scc_of: List[int] = field(repr=False)
    sccs: List[List[int]] = field(repr=False)
    condensation: List[Set[int]] = field(repr=False)
    component_of_scc: Dict[int, int] = field(repr=False)

    def component_of(self, node: int) -> Optional[int]:
        return self.component_of_scc.get(self.scc_of[node])

    def to_json(self, net: NetSpace) -> dict:
        pts = net.points
        return {
            "delta": fmt_rational(self.delta),
            "resolution": net.resolution,
            "label": f"outer approximation at (delta={fmt_rational(self.delta)}, r={net.resolution})",
            "recurrent": [fmt_point(pts[i]) for i in self.recurrent],
            "components": [[fmt_point(pts[i]) for i in c] for c in self.components],
            "order": [list(p) for p in self.order],
            "terminal": list(self.terminal),
        }


def chain_analysis(graph: TransitionGraph) -> ChainAnalysis:
    succ = graph.succ
    sccs = tarjan_scc(succ)
    scc_of = [0] * len(succ)
    for k, comp in enumerate(sccs):
        for v in comp:
            scc_of[v] = k
    cond: List[Set[int]] = [set() for _ in sccs]
    for u, vs in enumerate(succ):
        su = scc_of[u]
        for v in vs:
            sv = scc_of[v]
            if sv != su:
                cond[su].add(sv)

    rec_sccs = [k for k, comp in enumerate(sccs) if _has_cycle(comp, succ)]
    rec_sccs.sort(key=lambda k: sccs[k][0])
    comp_of_scc = {k: i for i, k in enumerate(rec_sccs)}
    components = [tuple(sccs[k]) for k in rec_sccs]

    # Tarjan emits sinks first, so successors are finished before their sources.
    reach = [0] * len(sccs)
    for k in range(len(sccs)):
        bits = 0
        for t in cond[k]:
            bits |= reach[t]
            if t in comp_of_scc:
                bits |= 1 << comp_of_scc[t]
        reach[k] = bits
    order = []
    terminal = []
    for i, k in enumerate(rec_sccs):
        bits = reach[k]
        j = 0
        while bits:
            if bits & 1:
                order.append((i, j))
            bits >>= 1
            j += 1
        if not cond[k]:
            terminal.append(i)
    order.sort()
    recurrent = sorted(v for c in components for v in c)
    return ChainAnalysis(
        delta=graph.delta,
        n_nodes=len(succ),
        recurrent=recurrent,
        components=components,
        order=order,
        terminal=terminal,
        scc_of=scc_of,
        sccs=sccs,
        condensation=cond,
        component_of_scc=comp_of_scc,
    )


def _bfs(succ, sources: Iterable[int], include_sources: bool):
    """Forward search; returns ``(reached, parent)``.

    With ``include_sources=False`` only nodes at the end of a path of length
    at least one are reported.
    """
    parent: Dict[int, Optional[int]] = {}
    reached: Set[int] = set()
    queue = deque()
    for s in sorted(set(sources)):
        parent.setdefault(s, None)
        if include_sources:
            reached.add(s)
        queue.append(s)
    seen = set(parent)
    while queue:
        u = queue.popleft()
        for v in succ[u]:
            if v not in reached:
                reached.add(v)
            if v not in seen:
                seen.add(v)
                parent[v] = u
                queue.append(v)
    return reached, parent


def reachable_set(graph: TransitionGraph, S: Iterable[int]) -> Set[int]:
    """Nodes at the end of a delta-path of length >= 1 starting in ``S``."""
    S = list(S)
    if not S:
        raise ContractError("S must be nonempty")
    reached, _ = _bfs(graph.succ, S, include_sources=False)
    return reached


def _path_to(parent, v) -> List[int]:
    path = [v]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path[::-1]


@dataclass
class StabilityVerdict:
    passed: bool
    witness: Optional[int] = None
    distance: Optional[Fraction] = None
    path: List[int] = field(default_factory=list)


def _dist_to_set(net: NetSpace, p, S: Sequence[int]) -> Fraction:
    return min(net.dist(p, net.points[s]) for s in S)


def chain_stable_check(graph: TransitionGraph, S: Iterable[int], eps: Fraction) -> StabilityVerdict:
    """Do all delta-chains starting in ``S`` stay within ``eps`` of ``S``?

    On failure the witness is the smallest offending node, with a shortest
    path to it from ``S``.
    """
    S = sorted(set(S))
    if not S:
        raise ContractError("S must be nonempty")
    reached, parent = _bfs(graph.succ, S, include_sources=True)
    net = graph.net
    for v in sorted(reached):
        d = _dist_to_set(net, net.points[v], S)
        if d > eps:
            return StabilityVerdict(False, v, d, _path_to(parent, v))
    return StabilityVerdict(True)


def _exact_image_node(system: SystemDef, net: NetSpace, u: int) -> int:
    v = net.index_of(eval_map(system, net.points[u]))
    if v is None:
        raise DomainError(f"orbit of {fmt_point(net.points[u])} leaves the net")
    return v


def eventual_image(system: SystemDef, net: NetSpace, A: Iterable[int]) -> Set[int]:
    """Iterate ``A <- f(A)`` to the fixpoint ``B`` with ``f(B) = B``.

    Requires ``f(A)`` inside ``A`` on an exactly invariant part of the net.
    """
    A = set(A)
    image = {}
    for u in A:
        v = _exact_image_node(system, net, u)
        if v not in A:
            raise ContractError(f"f(A) is not inside A: {fmt_point(net.points[u])} escapes")
        image[u] = v
    current = A
    while True:
        nxt = {image[u] for u in current}
        if nxt == current:
            return current
        current = nxt


def omega_limit(system: SystemDef, net: NetSpace, x) -> List[int]:
    """The cycle that the exact orbit of net point ``x`` falls into."""
    u = net.index_of(x)
    if u is None:
        raise DomainError(f"{fmt_point(x)} is not a net point")
    seen: Dict[int, int] = {}
    seq = []
    while u not in seen:
        seen[u] = len(seq)
        seq.append(u)
        u = _exact_image_node(system, net, u)
    return sorted(seq[seen[u]:])


def chain_omega_limit(graph: TransitionGraph, x: int, analysis: Optional[ChainAnalysis] = None) -> Set[int]:
    """Nodes that end arbitrarily long delta-paths from node ``x``."""
    analysis = analysis or chain_analysis(graph)
    reached, _ = _bfs(graph.succ, [x], include_sources=True)
    rec = set(analysis.recurrent)
    seeds = [v for v in reached if v in rec]
    if not seeds:
        return set()
    closure, _ = _bfs(graph.succ, seeds, include_sources=True)
    return closure


def cr_hitting_time(
    graph: TransitionGraph, x: int, cap: Optional[int] = None, analysis: Optional[ChainAnalysis] = None
) -> Optional[int]:
    """Least ``i <= cap`` with ``f^i(x)`` in the delta-recurrent set."""
    analysis = analysis or chain_analysis(graph)
    if cap is None:
        cap = 4 * graph.n_nodes
    rec = set(analysis.recurrent)
    u = x
    for i in range(cap + 1):
        if u in rec:
            return i
        if i == cap:
            break
        u = _exact_image_node(graph.system, graph.net, u)
    return None


def cycle_period(succ, nodes: Sequence[int]) -> int:
    """gcd of cycle lengths of the strongly connected subgraph on ``nodes``."""
    members = set(nodes)
    root = nodes[0]
    level = {root: 0}
    queue = deque([root])
    g = 0
    while queue:
        u = queue.popleft()
        for v in succ[u]:
            if v not in members:
                continue
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, level[u] + 1 - level[v])
    return g


def chain_mixing_check(graph: TransitionGraph) -> bool:
    """Strong connectivity plus aperiodicity (primitivity) of the graph."""
    sccs = tarjan_scc(graph.succ)
    if len(sccs) != 1:
        return False
    return cycle_period(graph.succ, sccs[0]) == 1


@dataclass
class PeriodicReport:
    max_period: int
    exact_cycles: List[Tuple] = field(default_factory=list)
    affine_points: List[Tuple] = field(default_factory=list)
    fixed_intervals: List[Tuple] = field(default_factory=list)

    def points(self) -> Set:
        out = {p for cyc in self.exact_cycles for p in cyc}
        out.update(p for p, _, _ in self.affine_points)
        return out

    def to_json(self) -> dict:
        return {
            "max_period": self.max_period,
            "exact_cycles": [[fmt_point(p) for p in c] for c in self.exact_cycles],
            "affine_points": [
                {"point": fmt_point(p), "period": k, "code": list(code)} for p, k, code in self.affine_points
            ],
            "fixed_intervals": [
                {"lo": fmt_rational(a), "hi": fmt_rational(b), "period": k} for a, b, k in self.fixed_intervals
            ],
        }


def periodic_points_exact(system: SystemDef, net: NetSpace, max_period: int) -> PeriodicReport:
    """Cycles of length <= ``max_period`` of the exact functional graph on ``net``."""
    n = len(net)
    nxt = [net.index_of(eval_map(system, p)) for p in net.points]
    state = [0] * n  # 0 new, 1 on current walk, 2 done
    cycles = []
    for s in range(n):
        walk = []
        u = s
        while u is not None and state[u] == 0:
            state[u] = 1
            walk.append(u)
            u = nxt[u]
        if u is not None and state[u] == 1:
            cyc = walk[walk.index(u):]
            if len(cyc) <= max_period:
                k = cyc.index(min(cyc))
                cycles.append(tuple(net.points[i] for i in cyc[k:] + cyc[:k]))
        for w in walk:
            state[w] = 2
    cycles.sort()
    return PeriodicReport(max_period, exact_cycles=cycles)


def minimal_period(system: SystemDef, p, limit: int) -> Optional[int]:
    q = p
    for k in range(1, limit + 1):
        q = eval_map(system, q)
        if q == p:
            return k
    return None


def periodic_points_affine(system: SystemDef, max_period: int) -> PeriodicReport:
    """Periodic points of a piecewise-affine map by branch enumeration.

    For each period ``p`` the branches of ``f^p`` (each with its branch code)
    are composed symbolically and ``slope * x + intercept = x`` is solved
    over the rationals.  Solutions outside the branch or the space are
    dropped; survivors are verified by direct evaluation and reported with
    their primitive period and the code of that period.
    """
    if not system.is_piecewise_affine:
        raise UnsupportedSystemError(f"{system.name} is not piecewise affine")
    circle = system.space.kind == "circle"
    base = system.branches()
    report = PeriodicReport(max_period)
    found: Dict = {}
    branches = base
    for p in range(1, max_period + 1):
        if p > 1:
            branches = compose_branches(branches, base)
        for br in branches:
            s, t = br.slope, br.intercept
            if s == 1:
                if (t % 1 == 0) if circle else t == 0:
                    report.fixed_intervals.append((br.lo, br.hi, p))
                continue
            x = t / (1 - s)
            if not br.covers(x):
                continue
            if circle:
                x %= 1
            if not system.space.contains(x) or x in found:
                continue
            k = minimal_period(system, x, p)
            if k != p:
                continue
            found[x] = (p, br.code)
    report.affine_points = sorted((x, k, code) for x, (k, code) in found.items())
    return report


def code_is_consistent(system: SystemDef, x, code: Sequence[int]) -> bool:
    """Does each iterate of ``x`` lie in the base branch named by ``code``?"""
    base = system.base_branches()
    q = x
    for c in code:
        br = base[c]
        ok = br.covers(q) or (system.space.kind == "circle" and q == 0 and br.covers(Fraction(1)))
        if not ok:
            return False
        q = eval_map(SystemDef(system.name, system.space, system.tag, system.affine, 1), q)
    return True


@dataclass
class ProductChainSummary:
    """Chain structure of a coordinatewise product map, factor by factor."""

    delta: Fraction
    m: int
    factor_counts: List[int]
    factor_recurrent: List[int]
    component_count: int
    recurrent_count: int


def product_chain_summary(system: SystemDef, delta: Fraction) -> ProductChainSummary:
    """Component count of the ``ex21_product`` delta-graph via its factors.

    For the weighted sequence metric, ``d(g(x), y) <= delta`` holds exactly
    when ``|f(x_j) - y_j| <= 2**j * delta`` for every coordinate, so the
    graph is the tensor product of ``m`` one-coordinate graphs.  When every
    recurrent class of every factor is aperiodic, recurrent nodes and chain
    components of the product are products of those of the factors; this is
    checked, and a :class:`ContractError` is raised otherwise.
    """
    spec = system.space
    if system.tag != "ex21_product" or system.power != 1:
        raise UnsupportedSystemError("factor decomposition is implemented for ex21_product only")
    factor = SystemDef("ex21", SpaceSpec("ex21_set", N=spec.N), tag="ex21")
    fnet = build_net(factor.space)
    counts, recs = [], []
    for j in range(1, spec.m + 1):
        g = build_transition_graph(factor, fnet, Fraction(delta) * 2**j)
        an = chain_analysis(g)
        for comp in an.components:
            if cycle_period(g.succ, list(comp)) != 1:
                raise ContractError(f"factor {j} has a periodic chain class; decomposition does not apply")
        counts.append(len(an.components))
        recs.append(len(an.recurrent))
    return ProductChainSummary(
        delta=Fraction(delta),
        m=spec.m,
        factor_counts=counts,
        factor_recurrent=recs,
        component_count=math.prod(counts),
        recurrent_count=math.prod(recs),
    )


def clopen_margins(graph: TransitionGraph, analysis: ChainAnalysis) -> Dict[int, Optional[Fraction]]:
    """Exact distance from each terminal component to the rest of the net."""
    net = graph.net
    out = {}
    for ci in analysis.terminal:
        comp = set(analysis.components[ci])
        others = [v for v in range(len(net)) if v not in comp]
        if not others:
            out[ci] = None
            continue
        out[ci] = min(net.dist(net.points[u], net.points[v]) for u in comp for v in others)
    return out


# ---------------------------------------------------------------------------
# export


def to_edge_list(graph: TransitionGraph) -> str:
    return "".join(f"{u} {v}\n" for u, v in graph.edges())


def to_point_table(graph: TransitionGraph) -> dict:
    return {
        "system": graph.system.to_json(),
        "net": {"spec": graph.net.spec.to_json(), "resolution": graph.net.resolution},
        "delta": fmt_rational(graph.delta),
        "points": [fmt_point(p) for p in graph.net.points],
    }


def graph_to_json(graph: TransitionGraph) -> dict:
    out = to_point_table(graph)
    out["adjacency"] = [list(s) for s in graph.succ]
    return out


def graph_from_json(obj: dict) -> TransitionGraph:
    """Rebuild a graph from :func:`graph_to_json` output without re-deriving edges."""
    from .systems import system_from_config

    sysobj = obj["system"]
    if "tag" in sysobj:
        spec = SpaceSpec.from_json(sysobj["space"])
        system = SystemDef(sysobj["name"], spec, tag=sysobj["tag"], power=sysobj.get("power", 1))
    else:
        system = system_from_config({"name": sysobj["name"], "space": sysobj["space"], "branches": sysobj["branches"]})
        system = SystemDef(system.name, system.space, affine=system.affine, power=sysobj.get("power", 1))
    spec = SpaceSpec.from_json(obj["net"]["spec"])
    points = tuple(parse_point(p) for p in obj["points"])
    net = NetSpace(spec, obj["net"]["resolution"], points)
    images = [eval_map(system, p) for p in points]
    succ = [list(s) for s in obj["adjacency"]]
    return TransitionGraph(net, system, parse_rational(obj["delta"]), images, succ)


def to_dot(graph: TransitionGraph, analysis: ChainAnalysis) -> str:
    """Condensation digraph; terminal components get ``peripheries=2``.

    Transient classes are drawn as points so paths between components
    remain visible.
    """
    pts = graph.net.points
    lines = ["digraph condensation {", "  rankdir=LR;"]
    terminal = set(analysis.terminal)
    for k, scc in enumerate(analysis.sccs):
        ci = analysis.component_of_scc.get(k)
        if ci is None:
            lines.append(f'  s{k} [shape=point, label=""];')
            continue
        members = ", ".join(str(fmt_point(pts[v])).replace('"', "") for v in scc[:6])
        if len(scc) > 6:
            members += f", ... ({len(scc)} nodes)"
        attrs = [f'label="C{ci}: {{{members}}}"', "shape=box"]
        if ci in terminal:
            attrs.append("peripheries=2")
        lines.append(f"  s{k} [{', '.join(attrs)}];")
    for k, targets in enumerate(analysis.condensation):
        for t in sorted(targets):
            lines.append(f"  s{k} -> s{t};")
    lines.append("}")
    return "\n".join(lines) + "\n"

"""The corpus acceptance suite: one function per criterion, A1 through A13.

Each criterion returns a :class:`CriterionResult`; :func:`run_suite` runs a
selection in order, timing each one and recording errors instead of
stopping.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

from .chaingraph import (
    DEFAULT_EDGE_CAP,
    build_transition_graph,
    chain_analysis,
    chain_mixing_check,
    clopen_margins,
    cr_hitting_time,
    periodic_points_affine,
    periodic_points_exact,
    product_chain_summary,
)
from .errors import ResourceError
from .expanding import ball_expanding_check
from .globalprops import IntervalUnion, entropy_estimate, entropy_trichotomy, leo_check, mixing_check
from .numerics import dyadic, fmt_point, fmt_rational
from .shadowing import ShadowingParams, h_shadowing_test, lipschitz_shadowing_test
from .systems import DEFAULT_NET_CAP, SpaceSpec, build_net, corpus_system, iterate_system

F = Fraction

# caps applied to every net and graph the suite builds; see ``run_suite``
CAPS = {"net_size": DEFAULT_NET_CAP, "edge_count": DEFAULT_EDGE_CAP}


def _net(spec, resolution=1):
    return build_net(spec, resolution, cap=CAPS["net_size"])


def _graph(system, net, delta):
    return build_transition_graph(system, net, delta, edge_cap=CAPS["edge_count"])


@dataclass
class CriterionResult:
    cid: str
    title: str
    passed: bool
    detail: Dict[str, object] = field(default_factory=dict)
    seconds: float = 0.0
    error: Optional[str] = None
    budget: Optional[float] = None

    def line(self) -> str:
        status = "PASS" if self.passed else ("ERROR" if self.error else "FAIL")
        extra = f" ({self.error})" if self.error else ""
        return f"{self.cid:<4} {status:<5} {self.seconds:7.2f}s  {self.title}{extra}"

    def to_json(self) -> dict:
        return {
            "id": self.cid,
            "title": self.title,
            "passed": self.passed,
            "seconds": round(self.seconds, 3),
            "budget_seconds": self.budget,
            "error": self.error,
            "detail": self.detail,
        }


def _check(detail: dict, key: str, ok: bool) -> bool:
    detail.setdefault("checks", {})[key] = bool(ok)
    return bool(ok)


def a1_tent_certificate() -> dict:
    t = corpus_system("tent")
    cert = ball_expanding_check(
        t, _net(t.space, 6), _net(t.space, 8), F(1, 2), F(1, 2), [dyadic(-k) for k in range(2, 7)]
    )
    return {"ok": cert.passed, "verdict": cert.verdict, "checked_triples": cert.checked}


def a2_shift_certificate() -> dict:
    s = corpus_system("shift", m=8)
    target = _net(s.space)
    cand = _net(SpaceSpec("word_shift", m=9, alphabet=s.space.alphabet))
    cert = ball_expanding_check(s, target, cand, F(1, 2), F(1, 2), [dyadic(-k) for k in range(1, 9)])
    return {"ok": cert.passed, "verdict": cert.verdict, "excluded": len(cert.excluded), "checked_triples": cert.checked}


def a3_logistic_refutation() -> dict:
    g = corpus_system("logistic")
    eta = dyadic(-12)
    cert = ball_expanding_check(g, _net(g.space, 6), _net(g.space, 8), F(1, 2), F(1, 8), [F(1, 8)], eta)
    w = cert.witness
    d = {"verdict": cert.verdict, "witness": w.to_json() if w else None, "eta": fmt_rational(eta)}
    ok = _check(d, "fails", not cert.passed)
    ok &= _check(d, "witness", w is not None and (w.x, w.delta, w.y) == (F(1, 2), F(1, 8), F(7, 8)))
    ok &= _check(d, "gap", w is not None and w.gap >= F(1, 16) - eta)
    d["ok"] = ok
    return d


def a4_ex21_structure() -> dict:
    e = corpus_system("ex21", N=16)
    net = _net(e.space)
    d: dict = {}
    common = None
    for k in range(6, 19):
        rec = set(chain_analysis(_graph(e, net, dyadic(-k))).recurrent)
        common = rec if common is None else common & rec
    common_pts = sorted(net.points[i] for i in common)
    per = sorted(periodic_points_exact(e, net, len(net)).points())
    d["intersection"] = [fmt_point(p) for p in common_pts]
    ok = _check(d, "intersection_is_0_1", common_pts == [F(0), F(1)])
    ok &= _check(d, "equals_periodic_set", common_pts == per)
    an = chain_analysis(_graph(e, net, dyadic(-10)))
    one = an.component_of(net.index_of(F(1)))
    zero = an.component_of(net.index_of(F(0)))
    d["terminal"] = [[fmt_point(net.points[i]) for i in an.components[c]] for c in an.terminal]
    ok &= _check(d, "terminal_is_1", [an.components[c] for c in an.terminal] == [(net.index_of(F(1)),)])
    ok &= _check(d, "zero_precedes_one", (zero, one) in an.order)
    d["ok"] = ok
    return d


def a5_ex22_structure() -> dict:
    x = corpus_system("ex22", N=4)
    net = _net(x.space, 10)
    tri = entropy_trichotomy(x, net, n_range=(6, 12))
    d = {"trichotomy": list(tri.verdicts), "stable_cr": [fmt_point(p) for p in tri.stable_cr or []]}
    ok = _check(d, "stable_cr", tri.stable_cr == [F(0), F(2)])
    # coarsest delta of the stable tail: finer ones can cut 0 off from the truncated levels
    delta = max(tri.stable_deltas) if tri.stable_deltas else min(tri.cr_by_delta)
    d["delta"] = fmt_rational(delta)
    g = _graph(x, net, delta)
    an = chain_analysis(g)
    ok &= _check(d, "two_components", len(an.components) == 2)
    two = an.component_of(net.index_of(F(2)))
    ok &= _check(d, "terminal_is_2", an.terminal == [two])
    margins = clopen_margins(g, an)
    d["margin"] = fmt_rational(margins[two]) if margins.get(two) is not None else None
    ok &= _check(d, "margin_3/2", margins.get(two) == F(3, 2))
    ok &= _check(d, "trichotomy_all_true", tri.verdicts == (True, True, True) and tri.consistent)
    d["ok"] = ok
    return d


def a6_tent_entropy() -> dict:
    t = corpus_system("tent")
    est = entropy_estimate(t, _net(t.space, 8), dyadic(-6), 4, 12)
    return {
        "ok": 0.60 <= est.slope <= 0.75,
        "slope": est.slope,
        "counts": {str(n): c for n, c in est.counts.items()},
    }


def a7_leo_mixing() -> dict:
    d: dict = {}
    ok = True
    cases = [
        ("tent", corpus_system("tent"), IntervalUnion.of_intervals([(0, dyadic(-6))]),
         IntervalUnion.of_intervals([(F(1, 2), F(9, 16))]), 6),
        ("doubling", corpus_system("doubling"), IntervalUnion.of_intervals([(F(1, 3), F(1, 3) + dyadic(-6))]),
         IntervalUnion.of_intervals([(F(1, 2), F(9, 16))]), 6),
        ("shift", corpus_system("shift", m=8), IntervalUnion.of_cylinders([(1, 0, 1, 1, 0)]),
         IntervalUnion.of_cylinders([(1, 1)]), 5),
    ]
    for name, sys_, U, V, want in cases:
        i = leo_check(sys_, U)
        d[f"{name}_leo"] = i
        ok &= _check(d, f"{name}_leo", i == want)
        if i is not None:
            mv = mixing_check(sys_, U, V, i, i + 10)
            ok &= _check(d, f"{name}_mixing", mv.passed)
    d["ok"] = ok
    return d


def a8_lipschitz_shadowing() -> dict:
    t = corpus_system("tent")
    net = _net(t.space, 6)
    params = ShadowingParams(F(1, 2), F(1, 2))
    d: dict = {"M": fmt_rational(params.M), "M_2": fmt_rational(params.M_i(2))}
    r1 = lipschitz_shadowing_test(t, net, params, dyadic(-6), trials=100, length=40, slack=dyadic(-7))
    d["worst"] = fmt_rational(r1.worst["sup_dist"])
    ok = _check(d, "f", r1.passed and params.M == 1)
    r2 = lipschitz_shadowing_test(
        iterate_system(t, 2), net, params.power(2), dyadic(-6), trials=100, length=40, slack=dyadic(-7)
    )
    d["worst_iterate2"] = fmt_rational(r2.worst["sup_dist"])
    ok &= _check(d, "f2", r2.passed and params.power(2).M == F(1, 3))
    d["ok"] = ok
    return d


def a9_h_shadowing() -> dict:
    e = corpus_system("ex21", N=8)
    rep = h_shadowing_test(e, _net(e.space), F(1, 4), dyadic(-6), 4)
    return {"ok": rep.passed and bool(rep.trials), "chains": len(rep.trials)}


def _dense(points: Sequence[Fraction], eps: Fraction) -> bool:
    pts = sorted(points)
    if not pts or pts[0] > eps or 1 - pts[-1] > eps:
        return False
    return all(b - a <= 2 * eps for a, b in zip(pts, pts[1:]))


def a10_periodic_density() -> dict:
    t = corpus_system("tent")
    rep = periodic_points_affine(t, 6)
    pts = sorted(set(p for p, _, _ in rep.affine_points))
    d: dict = {"tent_periodic_points": len(pts)}
    ok = _check(d, "tent_dense", _dense(pts, F(1, 8)))
    e = corpus_system("ex21", N=8)
    ne = _net(e.space)
    tri = entropy_trichotomy(e, ne, n_range=(10, 16))
    ok &= _check(d, "ex21", sorted(periodic_points_exact(e, ne, len(ne)).points()) == tri.stable_cr)
    x = corpus_system("ex22", N=4)
    nx = _net(x.space, 10)
    tri = entropy_trichotomy(x, nx, n_range=(6, 12))
    ok &= _check(d, "ex22", sorted(periodic_points_exact(x, nx, len(nx)).points()) == tri.stable_cr)
    d["ok"] = ok
    return d


def a11_chain_mixing() -> dict:
    t = corpus_system("tent")
    e = corpus_system("ex21", N=8)
    tm = chain_mixing_check(_graph(t, _net(t.space, 6), dyadic(-4)))
    em = chain_mixing_check(_graph(e, _net(e.space), dyadic(-6)))
    d = {"tent": tm, "ex21": em}
    d["ok"] = tm is True and em is False
    return d


def a12_product_contrast() -> dict:
    d: dict = {}
    ok = True
    times = []
    for m in (3, 4, 5):
        s = corpus_system("ex21_product", N=6, m=m)
        net = _net(s.space)
        g = _graph(s, net, dyadic(-12))
        x = tuple(dyadic(-j + 1) for j in range(1, m + 1))
        times.append(cr_hitting_time(g, net.index_of(x)))
    d["hitting_times"] = times
    ok &= _check(d, "hitting_m_minus_1", times == [2, 3, 4])
    s6 = corpus_system("ex21_product", N=6, m=6)
    counts = [product_chain_summary(s6, dyadic(-k)).component_count for k in range(3, 10)]
    d["component_counts"] = counts
    ok &= _check(d, "counts_nondecreasing", all(a <= b for a, b in zip(counts, counts[1:])))
    d["ok"] = ok
    return d


def _component_count(system, net) -> int:
    return len(chain_analysis(_graph(system, net, F(0))).components)


def a13_iterate_laws() -> dict:
    d: dict = {}
    ok = True
    for name, sys_, net in (
        ("ex21", corpus_system("ex21", N=8), None),
        ("ex22", corpus_system("ex22", N=4), None),
    ):
        net = _net(sys_.space, 8)
        base_cr = chain_analysis(_graph(sys_, net, F(0))).recurrent
        c1 = _component_count(sys_, net)
        for i in (2, 3):
            it = iterate_system(sys_, i)
            cr_i = chain_analysis(_graph(it, net, F(0))).recurrent
            ok &= _check(d, f"{name}_cr_f{i}", cr_i == base_cr)
            ci = _component_count(it, net)
            ok &= _check(d, f"{name}_count_f{i}", 1 <= ci <= i * c1)
        d[f"{name}_components"] = c1
    d["ok"] = ok
    return d


CRITERIA: Dict[str, tuple] = {
    "A1": ("tent ball-expanding certificate", a1_tent_certificate, 10.0),
    "A2": ("shift ball-expanding certificate", a2_shift_certificate, 20.0),
    "A3": ("logistic refutation witness", a3_logistic_refutation, None),
    "A4": ("ex21 chain structure", a4_ex21_structure, None),
    "A5": ("ex22 structure and trichotomy", a5_ex22_structure, None),
    "A6": ("tent entropy slope", a6_tent_entropy, 60.0),
    "A7": ("eventually onto and mixing", a7_leo_mixing, None),
    "A8": ("Lipschitz shadowing of tent and its square", a8_lipschitz_shadowing, None),
    "A9": ("h-shadowing on ex21", a9_h_shadowing, None),
    "A10": ("periodic density and periodic sets", a10_periodic_density, None),
    "A11": ("chain mixing verdicts", a11_chain_mixing, None),
    "A12": ("ex21 product hitting times and component growth", a12_product_contrast, None),
    "A13": ("iterate laws", a13_iterate_laws, None),
}


def run_criterion(cid: str) -> CriterionResult:
    title, fn, budget = CRITERIA[cid]
    start = time.perf_counter()
    try:
        detail = fn()
        err = None
    except ResourceError:
        raise
    except Exception as exc:  # recorded, the suite keeps going
        detail, err = {"ok": False}, f"{type(exc).__name__}: {exc}"
    secs = time.perf_counter() - start
    passed = bool(detail.get("ok")) and err is None
    if budget is not None and secs > budget:
        detail["over_budget"] = True
        passed = False
    return CriterionResult(cid, title, passed, detail, secs, err, budget)


def run_suite(
    only: Optional[Sequence[str]] = None,
    echo: Optional[Callable[[str], None]] = None,
    caps: Optional[Dict[str, int]] = None,
) -> List[CriterionResult]:
    """Run criteria in order.  A :class:`ResourceError` aborts the run."""
    saved = dict(CAPS)
    CAPS.update(caps or {})
    try:
        return _run(only, echo)
    finally:
        CAPS.clear()
        CAPS.update(saved)


def _run(only, echo) -> List[CriterionResult]:
    ids = list(CRITERIA)
    if only:
        unknown = [c for c in only if c not in CRITERIA]
        if unknown:
            raise KeyError(f"unknown criteria: {', '.join(unknown)}")
        ids = [c for c in ids if c in set(only)]
    results = []
    for cid in ids:
        res = run_criterion(cid)
        if echo:
            echo(res.line())
        results.append(res)
    return results

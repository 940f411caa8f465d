from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ballexp.chaingraph import build_transition_graph, chain_analysis
from ballexp.errors import ContractError, UnsupportedSystemError
from ballexp.shadowing import (
    PseudoOrbit,
    ShadowingParams,
    feasible_set,
    gen_pseudo_orbit,
    h_shadowing_test,
    lipschitz_shadowing_test,
    pullback_trace,
    shadow_search,
    sup_distance,
)
from ballexp.systems import build_net, corpus_system, iterate_system, orbit


@pytest.fixture(scope="module")
def tent6():
    t = corpus_system("tent")
    return t, build_net(t.space, 6)


@pytest.fixture(scope="module")
def ex21_4():
    s = corpus_system("ex21", N=4)
    return s, build_net(s.space)


def test_delta_zero_gives_true_orbit(tent6):
    t, net = tent6
    po = gen_pseudo_orbit(t, net, F(0), 12, seed=3)
    assert list(po.points) == orbit(t, po.points[0], 12)


def test_seeded_orbits_reproduce(ex21_4):
    s, net = ex21_4
    a = gen_pseudo_orbit(s, net, F(1, 4), 20, seed=11)
    b = gen_pseudo_orbit(s, net, F(1, 4), 20, seed=11)
    assert a == b
    assert all(g <= F(1, 4) for g in a.gaps(s, net))


def test_long_tent_orbit_gaps(tent6):
    t, net = tent6
    po = gen_pseudo_orbit(t, net, F(1, 64), 40, seed=0)
    assert len(po) == 40 and max(po.gaps(t, net)) <= F(1, 64)


def test_empty_successor_ball():
    g = corpus_system("logistic")
    net = build_net(g.space, 3)
    with pytest.raises(ContractError):
        for seed in range(20):
            gen_pseudo_orbit(g, net, F(1, 1024), 10, seed)


def test_pseudo_orbit_validation(ex21_4):
    s, net = ex21_4
    with pytest.raises(ContractError):
        PseudoOrbit(F(1, 16), (F(1, 16), F(1, 2))).validate(s, net)


def test_shadow_search_true_orbit(tent6):
    t, net = tent6
    x = F(5, 64)
    res = shadow_search(t, net, orbit(t, x, 10), F(0))
    assert res.found and res.sup_dist == 0
    assert orbit(t, res.point, 10) == orbit(t, x, 10)


def test_shadow_search_ex21(ex21_4):
    s, net = ex21_4
    po = gen_pseudo_orbit(s, net, F(1, 4), 8, seed=5)
    assert shadow_search(s, net, po, F(1, 2)).found


def test_shadow_search_reports_best_when_missing(ex21_4):
    s, net = ex21_4
    chain = [F(0), F(1, 16), F(1, 8), F(0)]
    res = shadow_search(s, net, chain, F(0))
    assert not res.found
    assert res.sup_dist == min(sup_distance(s, net, x, chain) for x in net.points)


@given(st.integers(0, 200), st.fractions(min_value=0, max_value=1, max_denominator=64))
def test_shadow_monotone_in_eps(seed, extra):
    s = corpus_system("ex21", N=4)
    net = build_net(s.space)
    po = gen_pseudo_orbit(s, net, F(1, 4), 6, seed)
    best = shadow_search(s, net, po, F(0))
    again = shadow_search(s, net, po, best.sup_dist + extra)
    assert again.found and again.point == best.point


@given(st.integers(0, 500))
def test_interval_search_not_worse_than_net(seed):
    t = corpus_system("tent")
    net = build_net(t.space, 5)
    po = gen_pseudo_orbit(t, net, F(1, 32), 6, seed)
    a = shadow_search(t, net, po, F(1, 16), method="net")
    b = shadow_search(t, net, po, F(1, 16), method="interval", tol=F(1, 2**16))
    assert b.sup_dist <= a.sup_dist + F(1, 2**16)
    assert b.sup_dist == sup_distance(t, net, b.point, po.points)


def test_feasible_set_is_exact(tent6):
    t, _ = tent6
    chain = [F(1, 4), F(1, 2), F(1)]
    W = feasible_set(t, chain, F(1, 16))
    for lo, hi in W:
        for x in (lo, hi, (lo + hi) / 2):
            assert all(abs(a - b) <= F(1, 16) for a, b in zip(orbit(t, x, 3), chain))


def test_interval_search_unsupported():
    s = corpus_system("shift", m=4)
    with pytest.raises(UnsupportedSystemError):
        shadow_search(s, build_net(s.space), [(0, 0, 0, 0)], F(0), method="interval")


def test_params():
    p = ShadowingParams(F(1, 2), F(1, 2))
    assert p.M == 1 and p.M_i(2) == F(1, 3) and p.power(2).M == F(1, 3)
    with pytest.raises(ValueError):
        ShadowingParams(F(1), F(1, 2))


def test_lipschitz_tent_small(tent6):
    t, net = tent6
    p = ShadowingParams(F(1, 2), F(1, 2))
    rep = lipschitz_shadowing_test(t, net, p, F(1, 64), trials=10, length=40, slack=F(1, 128))
    assert rep.passed and rep.to_json()["horizon"] == "finite-horizon"
    rep2 = lipschitz_shadowing_test(iterate_system(t, 2), net, p.power(2), F(1, 64), trials=5, length=20, slack=F(1, 128))
    assert rep2.passed and rep2.eps == F(1, 64) / 3 + F(1, 128)


def test_lipschitz_delta_zero(tent6):
    t, net = tent6
    rep = lipschitz_shadowing_test(t, net, ShadowingParams(F(1, 2), F(1, 2)), F(0), trials=5, length=10, slack=F(0), method="net")
    assert rep.passed and all(tr["sup_dist"] == 0 for tr in rep.trials)


def test_lipschitz_needs_delta_below_delta0(tent6):
    t, net = tent6
    with pytest.raises(ContractError):
        lipschitz_shadowing_test(t, net, ShadowingParams(F(1, 2), F(1, 64)), F(1, 32), trials=1)


def test_h_shadowing_ex21():
    s = corpus_system("ex21", N=8)
    net = build_net(s.space)
    rep = h_shadowing_test(s, net, F(1, 4), F(1, 64), 4)
    assert rep.passed and len(rep.trials) > 0
    assert all(t["endpoint_hit"] for t in rep.trials)
    strict = h_shadowing_test(s, net, F(0), F(1, 64), 4)
    assert not strict.passed
    for t in strict.trials:
        if t["pass"]:
            assert orbit(s, t["shadow_point"], len(t["chain"])) == t["chain"]


def test_h_shadowing_exact_chain_passes_with_start(ex21_4):
    s, net = ex21_4
    rep = h_shadowing_test(s, net, F(0), F(0), 3)
    assert rep.passed
    for t in rep.trials:
        assert t["shadow_point"] == t["chain"][0]


def test_pullback_trivial_cases():
    s = corpus_system("ex21", N=8)
    net = build_net(s.space)
    one = net.index_of(F(1))
    p = ShadowingParams(F(1, 2), F(1, 4))
    tr = pullback_trace(s, net, [one], F(1), p, 4)
    assert tr.completed and tr.points == [F(1)] * 5
    assert all(m["dist_C"] == 0 and m["dist_end"] == 0 for m in tr.margins)
    assert pullback_trace(s, net, [one], F(1, 2), ShadowingParams(F(1, 2), F(1, 2)), 0).points == [F(1, 2)]


def test_pullback_outside_invariant_set_stops():
    # 1/2 is not in C={1}: no z in C maps near the chain start, so step 1 has no shadow
    s = corpus_system("ex21", N=8)
    net = build_net(s.space)
    tr = pullback_trace(s, net, [net.index_of(F(1))], F(1, 2), ShadowingParams(F(1, 2), F(1, 2)), 4)
    assert not tr.completed and tr.failed_step == 1


def test_pullback_tent_margins():
    t = corpus_system("tent")
    net = build_net(t.space, 12)
    L, d0 = F(1, 2), F(1, 64)
    tr = pullback_trace(t, net, [0], F(1, 64), ShadowingParams(L, d0), 4)
    assert tr.completed
    for i, m in enumerate(tr.margins):
        assert max(m["dist_C"], m["dist_end"]) <= L**i * d0
    # the trace ends next to C, and f(C) = C, so x and C share a chain component
    coarse = build_net(t.space, 8)
    a = chain_analysis(build_transition_graph(t, coarse, d0))
    assert a.component_of(coarse.index_of(F(1, 64))) == a.component_of(coarse.index_of(F(0)))


def test_pullback_rejects_bad_C(ex21_4):
    s, net = ex21_4
    with pytest.raises(ContractError):
        pullback_trace(s, net, [net.index_of(F(1, 2))], F(1, 2), ShadowingParams(F(1, 2), F(1, 2)), 1)

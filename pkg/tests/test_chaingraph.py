import json
from fractions import Fraction as F

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ballexp.chaingraph import (
    TransitionGraph,
    build_transition_graph,
    chain_analysis,
    chain_mixing_check,
    chain_omega_limit,
    chain_stable_check,
    clopen_margins,
    code_is_consistent,
    cr_hitting_time,
    cycle_period,
    eventual_image,
    graph_from_json,
    graph_to_json,
    omega_limit,
    periodic_points_affine,
    periodic_points_exact,
    product_chain_summary,
    reachable_set,
    tarjan_scc,
    to_dot,
    to_edge_list,
)
from ballexp.errors import ContractError, ResourceError, UnsupportedSystemError
from ballexp.systems import build_net, corpus_system, iterate_system, orbit


def ex21(N):
    s = corpus_system("ex21", N=N)
    return s, build_net(s.space)


def pts(net, nodes):
    return sorted(net.points[i] for i in nodes)


def test_edges_small_ex21():
    s, net = ex21(2)
    assert net.points == (0, F(1, 4), F(1, 2), 1)
    assert build_transition_graph(s, net, F(1, 8)).succ == [[0], [2], [3], [3]]
    assert build_transition_graph(s, net, F(1, 4)).succ == [[0, 1], [1, 2], [3], [3]]


def test_delta_zero_is_functional_graph():
    s = corpus_system("tent")
    net = build_net(s.space, 5)
    g = build_transition_graph(s, net, F(0))
    assert all(vs == [g.image_node(u)] for u, vs in enumerate(g.succ))


def test_edge_cap():
    s = corpus_system("tent")
    with pytest.raises(ResourceError):
        build_transition_graph(s, build_net(s.space, 6), F(1, 4), edge_cap=100)


def test_analysis_small_ex21():
    s, net = ex21(2)
    a = chain_analysis(build_transition_graph(s, net, F(1, 8)))
    assert pts(net, a.recurrent) == [0, 1]
    assert a.order == []
    assert len(a.terminal) == 2
    b = chain_analysis(build_transition_graph(s, net, F(1, 4)))
    assert pts(net, b.recurrent) == [0, F(1, 4), 1]
    assert [pts(net, c) for c in b.components] == [[0], [F(1, 4)], [1]]
    assert [b.components[i] for i in b.terminal] == [(3,)]
    assert (0, 2) in b.order


def test_ex22_terminal_fixed_point():
    s = corpus_system("ex22", N=4)
    net = build_net(s.space, 8)
    g = build_transition_graph(s, net, F(1, 256))
    a = chain_analysis(g)
    assert {0, 2} <= set(pts(net, a.recurrent))
    two = a.component_of(net.index_of(F(2)))
    assert two in a.terminal
    assert clopen_margins(g, a)[two] == F(3, 2)


def test_chain_stability():
    s, net = ex21(2)
    ok = chain_stable_check(build_transition_graph(s, net, F(1, 8)), [3], F(0))
    assert ok.passed
    g = build_transition_graph(s, net, F(1, 4))
    bad = chain_stable_check(g, [0], F(1, 2))
    assert not bad.passed
    assert bad.witness == 3 and bad.distance == 1 and bad.path == [0, 1, 2, 3]
    assert chain_stable_check(g, range(4), F(0)).passed


def test_reachable_and_omega_sets():
    s, net = ex21(2)
    g8, g4 = build_transition_graph(s, net, F(1, 8)), build_transition_graph(s, net, F(1, 4))
    assert reachable_set(g8, [0]) == {0}
    assert reachable_set(g4, [0]) == {0, 1, 2, 3}
    assert chain_omega_limit(g8, 1) == {3}
    assert chain_omega_limit(g4, 0) == {0, 1, 2, 3}
    assert chain_omega_limit(g8, 3) == {3}


def test_eventual_image():
    s, net = ex21(3)
    assert pts(net, eventual_image(s, net, range(len(net)))) == [0, 1]
    assert eventual_image(s, net, [0, 4]) == {0, 4}
    t = corpus_system("tent")
    tn = build_net(t.space, 3)
    assert pts(tn, eventual_image(t, tn, range(len(tn)))) == [0]
    with pytest.raises(ContractError):
        eventual_image(s, net, [1])


def test_omega_limit():
    s, net = ex21(4)
    assert pts(net, omega_limit(s, net, F(1, 16))) == [1]
    x = corpus_system("ex22", N=4)
    xn = build_net(x.space, 8)
    assert pts(xn, omega_limit(x, xn, F(1, 64))) == [2]
    assert pts(net, omega_limit(s, net, F(0))) == [0]


def test_hitting_times():
    s, net = ex21(4)
    g = build_transition_graph(s, net, F(1, 64))
    assert cr_hitting_time(g, net.index_of(F(1, 16))) == 4
    assert cr_hitting_time(g, net.index_of(F(1))) == 0
    p = corpus_system("ex21_product", m=4, N=6)
    pn = build_net(p.space)
    pg = build_transition_graph(p, pn, F(1, 2**12))
    assert cr_hitting_time(pg, pn.index_of((F(1), F(1, 2), F(1, 4), F(1, 8)))) == 3


def test_chain_mixing():
    t = corpus_system("tent")
    assert chain_mixing_check(build_transition_graph(t, build_net(t.space, 6), F(1, 16)))
    s, net = ex21(2)
    assert not chain_mixing_check(build_transition_graph(s, net, F(1, 8)))
    one = TransitionGraph(net, s, F(0), [], [[0]])
    assert chain_mixing_check(one)


def test_periodic_exact():
    s, net = ex21(8)
    assert periodic_points_exact(s, net, 10).exact_cycles == [(0,), (1,)]
    x = corpus_system("ex22", N=4)
    assert periodic_points_exact(x, build_net(x.space, 8), 10).exact_cycles == [(0,), (2,)]
    t = corpus_system("tent")
    assert periodic_points_exact(t, build_net(t.space, 4), 10).exact_cycles == [(0,)]


def test_periodic_affine():
    tent = corpus_system("tent")
    assert periodic_points_affine(tent, 1).points() == {0, F(2, 3)}
    assert periodic_points_affine(tent, 2).points() == {0, F(2, 3), F(2, 5), F(4, 5)}
    assert periodic_points_affine(corpus_system("doubling"), 2).points() == {0, F(1, 3), F(2, 3)}
    with pytest.raises(UnsupportedSystemError):
        periodic_points_affine(corpus_system("logistic"), 2)


@pytest.mark.parametrize("tag", ["tent", "doubling"])
def test_affine_periods_are_exact(tag):
    s = corpus_system(tag)
    rep = periodic_points_affine(s, 5)
    for x, k, code in rep.affine_points:
        orb = orbit(s, x, k + 1)
        assert orb[k] == x and x not in orb[1:k]
        assert code_is_consistent(s, x, code)


@pytest.mark.parametrize("tag,N", [("ex21", 8), ("ex22", 4)])
def test_exact_cycles_appear_among_affine_solutions(tag, N):
    s = corpus_system(tag, N=N)
    exact = periodic_points_exact(s, build_net(s.space, 8), 6).points()
    assert exact <= periodic_points_affine(s, 6).points()


def _random_graph(data):
    n = data.draw(st.integers(1, 12))
    succ = [sorted(set(data.draw(st.lists(st.integers(0, n - 1), max_size=3)))) for _ in range(n)]
    return succ


@given(st.data())
def test_scc_and_recurrence_match_networkx(data):
    succ = _random_graph(data)
    G = nx.DiGraph()
    G.add_nodes_from(range(len(succ)))
    G.add_edges_from((u, v) for u, vs in enumerate(succ) for v in vs)
    ours = sorted(sorted(c) for c in tarjan_scc(succ))
    assert ours == sorted(sorted(c) for c in nx.strongly_connected_components(G))
    s, net = ex21(2)
    g = TransitionGraph(net, s, F(0), [], succ)
    a = chain_analysis(g)
    on_cycle = {v for c in nx.strongly_connected_components(G) for v in c if len(c) > 1 or G.has_edge(v, v)}
    assert set(a.recurrent) == on_cycle
    C = nx.condensation(G)
    sinks = {frozenset(C.nodes[k]["members"]) for k in C if C.out_degree(k) == 0}
    for i, comp in enumerate(a.components):
        assert (i in a.terminal) == (frozenset(comp) in sinks)
    for i, j in a.order:
        assert nx.has_path(G, a.components[i][0], a.components[j][0])
    if len(a.components) > 0 and nx.is_strongly_connected(G):
        assert chain_mixing_check(g) == nx.is_aperiodic(G)


@pytest.mark.parametrize("tag,res", [("tent", 5), ("doubling", 5), ("ex21", 1), ("ex22", 6)])
def test_monotone_in_delta(tag, res):
    s = corpus_system(tag, N=4)
    net = build_net(s.space, res)
    deltas = [F(1, 2**k) for k in range(2, 8)]
    graphs = [build_transition_graph(s, net, d) for d in deltas]
    for big, small in zip(graphs, graphs[1:]):
        assert set(small.edges()) <= set(big.edges())
        assert set(chain_analysis(small).recurrent) <= set(chain_analysis(big).recurrent)


@pytest.mark.parametrize("tag,res", [("tent", 5), ("ex21", 1), ("ex22", 6)])
def test_components_partition_and_terminal_maximal(tag, res):
    s = corpus_system(tag, N=4)
    net = build_net(s.space, res)
    for k in range(2, 8):
        a = chain_analysis(build_transition_graph(s, net, F(1, 2**k)))
        flat = sorted(v for c in a.components for v in c)
        assert flat == a.recurrent
        assert a.terminal
        above = {i for i, _ in a.order}
        for i in a.terminal:
            assert i not in above


def test_reachable_set_margin_and_eventual_image():
    s, net = ex21(6)
    d = F(1, 128)
    g = build_transition_graph(s, net, d)
    A = reachable_set(g, [net.index_of(F(1))])
    images = {g.image_node(a) for a in A}
    assert images <= A
    near = {v for a in images for v in net.ball(net.points[a], d / 2)}
    assert near <= A
    B = eventual_image(s, net, A)
    assert {g.image_node(b) for b in B} == B
    assert set(chain_analysis(g).recurrent) & A <= B


def test_chain_omega_is_successor_closed():
    t = corpus_system("tent")
    g = build_transition_graph(t, build_net(t.space, 4), F(1, 32))
    for x in range(g.n_nodes):
        om = chain_omega_limit(g, x)
        assert all(v in om for u in om for v in g.succ[u])


@pytest.mark.parametrize("tag,N", [("ex21", 8), ("ex22", 3)])
def test_iterate_law_at_delta_zero(tag, N):
    s = corpus_system(tag, N=N)
    net = build_net(s.space, 6)
    base = chain_analysis(build_transition_graph(s, net, F(0)))
    for i in (2, 3):
        a = chain_analysis(build_transition_graph(iterate_system(s, i), net, F(0)))
        assert a.recurrent == base.recurrent
        assert len(base.components) <= len(a.components) <= i * len(base.components)


@pytest.mark.parametrize("m,N", [(2, 3), (3, 3), (3, 4)])
def test_product_summary_matches_full_graph(m, N):
    s = corpus_system("ex21_product", m=m, N=N)
    net = build_net(s.space)
    for k in range(1, N + m + 2):
        d = F(1, 2**k)
        full = chain_analysis(build_transition_graph(s, net, d))
        summ = product_chain_summary(s, d)
        assert (summ.component_count, summ.recurrent_count) == (len(full.components), len(full.recurrent))


def test_cycle_period():
    assert cycle_period([[1], [2], [0]], [0, 1, 2]) == 3
    assert cycle_period([[1], [0, 1]], [0, 1]) == 1


def test_exports():
    s, net = ex21(2)
    g = build_transition_graph(s, net, F(1, 8))
    assert to_edge_list(g).splitlines() == ["0 0", "1 2", "2 3", "3 3"]
    back = graph_from_json(json.loads(json.dumps(graph_to_json(g))))
    assert back.succ == g.succ and back.net.points == net.points and back.delta == g.delta
    x = corpus_system("ex22", N=4)
    xg = build_transition_graph(x, build_net(x.space, 8), F(1, 256))
    dot = to_dot(xg, chain_analysis(xg))
    assert dot.count("shape=box") == 2
    assert dot.count("peripheries=2") == 1
    assert "2/1" in [line for line in dot.splitlines() if "peripheries=2" in line][0]


def test_analysis_json_label():
    s, net = ex21(2)
    out = chain_analysis(build_transition_graph(s, net, F(1, 4))).to_json(net)
    assert out["label"].startswith("outer approximation")
    assert out["recurrent"] == ["0/1", "1/4", "1/1"]

from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ballexp.errors import ContractError, DomainError, ResourceError
from ballexp.systems import (
    SpaceSpec,
    affine_system,
    build_net,
    corpus_system,
    eval_map,
    iterate_system,
    orbit,
    project_to_net,
    refine_net,
    system_from_config,
)


def test_build_net_examples():
    assert build_net(SpaceSpec("interval01"), 2).points == (F(0), F(1, 4), F(1, 2), F(3, 4), F(1))
    assert build_net(SpaceSpec("ex21_set", N=3)).points == (F(0), F(1, 8), F(1, 4), F(1, 2), F(1))
    words = build_net(SpaceSpec("word_shift", m=2, alphabet=(0, 1))).points
    assert words == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert build_net(SpaceSpec("circle"), 3).points[-1] == F(7, 8)


def test_ex22_net_contents():
    net = build_net(SpaceSpec("ex22_set", N=2), 4)
    assert net.points == (F(0), F(1, 16), F(1, 8), F(1, 4), F(5, 16), F(3, 8), F(7, 16), F(1, 2), F(2))


def test_net_cap():
    with pytest.raises(ResourceError) as err:
        build_net(SpaceSpec("interval01"), 12, cap=100)
    assert "net_size" in str(err.value)


def test_eval_examples():
    ex21, ex22 = corpus_system("ex21"), corpus_system("ex22")
    assert eval_map(ex21, F(1, 8)) == F(1, 4)
    assert eval_map(ex21, F(1)) == 1
    assert eval_map(ex22, F(1, 4)) == 2
    assert eval_map(ex22, F(1, 16)) == F(1, 4)
    assert eval_map(corpus_system("tent"), F(1, 4)) == F(1, 2)
    assert eval_map(corpus_system("logistic"), F(1, 2)) == 1
    assert eval_map(corpus_system("shift", m=3), (F(1), F(0), F(1))) == (0, 1, 0)
    assert eval_map(corpus_system("ex21_product", m=3, N=4), (F(1), F(1, 2), F(0))) == (1, 1, 0)


def test_domain_error():
    with pytest.raises(DomainError):
        eval_map(corpus_system("ex21"), F(3, 4))
    with pytest.raises(DomainError):
        eval_map(corpus_system("tent"), F(3, 2))


def test_iterate_examples():
    assert eval_map(iterate_system(corpus_system("tent"), 2), F(1, 8)) == F(1, 2)
    assert eval_map(iterate_system(corpus_system("ex21"), 3), F(1, 32)) == F(1, 4)
    assert eval_map(iterate_system(corpus_system("doubling"), 2), F(3, 8)) == F(1, 2)


def test_project_to_net():
    # at r=2 the net has no 1/8, so 3/16 is nearest to 1/4; the smaller-point tie-break shows at r=3
    assert project_to_net(build_net(SpaceSpec("interval01"), 2), F(3, 16)) == F(1, 4)
    assert project_to_net(build_net(SpaceSpec("interval01"), 3), F(3, 16)) == F(1, 8)
    assert project_to_net(build_net(SpaceSpec("interval01"), 2), F(1, 4)) == F(1, 4)
    assert project_to_net(build_net(SpaceSpec("ex21_set", N=3)), F(3, 16)) == F(1, 8)
    assert project_to_net(build_net(SpaceSpec("circle"), 3), F(31, 32)) == F(0)


@pytest.mark.parametrize(
    "system,net",
    [
        (corpus_system("ex21", N=8), None),
        (corpus_system("ex22", N=4), 8),
        (corpus_system("tent"), 6),
        (corpus_system("doubling"), 6),
        (corpus_system("shift", m=5), None),
        (corpus_system("ex21_product", m=3, N=4), None),
    ],
)
def test_net_invariance(system, net):
    n = build_net(system.space, net or 1)
    assert all(n.contains(eval_map(system, p)) for p in n.points)


def test_tent_refinement_preimages():
    tent = corpus_system("tent")
    fine = build_net(tent.space, 7)
    images = {eval_map(tent, p) for p in fine.points}
    assert set(build_net(tent.space, 6).points) <= images


@pytest.mark.parametrize("tag", ["tent", "doubling", "ex21"])
def test_iterate_agrees_with_repeated_eval(tag):
    s = corpus_system(tag)
    net = build_net(s.space, 8)
    for i in (2, 3):
        it = iterate_system(s, i)
        assert all(eval_map(it, p) == orbit(s, p, i + 1)[-1] for p in net.points)


@pytest.mark.parametrize("tag", ["tent", "doubling"])
def test_composed_branches_match_map(tag):
    s = iterate_system(corpus_system(tag), 3)
    for p in build_net(s.space, 7).points:
        vals = {br(p) % 1 if tag == "doubling" else br(p) for br in s.branches() if br.covers(p)}
        assert vals == {eval_map(s, p)}


@given(st.fractions(min_value=-1, max_value=2, max_denominator=128), st.fractions(min_value=0, max_value=1, max_denominator=64))
def test_interval_ball_matches_scan(c, r):
    net = build_net(SpaceSpec("interval01"), 5)
    assert net.ball(c, r) == [i for i, p in enumerate(net.points) if abs(p - c) <= r]


@given(st.fractions(min_value=0, max_value=1, max_denominator=128).filter(lambda x: x < 1), st.fractions(min_value=0, max_value=1, max_denominator=64))
def test_circle_ball_matches_scan(c, r):
    net = build_net(SpaceSpec("circle"), 5)
    assert net.ball(c, r) == [i for i, p in enumerate(net.points) if net.dist(p, c) <= r]


@given(
    st.lists(st.sampled_from([F(0), F(1, 4), F(1, 2), F(1)]), min_size=3, max_size=4).map(tuple),
    st.fractions(min_value=0, max_value=1, max_denominator=32),
)
def test_word_ball_matches_scan(c, r):
    net = build_net(SpaceSpec("ex21_product", m=3, N=2))
    assert net.ball(c, r) == [i for i, p in enumerate(net.points) if net.dist(p, c) <= r]


def test_refine_net():
    net = build_net(SpaceSpec("ex21_set", N=4))
    assert refine_net(net, 2).spec.N == 6
    words = build_net(SpaceSpec("word_shift", m=3, alphabet=(0, 1)))
    assert len(refine_net(words, 1)) == 16


def test_affine_system_validation():
    space = SpaceSpec("interval01")
    s = affine_system("flip", space, [(0, 1, -1, 1)])
    assert eval_map(s, F(1, 4)) == F(3, 4)
    with pytest.raises(ContractError):
        affine_system("gap", space, [(0, F(1, 2), 1, 0)])
    with pytest.raises(ContractError):
        affine_system("jump", space, [(0, F(1, 2), 0, 0), (F(1, 2), 1, 0, 1)])
    with pytest.raises(ContractError):
        affine_system("escape", space, [(0, 1, 2, 0)])


def test_system_from_config():
    s = system_from_config({"system": "ex21", "N": 5})
    assert s.space.N == 5
    c = system_from_config({"name": "dbl", "space": {"kind": "circle"}, "branches": [["0", "1/2", 2, 0], ["1/2", "1", 2, -1]]})
    assert eval_map(c, F(3, 4)) == F(1, 2)
    assert c.to_json()["name"] == "dbl"

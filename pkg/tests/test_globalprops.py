import csv
import io
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ballexp.errors import ContractError, UnsupportedSystemError
from ballexp.globalprops import (
    IntervalUnion,
    entropy_estimate,
    entropy_trichotomy,
    entropy_verdict,
    is_whole,
    leo_check,
    mixing_check,
    push,
    separated_count,
)
from ballexp.systems import affine_system, build_net, corpus_system

TENT = corpus_system("tent")
TENT6 = build_net(TENT.space, 6)


def test_one_step_with_huge_eps_is_a_single_point():
    assert separated_count(TENT, TENT6, 1, F(2))[0] == 1


def test_one_step_count_matches_grid_spacing():
    # points k/64 spaced > 1/8 apart: 0, 9/64, 18/64, ... 63/64
    count, pts = separated_count(TENT, TENT6, 1, F(1, 8))
    assert count == 8 and pts[1] == F(9, 64)


@settings(max_examples=20)
@given(st.integers(1, 5), st.sampled_from([F(1, 4), F(1, 8), F(1, 16)]))
def test_separated_count_monotone(n, eps):
    c = separated_count(TENT, TENT6, n, eps)[0]
    assert c <= separated_count(TENT, TENT6, n + 1, eps)[0]
    assert c <= separated_count(TENT, TENT6, n, eps / 2)[0]


def test_identity_has_zero_slope():
    ident = affine_system("id", TENT.space, [(0, 1, 1, 0)])
    est = entropy_estimate(ident, TENT6, F(1, 8), 1, 5)
    assert est.slope == 0 and est.verdict == "zero-consistent"


def test_tent_growth_is_positive():
    est = entropy_estimate(TENT, TENT6, F(1, 8), 1, 4)
    assert est.counts == {1: 8, 2: 13, 3: 20, 4: 29}
    assert est.verdict == "positive"


def test_csv_output():
    est = entropy_estimate(TENT, TENT6, F(1, 8), 1, 3)
    rows = list(csv.reader(io.StringIO(est.to_csv())))
    assert rows == [["n", "count"], ["1", "8"], ["2", "13"], ["3", "20"]]


def test_verdict_thresholds():
    assert entropy_verdict(0.5) == "positive"
    assert entropy_verdict(0.0) == "zero-consistent"
    assert entropy_verdict(0.07) == "inconclusive"


def test_trichotomy_ex21():
    s = corpus_system("ex21", N=8)
    tri = entropy_trichotomy(s, build_net(s.space), n_range=(10, 16))
    assert tri.verdicts == (True, True, True) and tri.consistent
    assert tri.stable_cr == [F(0), F(1)]


def test_trichotomy_ex22():
    s = corpus_system("ex22", N=4)
    tri = entropy_trichotomy(s, build_net(s.space, 10), n_range=(6, 12))
    assert tri.verdicts == (True, True, True)
    assert tri.stable_cr == [F(0), F(2)]
    assert tri.to_json()["consistent"] is True


def test_trichotomy_tent_all_false():
    tri = entropy_trichotomy(TENT, TENT6)
    assert tri.verdicts == (False, False, False) and tri.consistent
    assert tri.notes and "ignored" in tri.notes[0]


def test_trichotomy_needs_enough_deltas():
    with pytest.raises(ContractError):
        entropy_trichotomy(TENT, TENT6, [F(1, 2), F(1, 4)])


def test_leo_examples():
    assert leo_check(TENT, IntervalUnion.of_intervals([(0, F(1, 64))])) == 6
    assert leo_check(TENT, IntervalUnion.of_intervals([(0, 1)])) == 0
    d = corpus_system("doubling")
    assert leo_check(d, IntervalUnion.of_intervals([(F(1, 3), F(1, 3) + F(1, 64))])) == 6
    s = corpus_system("shift", m=8)
    assert leo_check(s, IntervalUnion.of_cylinders([(1, 0, 1, 1, 0)])) == 5


def test_tent_push_is_exact():
    U = IntervalUnion.of_intervals([(F(1, 4), F(3, 4))])
    assert push(TENT, U).spans == ((F(1, 2), F(1)),)


def test_doubling_wraps():
    d = corpus_system("doubling")
    W = push(d, IntervalUnion.of_intervals([(F(3, 8), F(5, 8))]))
    assert W.spans == ((F(0), F(1, 4)), (F(3, 4), F(1)))
    assert is_whole(d, push(d, W))


def test_mixing_cases():
    U = IntervalUnion.of_intervals([(0, F(1, 64))])
    V = IntervalUnion.of_intervals([(F(1, 2), F(9, 16))])
    mv = mixing_check(TENT, U, V)
    assert mv.passed and mv.window == (6, 16) and mv.leo_index == 6
    # before covering, the image of U misses V
    early = mixing_check(TENT, U, V, 0, 3)
    assert not early.passed and early.first_miss == 0


def test_whole_space_mixes_with_itself():
    W = IntervalUnion.of_intervals([(0, 1)])
    assert mixing_check(TENT, W, W, 0, 5).passed


def test_ex22_never_covers():
    s = corpus_system("ex22", N=4)
    A = IntervalUnion.of_intervals([(F(1, 4), F(1, 2))])
    B = IntervalUnion.of_intervals([(F(1, 16), F(1, 8))])
    assert leo_check(s, A) is None
    # B reaches A once and then leaves for the fixed point 2
    assert mixing_check(s, B, A, 1, 1).passed
    assert not mixing_check(s, B, A, 1, 10).passed
    assert push(s, A).spans == ((F(2), F(2)),)


def test_unsupported_systems():
    with pytest.raises(UnsupportedSystemError):
        leo_check(corpus_system("logistic"), IntervalUnion.of_intervals([(0, F(1, 2))]))
    with pytest.raises(UnsupportedSystemError):
        push(TENT, IntervalUnion.of_cylinders([(1,)]))
    with pytest.raises(ContractError):
        leo_check(TENT, IntervalUnion.of_intervals([]))

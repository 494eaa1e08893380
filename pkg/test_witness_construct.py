import math

import pytest

from configuration import WindowConfiguration, from_ones
from groups import SymmetricSet, ball, decode_element, identity, inv, mul, parse_group, sort_canonical
from random_field import RandomField, local_max_config
from witness_construct import (
    EmptyDistancingError,
    InadmissiblePlanError,
    NoSwitchingElementError,
    SamePairError,
    WitnessExhaustedError,
    WitnessParams,
    WitnessParamsError,
    WitnessPlan,
    build_plan,
    conflict_graph,
    distancing_subset,
    failure_bound,
    find_switching_element,
    independent_distancing_subset,
    is_switching_element,
    minimal_admissible_size,
    pair_failure_count,
    sample_witness_config,
    uncovered_pairs,
    verify_witness_properties,
)


Z = parse_group("Z")
F2 = parse_group("F2")
H3 = parse_group("heisenberg")


def _x(backend, *texts):
    return SymmetricSet(frozenset(decode_element(backend, t) for t in texts))


def _ends_with_b(g):
    return g.is_identity() or g.encode()[-1] in "bB"


@pytest.fixture
def hand_plan():
    params = WitnessParams(_x(F2, "1", "a", "A"), k=1)
    return WitnessPlan.from_sets(params, ball(F2, 1), g_s=decode_element(F2, "b"))


@pytest.fixture
def hand_witness():
    window = ball(F2, 2)
    return WindowConfiguration(F2, {g: int(_ends_with_b(g)) for g in window})


def test_default_constants():
    params = WitnessParams(ball(Z, 1), k=3)
    assert params.c_exp == 6
    assert params.c_den == 10 * 5 + 5


def test_params_are_validated():
    with pytest.raises(WitnessParamsError):
        WitnessParams(ball(Z, 1), k=2, c_exp=3)
    with pytest.raises(WitnessParamsError):
        WitnessParams(ball(Z, 1), k=1, c_den=3)
    with pytest.raises(WitnessParamsError):
        WitnessParams(ball(Z, 1), k=0)


def test_failure_bound_spot_value():
    params = WitnessParams(ball(Z, 1), k=1)
    bound = failure_bound(params, 55, 55)
    assert math.isclose(bound.exact, 55 ** 2 * (8 / 9), rel_tol=1e-9)
    assert not bound.admissible


def test_failure_bound_eventually_decreases():
    params = WitnessParams(ball(Z, 1), k=1)
    values = [failure_bound(params, y, 100).exact for y in range(100, 5000, 100)]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_minimal_admissible_size_crosses_one():
    params = WitnessParams(ball(Z, 1), k=1)
    y = minimal_admissible_size(params, form="coarse")
    assert failure_bound(params, y).coarse < 1.0
    assert failure_bound(params, y - 1).coarse >= 1.0
    assert minimal_admissible_size(params, form="exact") == y


def test_switching_elements():
    X = ball(F2, 1)
    g = find_switching_element(X, 4)
    assert g is not None and is_switching_element(g, X)
    moved = [x for x in ball(F2, 2) if not x.is_identity()]
    assert len(moved) == 16
    assert not {mul(mul(inv(g), x), g) for x in moved} & ball(F2, 2).elements
    assert is_switching_element(decode_element(F2, "aab"), X)
    assert find_switching_element(ball(Z, 1), 8) is None
    assert find_switching_element(_x(H3, "0,0,0", "0,0,1", "0,0,-1"), 4) is None
    with pytest.raises(NoSwitchingElementError):
        build_plan(WitnessParams(ball(Z, 1), k=1), 10, 4)


def test_build_plan_shapes_y():
    params = WitnessParams(_x(F2, "1"), k=1)
    plan = build_plan(params, size_floor=6, search_radius=2)
    assert plan.g_s == decode_element(F2, "a")
    assert len(plan.Y1) == 6
    assert not {mul(y, plan.g_s) for y in plan.Y1} & plan.Y1
    assert params.X.elements <= plan.Y.elements
    assert plan.y_pow_k_exact and plan.y_pow_k_size == len(plan.Y)
    assert plan.admissible


def test_plan_rejects_y_without_x():
    params = WitnessParams(ball(F2, 1), k=1)
    with pytest.raises(WitnessParamsError):
        WitnessPlan.from_sets(params, _x(F2, "1", "a", "A", "aa", "AA"))


def test_distancing_subsets(hand_plan):
    e, a = identity(F2), decode_element(F2, "a")
    with pytest.raises(SamePairError):
        distancing_subset(e, e, hand_plan)
    # y^-1 a y lands in X^2 exactly for y in {e, a, A}
    assert distancing_subset(e, a, hand_plan) == frozenset(decode_element(F2, w) for w in ("b", "B"))
    X2 = hand_plan.params.x_squared.elements
    chosen = independent_distancing_subset(e, a, hand_plan)
    assert chosen == distancing_subset(e, a, hand_plan)
    for y1 in chosen:
        for y2 in chosen:
            if y1 != y2:
                assert mul(inv(mul(e, y1)), mul(a, y2)) not in X2
    tiny = WitnessPlan.from_sets(WitnessParams(_x(F2, "1", "a", "A"), k=1), _x(F2, "1", "a", "A"))
    with pytest.raises(EmptyDistancingError):
        independent_distancing_subset(e, a, tiny)


def test_independent_subset_is_canonical_greedy(hand_plan):
    g, h = identity(F2), decode_element(F2, "ab")
    nodes = distancing_subset(g, h, hand_plan)
    graph = conflict_graph(g, h, nodes, hand_plan.params.x_squared)
    chosen = independent_distancing_subset(g, h, hand_plan)
    assert chosen == independent_distancing_subset(g, h, hand_plan)
    assert sort_canonical(nodes)[0] in chosen
    assert not any(graph.has_edge(y1, y2) for y1 in chosen for y2 in chosen)
    for y in nodes - chosen:
        assert any(graph.has_edge(y, c) for c in chosen)


def test_hand_built_witness_passes(hand_plan, hand_witness):
    report = verify_witness_properties(hand_witness, hand_plan)
    assert report.passed
    assert report.apart_violations == [] and report.uncovered == []


def test_uncovered_pairs_reported(hand_plan):
    zeros = WindowConfiguration(F2, {g: 0 for g in ball(F2, 2)})
    missing = uncovered_pairs(zeros, hand_plan)
    assert len(missing) == 25
    assert uncovered_pairs(zeros, hand_plan, limit=3) == missing[:3]
    ones_at_a = from_ones(F2, ball(F2, 2), [identity(F2), decode_element(F2, "a")])
    assert verify_witness_properties(ones_at_a, hand_plan).apart_violations


def test_sampling_with_trivial_x_succeeds_first_try():
    plan = WitnessPlan.from_sets(WitnessParams(_x(F2, "1"), k=1), ball(F2, 1))
    s = sample_witness_config(plan, seed=7, max_attempts=5)
    assert s.seed == 7
    assert s.ones() == plan.sample_window
    assert verify_witness_properties(s, plan).passed
    assert pair_failure_count(plan, seed=0, trials=6) == (0, 6)


def test_sampling_guards(hand_plan):
    with pytest.raises(InadmissiblePlanError):
        sample_witness_config(hand_plan, seed=0, max_attempts=3)
    constant_x = WitnessPlan.from_sets(WitnessParams(ball(Z, 1), k=1), ball(Z, 1))
    with pytest.raises(WitnessExhaustedError):
        # the pair (-1, 0) needs adjacent 1's, which X-apartness forbids
        sample_witness_config(constant_x, seed=0, max_attempts=8, allow_inadmissible=True)


@pytest.mark.slow
def test_admissible_plan_meets_its_bound():
    plan = build_plan(WitnessParams(_x(F2, "1"), k=1), size_floor=12, search_radius=4)
    assert len(plan.Y1) == 12
    assert plan.admissible and plan.bound.exact < 1.0
    failures, trials = pair_failure_count(plan, seed=0, trials=200, workers=2)
    p = failures / trials
    assert p <= plan.bound.exact + 3 * math.sqrt(p * (1 - p) / trials)
    for seed in range(0, 200, 25):
        report = verify_witness_properties(sample_witness_config(plan, seed, max_attempts=1), plan)
        assert report.passed and report.apart_violations == [] and report.uncovered == []


def test_every_covering_sample_verifies(hand_plan):
    window = hand_plan.sample_window
    successes = 0
    for seed in range(200):
        s = local_max_config(RandomField(seed, F2), hand_plan.X, window)
        if uncovered_pairs(s, hand_plan, limit=1):
            continue
        successes += 1
        report = verify_witness_properties(s, hand_plan)
        assert report.apart_violations == [] and report.uncovered == []
    assert pair_failure_count(hand_plan, seed=0, trials=200) == (200 - successes, 200)

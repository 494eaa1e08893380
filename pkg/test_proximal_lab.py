import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from configuration import CoverageError, WindowConfiguration, constant_configuration, from_ones
from groups import SymmetricSet, ball, decode_element, identity, inv, mul, parse_group
from proximal_lab import (
    SAMPLED,
    Distance,
    IncomparableWindowsError,
    MissingConjugatesError,
    NonConstructiveShiftError,
    PaddingError,
    ProximalityFailure,
    ShiftWindow,
    ZApartnessError,
    all_x_patterns,
    build_pattern_library,
    build_proximal_plan,
    build_t_prime,
    check_eps_minimal,
    check_eps_proximal,
    check_z_apart,
    config_metric,
    faithfulness_check,
    greedy_z_witness,
    obstruction_certificate,
    proximality_witness_set,
    random_full_shift_config,
    shift_window_metric,
)
from random_field import RandomField, local_max_config

Z = parse_group("Z")
F2 = parse_group("F2")
H3 = parse_group("heisenberg")


def _z(*values):
    return [decode_element(Z, str(v)) for v in values]


def _alternating(lo, hi):
    return WindowConfiguration(Z, {g: int(g.encode()) % 2 for g in _z(*range(lo, hi))})


@pytest.fixture(scope="module")
def z_plan():
    return build_proximal_plan(Z, x_radius=1, epsilon_inv=2)


@pytest.fixture(scope="module")
def single_one():
    return from_ones(Z, ball(Z, 33), _z(0))


# metrics

def test_config_metric_first_disagreement():
    zeros = constant_configuration(F2, ball(F2, 2))
    t = from_ones(F2, ball(F2, 2), [decode_element(F2, "B")])
    d = config_metric(zeros, t, 8)
    assert d == Distance(0.2, 5, 8)
    same = config_metric(zeros, zeros, 8)
    assert same.value == 0.0 and same.is_bound
    with pytest.raises(CoverageError):
        config_metric(zeros, from_ones(F2, ball(F2, 0), []), 8)


configs_on_ball = st.lists(st.integers(0, 1), min_size=11, max_size=11).map(
    lambda bits: WindowConfiguration(Z, dict(zip(ball(Z, 5).sorted(), bits)))
)


@settings(max_examples=60)
@given(configs_on_ball, configs_on_ball, configs_on_ball)
def test_config_metric_is_ultrametric(s, t, u):
    d = lambda a, b: config_metric(a, b, 11).value
    assert d(s, u) <= max(d(s, t), d(t, u))
    assert d(s, t) == d(t, s)


def test_shift_window_metric():
    S1 = ShiftWindow(Z, 5, {(0, 0, 0, 0, 0)})
    S2 = ShiftWindow(Z, 5, {(0, 0, 0, 0, 1)})
    assert shift_window_metric(S1, S2) == Distance(0.2, 5, 5)
    assert shift_window_metric(S1, S1).is_bound
    with pytest.raises(IncomparableWindowsError):
        shift_window_metric(S1, ShiftWindow(Z, 4, {(0, 0, 0, 0)}))


patterns3 = st.sets(st.tuples(*[st.integers(0, 1)] * 3), min_size=1)


@given(patterns3, patterns3)
def test_shift_window_metric_matches_brute_force(P1, P2):
    expected = None
    for m in (1, 2, 3):
        if {p[:m] for p in P1} != {p[:m] for p in P2}:
            expected = m
            break
    d = shift_window_metric(ShiftWindow(Z, 3, P1), ShiftWindow(Z, 3, P2))
    assert d.index == expected
    assert d.value == (0.0 if expected is None else 1.0 / expected)


# patterns and the library

def test_x_patterns_of_samples():
    X = ball(Z, 1)
    assert all_x_patterns(_alternating(0, 10), X) == {(0, 1, 1), (1, 0, 0)}
    assert len(all_x_patterns(ShiftWindow.full(Z, 2), X)) == 8
    with pytest.raises(CoverageError):
        all_x_patterns(WindowConfiguration(Z, {_z(0)[0]: 1}), X)


def test_sampled_windows_are_not_constructive():
    T = ShiftWindow.from_samples([_alternating(0, 10)], 2)
    assert T.family == SAMPLED
    assert T.patterns == {(0, 1), (1, 0)}
    with pytest.raises(CoverageError):
        all_x_patterns(T, ball(Z, 1))
    with pytest.raises(NonConstructiveShiftError):
        build_pattern_library(T, ball(Z, 1))


def test_pattern_library_on_integers():
    X = ball(Z, 1)
    library = build_pattern_library(ShiftWindow.full(Z, 3), X)
    assert [int(g.encode()) for g in library.slots] == [0, -3, 3, -6, 6, -9, 9, -12]
    assert library.V == ball(Z, 13)
    u = library.u_library
    xs = X.sorted()
    for pattern in itertools.product((0, 1), repeat=3):
        assert any(
            all(u[mul(slot, x)] == symbol for x, symbol in zip(xs, pattern)) for slot in library.slots
        )


def test_unary_alphabet_library_is_x():
    X = ball(Z, 1)
    library = build_pattern_library(ShiftWindow.full(Z, 1, alphabet=(0,)), X)
    assert library.V == X
    assert set(library.u_library.values.values()) == {0}


def test_proximal_plan_radii(z_plan):
    assert z_plan.X == ball(Z, 1)
    assert z_plan.V == ball(Z, 13)
    wide = build_proximal_plan(Z, x_radius=1, epsilon_inv=4)
    assert wide.X == ball(Z, 2)
    assert wide.V == ball(Z, 82)
    free = build_proximal_plan(F2, x_radius=0, epsilon_inv=2)
    assert [g.encode() for g in free.slots] == ["1", "b", "B", "ab", "aB", "bb", "Ab", "AB"]
    assert free.V == ball(F2, 3)


# T' and proximality

def test_t_prime_stamps_the_library(z_plan, single_one):
    t = random_full_shift_config(Z, ball(Z, 20), seed=1)
    t_prime = build_t_prime(z_plan, single_one, t)
    for g in ball(Z, 20):
        expected = z_plan.u_library[g] if g in z_plan.V else t[g]
        assert t_prime[g] == expected
    assert len(all_x_patterns(t_prime, z_plan.X)) == 8


def test_t_prime_rejects_bad_witness(z_plan):
    t = random_full_shift_config(Z, ball(Z, 20), seed=1)
    with pytest.raises(PaddingError):
        build_t_prime(z_plan, from_ones(Z, ball(Z, 30), _z(0)), t)
    crowded = from_ones(Z, ball(Z, 33), _z(0, 5))
    assert check_z_apart(crowded, z_plan)
    with pytest.raises(ZApartnessError):
        build_t_prime(z_plan, crowded, t)


def test_z_witness_is_maximal(z_plan):
    window = ball(Z, 60)
    s = greedy_z_witness(z_plan, window, seed=0)
    assert s.ones() and check_z_apart(s, z_plan) == []
    for g in window:
        if g not in s.ones():
            assert any(z_plan.in_z(mul(inv(a), g)) for a in s.ones())


def test_t_primes_are_proximal_and_minimal(z_plan, single_one):
    t1 = random_full_shift_config(Z, ball(Z, 20), seed=1)
    t2 = random_full_shift_config(Z, ball(Z, 20), seed=2)
    p1 = build_t_prime(z_plan, single_one, t1)
    p2 = build_t_prime(z_plan, single_one, t2)
    hit = check_eps_proximal(p1, p2, 0.5, search_radius=0, depth=2)
    assert hit.found and hit.element == identity(Z)
    assert proximality_witness_set([(p1, p2)], 0.5, 0, 2) == {identity(Z)}
    minimal = check_eps_minimal(p1, t2, 0.5, search_radius=12, depth=2)
    assert minimal.found and minimal.distance.value < 0.5


@pytest.mark.parametrize("seed", range(3, 27, 3))
def test_t_prime_batch_on_integers(z_plan, single_one, seed):
    t1 = random_full_shift_config(Z, ball(Z, 20), seed=seed)
    t2 = random_full_shift_config(Z, ball(Z, 20), seed=seed + 1000)
    p1 = build_t_prime(z_plan, single_one, t1)
    p2 = build_t_prime(z_plan, single_one, t2)
    assert check_eps_proximal(p1, p2, 0.5, search_radius=0, depth=2).element == identity(Z)
    for source, target in ((p1, t2), (p2, t1), (p1, p2)):
        minimal = check_eps_minimal(source, target, 0.5, search_radius=12, depth=2)
        assert minimal.found and minimal.distance.value < 0.5


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_t_primes_on_free_group(seed):
    plan = build_proximal_plan(F2, x_radius=0, epsilon_inv=2)
    s = from_ones(F2, ball(F2, 7), [identity(F2)])
    t1 = random_full_shift_config(F2, ball(F2, 4), seed=seed)
    t2 = random_full_shift_config(F2, ball(F2, 4), seed=seed + 50)
    p1 = build_t_prime(plan, s, t1)
    p2 = build_t_prime(plan, s, t2)
    assert check_eps_proximal(p1, p2, 0.5, search_radius=0, depth=2).element == identity(F2)
    minimal = check_eps_minimal(p1, t2, 0.5, search_radius=2, depth=2)
    assert minimal.found and minimal.distance.value < 0.5


def test_search_reports_its_truncation():
    zeros = constant_configuration(Z, ball(Z, 5))
    ones = constant_configuration(Z, ball(Z, 5), symbol=1)
    miss = check_eps_minimal(zeros, ones, 0.5, search_radius=1, depth=2)
    assert not miss.found and miss.search_radius == 1 and miss.depth == 2
    with pytest.raises(ProximalityFailure):
        proximality_witness_set([(zeros, ones)], 0.5, 1, 2)
    assert proximality_witness_set([], 0.5, 1, 2) == frozenset()
    with pytest.raises(CoverageError):
        check_eps_proximal(zeros, ones, 0.5, search_radius=5, depth=2)


# obstruction and faithfulness

def _no_adjacent_ones(length):
    for bits in itertools.product((0, 1), repeat=length):
        if not any(a and b for a, b in zip(bits, bits[1:])):
            yield bits


def test_obstruction_holds_for_every_apart_configuration():
    sites = _z(*range(-6, 7))
    g, X = _z(1)[0], ball(Z, 1)
    count = 0
    for bits in _no_adjacent_ones(len(sites)):
        result = obstruction_certificate(g, X, WindowConfiguration(Z, dict(zip(sites, bits))), conjugator_radius=3)
        assert result.certificate
        count += 1
    assert count == 610


def test_obstruction_refuted_by_adjacent_ones():
    u = from_ones(Z, ball(Z, 3), _z(0, 1))
    result = obstruction_certificate(_z(1)[0], ball(Z, 1), u)
    assert not result.certificate and result.violation == tuple(_z(0, 1))
    with pytest.raises(ValueError):
        obstruction_certificate(identity(Z), ball(Z, 1), u)


def test_obstruction_on_central_element():
    z = decode_element(H3, "0,0,1")
    X = SymmetricSet.closure([identity(H3), z])
    u = local_max_config(RandomField(4, H3), X, ball(H3, 2))
    assert obstruction_certificate(z, X, u).certificate


def test_obstruction_needs_conjugates():
    u = from_ones(F2, ball(F2, 2), [decode_element(F2, "b")])
    with pytest.raises(MissingConjugatesError):
        obstruction_certificate(decode_element(F2, "a"), ball(F2, 1), u)


def test_faithfulness():
    g = _z(1)[0]
    moved = faithfulness_check(g, [_alternating(0, 10)])
    assert moved.moved and moved.sample_index == 0 and moved.site == _z(1)[0]
    still = faithfulness_check(g, [constant_configuration(Z, _z(*range(10)))])
    assert still.inconclusive and still.checked_sites == 9
    with pytest.raises(CoverageError):
        faithfulness_check(_z(5)[0], [constant_configuration(Z, _z(0))])

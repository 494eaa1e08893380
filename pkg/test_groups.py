import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groups import (
    ElementEncodingError,
    HeisenbergGroup,
    NotSymmetricError,
    SymmetricSet,
    UnknownBackendError,
    ball,
    conjugacy_growth,
    decode_element,
    enumerate_elements,
    identity,
    inv,
    is_x_apart,
    iter_canonical,
    mul,
    parse_group,
    set_power,
    set_product,
    smallest_ball_containing,
    truncated_conjugates,
    word_length,
)

F2 = parse_group("F2")
H3 = HeisenbergGroup()
L2 = parse_group("lamplighter")

f2_words = st.text(alphabet="abAB", max_size=8).map(lambda w: decode_element(F2, w or "1"))
h3_words = st.tuples(*[st.integers(-4, 4)] * 3).map(lambda t: decode_element(H3, ",".join(map(str, t))))
lamp_words = st.tuples(
    st.sets(st.integers(-3, 3), max_size=4), st.integers(-3, 3)
).map(lambda t: decode_element(L2, "lamps:" + ",".join(str(i) for i in sorted(t[0])) + f";cursor:{t[1]}"))


def test_parse_group_names():
    assert parse_group("Z").name == "Z"
    assert parse_group("Z3").name == "Z3"
    assert parse_group("F2").name == "F2"
    assert parse_group("heisenberg").name == "heisenberg"
    assert parse_group("lamplighter").name == "lamplighter"
    for bad in ("Q", "F0", "Z0", "sl2"):
        with pytest.raises(UnknownBackendError):
            parse_group(bad)


@pytest.mark.parametrize("r,size", [(0, 1), (1, 5), (2, 17), (3, 53), (4, 161)])
def test_free_group_ball_sizes(r, size):
    assert len(ball(F2, r)) == size


def test_lattice_ball_sizes(Z):
    assert [len(ball(Z, r)) for r in range(5)] == [1, 3, 5, 7, 9]
    assert len(ball(parse_group("Z2"), 2)) == 13


def test_heisenberg_ball_of_radius_one():
    assert len(ball(H3, 1)) == 7


def test_canonical_enumeration_starts_with_identity(Z):
    assert [g.encode() for g in enumerate_elements(F2, 5)] == ["1", "a", "b", "A", "B"]
    assert [g.encode() for g in enumerate_elements(Z, 5)] == ["0", "-1", "1", "-2", "2"]
    stream = iter_canonical(F2)
    assert [next(stream).encode() for _ in range(5)] == ["1", "a", "b", "A", "B"]


def test_free_reduction(el):
    assert el(F2, "aAb").encode() == "b"
    assert mul(el(F2, "ab"), el(F2, "Ba")).encode() == "aa"
    assert mul(el(F2, "ab"), el(F2, "BA")).is_identity()
    assert identity(F2).encode() == "1"


def test_decode_rejects_malformed(Z, el):
    for backend, text in [(F2, "ac"), (F2, ""), (Z, "x"), (H3, "1,2"), (L2, "lamps:1,1;cursor:0"), (L2, "cursor:1")]:
        with pytest.raises(ElementEncodingError):
            decode_element(backend, text)


def _matrix(g):
    x, y, z = g.word
    return [[1, x, z], [0, 1, y], [0, 0, 1]]


def _matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3)] for i in range(3)]


@given(h3_words, h3_words)
def test_heisenberg_product_matches_matrices(g, h):
    assert _matrix(mul(g, h)) == _matmul(_matrix(g), _matrix(h))


@given(f2_words, f2_words, f2_words)
def test_free_group_associative(a, b, c):
    assert mul(mul(a, b), c) == mul(a, mul(b, c))


@given(lamp_words, lamp_words, lamp_words)
def test_lamplighter_associative(a, b, c):
    assert mul(mul(a, b), c) == mul(a, mul(b, c))


@given(st.one_of(f2_words, h3_words, lamp_words))
def test_inverse_cancels(g):
    assert mul(g, inv(g)).is_identity()
    assert mul(inv(g), g).is_identity()


@pytest.mark.parametrize("backend", [F2, L2, parse_group("Z2")])
def test_word_length_agrees_with_bfs_layers(backend):
    previous = frozenset()
    for r in range(4):
        sphere = ball(backend, r).elements - previous
        assert all(word_length(g) == r for g in sphere)
        previous = ball(backend, r).elements


def test_lamplighter_lengths(el):
    assert word_length(el(L2, "lamps:0;cursor:0")) == 1
    assert word_length(el(L2, "lamps:;cursor:1")) == 1
    assert word_length(el(L2, "lamps:1;cursor:0")) == 3


def test_symmetric_set_requires_inverses(el):
    with pytest.raises(NotSymmetricError):
        SymmetricSet(frozenset([el(F2, "a")]))
    X = SymmetricSet.closure([el(F2, "a")])
    assert {g.encode() for g in X} == {"a", "A"}
    assert not X.contains_identity
    assert ball(F2, 1).contains_identity


@given(f2_words, f2_words)
def test_apartness_is_symmetric(g, h):
    X = ball(F2, 1)
    assert is_x_apart(g, h, X) == is_x_apart(h, g, X)


def test_set_power(Z):
    X = ball(Z, 1)
    assert set_power(X.elements, 0) == frozenset([identity(Z)])
    assert set_power(X.elements, 3) == ball(Z, 3).elements
    assert set_product(X.elements, X.elements) == X.squared().elements


def test_truncated_conjugates_detect_icc(Z, el):
    assert truncated_conjugates(el(Z, "1"), 5) == frozenset([el(Z, "1")])
    central = el(H3, "0,0,1")
    assert truncated_conjugates(central, 2) == frozenset([central])
    growth = conjugacy_growth(el(F2, "a"), 3)
    assert growth[0] == 1
    assert growth == sorted(growth) and growth[3] > growth[1]
    assert conjugacy_growth(central, 2) == [1, 1, 1]


def test_smallest_ball_containing(Z, el):
    r, B = smallest_ball_containing(Z, el(Z, "3", "-5"))
    assert r == 5
    assert B == ball(Z, 5)


@settings(max_examples=50)
@given(st.integers(-20, 20), st.integers(-20, 20))
def test_lattice_encoding_round_trip(a, b):
    Z2 = parse_group("Z2")
    g = decode_element(Z2, f"{a},{b}")
    assert decode_element(Z2, g.encode()) == g
    assert word_length(g) == abs(a) + abs(b)

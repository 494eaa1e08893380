#!/usr/bin/env python3
"""
Group backends with unique normal forms.

Supported groups:
  - Z^d                 words are integer tuples, generators +-e_i
  - discrete Heisenberg words are (x, y, z) with [x, y] = z, generators x, y, z
  - free group F_k      freely reduced strings, uppercase letter = inverse
  - lamplighter Z/2 wr Z  (sorted lamp tuple, cursor), generators t, T and the toggle

Every GroupElement carries its backend and normal form, so two elements are
equal exactly when their normal forms are. Balls are enumerated breadth first
and every BFS layer is sorted by the backend's normal-form key; concatenating
the layers gives the canonical enumeration g_1, g_2, ... used by the metrics.
"""

import re
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Hashable, Iterable, Iterator, List, Sequence, Tuple

# BFS layers are cached per backend; Heisenberg word lengths are looked up here
MAX_BFS_RADIUS = 64

_layer_lock = threading.Lock()
_layer_cache: Dict["GroupBackend", List[List[Hashable]]] = {}
_length_cache: Dict["GroupBackend", Dict[Hashable, int]] = {}


class BackendMismatchError(ValueError):
    """Raised when elements of different groups are combined."""


class NotSymmetricError(ValueError):
    """Raised when a set that must be closed under inverses is not."""


class ElementEncodingError(ValueError):
    """Raised when an element encoding cannot be parsed."""


class UnknownBackendError(ValueError):
    """Raised for group names that no backend implements."""


class GroupBackend(ABC):
    """A finitely generated group with a solvable word problem."""

    name: str
    is_icc: bool = False
    is_abelian: bool = False

    @abstractmethod
    def identity_word(self) -> Hashable:
        ...

    @abstractmethod
    def multiply_words(self, u: Hashable, v: Hashable) -> Hashable:
        ...

    @abstractmethod
    def invert_word(self, u: Hashable) -> Hashable:
        ...

    @abstractmethod
    def generator_words(self) -> Tuple[Hashable, ...]:
        """Symmetric generating set, in the fixed per-backend symbol order."""

    @abstractmethod
    def encode_word(self, u: Hashable) -> str:
        ...

    @abstractmethod
    def decode_word(self, text: str) -> Hashable:
        ...

    def order_key(self, u: Hashable):
        """Lexicographic key on the normal form; breaks ties in BFS layers and random fields."""
        return self.encode_word(u)

    def word_length(self, u: Hashable) -> int:
        return _bfs_word_length(self, u)


@dataclass(frozen=True)
class IntegerLattice(GroupBackend):
    dim: int = 1
    is_icc = False
    is_abelian = True

    @property
    def name(self) -> str:
        return "Z" if self.dim == 1 else f"Z{self.dim}"

    def identity_word(self) -> Tuple[int, ...]:
        return (0,) * self.dim

    def multiply_words(self, u, v):
        return tuple(a + b for a, b in zip(u, v))

    def invert_word(self, u):
        return tuple(-a for a in u)

    def generator_words(self):
        gens = []
        for i in range(self.dim):
            for sign in (1, -1):
                vec = [0] * self.dim
                vec[i] = sign
                gens.append(tuple(vec))
        return tuple(gens)

    def encode_word(self, u) -> str:
        return ",".join(str(a) for a in u)

    def decode_word(self, text: str):
        try:
            coords = tuple(int(part) for part in text.split(","))
        except ValueError:
            raise ElementEncodingError(f"Malformed {self.name} element: {text!r}")
        if len(coords) != self.dim:
            raise ElementEncodingError(
                f"{self.name} element needs {self.dim} coordinates, got {text!r}"
            )
        return coords

    def word_length(self, u) -> int:
        return sum(abs(a) for a in u)


@dataclass(frozen=True)
class HeisenbergGroup(GroupBackend):
    """Upper unitriangular 3x3 integer matrices, (x, y, z) <-> [[1,x,z],[0,1,y],[0,0,1]]."""

    is_icc = False
    is_abelian = False

    @property
    def name(self) -> str:
        return "heisenberg"

    def identity_word(self):
        return (0, 0, 0)

    def multiply_words(self, u, v):
        return (u[0] + v[0], u[1] + v[1], u[2] + v[2] + u[0] * v[1])

    def invert_word(self, u):
        return (-u[0], -u[1], u[0] * u[1] - u[2])

    def generator_words(self):
        return ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))

    def encode_word(self, u) -> str:
        return ",".join(str(a) for a in u)

    def decode_word(self, text: str):
        try:
            coords = tuple(int(part) for part in text.split(","))
        except ValueError:
            raise ElementEncodingError(f"Malformed heisenberg element: {text!r}")
        if len(coords) != 3:
            raise ElementEncodingError(f"heisenberg element needs 3 coordinates, got {text!r}")
        return coords


@dataclass(frozen=True)
class FreeGroup(GroupBackend):
    """Free group on a, b, ...; A = a^-1. The identity is written "1"."""

    rank: int = 2
    is_abelian = False

    def __post_init__(self):
        if not 1 <= self.rank <= 26:
            raise UnknownBackendError(f"Free group rank must be 1-26, got {self.rank}")

    @property
    def name(self) -> str:
        return f"F{self.rank}"

    @property
    def is_icc(self) -> bool:
        return self.rank >= 2

    @property
    def letters(self) -> str:
        lower = "".join(chr(ord("a") + i) for i in range(self.rank))
        return lower + lower.upper()

    def identity_word(self) -> str:
        return ""

    def multiply_words(self, u: str, v: str) -> str:
        # both factors are reduced, so cancellation only happens at the seam
        k = 0
        limit = min(len(u), len(v))
        while k < limit and u[len(u) - 1 - k] == v[k].swapcase():
            k += 1
        return u[: len(u) - k] + v[k:]

    def invert_word(self, u: str) -> str:
        return u[::-1].swapcase()

    def generator_words(self):
        return tuple(self.letters)

    def encode_word(self, u: str) -> str:
        return u if u else "1"

    def decode_word(self, text: str) -> str:
        if text == "1":
            return ""
        if not text or any(c not in self.letters for c in text):
            raise ElementEncodingError(f"Malformed {self.name} element: {text!r}")
        reduced: List[str] = []
        for c in text:
            if reduced and reduced[-1] == c.swapcase():
                reduced.pop()
            else:
                reduced.append(c)
        return "".join(reduced)

    def order_key(self, u: str):
        letters = self.letters
        return tuple(letters.index(c) for c in u)

    def word_length(self, u: str) -> int:
        return len(u)


_LAMP_PATTERN = re.compile(r"^lamps:(-?\d+(?:,-?\d+)*)?;cursor:(-?\d+)$")


@dataclass(frozen=True)
class LamplighterGroup(GroupBackend):
    """Z/2 wr Z; a word is (sorted tuple of lit lamps, cursor position)."""

    is_icc = True
    is_abelian = False

    @property
    def name(self) -> str:
        return "lamplighter"

    def identity_word(self):
        return ((), 0)

    def multiply_words(self, u, v):
        lamps = set(u[0])
        lamps.symmetric_difference_update(i + u[1] for i in v[0])
        return (tuple(sorted(lamps)), u[1] + v[1])

    def invert_word(self, u):
        return (tuple(sorted(i - u[1] for i in u[0])), -u[1])

    def generator_words(self):
        return (((), 1), ((), -1), ((0,), 0))

    def encode_word(self, u) -> str:
        return "lamps:" + ",".join(str(i) for i in u[0]) + f";cursor:{u[1]}"

    def decode_word(self, text: str):
        match = _LAMP_PATTERN.match(text)
        if not match:
            raise ElementEncodingError(f"Malformed lamplighter element: {text!r}")
        lamps = [int(i) for i in match.group(1).split(",")] if match.group(1) else []
        if len(set(lamps)) != len(lamps):
            raise ElementEncodingError(f"Repeated lamp in lamplighter element: {text!r}")
        return (tuple(sorted(lamps)), int(match.group(2)))

    def word_length(self, u) -> int:
        lamps, cursor = u
        lo = min((0, cursor) + lamps)
        hi = max((0, cursor) + lamps)
        # visit every lit lamp starting at 0 and stop at the cursor
        tour = min(-lo + (hi - lo) + (hi - cursor), hi + (hi - lo) + (cursor - lo))
        return len(lamps) + tour


@dataclass(frozen=True)
class GroupElement:
    backend: GroupBackend
    word: Hashable

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def __invert__(self) -> "GroupElement":
        return inv(self)

    def encode(self) -> str:
        return self.backend.encode_word(self.word)

    def is_identity(self) -> bool:
        return self.word == self.backend.identity_word()

    def __repr__(self) -> str:
        return f"<{self.backend.name} {self.encode()}>"


@dataclass(frozen=True)
class SymmetricSet:
    """Finite subset closed under inverses."""

    elements: FrozenSet[GroupElement]
    contains_identity: bool = field(init=False)

    def __post_init__(self):
        elements = frozenset(self.elements)
        object.__setattr__(self, "elements", elements)
        backends = {g.backend for g in elements}
        if len(backends) > 1:
            raise BackendMismatchError(f"Symmetric set mixes groups: {sorted(b.name for b in backends)}")
        for g in elements:
            if inv(g) not in elements:
                raise NotSymmetricError(f"Set is not symmetric: inverse of {g.encode()} missing")
        object.__setattr__(self, "contains_identity", any(g.is_identity() for g in elements))

    @classmethod
    def closure(cls, elements: Iterable[GroupElement]) -> "SymmetricSet":
        elements = frozenset(elements)
        return cls(elements | frozenset(inv(g) for g in elements))

    def __contains__(self, g) -> bool:
        return g in self.elements

    def __iter__(self) -> Iterator[GroupElement]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def sorted(self) -> List[GroupElement]:
        return sort_canonical(self.elements)

    def squared(self) -> "SymmetricSet":
        return SymmetricSet(set_product(self.elements, self.elements))


def parse_group(spec: str) -> GroupBackend:
    """Map a group name (Z, Z3, F2, heisenberg, lamplighter) to its backend."""
    text = spec.strip()
    if re.fullmatch(r"Z\d*", text):
        dim = int(text[1:]) if len(text) > 1 else 1
        if dim < 1:
            raise UnknownBackendError(f"Unknown group: {spec!r}")
        return IntegerLattice(dim)
    if re.fullmatch(r"F\d+", text):
        return FreeGroup(int(text[1:]))
    if text.lower() in ("heisenberg", "h3"):
        return HeisenbergGroup()
    if text.lower() in ("lamplighter", "l2"):
        return LamplighterGroup()
    raise UnknownBackendError(f"Unknown group: {spec!r}")


def identity(backend: GroupBackend) -> GroupElement:
    return GroupElement(backend, backend.identity_word())


def decode_element(backend: GroupBackend, text: str) -> GroupElement:
    return GroupElement(backend, backend.decode_word(text.strip()))


def encode_element(g: GroupElement) -> str:
    return g.encode()


def generators(backend: GroupBackend) -> List[GroupElement]:
    return [GroupElement(backend, w) for w in backend.generator_words()]


def mul(a: GroupElement, b: GroupElement) -> GroupElement:
    if a.backend is not b.backend and a.backend != b.backend:
        raise BackendMismatchError(f"Cannot multiply {a!r} and {b!r}")
    return GroupElement(a.backend, a.backend.multiply_words(a.word, b.word))


def inv(a: GroupElement) -> GroupElement:
    return GroupElement(a.backend, a.backend.invert_word(a.word))


def word_length(g: GroupElement) -> int:
    return g.backend.word_length(g.word)


def canonical_key(g: GroupElement):
    """Sort key of the canonical enumeration: word length, then normal form."""
    return (g.backend.word_length(g.word), g.backend.order_key(g.word))


def sort_canonical(elements: Iterable[GroupElement]) -> List[GroupElement]:
    return sorted(elements, key=canonical_key)


def _ball_layers(backend: GroupBackend, r: int) -> List[List[Hashable]]:
    """BFS spheres 0..r of the Cayley graph, each sorted by normal form."""
    with _layer_lock:
        layers = _layer_cache.setdefault(backend, [[backend.identity_word()]])
        lengths = _length_cache.setdefault(backend, {backend.identity_word(): 0})
        gens = backend.generator_words()
        while len(layers) <= r:
            previous = layers[-2] if len(layers) > 1 else []
            seen = set(previous) | set(layers[-1])
            fresh = set()
            for u in layers[-1]:
                for s in gens:
                    w = backend.multiply_words(u, s)
                    if w not in seen:
                        fresh.add(w)
            layer = sorted(fresh, key=backend.order_key)
            for w in layer:
                lengths[w] = len(layers)
            layers.append(layer)
        return layers[: r + 1]


def _bfs_word_length(backend: GroupBackend, u: Hashable) -> int:
    lengths = _length_cache.get(backend)
    if lengths is not None and u in lengths:
        return lengths[u]
    radius = len(_layer_cache.get(backend, [])) or 1
    while radius <= MAX_BFS_RADIUS:
        _ball_layers(backend, radius)
        if u in _length_cache[backend]:
            return _length_cache[backend][u]
        radius *= 2
    raise ValueError(
        f"Word length of {backend.encode_word(u)} exceeds BFS limit {MAX_BFS_RADIUS}"
    )


def ball(backend: GroupBackend, r: int) -> SymmetricSet:
    """All elements of word length <= r."""
    if r < 0:
        raise ValueError(f"Ball radius must be non-negative, got {r}")
    words = [w for layer in _ball_layers(backend, r) for w in layer]
    return SymmetricSet(frozenset(GroupElement(backend, w) for w in words))


def enumerate_elements(backend: GroupBackend, n: int) -> List[GroupElement]:
    """The first n elements g_1, ..., g_n of the canonical order; g_1 is the identity."""
    if n < 0:
        raise ValueError(f"Cannot enumerate {n} elements")
    out: List[GroupElement] = []
    r = 0
    while len(out) < n:
        layers = _ball_layers(backend, r)
        out.extend(GroupElement(backend, w) for w in layers[r])
        if not layers[r]:
            break
        r += 1
    return out[:n]


def iter_canonical(backend: GroupBackend, max_radius: int = MAX_BFS_RADIUS) -> Iterator[GroupElement]:
    """Canonical enumeration as an open-ended stream, one BFS layer at a time."""
    for r in range(max_radius + 1):
        layer = _ball_layers(backend, r)[r]
        if not layer:
            return
        for w in layer:
            yield GroupElement(backend, w)


def set_product(P: Iterable[GroupElement], Q: Iterable[GroupElement]) -> FrozenSet[GroupElement]:
    """{p*q : p in P, q in Q}, deduplicated by normal form."""
    Q = list(Q)
    out = set()
    for p in P:
        backend = p.backend
        for q in Q:
            if q.backend != backend:
                raise BackendMismatchError(f"Cannot multiply {p!r} and {q!r}")
            out.add(GroupElement(backend, backend.multiply_words(p.word, q.word)))
    return frozenset(out)


def set_power(P: Iterable[GroupElement], n: int, backend: GroupBackend = None) -> FrozenSet[GroupElement]:
    P = frozenset(P)
    if n < 0:
        raise ValueError(f"Set power must be non-negative, got {n}")
    if n == 0:
        if backend is None:
            if not P:
                raise ValueError("P^0 of an empty set needs an explicit backend")
            backend = next(iter(P)).backend
        return frozenset([identity(backend)])
    result = P
    for _ in range(n - 1):
        result = set_product(result, P)
    return result


def inverse_set(P: Iterable[GroupElement]) -> FrozenSet[GroupElement]:
    return frozenset(inv(g) for g in P)


def is_x_apart(g: GroupElement, h: GroupElement, X) -> bool:
    """True iff g^-1 h is not in X."""
    if not isinstance(X, SymmetricSet):
        X = SymmetricSet(frozenset(X))
    return mul(inv(g), h) not in X.elements


def truncated_conjugates(g: GroupElement, r: int) -> FrozenSet[GroupElement]:
    """{h^-1 g h : h in ball(r)}."""
    if g.backend.is_abelian:
        return frozenset([g])
    return frozenset(mul(mul(inv(h), g), h) for h in ball(g.backend, r))


def conjugacy_growth(g: GroupElement, r_max: int) -> List[int]:
    """Sizes of the truncated conjugacy classes for radii 0..r_max."""
    return [len(truncated_conjugates(g, r)) for r in range(r_max + 1)]


def radius_of(elements: Iterable[GroupElement]) -> int:
    return max((word_length(g) for g in elements), default=0)


def smallest_ball_containing(backend: GroupBackend, elements: Sequence[GroupElement]) -> Tuple[int, SymmetricSet]:
    r = radius_of(elements)
    return r, ball(backend, r)

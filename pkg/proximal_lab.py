#!/usr/bin/env python3
"""
Metrics, proximality checks and the T' construction.

Distances follow the canonical enumeration g_1, g_2, ...: two configurations
are at distance 1/k when they first disagree at g_k, and two shifts are at
distance 1/(n+1) when their pattern sets agree on g_1..g_n. Every infinite
quantifier is truncated (a depth, a search radius), and every not-found
result carries the truncation it was observed at.
"""

import itertools
import logging
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from configuration import (
    BINARY,
    CoverageError,
    WindowConfiguration,
    ones_apart_violations,
)
from groups import (
    GroupBackend,
    GroupElement,
    SymmetricSet,
    ball,
    enumerate_elements,
    inv,
    inverse_set,
    mul,
    radius_of,
    set_product,
    sort_canonical,
    truncated_conjugates,
    word_length,
)
from parallel import pool_map, resolve_workers
from random_field import RandomField, field_value

logger = logging.getLogger(__name__)

FULL = "full"
SAMPLED = "sampled"

# Z is materialised when |W|^2 stays below this, otherwise membership is tested lazily
Z_EXPLICIT_LIMIT = 4_000_000


class IncomparableWindowsError(ValueError):
    """Raised when shift windows differ in group, alphabet or depth."""


class NonConstructiveShiftError(ValueError):
    """Raised for shift families without an extension rule."""


class PaddingError(CoverageError):
    """Raised when s does not cover every center whose block reaches t's window."""


class ZApartnessError(ValueError):
    """Raised when two 1's of s are not Z-apart."""


class MissingConjugatesError(ValueError):
    """Raised when X lacks conjugates the obstruction argument needs."""


class ProximalityFailure(ValueError):
    """Raised when a pair has no proximality witness within the search radius."""


@dataclass(frozen=True)
class Distance:
    value: float
    index: Optional[int]
    depth: int

    @property
    def is_bound(self) -> bool:
        """True when no disagreement was seen: the value is 0 and the true distance is <= 1/(depth+1)."""
        return self.index is None


def first_disagreement(s: WindowConfiguration, t: WindowConfiguration, depth: int) -> Optional[int]:
    """1-based index of the first g_k with s(g_k) != t(g_k), k <= depth."""
    prefix = enumerate_elements(s.backend, depth)
    s.require_cover(prefix, "config_metric")
    t.require_cover(prefix, "config_metric")
    for k, g in enumerate(prefix, start=1):
        if s.values[g] != t.values[g]:
            return k
    return None


def config_metric(s: WindowConfiguration, t: WindowConfiguration, depth: int) -> Distance:
    k = first_disagreement(s, t, depth)
    return Distance(0.0 if k is None else 1.0 / k, k, depth)


@dataclass(frozen=True)
class ShiftWindow:
    """Patterns a shift exhibits on enumerate(depth), each a tuple of symbols in canonical order."""

    backend: GroupBackend
    depth: int
    patterns: FrozenSet[Tuple[int, ...]]
    alphabet: Tuple[int, ...] = BINARY
    family: str = SAMPLED

    def __post_init__(self):
        object.__setattr__(self, "patterns", frozenset(tuple(p) for p in self.patterns))
        if not self.patterns:
            raise ValueError("A shift window needs at least one pattern")
        allowed = set(self.alphabet)
        for p in self.patterns:
            if len(p) != self.depth:
                raise ValueError(f"Pattern of length {len(p)} on a window of {self.depth} sites")
            if not set(p) <= allowed:
                raise ValueError(f"Pattern {p} uses symbols outside {list(self.alphabet)}")

    @cached_property
    def window(self) -> List[GroupElement]:
        return enumerate_elements(self.backend, self.depth)

    @classmethod
    def full(cls, backend: GroupBackend, depth: int, alphabet: Tuple[int, ...] = BINARY) -> "ShiftWindow":
        return cls(backend, depth, frozenset(itertools.product(alphabet, repeat=depth)), alphabet, FULL)

    @classmethod
    def from_samples(
        cls,
        samples: Sequence[WindowConfiguration],
        depth: int,
        positions: Optional[Iterable[GroupElement]] = None,
    ) -> "ShiftWindow":
        """Patterns of the translates g^-1 . c at every position g where g*window lies inside c's window."""
        if not samples:
            raise ValueError("No samples")
        backend = samples[0].backend
        prefix = enumerate_elements(backend, depth)
        patterns = set()
        for c in samples:
            for g in (positions if positions is not None else c.values):
                sites = [mul(g, w) for w in prefix]
                if all(site in c.values for site in sites):
                    patterns.add(tuple(c.values[site] for site in sites))
        if not patterns:
            raise CoverageError(f"No sample window holds a translate of enumerate({depth})")
        return cls(backend, depth, frozenset(patterns), samples[0].alphabet, SAMPLED)

    def restricted(self, m: int) -> FrozenSet[Tuple[int, ...]]:
        return frozenset(p[:m] for p in self.patterns)


def shift_window_metric(S1: ShiftWindow, S2: ShiftWindow) -> Distance:
    """1/(n+1) for the largest n with equal pattern sets on g_1..g_n."""
    if S1.backend != S2.backend or S1.alphabet != S2.alphabet or S1.depth != S2.depth:
        raise IncomparableWindowsError(
            f"Cannot compare shift windows ({S1.backend.name}, depth {S1.depth}) "
            f"and ({S2.backend.name}, depth {S2.depth})"
        )
    for m in range(1, S1.depth + 1):
        if S1.restricted(m) != S2.restricted(m):
            return Distance(1.0 / m, m, S1.depth)
    return Distance(0.0, None, S1.depth)


PatternSource = Union[ShiftWindow, WindowConfiguration, Sequence[WindowConfiguration]]


def all_x_patterns(source: PatternSource, X) -> FrozenSet[Tuple[int, ...]]:
    """X-patterns as tuples over X in canonical order."""
    xs = sort_canonical(X)
    if isinstance(source, ShiftWindow):
        if source.family == FULL:
            return frozenset(itertools.product(source.alphabet, repeat=len(xs)))
        index = {g: i for i, g in enumerate(source.window)}
        missing = [x for x in xs if x not in index]
        if missing:
            raise CoverageError(f"Shift window of depth {source.depth} misses {missing[0].encode()}")
        return frozenset(tuple(p[index[x]] for x in xs) for p in source.patterns)
    samples = [source] if isinstance(source, WindowConfiguration) else list(source)
    patterns = set()
    for c in samples:
        for g in c.values:
            sites = [mul(g, x) for x in xs]
            if all(site in c.values for site in sites):
                patterns.add(tuple(c.values[site] for site in sites))
    if not patterns:
        raise CoverageError("No translate of X fits inside the sampled windows")
    return frozenset(patterns)


def apart_slots(backend: GroupBackend, X: SymmetricSet, count: int) -> List[GroupElement]:
    """First `count` elements in canonical order that are pairwise X*X^-1-apart."""
    spread = set_product(X.elements, inverse_set(X.elements))
    slots: List[GroupElement] = []
    r = 0
    while len(slots) < count:
        r += 1
        for g in ball(backend, r).sorted():
            if len(slots) >= count:
                break
            if g in slots:
                continue
            if all(mul(inv(s), g) not in spread for s in slots):
                slots.append(g)
    return slots


@dataclass(frozen=True)
class PatternLibrary:
    u_library: WindowConfiguration
    V: SymmetricSet
    slots: Tuple[GroupElement, ...]
    patterns: Tuple[Tuple[int, ...], ...]


def build_pattern_library(T: ShiftWindow, X: SymmetricSet, epsilon_inv: int = 1) -> PatternLibrary:
    """Stamp every X-pattern of T at pairwise apart slots; V is the smallest ball holding them and enumerate(m)."""
    if T.family != FULL:
        raise NonConstructiveShiftError(
            f"Shift family {T.family!r} has no extension rule; only the full shift is constructive"
        )
    backend = T.backend
    xs = sort_canonical(X)
    patterns = sorted(all_x_patterns(T, X))
    slots = apart_slots(backend, X, len(patterns))
    least = min(T.alphabet)
    stamped: Dict[GroupElement, int] = {}
    for slot, pattern in zip(slots, patterns):
        for x, symbol in zip(xs, pattern):
            stamped[mul(slot, x)] = symbol
    r = max(radius_of(stamped), radius_of(enumerate_elements(backend, epsilon_inv)))
    V = ball(backend, r)
    values = {g: stamped.get(g, least) for g in V}
    u = WindowConfiguration(backend, values, T.alphabet)
    logger.info(
        "Pattern library on %s: %d patterns, %d slots, V = ball(%d) with %d sites",
        backend.name, len(patterns), len(slots), r, len(V),
    )
    return PatternLibrary(u, V, tuple(slots), tuple(patterns))


@dataclass(frozen=True)
class ProximalPlan:
    X: SymmetricSet
    U: SymmetricSet
    V: SymmetricSet
    u_library: WindowConfiguration
    epsilon_inv: int
    slots: Tuple[GroupElement, ...] = ()

    @property
    def backend(self) -> GroupBackend:
        return self.u_library.backend

    @property
    def epsilon(self) -> float:
        return 1.0 / self.epsilon_inv

    @cached_property
    def VU2(self) -> FrozenSet[GroupElement]:
        return set_product(set_product(self.V.elements, self.U.elements), self.U.elements)

    @cached_property
    def W(self) -> FrozenSet[GroupElement]:
        """V*U^2*X."""
        return set_product(self.VU2, self.X.elements)

    @cached_property
    def Z(self) -> SymmetricSet:
        """(VU^2X)(VU^2X)^-1, enumerated in full."""
        return SymmetricSet(set_product(self.W, inverse_set(self.W)))

    @cached_property
    def _w_radius(self) -> int:
        return radius_of(self.W)

    def in_z(self, z: GroupElement) -> bool:
        if word_length(z) > 2 * self._w_radius:
            return False
        if len(self.W) ** 2 <= Z_EXPLICIT_LIMIT:
            return z in self.Z.elements
        W = self.W
        return any(mul(z, b) in W for b in W)


def build_proximal_plan(
    backend: GroupBackend,
    x_radius: int,
    epsilon_inv: int,
    alphabet_size: int = 2,
    u_radius: int = 0,
) -> ProximalPlan:
    """Full-shift plan: X = ball(x_radius) enlarged to hold enumerate(m), library u, V, U = ball(u_radius)."""
    if epsilon_inv < 1:
        raise ValueError(f"epsilon_inv must be >= 1, got {epsilon_inv}")
    if alphabet_size < 1:
        raise ValueError(f"alphabet_size must be >= 1, got {alphabet_size}")
    X = SymmetricSet.closure(ball(backend, x_radius).elements | frozenset(enumerate_elements(backend, epsilon_inv)))
    alphabet = tuple(range(alphabet_size))
    T = ShiftWindow.full(backend, min(epsilon_inv, len(X)), alphabet)
    library = build_pattern_library(T, X, epsilon_inv)
    return ProximalPlan(X, ball(backend, u_radius), library.V, library.u_library, epsilon_inv, library.slots)


def random_full_shift_config(
    backend: GroupBackend,
    window: Iterable[GroupElement],
    alphabet: Tuple[int, ...] = BINARY,
    seed: int = 0,
) -> WindowConfiguration:
    """A sample of the full shift: symbol index = floor(V_g * |A|)."""
    f = RandomField(seed, backend)
    n = len(alphabet)
    values = {g: alphabet[min(n - 1, int(field_value(f, g) * n))] for g in window}
    return WindowConfiguration(backend, values, alphabet, seed=seed)


def check_z_apart(s: WindowConfiguration, plan: ProximalPlan) -> List[Tuple[GroupElement, GroupElement]]:
    ones = sort_canonical(s.ones())
    bad = []
    for i, a in enumerate(ones):
        a_inv = inv(a)
        for b in ones[i + 1:]:
            if plan.in_z(mul(a_inv, b)):
                bad.append((a, b))
    return bad


def greedy_z_witness(
    plan: ProximalPlan,
    window: Iterable[GroupElement],
    seed: int,
) -> WindowConfiguration:
    """
    Deterministic representative with Z-apart 1's: a maximal Z-apart set, greedy
    over a seeded shuffle of the window. Not a draw from the Z-witness shift.
    """
    order = sort_canonical(window)
    random.Random(f"z-witness/{seed}").shuffle(order)
    chosen: List[GroupElement] = []
    for g in order:
        if all(not plan.in_z(mul(inv(a), g)) for a in chosen):
            chosen.append(g)
    values = {g: 0 for g in order}
    for g in chosen:
        values[g] = 1
    return WindowConfiguration(plan.backend, values, BINARY, seed=seed)


def build_t_prime(plan: ProximalPlan, s: WindowConfiguration, t: WindowConfiguration) -> WindowConfiguration:
    """
    t' on t's window: u(k^-1 g) on k*V for each 1 k of s, the least symbol on
    k*(VU^2 \\ V), and t everywhere else.
    """
    if t.alphabet != plan.u_library.alphabet:
        raise ValueError(f"t uses alphabet {list(t.alphabet)}, the library {list(plan.u_library.alphabet)}")
    needed = set_product(t.window, inverse_set(plan.VU2))
    missing = [g for g in needed if g not in s.values]
    if missing:
        raise PaddingError(
            f"s does not cover {len(missing)} centers reaching t's window, e.g. {sort_canonical(missing)[0].encode()}"
        )
    bad = check_z_apart(s, plan)
    if bad:
        a, b = bad[0]
        raise ZApartnessError(f"1's of s at {a.encode()} and {b.encode()} are not Z-apart")
    least = min(t.alphabet)
    values = dict(t.values)
    annulus = plan.VU2 - plan.V.elements
    u = plan.u_library.values
    for k in s.ones():
        for h in plan.V:
            g = mul(k, h)
            if g in values:
                values[g] = u[h]
        for h in annulus:
            g = mul(k, h)
            if g in values:
                values[g] = least
    return WindowConfiguration(t.backend, values, t.alphabet)


@dataclass(frozen=True)
class SearchResult:
    """A witness g, or None after searching ball(search_radius) at the given depth."""

    element: Optional[GroupElement]
    distance: Optional[Distance]
    search_radius: int
    depth: int

    @property
    def found(self) -> bool:
        return self.element is not None


def _disagreement_after_shift(
    g: GroupElement,
    t1: WindowConfiguration,
    t2: WindowConfiguration,
    prefix: Sequence[GroupElement],
    shift_both: bool,
) -> Optional[int]:
    g_inv = inv(g)
    for k, e_k in enumerate(prefix, start=1):
        site = mul(g_inv, e_k)
        if site not in t1.values:
            raise CoverageError(f"t1 does not cover {site.encode()}")
        other = site if shift_both else e_k
        if other not in t2.values:
            raise CoverageError(f"t2 does not cover {other.encode()}")
        if t1.values[site] != t2.values[other]:
            return k
    return None


def _search(t1, t2, epsilon, search_radius, depth, shift_both) -> SearchResult:
    prefix = enumerate_elements(t1.backend, depth)
    for g in ball(t1.backend, search_radius).sorted():
        k = _disagreement_after_shift(g, t1, t2, prefix, shift_both)
        d = Distance(0.0 if k is None else 1.0 / k, k, depth)
        if d.value < epsilon:
            return SearchResult(g, d, search_radius, depth)
    return SearchResult(None, None, search_radius, depth)


def check_eps_proximal(
    t1: WindowConfiguration,
    t2: WindowConfiguration,
    epsilon: float,
    search_radius: int,
    depth: int,
) -> SearchResult:
    """First g in ball(search_radius) with d(g.t1, g.t2) < epsilon."""
    return _search(t1, t2, epsilon, search_radius, depth, shift_both=True)


def check_eps_minimal(
    t1: WindowConfiguration,
    t2: WindowConfiguration,
    epsilon: float,
    search_radius: int,
    depth: int,
) -> SearchResult:
    """First g in ball(search_radius) with d(g.t1, t2) < epsilon."""
    return _search(t1, t2, epsilon, search_radius, depth, shift_both=False)


def _proximal_job(args) -> SearchResult:
    t1, t2, epsilon, search_radius, depth = args
    return check_eps_proximal(t1, t2, epsilon, search_radius, depth)


def proximality_witness_set(
    pairs: Sequence[Tuple[WindowConfiguration, WindowConfiguration]],
    epsilon: float,
    search_radius: int,
    depth: int,
    workers: Optional[int] = 1,
) -> FrozenSet[GroupElement]:
    """Union of the proximality witnesses of all pairs: a finite set demonstrating the sampled pairs."""
    if not pairs:
        return frozenset()
    args_list = [(t1, t2, epsilon, search_radius, depth) for t1, t2 in pairs]
    results = pool_map(_proximal_job, args_list, resolve_workers(workers))
    witnesses = set()
    for i, result in enumerate(results):
        if not result.found:
            raise ProximalityFailure(
                f"Pair {i} has no proximality witness within radius {search_radius} at depth {depth}"
            )
        witnesses.add(result.element)
    return frozenset(witnesses)


@dataclass
class ObstructionResult:
    certificate: bool
    conjugates: List[Tuple[GroupElement, GroupElement]] = field(default_factory=list)
    violation: Optional[Tuple[GroupElement, GroupElement]] = None
    common_window: int = 0


def obstruction_certificate(
    g: GroupElement,
    X: SymmetricSet,
    u: WindowConfiguration,
    conjugator_radius: Optional[int] = None,
) -> ObstructionResult:
    """
    Certify that u and g.u share no 1: every 1 a of u has a^-1 g a in X, so a
    common 1 at a would put a and g^-1 a, two 1's of u, inside one X-translate.
    """
    if g.is_identity():
        raise ValueError("The obstruction needs a non-identity g")
    violations = ones_apart_violations(u, X)
    if violations:
        return ObstructionResult(False, violation=violations[0])
    if conjugator_radius is not None:
        outside = truncated_conjugates(g, conjugator_radius) - X.elements
        if outside:
            raise MissingConjugatesError(
                f"X misses {len(outside)} conjugates of {g.encode()} within radius {conjugator_radius}, "
                f"e.g. {sort_canonical(outside)[0].encode()}"
            )
    conjugates = []
    for a in sort_canonical(u.ones()):
        c = mul(mul(inv(a), g), a)
        if c not in X:
            raise MissingConjugatesError(f"X misses the conjugate {c.encode()} = a^-1 g a at a = {a.encode()}")
        conjugates.append((a, c))
    g_inv = inv(g)
    common = [a for a in u.ones() if u.values.get(mul(g_inv, a)) == 1]
    if common:
        raise AssertionError(f"Certificate and common 1 at {common[0].encode()} together")
    window = sum(1 for a in u.values if mul(g_inv, a) in u.values)
    return ObstructionResult(True, conjugates=conjugates, common_window=window)


@dataclass(frozen=True)
class FaithfulnessResult:
    moved: bool
    sample_index: Optional[int] = None
    site: Optional[GroupElement] = None
    checked_sites: int = 0

    @property
    def inconclusive(self) -> bool:
        return not self.moved


def faithfulness_check(g: GroupElement, samples: Sequence[WindowConfiguration]) -> FaithfulnessResult:
    """Some sample s and site h with (g.s)(h) = s(g^-1 h) != s(h), on the common window W and gW."""
    g_inv = inv(g)
    checked = 0
    for i, s in enumerate(samples):
        for h in s.sorted_sites():
            source = mul(g_inv, h)
            if source not in s.values:
                continue
            checked += 1
            if s.values[source] != s.values[h]:
                return FaithfulnessResult(True, i, h, checked)
    if samples and checked == 0:
        raise CoverageError(f"No sample window overlaps its translate by {g.encode()}")
    return FaithfulnessResult(False, checked_sites=checked)

"""Finite-window configurations: partial maps from a group window to an alphabet."""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from groups import GroupBackend, GroupElement, canonical_key, mul, sort_canonical

BINARY = (0, 1)


class CoverageError(ValueError):
    """Raised when a window does not cover the sites an operation reads."""


class SymbolError(ValueError):
    """Raised for values outside the configuration's alphabet."""


@dataclass(frozen=True, eq=False)
class WindowConfiguration:
    backend: GroupBackend
    values: Mapping[GroupElement, int]
    alphabet: Tuple[int, ...] = BINARY
    # provenance only; never part of equality
    seed: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        values = dict(self.values)
        allowed = set(self.alphabet)
        if len(allowed) != len(self.alphabet) or not self.alphabet:
            raise SymbolError(f"Alphabet must be a nonempty list of distinct symbols, got {self.alphabet}")
        for g, v in values.items():
            if g.backend != self.backend:
                raise ValueError(f"Site {g!r} is not an element of {self.backend.name}")
            if v not in allowed:
                raise SymbolError(f"Symbol {v!r} at {g.encode()} is outside alphabet {list(self.alphabet)}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "alphabet", tuple(self.alphabet))

    @property
    def window(self) -> FrozenSet[GroupElement]:
        return frozenset(self.values)

    def __getitem__(self, g: GroupElement) -> int:
        try:
            return self.values[g]
        except KeyError:
            raise CoverageError(f"Site {g.encode()} is outside the configuration window")

    def get(self, g: GroupElement, default=None):
        return self.values.get(g, default)

    def __contains__(self, g) -> bool:
        return g in self.values

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WindowConfiguration):
            return NotImplemented
        return (
            self.backend == other.backend
            and self.alphabet == other.alphabet
            and dict(self.values) == dict(other.values)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"WindowConfiguration({self.backend.name}, sites={len(self.values)}, alphabet={list(self.alphabet)})"

    def covers(self, sites: Iterable[GroupElement]) -> bool:
        return all(g in self.values for g in sites)

    def require_cover(self, sites: Iterable[GroupElement], what: str = "operation") -> None:
        for g in sites:
            if g not in self.values:
                raise CoverageError(f"Window does not cover {g.encode()} needed by {what}")

    def ones(self) -> FrozenSet[GroupElement]:
        return frozenset(g for g, v in self.values.items() if v == 1)

    def sorted_sites(self) -> List[GroupElement]:
        return sort_canonical(self.values)

    def restrict(self, sites: Iterable[GroupElement]) -> "WindowConfiguration":
        sites = list(sites)
        self.require_cover(sites, "restrict")
        return WindowConfiguration(self.backend, {g: self.values[g] for g in sites}, self.alphabet, self.seed)


def ones_apart_violations(c: WindowConfiguration, X) -> List[Tuple[GroupElement, GroupElement]]:
    """Pairs a != b of 1's in c with a^-1 b in X, each unordered pair listed once, canonical order."""
    ones = c.ones()
    found = []
    for a in sort_canonical(ones):
        for x in X:
            if x.is_identity():
                continue
            b = mul(a, x)
            if b in ones and canonical_key(a) < canonical_key(b):
                found.append((a, b))
    found.sort(key=lambda pair: (canonical_key(pair[0]), canonical_key(pair[1])))
    return found


def translate(g: GroupElement, c: WindowConfiguration) -> WindowConfiguration:
    """Left translate: the result carries value c(w) at g*w, on window g*W."""
    return WindowConfiguration(c.backend, {mul(g, w): v for w, v in c.values.items()}, c.alphabet, c.seed)


def constant_configuration(
    backend: GroupBackend,
    window: Iterable[GroupElement],
    symbol: int = 0,
    alphabet: Tuple[int, ...] = BINARY,
) -> WindowConfiguration:
    return WindowConfiguration(backend, {g: symbol for g in window}, alphabet)


def from_ones(
    backend: GroupBackend,
    window: Iterable[GroupElement],
    ones: Iterable[GroupElement],
) -> WindowConfiguration:
    """Binary configuration on window with 1 exactly on the listed sites."""
    window = frozenset(window)
    ones = frozenset(ones)
    stray = ones - window
    if stray:
        raise CoverageError(f"Sites outside window: {sorted(g.encode() for g in stray)}")
    values: Dict[GroupElement, int] = {g: (1 if g in ones else 0) for g in window}
    return WindowConfiguration(backend, values, BINARY)

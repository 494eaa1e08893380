#!/usr/bin/env python3
"""
Randomized construction of X-witness configurations on a finite set.

Pipeline:
  1. find a switching element g_s: g_s^-1 x g_s leaves X^2 for every x != e in X^2
  2. grow Y1 greedily in canonical order with Y1 and Y1*g_s disjoint, then
     Y = (Y1 u Y1 g_s) u (Y1 u Y1 g_s)^-1 u X
  3. evaluate the failure bound |Y^k|^2 (1 - |X|^-2)^(|Y|/c_den)
  4. draw local-maximum configurations over the window Y^k * Y until every
     ordered pair g, h in Y^k has some a in Y with s(ga) = s(ha) = 1
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Tuple

import networkx as nx

from configuration import WindowConfiguration, ones_apart_violations
from groups import (
    GroupElement,
    SymmetricSet,
    ball,
    identity,
    inv,
    iter_canonical,
    mul,
    set_power,
    set_product,
    sort_canonical,
)
from parallel import pool_map, resolve_workers, split_range
from random_field import RandomField, local_max_config

logger = logging.getLogger(__name__)

DEFAULT_K = 100
DEFAULT_FRAC = 5

# |Y^k| is enumerated exactly up to this exponent, |Y|^k is used beyond it
EXACT_POWER_LIMIT = 3
EXACT_POWER_MAX_PRODUCTS = 5_000_000


class WitnessParamsError(ValueError):
    """Raised when the construction constants violate their constraints."""


class NoSwitchingElementError(ValueError):
    """Raised when no switching element exists in the searched ball."""


class SamePairError(ValueError):
    """Raised when a distancing set is requested for g = h."""


class EmptyDistancingError(ValueError):
    """Raised when there is nothing to build an independent set from."""


class InadmissiblePlanError(ValueError):
    """Raised when sampling from a plan whose failure bound is not below 1."""


class WitnessExhaustedError(ValueError):
    """Raised when max_attempts seeds all fail the pair-coverage test."""

    def __init__(self, attempts: int, first_seed: int):
        self.attempts = attempts
        self.first_seed = first_seed
        super().__init__(
            f"No witness configuration after {attempts} attempts "
            f"(seeds {first_seed}..{first_seed + attempts - 1})"
        )


@dataclass(frozen=True)
class WitnessParams:
    X: SymmetricSet
    k: int = DEFAULT_K
    c_exp: Optional[int] = None
    c_den: Optional[int] = None
    frac: int = DEFAULT_FRAC

    def __post_init__(self):
        if len(self.X) == 0:
            raise WitnessParamsError("X must be nonempty")
        if self.c_exp is None:
            object.__setattr__(self, "c_exp", 2 * self.k)
        if self.c_den is None:
            object.__setattr__(self, "c_den", 10 * len(self.x_squared) + 5)
        errors = []
        if self.k < 1:
            errors.append(f"k must be >= 1, got {self.k}")
        if self.c_exp != 2 * self.k:
            errors.append(f"c_exp must equal 2k = {2 * self.k}, got {self.c_exp}")
        if self.c_den < 2 * len(self.x_squared) + 1:
            errors.append(f"c_den must be >= 2|X^2|+1 = {2 * len(self.x_squared) + 1}, got {self.c_den}")
        if self.frac < 2:
            errors.append(f"frac must be >= 2, got {self.frac}")
        if errors:
            raise WitnessParamsError("; ".join(errors))

    @cached_property
    def x_squared(self) -> SymmetricSet:
        return self.X.squared()

    @property
    def backend(self):
        return next(iter(self.X)).backend


@dataclass(frozen=True)
class FailureBound:
    exact: float
    coarse: float

    @property
    def admissible(self) -> bool:
        return self.exact < 1.0


def _log_scaled(count: float, exponent: float, base: float, y_size: int, c_den: int) -> float:
    """count^exponent * base^(y_size/c_den), evaluated in log space."""
    if base <= 0.0:
        return 0.0
    log_value = exponent * math.log(count) + (y_size / c_den) * math.log(base)
    if log_value > 709.0:
        return math.inf
    return math.exp(log_value)


def failure_bound(params: WitnessParams, y_size: int, y_pow_k_size: Optional[int] = None) -> FailureBound:
    """Exact-cardinality form |Y^k|^2 * base^(|Y|/c_den) and the looser |Y|^c_exp form."""
    if y_size < len(params.X):
        raise ValueError(f"ySize {y_size} is smaller than |X| = {len(params.X)}")
    if y_pow_k_size is None:
        y_pow_k_size = y_size ** params.k
    base = 1.0 - len(params.X) ** -2
    exact = _log_scaled(y_pow_k_size, 2, base, y_size, params.c_den)
    coarse = _log_scaled(y_size, params.c_exp, base, y_size, params.c_den)
    return FailureBound(exact=exact, coarse=coarse)


def minimal_admissible_size(params: WitnessParams, form: str = "coarse", limit: int = 1 << 200) -> int:
    """Smallest |Y| >= |X| with bound < 1, using |Y^k| <= |Y|^k; bisection on the monotone tail."""
    if form not in ("coarse", "exact"):
        raise ValueError(f"Unknown bound form {form!r}")

    def below_one(y: int) -> bool:
        bound = failure_bound(params, y)
        return (bound.coarse if form == "coarse" else bound.exact) < 1.0

    lo = len(params.X)
    if below_one(lo):
        return lo
    hi = lo * 2
    while not below_one(hi):
        hi *= 2
        if hi > limit:
            raise ValueError(f"Bound stays >= 1 up to |Y| = {limit}")
    # the bound first rises then falls in |Y|; [hi/2, hi] brackets the crossing
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if below_one(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _conjugate(g: GroupElement, x: GroupElement) -> GroupElement:
    return mul(mul(inv(g), x), g)


def is_switching_element(g: GroupElement, X: SymmetricSet) -> bool:
    X2 = X.squared()
    return all(_conjugate(g, x) not in X2 for x in X2 if not x.is_identity())


def find_switching_element(X: SymmetricSet, search_radius: int) -> Optional[GroupElement]:
    """First non-identity g in ball(search_radius), canonical order, with g^-1 x g outside X^2 for x != e in X^2."""
    if len(X) == 0:
        raise ValueError("X must be nonempty")
    backend = next(iter(X)).backend
    X2 = X.squared()
    targets = [x for x in X2.sorted() if not x.is_identity()]
    for g in ball(backend, search_radius).sorted():
        if g.is_identity():
            continue
        if all(_conjugate(g, x) not in X2.elements for x in targets):
            return g
    logger.info("No switching element for |X|=%d within radius %d", len(X), search_radius)
    return None


def power_size(Y: SymmetricSet, k: int) -> Tuple[int, bool]:
    """(|Y^k|, exact) with the exact count only when it is cheap to enumerate."""
    if k <= EXACT_POWER_LIMIT and len(Y) ** k <= EXACT_POWER_MAX_PRODUCTS:
        return len(set_power(Y.elements, k)), True
    return len(Y) ** k, False


@dataclass(frozen=True)
class WitnessPlan:
    params: WitnessParams
    g_s: GroupElement
    Y1: FrozenSet[GroupElement]
    Y: SymmetricSet
    bound: FailureBound
    y_pow_k_size: int
    y_pow_k_exact: bool = True

    def __post_init__(self):
        if not self.params.X.elements <= self.Y.elements:
            raise WitnessParamsError("Y must contain X")
        if self.Y1:
            shifted = frozenset(mul(y, self.g_s) for y in self.Y1)
            if shifted & self.Y1:
                raise WitnessParamsError(f"Y1 meets Y1*{self.g_s.encode()}")

    @property
    def X(self) -> SymmetricSet:
        return self.params.X

    @property
    def admissible(self) -> bool:
        return self.bound.admissible

    @cached_property
    def y_power(self) -> FrozenSet[GroupElement]:
        """Y^k."""
        return set_power(self.Y.elements, self.params.k)

    @cached_property
    def sample_window(self) -> FrozenSet[GroupElement]:
        """Y^k * Y, the sites pair coverage reads."""
        return set_product(self.y_power, self.Y.elements)

    @classmethod
    def from_sets(
        cls,
        params: WitnessParams,
        Y,
        g_s: Optional[GroupElement] = None,
        Y1=frozenset(),
    ) -> "WitnessPlan":
        """Plan over a caller-supplied Y, bypassing the switching-element search."""
        Y = Y if isinstance(Y, SymmetricSet) else SymmetricSet(frozenset(Y))
        if g_s is None:
            g_s = identity(params.backend)
        y_pow_k_size, exact = power_size(Y, params.k)
        bound = failure_bound(params, len(Y), y_pow_k_size)
        return cls(params, g_s, frozenset(Y1), Y, bound, y_pow_k_size, exact)


def build_plan(params: WitnessParams, size_floor: int, search_radius: int) -> WitnessPlan:
    g_s = find_switching_element(params.X, search_radius)
    if g_s is None:
        raise NoSwitchingElementError(
            f"No switching element within radius {search_radius} of {params.backend.name}"
        )
    target = max(size_floor, len(params.X))
    Y1: List[GroupElement] = []
    members = set()
    shifted = set()
    for y in iter_canonical(params.backend):
        if len(Y1) >= target:
            break
        y_shift = mul(y, g_s)
        if y in shifted or y_shift in members:
            continue
        Y1.append(y)
        members.add(y)
        shifted.add(y_shift)
    if len(Y1) < target:
        raise ValueError(f"Could not grow Y1 to {target} elements")

    core = members | shifted
    Y = SymmetricSet(frozenset(core) | frozenset(inv(y) for y in core) | params.X.elements)
    y_pow_k_size, exact = power_size(Y, params.k)
    bound = failure_bound(params, len(Y), y_pow_k_size)
    plan = WitnessPlan(params, g_s, frozenset(Y1), Y, bound, y_pow_k_size, exact)
    logger.info(
        "Witness plan on %s: g_s=%s |Y1|=%d |Y|=%d |Y^%d|=%d%s bound=%.4g admissible=%s",
        params.backend.name, g_s.encode(), len(Y1), len(Y), params.k, y_pow_k_size,
        "" if exact else " (upper bound)", bound.exact, plan.admissible,
    )
    return plan


def distancing_subset(g: GroupElement, h: GroupElement, plan: WitnessPlan) -> FrozenSet[GroupElement]:
    """Y'_{g,h} = {y in Y : g*y and h*y are X^2-apart}."""
    if g == h:
        raise SamePairError(f"Distancing set needs g != h, got {g.encode()} twice")
    X2 = plan.params.x_squared.elements
    return frozenset(y for y in plan.Y if mul(inv(mul(g, y)), mul(h, y)) not in X2)


def conflict_graph(g: GroupElement, h: GroupElement, nodes: FrozenSet[GroupElement], X2: SymmetricSet) -> nx.Graph:
    """Edges join y1, y2 when g*y1, h*y2 (or g*y2, h*y1) fail X^2-apartness."""
    graph = nx.Graph()
    graph.add_nodes_from(nodes)
    shift = mul(inv(h), g)
    for y1 in nodes:
        # h*y2 in g*y1*X^2  <=>  y2 in h^-1 g y1 X^2
        anchor = mul(shift, y1)
        for x in X2:
            y2 = mul(anchor, x)
            if y2 != y1 and y2 in nodes:
                graph.add_edge(y1, y2)
    return graph


def independent_distancing_subset(g: GroupElement, h: GroupElement, plan: WitnessPlan) -> FrozenSet[GroupElement]:
    """Greedy independent set of the conflict graph on Y'_{g,h}, taking nodes in canonical order."""
    nodes = distancing_subset(g, h, plan)
    if not nodes:
        raise EmptyDistancingError(f"No distancing elements for ({g.encode()}, {h.encode()})")
    graph = conflict_graph(g, h, nodes, plan.params.x_squared)
    chosen = set()
    for node in sort_canonical(nodes):
        if node not in graph:
            continue
        chosen.add(node)
        graph.remove_nodes_from(set(graph.neighbors(node)) | {node})
    return frozenset(chosen)


def _coverage_masks(s: WindowConfiguration, plan: WitnessPlan) -> Dict[GroupElement, int]:
    Y_list = sort_canonical(plan.Y)
    masks = {}
    for g in plan.y_power:
        mask = 0
        for bit, a in enumerate(Y_list):
            if s.values[mul(g, a)] == 1:
                mask |= 1 << bit
        masks[g] = mask
    return masks


def uncovered_pairs(
    s: WindowConfiguration,
    plan: WitnessPlan,
    limit: Optional[int] = None,
) -> List[Tuple[GroupElement, GroupElement]]:
    """Ordered pairs (g, h) in Y^k x Y^k with no a in Y where s(ga) = s(ha) = 1."""
    masks = _coverage_masks(s, plan)
    ordered = sort_canonical(masks)
    found = []
    for g in ordered:
        mg = masks[g]
        for h in ordered:
            if not mg & masks[h]:
                found.append((g, h))
                if limit is not None and len(found) >= limit:
                    return found
    return found


@dataclass
class WitnessReport:
    apart_violations: List[Tuple[GroupElement, GroupElement]] = field(default_factory=list)
    uncovered: List[Tuple[GroupElement, GroupElement]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.apart_violations and not self.uncovered


def verify_witness_properties(s: WindowConfiguration, plan: WitnessPlan) -> WitnessReport:
    s.require_cover(plan.sample_window, "witness verification")
    return WitnessReport(
        apart_violations=ones_apart_violations(s, plan.X),
        uncovered=uncovered_pairs(s, plan),
    )


def _first_success(args) -> Optional[int]:
    """Pool worker: first seed in [lo, hi) whose configuration covers every pair."""
    plan, window, lo, hi = args
    for seed in range(lo, hi):
        s = local_max_config(RandomField(seed, plan.params.backend), plan.X, window)
        if not uncovered_pairs(s, plan, limit=1):
            return seed
    return None


def _failure_count(args) -> int:
    plan, window, lo, hi = args
    failures = 0
    for seed in range(lo, hi):
        s = local_max_config(RandomField(seed, plan.params.backend), plan.X, window)
        if uncovered_pairs(s, plan, limit=1):
            failures += 1
    return failures


def sample_witness_config(
    plan: WitnessPlan,
    seed: int,
    max_attempts: int,
    workers: Optional[int] = 1,
    allow_inadmissible: bool = False,
) -> WindowConfiguration:
    """The configuration of the first seed in seed, seed+1, ... that covers every pair of Y^k."""
    if not plan.admissible and not allow_inadmissible:
        raise InadmissiblePlanError(
            f"Plan bound {plan.bound.exact:.4g} >= 1; pass allow_inadmissible for empirical runs"
        )
    if max_attempts < 1:
        raise ValueError(f"max_attempts must be >= 1, got {max_attempts}")
    window = plan.sample_window
    workers = resolve_workers(workers)
    # rounds of a few seeds per worker so an early success ends the search
    round_size = workers * 4
    next_seed = seed
    stop = seed + max_attempts
    while next_seed < stop:
        round_stop = min(stop, next_seed + round_size)
        chunks = split_range(next_seed, round_stop, workers)
        hits = pool_map(_first_success, [(plan, window, lo, hi) for lo, hi in chunks], workers)
        for hit in hits:
            if hit is not None:
                s = local_max_config(RandomField(hit, plan.params.backend), plan.X, window)
                logger.info("Witness configuration found at seed %d after %d attempts", hit, hit - seed + 1)
                return s
        next_seed = round_stop
    raise WitnessExhaustedError(max_attempts, seed)


def pair_failure_count(
    plan: WitnessPlan,
    seed: int,
    trials: int,
    workers: Optional[int] = 1,
) -> Tuple[int, int]:
    """(failures, trials): seeds whose configuration leaves some pair of Y^k uncovered."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    window = plan.sample_window
    workers = resolve_workers(workers)
    chunks = split_range(seed, seed + trials, workers * 4)
    failures = sum(pool_map(_failure_count, [(plan, window, lo, hi) for lo, hi in chunks], workers))
    return failures, trials

#!/usr/bin/env python3
"""
Stamping witness configurations onto saturated packings.

A sample of the witness shift is built from two seeded greedy packings over
one window: a coarse one with blocks Y^k*X and a fine one with blocks Y*X.
They are merged (all coarse blocks, plus the fine blocks that avoid them),
topped up to saturation, and every block at h receives the translate of the
witness s on its X-interior: t(h*y) = s(y) for y in Y^k (coarse) or Y (fine).
Sites outside all block interiors are 0.
"""

import logging
import random
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

from configuration import BINARY, WindowConfiguration, ones_apart_violations
from groups import GroupElement, SymmetricSet, ball, mul, radius_of, set_product, sort_canonical
from packing import (
    COARSE,
    FINE,
    PackingWindow,
    Shape,
    fill_saturation,
    greedy_saturate,
    merge_phi,
)
from witness_construct import WitnessPlan

logger = logging.getLogger(__name__)

LOCATOR_POWER = 4
DEFAULT_LOCATOR_LIMIT = 200_000


@dataclass(frozen=True)
class BlockStamp:
    center: GroupElement
    shape_id: str
    interior: FrozenSet[GroupElement]

    def sites(self) -> List[Tuple[GroupElement, GroupElement]]:
        """(site, source) pairs: t(site) = s(source)."""
        return [(mul(self.center, y), y) for y in self.interior]


@dataclass(frozen=True)
class CommonOne:
    element: Optional[GroupElement]
    path: str  # "locator", "exhaustive" or "none"
    searched: int

    @property
    def found(self) -> bool:
        return self.element is not None


def x_interior(W: Iterable[GroupElement], X: SymmetricSet) -> FrozenSet[GroupElement]:
    """{g in W : g*X within W}."""
    W = frozenset(W)
    return frozenset(g for g in W if all(mul(g, x) in W for x in X))


def shift_shapes(plan: WitnessPlan) -> Tuple[Shape, Shape]:
    coarse = Shape(COARSE, set_product(plan.y_power, plan.X.elements))
    fine = Shape(FINE, set_product(plan.Y.elements, plan.X.elements))
    return coarse, fine


def default_window_radius(plan: WitnessPlan) -> int:
    """Radius of a ball holding Y^4 * Y^k * X and one more Y, so the common-1 locator is observable."""
    r_y = radius_of(plan.Y)
    return (LOCATOR_POWER + 1) * r_y + radius_of(shift_shapes(plan)[0].cells)


def block_stamps(p: PackingWindow, plan: WitnessPlan) -> List[BlockStamp]:
    interiors = {COARSE: plan.y_power, FINE: plan.Y.elements}
    stamps = []
    for center, shape_id in p.blocks():
        if shape_id not in interiors:
            raise ValueError(f"Packing has block {shape_id!r}; expected {COARSE!r} or {FINE!r}")
        stamps.append(BlockStamp(center, shape_id, frozenset(interiors[shape_id])))
    return stamps


def stamp_psi(
    p: PackingWindow,
    s: WindowConfiguration,
    plan: WitnessPlan,
    sites: Optional[Iterable[GroupElement]] = None,
) -> WindowConfiguration:
    """psi: translates of s on the X-interiors of the blocks of p, 0 elsewhere; output on p's window by default."""
    s.require_cover(plan.y_power | plan.Y.elements, "stamp_psi")
    window = frozenset(sites) if sites is not None else p.window
    values = {g: 0 for g in window}
    for stamp in block_stamps(p, plan):
        for site, source in stamp.sites():
            if site in values:
                values[site] = s.values[source]
    return WindowConfiguration(p.backend, values, BINARY)


def shuffled_order(window: Iterable[GroupElement], seed: int, label: str) -> List[GroupElement]:
    """Seeded shuffle of the canonical order; string seeds make it independent of PYTHONHASHSEED."""
    order = sort_canonical(window)
    random.Random(f"{label}/{seed}").shuffle(order)
    return order


def draw_shift_packing(
    plan: WitnessPlan,
    seeds: Tuple[int, int],
    window: Iterable[GroupElement],
) -> PackingWindow:
    """Merged and saturated {Y^k X, Y X}-packing behind one sample."""
    window = frozenset(window)
    backend = plan.params.backend
    coarse, fine = shift_shapes(plan)
    coarse_order = shuffled_order(window, seeds[0], COARSE)
    fine_order = shuffled_order(window, seeds[1], FINE)
    p1 = greedy_saturate(backend, window, [coarse], order=coarse_order)
    p2 = greedy_saturate(backend, window, [fine], order=fine_order)
    merged = merge_phi(p1, p2)
    filled = fill_saturation(merged, order=coarse_order)
    logger.debug(
        "Shift packing seeds=%s: %d coarse, %d fine blocks (%d added by top-up)",
        seeds,
        sum(1 for v in filled.assignment.values() if v == COARSE),
        sum(1 for v in filled.assignment.values() if v == FINE),
        len(filled.assignment) - len(merged.assignment),
    )
    return filled


def sample_witness_shift_config(
    plan: WitnessPlan,
    s: WindowConfiguration,
    seeds: Tuple[int, int],
    window: Optional[Iterable[GroupElement]] = None,
) -> WindowConfiguration:
    if window is None:
        window = ball(plan.params.backend, default_window_radius(plan))
    packing = draw_shift_packing(plan, seeds, window)
    t = stamp_psi(packing, s, plan)
    return WindowConfiguration(t.backend, t.values, t.alphabet, seed=seeds[0])


def check_ones_apart(t: WindowConfiguration, X: SymmetricSet) -> List[Tuple[GroupElement, GroupElement]]:
    return ones_apart_violations(t, X)


def find_common_one(
    t1: WindowConfiguration,
    t2: WindowConfiguration,
    search: Optional[Iterable[GroupElement]] = None,
) -> Optional[GroupElement]:
    """First a in canonical order with t1(a) = t2(a) = 1; the common window by default."""
    if search is None:
        search = t1.window & t2.window
    else:
        search = frozenset(search)
        t1.require_cover(search, "find_common_one")
        t2.require_cover(search, "find_common_one")
    common = t1.ones() & t2.ones() & frozenset(search)
    if not common:
        return None
    return sort_canonical(common)[0]


def locator_region(
    plan: WitnessPlan,
    center: GroupElement,
    limit: int = DEFAULT_LOCATOR_LIMIT,
) -> Optional[FrozenSet[GroupElement]]:
    """center * Y^4 * Y, or None when it would exceed `limit` sites."""
    region = frozenset([center])
    for _ in range(LOCATOR_POWER + 1):
        region = set_product(region, plan.Y.elements)
        if len(region) > limit:
            return None
    return region


def locate_common_one(
    t1: WindowConfiguration,
    t2: WindowConfiguration,
    plan: WitnessPlan,
    packing1: Optional[PackingWindow] = None,
    limit: int = DEFAULT_LOCATOR_LIMIT,
) -> CommonOne:
    """Search the locator region around t1's first coarse block, then the whole common window."""
    common_window = t1.window & t2.window
    if packing1 is not None:
        coarse_centers = [c for c, shape_id in packing1.blocks() if shape_id == COARSE]
        if coarse_centers:
            region = locator_region(plan, coarse_centers[0], limit)
            if region is not None:
                region &= common_window
                hit = find_common_one(t1, t2, region)
                if hit is not None:
                    return CommonOne(hit, "locator", len(region))
    hit = find_common_one(t1, t2, common_window)
    if hit is None:
        logger.warning("No common 1 in a common window of %d sites", len(common_window))
        return CommonOne(None, "none", len(common_window))
    return CommonOne(hit, "exhaustive", len(common_window))

"""
Packings on finite windows.

A packing assigns to some centers c of a window a shape Z_i; the block at c is
c*Z_i and blocks are pairwise disjoint. Centers live in the window, cells in
the padded window W*Z (Z = union of all shapes), so every candidate block of
a window center fits. Saturation is claimed and checked only on the interior
{c in W : c*Z*Z^-1 within W}, where every block that could touch a candidate
block at c is centered inside the window and therefore known.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from groups import (
    GroupBackend,
    GroupElement,
    inverse_set,
    mul,
    set_product,
    sort_canonical,
)

logger = logging.getLogger(__name__)

COARSE = "coarse"
FINE = "fine"


class ShapeError(ValueError):
    """Raised for empty shapes, unknown shape ids or shape mismatches."""


class OverlapError(ValueError):
    """Raised when two blocks of a packing intersect."""


class NotPaddedError(ValueError):
    """Raised when a saturation interior reaches too close to the window boundary."""


class SeparationError(ValueError):
    """Raised when two regions to be glued are not far enough apart."""


@dataclass(frozen=True)
class Shape:
    id: str
    cells: FrozenSet[GroupElement]

    def __post_init__(self):
        object.__setattr__(self, "cells", frozenset(self.cells))
        if not self.cells:
            raise ShapeError(f"Shape {self.id!r} has no cells")

    def block(self, center: GroupElement) -> FrozenSet[GroupElement]:
        return frozenset(mul(center, z) for z in self.cells)


def shape_union(shapes: Sequence[Shape]) -> FrozenSet[GroupElement]:
    cells = set()
    for shape in shapes:
        cells |= shape.cells
    return frozenset(cells)


def reach(shapes: Sequence[Shape]) -> FrozenSet[GroupElement]:
    """Z*Z^-1: a block at h can meet a block at c only if h lies in c*Z*Z^-1."""
    Z = shape_union(shapes)
    return set_product(Z, inverse_set(Z))


@dataclass(frozen=True, eq=False)
class PackingWindow:
    backend: GroupBackend
    window: FrozenSet[GroupElement]
    assignment: Mapping[GroupElement, str]
    shapes: Tuple[Shape, ...]

    def __post_init__(self):
        object.__setattr__(self, "window", frozenset(self.window))
        object.__setattr__(self, "assignment", dict(self.assignment))
        object.__setattr__(self, "shapes", tuple(self.shapes))
        ids = [shape.id for shape in self.shapes]
        if len(set(ids)) != len(ids):
            raise ShapeError(f"Duplicate shape ids: {ids}")
        for center, shape_id in self.assignment.items():
            if center not in self.window:
                raise ValueError(f"Block center {center.encode()} is outside the window")
            if shape_id not in ids:
                raise ShapeError(f"Unknown shape id {shape_id!r} at {center.encode()}")
        # builds the occupancy map, raising OverlapError on intersecting blocks
        self.owner

    @cached_property
    def shape_by_id(self) -> Dict[str, Shape]:
        return {shape.id: shape for shape in self.shapes}

    @cached_property
    def owner(self) -> Dict[GroupElement, GroupElement]:
        """Cell -> center of the block covering it."""
        owner: Dict[GroupElement, GroupElement] = {}
        for center in sort_canonical(self.assignment):
            for cell in self.block_at(center):
                if cell in owner:
                    raise OverlapError(
                        f"Blocks at {owner[cell].encode()} and {center.encode()} share {cell.encode()}"
                    )
                owner[cell] = center
        return owner

    @cached_property
    def padded(self) -> FrozenSet[GroupElement]:
        return set_product(self.window, shape_union(self.shapes))

    def block_at(self, center: GroupElement) -> FrozenSet[GroupElement]:
        return self.shape_by_id[self.assignment[center]].block(center)

    def blocks(self) -> List[Tuple[GroupElement, str]]:
        return [(c, self.assignment[c]) for c in sort_canonical(self.assignment)]

    def fits(self, center: GroupElement, shape: Shape) -> bool:
        owner = self.owner
        return all(mul(center, z) not in owner for z in shape.cells)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PackingWindow):
            return NotImplemented
        return (
            self.backend == other.backend
            and self.window == other.window
            and dict(self.assignment) == dict(other.assignment)
            and {s.id: s.cells for s in self.shapes} == {s.id: s.cells for s in other.shapes}
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"PackingWindow({self.backend.name}, window={len(self.window)}, "
            f"blocks={len(self.assignment)}, shapes={[s.id for s in self.shapes]})"
        )


def packing_interior(window: Iterable[GroupElement], shapes: Sequence[Shape]) -> FrozenSet[GroupElement]:
    """Centers c with c*Z*Z^-1 inside the window."""
    window = frozenset(window)
    spread = reach(shapes)
    return frozenset(c for c in window if all(mul(c, d) in window for d in spread))


def greedy_saturate(
    backend: GroupBackend,
    window: Iterable[GroupElement],
    shapes: Sequence[Shape],
    preplaced: Optional[Mapping[GroupElement, str]] = None,
    order: Optional[Sequence[GroupElement]] = None,
) -> PackingWindow:
    """
    Place every block that fits, shapes in listed order (coarse before fine),
    centers in `order` (canonical order of the window by default).
    """
    window = frozenset(window)
    shapes = tuple(shapes)
    # validates preplaced blocks: raises OverlapError if they intersect
    current = PackingWindow(backend, window, preplaced or {}, shapes)
    assignment = dict(current.assignment)
    owner = dict(current.owner)
    if order is None:
        order = sort_canonical(window)
    for shape in shapes:
        for center in order:
            if center in assignment:
                continue
            cells = [mul(center, z) for z in shape.cells]
            if any(cell in owner for cell in cells):
                continue
            assignment[center] = shape.id
            for cell in cells:
                owner[cell] = center
    placed = len(assignment) - len(current.assignment)
    logger.debug("Greedy saturation placed %d blocks on %d centers", placed, len(window))
    return PackingWindow(backend, window, assignment, shapes)


def fill_saturation(p: PackingWindow, order: Optional[Sequence[GroupElement]] = None) -> PackingWindow:
    """Top up an existing packing greedily, keeping all its blocks."""
    return greedy_saturate(p.backend, p.window, p.shapes, p.assignment, order)


def addable_blocks(p: PackingWindow, interior: Iterable[GroupElement]) -> List[Tuple[GroupElement, str]]:
    """Every (center, shape id) at an empty interior center whose block is disjoint from all blocks."""
    found = []
    for center in sort_canonical(interior):
        if center in p.assignment:
            continue
        for shape in p.shapes:
            if p.fits(center, shape):
                found.append((center, shape.id))
    return found


def is_saturated(p: PackingWindow, interior: Optional[Iterable[GroupElement]] = None) -> bool:
    if interior is None:
        interior = packing_interior(p.window, p.shapes)
    interior = frozenset(interior)
    spread = reach(p.shapes)
    for c in interior:
        if c not in p.window or any(mul(c, d) not in p.window for d in spread):
            raise NotPaddedError(f"Interior center {c.encode()} is too close to the window boundary")
    return not addable_blocks(p, interior)


def translate(g: GroupElement, p: PackingWindow) -> PackingWindow:
    return PackingWindow(
        p.backend,
        frozenset(mul(g, w) for w in p.window),
        {mul(g, c): shape_id for c, shape_id in p.assignment.items()},
        p.shapes,
    )


def glue_packings(
    p1: PackingWindow,
    p2: PackingWindow,
    E1: Iterable[GroupElement],
    E2: Iterable[GroupElement],
) -> PackingWindow:
    """
    Saturated packing agreeing with p1 on E1 and with p2 on E2: keep p1's
    blocks centered in E1*Z*Z^-1 and p2's centered in E2*Z*Z^-1, then saturate.
    """
    if p1.window != p2.window:
        raise ValueError("Glued packings must share a window")
    if {s.id: s.cells for s in p1.shapes} != {s.id: s.cells for s in p2.shapes}:
        raise ShapeError("Glued packings must use the same shapes")
    E1 = frozenset(E1)
    E2 = frozenset(E2)
    Z = shape_union(p1.shapes)
    X = Z | inverse_set(Z)
    overlap = set_product(E1, X) & set_product(E2, X)
    if overlap:
        raise SeparationError(
            f"E1*X and E2*X meet at {sort_canonical(overlap)[0].encode()} (X = Z u Z^-1)"
        )
    spread = reach(p1.shapes)
    region1 = set_product(E1, spread)
    region2 = set_product(E2, spread)
    preplaced = {c: s for c, s in p1.assignment.items() if c in region1}
    cells1 = {cell for c in preplaced for cell in p1.block_at(c)}
    for c, shape_id in p2.assignment.items():
        if c not in region2:
            continue
        if c in preplaced or cells1 & p2.block_at(c):
            raise SeparationError(f"Block of p2 at {c.encode()} collides with a kept block of p1")
        preplaced[c] = shape_id
    return greedy_saturate(p1.backend, p1.window, p1.shapes, preplaced)


def merge_phi(p1: PackingWindow, p2: PackingWindow) -> PackingWindow:
    """All blocks of the coarse packing p1, plus the blocks of the fine packing p2 disjoint from them."""
    if [s.id for s in p1.shapes] != [COARSE] or [s.id for s in p2.shapes] != [FINE]:
        raise ShapeError(
            f"merge_phi needs a {COARSE!r} packing and a {FINE!r} packing, got "
            f"{[s.id for s in p1.shapes]} and {[s.id for s in p2.shapes]}"
        )
    if p1.window != p2.window:
        raise ValueError("Merged packings must share a window")
    occupied = p1.owner
    assignment = dict(p1.assignment)
    for c, shape_id in p2.assignment.items():
        if c in assignment:
            continue
        if all(cell not in occupied for cell in p2.block_at(c)):
            assignment[c] = shape_id
    return PackingWindow(p1.backend, p1.window, assignment, p1.shapes + p2.shapes)

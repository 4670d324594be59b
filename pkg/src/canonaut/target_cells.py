"""Target cell selectors.

All four strategies return a non-singleton cell of the colouring, or None
when the colouring is discrete, and are label-invariant.  "First" always
means lowest colour; ties for "largest" are broken the same way.
"""

from __future__ import annotations

import enum
from typing import Optional, Sequence

from .graphs import Colouring, Graph


class SelectorStrategy(enum.Enum):
    FIRST_NON_SINGLETON = "first"
    FIRST_SMALLEST = "smallest"
    MOST_JOINED = "joined"
    TRACES_ANCESTRAL = "ancestral"


def select(
    strategy: SelectorStrategy,
    g: Graph,
    p: Colouring,
    ancestry: Sequence[frozenset] = (),
) -> Optional[tuple[int, ...]]:
    """Pick the target cell of a refined colouring.

    ``ancestry`` lists the target cells of the node's ancestors as frozen
    vertex sets, parent last; only TRACES_ANCESTRAL reads it.
    """
    cells = p.cells
    candidates = [c for c in cells if len(c) > 1]
    if not candidates:
        return None

    if strategy is SelectorStrategy.FIRST_NON_SINGLETON:
        return candidates[0]

    if strategy is SelectorStrategy.FIRST_SMALLEST:
        best = min(len(c) for c in candidates)
        return next(c for c in candidates if len(c) == best)

    if strategy is SelectorStrategy.MOST_JOINED:
        return _most_joined(g, cells, candidates)

    if strategy is SelectorStrategy.TRACES_ANCESTRAL:
        for target in reversed(ancestry):
            inside = [c for c in candidates if target.issuperset(c)]
            if inside:
                return max(inside, key=len)  # max is stable: first largest
        return max(candidates, key=len)

    raise ValueError("unknown selector strategy %r" % (strategy,))


def _most_joined(g: Graph, cells, candidates) -> tuple[int, ...]:
    """The first cell non-trivially joined to the most cells (itself included).

    A join between C and D is non-trivial when 0 < e(C,D) < max possible.
    """
    rows = g.bit_rows
    masks = []
    for cell in cells:
        m = 0
        for v in cell:
            m |= 1 << v
        masks.append(m)
    best_cell = None
    best_count = -1
    for cell in candidates:
        count = 0
        for dcell, dmask in zip(cells, masks):
            e = sum((rows[v] & dmask).bit_count() for v in cell)
            if dcell is cell:
                e //= 2
                full = len(cell) * (len(cell) - 1) // 2
            else:
                full = len(cell) * len(dcell)
            if 0 < e < full:
                count += 1
        if count > best_count:
            best_cell = cell
            best_count = count
    return best_cell

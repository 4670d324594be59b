"""Equitable refinement, individualization, and the composed refinement map.

The working state is a nauty-style ``lab``/``pos`` vertex ordering in which
every cell is a contiguous segment.  Splitting a cell rearranges only its own
segment, so cell start positions are stable identifiers: they are what the
pending queue stores and what the trace records.  Start positions depend only
on cell sizes and creation order, never on vertex labels, which is what makes
the emitted trace label-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .graphs import Colouring, Graph


class InvalidSequenceError(ValueError):
    """A vertex in the sequence is not in a non-singleton cell when reached."""


class QueueError(ValueError):
    """A refinement queue entry does not identify a cell of the colouring."""


@dataclass(frozen=True)
class RefinementQueue:
    """The sequence of cells still to be used as splitters.

    ``pending`` holds cell indices (0-based positions in the colouring's cell
    list).  With ``singleton_priority`` set, singleton cells are dequeued
    before larger ones; ties and the residual order are FIFO.
    """

    pending: tuple[int, ...]
    singleton_priority: bool = True

    @classmethod
    def all_cells(cls, colouring: Colouring) -> "RefinementQueue":
        return cls(tuple(range(colouring.k)))


@dataclass(frozen=True)
class RefinementOutcome:
    """A refined colouring plus the integer trace its computation emitted.

    ``trace_fragment`` is flat; ``levels`` keeps the per-individualization
    grouping (one entry per level, so len(levels) == len(nu) + 1 for a full
    sequence refinement).
    """

    colouring: Colouring
    trace_fragment: tuple[int, ...]
    levels: tuple[tuple[int, ...], ...] = ()


class RefineAborted(Exception):
    """Raised internally when a trace cursor vetoes finishing a refinement."""


class Workspace:
    """Mutable refinement state owned by one engine instance.

    Not safe to share across concurrent calls; engines clone it when they
    branch.  ``start[i]`` is the start position of the cell containing
    position i, ``size[s]`` is meaningful only at cell starts.
    """

    __slots__ = ("graph", "n", "lab", "pos", "start", "size", "ncells")

    def __init__(self, graph: Graph, colouring: Colouring | None = None):
        self.graph = graph
        self.n = graph.n
        if colouring is not None:
            self.load(colouring)

    def load(self, colouring: Colouring) -> None:
        if colouring.n != self.n:
            raise ValueError("colouring size %d does not match graph order %d" % (colouring.n, self.n))
        lab: list[int] = []
        start = [0] * self.n
        size = [0] * self.n
        for cell in colouring.cells:
            s = len(lab)
            size[s] = len(cell)
            for v in cell:
                start[len(lab)] = s
                lab.append(v)
        self.lab = lab
        self.pos = [0] * self.n
        for i, v in enumerate(lab):
            self.pos[v] = i
        self.start = start
        self.size = size
        self.ncells = colouring.k

    def clone(self) -> "Workspace":
        ws = Workspace(self.graph)
        ws.lab = self.lab[:]
        ws.pos = self.pos[:]
        ws.start = self.start[:]
        ws.size = self.size[:]
        ws.ncells = self.ncells
        return ws

    @property
    def is_discrete(self) -> bool:
        return self.ncells == self.n

    def cell_starts(self) -> list[int]:
        starts = []
        s = 0
        while s < self.n:
            starts.append(s)
            s += self.size[s]
        return starts

    def cell_members(self, s: int) -> list[int]:
        return self.lab[s : s + self.size[s]]

    def colouring(self) -> Colouring:
        colour_of = [0] * self.n
        colour = 0
        s = 0
        while s < self.n:
            colour += 1
            for i in range(s, s + self.size[s]):
                colour_of[self.lab[i]] = colour
            s += self.size[s]
        return Colouring(colour_of)

    def discrete_images(self) -> list[int]:
        """v -> colour(v)-1 for a discrete state; positions are the colours."""
        if not self.is_discrete:
            raise ValueError("state is not discrete")
        return self.pos[:]

    def individualize(self, v: int) -> int:
        """Give v a unique colour at its cell's position; returns the start of
        the remainder cell (the fresh singleton keeps the old start)."""
        s = self.start[self.pos[v]]
        z = self.size[s]
        if z < 2:
            raise InvalidSequenceError("vertex %d is already in a singleton cell" % v)
        lab, pos, start = self.lab, self.pos, self.start
        i = pos[v]
        u = lab[s]
        lab[s], lab[i] = v, u
        pos[v], pos[u] = s, i
        self.size[s] = 1
        rest = s + 1
        self.size[rest] = z - 1
        for j in range(rest, s + z):
            start[j] = rest
        self.ncells += 1
        return s

    def refine(self, alpha: Sequence[int], cursor=None, singleton_priority: bool = True):
        """Run the splitting loop with the given initial splitter cells.

        ``alpha`` holds cell start positions.  Returns the flat fragment of
        trace integers, or None if ``cursor`` (an object with a feed(int)
        method returning False to veto) aborted the computation early.  The
        workspace is left in an unspecified valid state after an abort.
        """
        lab, pos, start, size = self.lab, self.pos, self.start, self.size
        neighbours = self.graph.neighbours
        pending = list(alpha)
        in_pending = set(pending)
        frag: list[int] = []
        emit = frag.append
        feed = cursor.feed if cursor is not None else None

        while pending and self.ncells < self.n:
            if singleton_priority:
                for idx in range(len(pending)):
                    if size[pending[idx]] == 1:
                        break
                else:
                    idx = 0
            else:
                idx = 0
            w_start = pending.pop(idx)
            in_pending.discard(w_start)
            wsize = size[w_start]
            emit(wsize)
            if feed is not None and not feed(wsize):
                return None

            # Group members of touched cells by their edge count into W.
            if wsize == 1:
                w = lab[w_start]
                buckets: dict[int, list[int]] = {}
                for u in neighbours[w]:
                    s = start[pos[u]]
                    if size[s] > 1:
                        buckets.setdefault(s, []).append(u)
                split_plans = []
                for s in sorted(buckets):
                    ones = buckets[s]
                    z = size[s]
                    if len(ones) == z:
                        continue
                    ones_set = set(ones)
                    zeros = [x for x in lab[s : s + z] if x not in ones_set]
                    split_plans.append((s, [zeros, ones]))
            else:
                wmembers = lab[w_start : w_start + wsize]
                cnt: dict[int, int] = {}
                for w in wmembers:
                    for u in neighbours[w]:
                        cnt[u] = cnt.get(u, 0) + 1
                touched = set()
                for u in cnt:
                    s = start[pos[u]]
                    if size[s] > 1:
                        touched.add(s)
                split_plans = []
                for s in sorted(touched):
                    z = size[s]
                    groups: dict[int, list[int]] = {}
                    for x in lab[s : s + z]:
                        groups.setdefault(cnt.get(x, 0), []).append(x)
                    if len(groups) == 1:
                        continue
                    split_plans.append((s, [groups[c] for c in sorted(groups)]))

            for s, fragments in split_plans:
                z = size[s]
                # Rewrite the segment with fragments in ascending-count order.
                i = s
                sizes = []
                starts = []
                for members in fragments:
                    fs = i
                    starts.append(fs)
                    sizes.append(len(members))
                    size[fs] = len(members)
                    for x in members:
                        lab[i] = x
                        pos[x] = i
                        start[i] = fs
                        i += 1
                self.ncells += len(fragments) - 1
                emit(s)
                emit(len(fragments))
                frag.extend(sizes)
                if feed is not None:
                    if not feed(s) or not feed(len(fragments)):
                        return None
                    for sz in sizes:
                        if not feed(sz):
                            return None
                if s in in_pending:
                    # The stale entry now denotes the first fragment; queue the rest.
                    for t in starts[1:]:
                        pending.append(t)
                        in_pending.add(t)
                else:
                    biggest = sizes.index(max(sizes))
                    for j, t in enumerate(starts):
                        if j != biggest:
                            pending.append(t)
                            in_pending.add(t)
        return frag


def individualize(p: Colouring, v: int) -> Colouring:
    """Give vertex v a unique colour: colours below v's stay, the rest shift up."""
    cv = p.colour_of[v]
    if sum(1 for c in p.colour_of if c == cv) < 2:
        raise InvalidSequenceError("vertex %d is already in a singleton cell" % v)
    return Colouring(
        [c if (c < cv or w == v) else c + 1 for w, c in enumerate(p.colour_of)]
    )


def refine(g: Graph, p: Colouring, alpha: RefinementQueue | Sequence[int]) -> RefinementOutcome:
    """Refine p to the coarsest reachable equitable colouring using the cells
    named in alpha as the initial splitters."""
    if isinstance(alpha, RefinementQueue):
        cell_idx = alpha.pending
        singleton_priority = alpha.singleton_priority
    else:
        cell_idx = tuple(alpha)
        singleton_priority = True
    if len(set(cell_idx)) != len(cell_idx):
        raise QueueError("duplicate cells in refinement queue")
    for i in cell_idx:
        if not 0 <= i < p.k:
            raise QueueError("cell index %d is not a cell of the colouring" % i)
    ws = Workspace(g, p)
    starts = ws.cell_starts()
    frag = ws.refine([starts[i] for i in cell_idx], singleton_priority=singleton_priority)
    frag_t = tuple(frag)
    return RefinementOutcome(ws.colouring(), frag_t, (frag_t,))


def refine_sequence(g: Graph, p0: Colouring, nu: Sequence[int]) -> RefinementOutcome:
    """The composed refinement: refine p0 with all its cells, then repeatedly
    individualize the next sequence vertex and refine with its singleton."""
    ws = Workspace(g, p0)
    levels = []
    frag = ws.refine(ws.cell_starts())
    levels.append(tuple(frag))
    for v in nu:
        s = ws.individualize(v)
        frag = ws.refine([s])
        levels.append(tuple(frag))
    flat = tuple(x for lvl in levels for x in lvl)
    return RefinementOutcome(ws.colouring(), flat, tuple(levels))

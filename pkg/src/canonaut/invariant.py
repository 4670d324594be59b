"""Node invariants: traces, incremental comparison, quotients, leaf certificates.

A trace is a vector of per-level integer vectors, ordered lexicographically
with levels compared as tuples.  Because a verdict reached on a common prefix
is final for every extension, comparison can run while the deeper levels are
still being computed; that is what lets a refinement be abandoned part-way.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from typing import Sequence

from .graphs import Colouring, Graph


class TraceOrder(enum.Enum):
    """How a reference trace compares against a (possibly partial) candidate."""

    LESS = -1
    EQUAL_PREFIX = 0
    GREATER = 1


@dataclass(frozen=True)
class TraceValue:
    """An immutable vector of per-level integer vectors."""

    levels: tuple[tuple[int, ...], ...] = ()

    @property
    def depth(self) -> int:
        return len(self.levels)

    def append(self, fragment: Sequence[int]) -> "TraceValue":
        return TraceValue(self.levels + (tuple(fragment),))


def trace_append(t: TraceValue, fragment: Sequence[int]) -> TraceValue:
    return t.append(fragment)


def trace_compare_incremental(reference: TraceValue, candidate: TraceValue) -> TraceOrder:
    """Compare a full reference against a candidate evaluated to some depth.

    The candidate must be a prefix-aligned evaluation: it may have fewer
    levels than the reference but not more.  LESS/GREATER describe the
    reference relative to the candidate and are final for every extension of
    the candidate; EQUAL_PREFIX means the levels seen so far are identical.
    """
    if candidate.depth > reference.depth:
        raise ValueError(
            "candidate evaluated to depth %d, reference only %d"
            % (candidate.depth, reference.depth)
        )
    for ref_level, cand_level in zip(reference.levels, candidate.levels):
        if ref_level != cand_level:
            return TraceOrder.GREATER if ref_level > cand_level else TraceOrder.LESS
    return TraceOrder.EQUAL_PREFIX


class TraceCursor:
    """Streams one level's integers against a reference fragment.

    ``feed`` returns False once the caller may abandon the computation; the
    abort policy decides which verdicts allow that.  After the stream ends,
    ``final_verdict`` accounts for a candidate that stopped short of the
    reference (shorter prefix compares LESS).
    """

    __slots__ = ("reference", "idx", "verdict", "abort_on")

    def __init__(self, reference: tuple[int, ...], abort_on: frozenset = frozenset()):
        self.reference = reference
        self.idx = 0
        self.verdict = TraceOrder.EQUAL_PREFIX
        self.abort_on = abort_on

    def feed(self, value: int) -> bool:
        if self.verdict is TraceOrder.EQUAL_PREFIX:
            ref = self.reference
            i = self.idx
            if i >= len(ref):
                self.verdict = TraceOrder.GREATER
            else:
                r = ref[i]
                self.idx = i + 1
                if value != r:
                    self.verdict = TraceOrder.GREATER if value > r else TraceOrder.LESS
        return self.verdict not in self.abort_on

    def final_verdict(self) -> TraceOrder:
        if self.verdict is TraceOrder.EQUAL_PREFIX and self.idx < len(self.reference):
            return TraceOrder.LESS
        return self.verdict


@dataclass(frozen=True)
class QuotientGraph:
    """Cells as vertices, weighted by exact inter/intra-cell edge counts."""

    cell_labels: tuple[tuple[int, int], ...]  # (cell number, size)
    edge_weights: tuple[tuple[int, ...], ...]  # symmetric; diagonal counts intra once


def quotient(g: Graph, p: Colouring) -> QuotientGraph:
    if g.n != p.n:
        raise ValueError("colouring does not cover the graph's vertex set")
    k = p.k
    col = p.colour_of
    weights = [[0] * k for _ in range(k)]
    for u, v in g.edges:
        a, b = col[u] - 1, col[v] - 1
        if a == b:
            weights[a][a] += 1
        else:
            weights[a][b] += 1
            weights[b][a] += 1
    labels = tuple((i + 1, len(cell)) for i, cell in enumerate(p.cells))
    return QuotientGraph(labels, tuple(tuple(row) for row in weights))


@dataclass(frozen=True)
class LeafCertificate:
    """The byte encoding of a leaf: its trace followed by the relabelled graph.

    Layout (stable across versions and platforms):
      u32be level count; per level, u32be integer count then the integers as
      u32be; u32be n; then the adjacency bits of G^pi over the upper triangle,
      rows ascending and columns ascending within a row, packed MSB-first and
      zero-padded to a byte boundary.
    """

    data: bytes

    def hex(self) -> str:
        return self.data.hex()

    def __lt__(self, other: "LeafCertificate") -> bool:
        return self.data < other.data


def encode_trace(levels: Sequence[Sequence[int]]) -> bytes:
    out = [struct.pack(">I", len(levels))]
    for level in levels:
        out.append(struct.pack(">I", len(level)))
        out.append(struct.pack(">%dI" % len(level), *level) if level else b"")
    return b"".join(out)


def relabelled_graph_bits(g: Graph, images: Sequence[int]) -> bytes:
    """Upper-triangle adjacency bits of G^pi, pi given in one-line notation."""
    n = g.n
    nbits = n * (n - 1) // 2
    buf = bytearray((nbits + 7) // 8)
    # Row-major rank of the pair (i, j), i < j.
    for u, v in g.edges:
        i, j = images[u], images[v]
        if i > j:
            i, j = j, i
        r = i * (2 * n - i - 1) // 2 + (j - i - 1)
        buf[r >> 3] |= 0x80 >> (r & 7)
    return struct.pack(">I", n) + bytes(buf)


def leaf_certificate(g: Graph, p: Colouring, t: TraceValue) -> LeafCertificate:
    """Certificate of a discrete node; equal certificates mean equal G^pi."""
    if not p.is_discrete:
        raise ValueError("leaf certificates require a discrete colouring")
    images = [c - 1 for c in p.colour_of]
    return LeafCertificate(encode_trace(t.levels) + relabelled_graph_bits(g, images))


_HASH_MOD = (1 << 61) - 1
_HASH_BASE = 1099511628211


def _fold(values) -> int:
    h = 14695981039346656037 % _HASH_MOD
    for v in values:
        h = (h * _HASH_BASE + v + 1) % _HASH_MOD
    return h


def dist2_degree_profile(g: Graph, p: Colouring) -> tuple[int, ...]:
    """Optional invariant hook: a label-invariant summary of each vertex's
    distance-<=2 neighbourhood degree profile, folded per cell.

    Deterministic across platforms (no salted hashing).  Returns one integer
    per cell, in cell order.
    """
    neighbours = g.neighbours
    degs = [len(nb) for nb in neighbours]
    vertex_code = []
    for v in range(g.n):
        ring1 = sorted(degs[u] for u in neighbours[v])
        two = set()
        for u in neighbours[v]:
            two.update(neighbours[u])
        two.discard(v)
        two.difference_update(neighbours[v])
        ring2 = sorted(degs[u] for u in two)
        vertex_code.append(_fold([degs[v], len(ring1), *ring1, len(ring2), *ring2]))
    return tuple(_fold(sorted(vertex_code[v] for v in cell)) for cell in p.cells)

"""Core value types: graphs, ordered colourings, permutations, and their actions.

Vertices are 0-based everywhere.  Colours are 1-based (a colouring is a
surjection onto 1..k).  Permutations act on the right and are written as
exponentiation: ``v ** g`` reads as v^g, and products compose left to right,
so (v^a)^b = v^(a*b).
"""

from __future__ import annotations

from typing import Iterable, Sequence


class DimensionError(ValueError):
    """Sizes of two objects that must act on the same vertex set disagree."""


class Permutation:
    """A permutation of 0..n-1 stored in one-line notation."""

    __slots__ = ("images",)

    def __init__(self, images: Sequence[int]):
        images = tuple(images)
        n = len(images)
        seen = [False] * n
        for i in images:
            if not 0 <= i < n or seen[i]:
                raise ValueError("not a permutation of 0..n-1: %r" % (images,))
            seen[i] = True
        self.images = images

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(n))

    @classmethod
    def from_cycles(cls, n: int, cycles: Iterable[Sequence[int]]) -> "Permutation":
        """Build a permutation of 0..n-1 from disjoint cycles (0-based)."""
        images = list(range(n))
        for cycle in cycles:
            for a, b in zip(cycle, cycle[1:]):
                if images[a] != a:
                    raise ValueError("cycles are not disjoint")
                images[a] = b
            if cycle:
                if images[cycle[-1]] != cycle[-1] and len(cycle) > 1:
                    raise ValueError("cycles are not disjoint")
                images[cycle[-1]] = cycle[0]
        return cls(images)

    @property
    def n(self) -> int:
        return len(self.images)

    def __getitem__(self, v: int) -> int:
        return self.images[v]

    def __len__(self) -> int:
        return len(self.images)

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and self.images == other.images

    def __hash__(self) -> int:
        return hash(self.images)

    def __mul__(self, other: "Permutation") -> "Permutation":
        return perm_compose(self, other)

    @property
    def is_identity(self) -> bool:
        return all(i == v for v, i in enumerate(self.images))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.images)
        for v, i in enumerate(self.images):
            inv[i] = v
        return Permutation(inv)

    def cycles(self) -> list[tuple[int, ...]]:
        """Non-trivial cycles, each starting at its smallest element, sorted."""
        seen = [False] * len(self.images)
        out = []
        for v in range(len(self.images)):
            if seen[v] or self.images[v] == v:
                continue
            cycle = [v]
            seen[v] = True
            w = self.images[v]
            while w != v:
                cycle.append(w)
                seen[w] = True
                w = self.images[w]
            out.append(tuple(cycle))
        return out

    def cycle_string(self) -> str:
        """Disjoint-cycle notation, 0-based, fixed points omitted."""
        cycles = self.cycles()
        if not cycles:
            return "()"
        return "".join("(%s)" % " ".join(map(str, c)) for c in cycles)

    def __repr__(self) -> str:
        return "Permutation(%r)" % (list(self.images),)


class Graph:
    """An undirected simple graph on vertices 0..n-1.

    Adjacency is kept in two views: packed bit-rows (one Python int per
    vertex, bit w of row v set iff v~w) and sorted neighbour lists.  Both are
    built lazily; ``dense`` reports which one the density threshold prefers.
    """

    __slots__ = ("n", "m", "_edges", "_bit_rows", "_neighbours", "_dense")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]], dense: bool | None = None):
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        canon = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError("edge (%d,%d) out of range for n=%d" % (u, v, n))
            if u == v:
                raise ValueError("self-loop (%d,%d) not allowed" % (u, v))
            canon.add((u, v) if u < v else (v, u))
        self.n = n
        self._edges = tuple(sorted(canon))
        self.m = len(self._edges)
        self._bit_rows = None
        self._neighbours = None
        # Default per the density threshold m > n^2/8; overridable per instance.
        self._dense = dense if dense is not None else (8 * self.m > n * n)

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self._edges

    @property
    def dense(self) -> bool:
        return self._dense

    @property
    def bit_rows(self) -> tuple[int, ...]:
        if self._bit_rows is None:
            rows = [0] * self.n
            for u, v in self._edges:
                rows[u] |= 1 << v
                rows[v] |= 1 << u
            self._bit_rows = tuple(rows)
        return self._bit_rows

    @property
    def neighbours(self) -> tuple[tuple[int, ...], ...]:
        if self._neighbours is None:
            adj: list[list[int]] = [[] for _ in range(self.n)]
            for u, v in self._edges:
                adj[u].append(v)
                adj[v].append(u)
            self._neighbours = tuple(tuple(sorted(a)) for a in adj)
        return self._neighbours

    def degree(self, v: int) -> int:
        return len(self.neighbours[v])

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.bit_rows[u] >> v & 1)

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self.n, self._edges))

    def __repr__(self) -> str:
        return "Graph(n=%d, m=%d)" % (self.n, self.m)


class Colouring:
    """An ordered partition of 0..n-1: a surjection onto colours 1..k.

    ``cells[i]`` holds the colour-(i+1) vertices in ascending order; the cell
    list order is the colour order.  A discrete colouring doubles as a
    permutation of the vertex set.
    """

    __slots__ = ("colour_of", "_cells")

    def __init__(self, colour_of: Sequence[int]):
        colour_of = tuple(colour_of)
        n = len(colour_of)
        k = max(colour_of, default=0)
        counts = [0] * k
        for c in colour_of:
            if not 1 <= c <= k:
                raise ValueError("colours must lie in 1..k")
            counts[c - 1] += 1
        if any(c == 0 for c in counts):
            raise ValueError("colouring is not surjective onto 1..%d" % k)
        self.colour_of = colour_of
        self._cells = None

    @classmethod
    def unit(cls, n: int) -> "Colouring":
        return cls([1] * n)

    @classmethod
    def from_cells(cls, cells: Sequence[Iterable[int]]) -> "Colouring":
        flat: dict[int, int] = {}
        for i, cell in enumerate(cells):
            for v in cell:
                if v in flat:
                    raise ValueError("vertex %d appears in two cells" % v)
                flat[v] = i + 1
        n = len(flat)
        if set(flat) != set(range(n)):
            raise ValueError("cells do not partition 0..n-1")
        return cls([flat[v] for v in range(n)])

    @property
    def n(self) -> int:
        return len(self.colour_of)

    @property
    def k(self) -> int:
        return len(self.cells)

    @property
    def cells(self) -> tuple[tuple[int, ...], ...]:
        if self._cells is None:
            k = max(self.colour_of, default=0)
            cells: list[list[int]] = [[] for _ in range(k)]
            for v, c in enumerate(self.colour_of):
                cells[c - 1].append(v)
            self._cells = tuple(tuple(c) for c in cells)
        return self._cells

    @property
    def is_discrete(self) -> bool:
        return all(len(c) == 1 for c in self.cells)

    def as_permutation(self) -> Permutation:
        """The permutation v -> colour(v)-1; only defined when discrete."""
        if not self.is_discrete:
            raise ValueError("only a discrete colouring is a permutation")
        return Permutation([c - 1 for c in self.colour_of])

    def __eq__(self, other) -> bool:
        return isinstance(other, Colouring) and self.colour_of == other.colour_of

    def __hash__(self) -> int:
        return hash(self.colour_of)

    def __repr__(self) -> str:
        return "Colouring(cells=%r)" % ([list(c) for c in self.cells],)


class ColouredGraph:
    """A graph together with an ordered colouring of its vertex set."""

    __slots__ = ("graph", "colouring")

    def __init__(self, graph: Graph, colouring: Colouring):
        if graph.n != colouring.n:
            raise DimensionError(
                "colouring covers %d vertices, graph has %d" % (colouring.n, graph.n)
            )
        self.graph = graph
        self.colouring = colouring

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ColouredGraph)
            and self.graph == other.graph
            and self.colouring == other.colouring
        )

    def __repr__(self) -> str:
        return "ColouredGraph(%r, %r)" % (self.graph, self.colouring)


def perm_compose(a: Permutation, b: Permutation) -> Permutation:
    """Left-to-right product: (v^a)^b = v^(a*b)."""
    if len(a) != len(b):
        raise DimensionError("cannot compose permutations of degree %d and %d" % (len(a), len(b)))
    bi = b.images
    return Permutation([bi[i] for i in a.images])


def perm_inverse(a: Permutation) -> Permutation:
    return a.inverse()


def apply_perm_graph(g: Graph, p: Permutation) -> Graph:
    """The image graph G^p: v^p ~ w^p exactly when v ~ w."""
    if len(p) != g.n:
        raise DimensionError("permutation degree %d, graph order %d" % (len(p), g.n))
    im = p.images
    return Graph(g.n, [(im[u], im[v]) for u, v in g.edges], dense=g._dense)


def apply_perm_colouring(c: Colouring, p: Permutation) -> Colouring:
    """The image colouring c^p with c^p(v) = c(v^p)."""
    if len(p) != c.n:
        raise DimensionError("permutation degree %d, colouring size %d" % (len(p), c.n))
    col = c.colour_of
    return Colouring([col[i] for i in p.images])


def apply_perm_coloured_graph(cg: ColouredGraph, p: Permutation) -> ColouredGraph:
    return ColouredGraph(apply_perm_graph(cg.graph, p), apply_perm_colouring(cg.colouring, p))


def finer_or_equal(p1: Colouring, p2: Colouring) -> bool:
    """Whether p1 is finer than or equal to p2.

    Checked by the cell-prefix decomposition: the p1-colour -> p2-colour map
    must be well defined and non-decreasing, which is equivalent to the
    pairwise condition p2(v) < p2(w) implies p1(v) < p1(w).
    """
    if p1.n != p2.n:
        raise DimensionError("colourings of different sizes: %d vs %d" % (p1.n, p2.n))
    image: list[int | None] = [None] * (p1.k + 1)
    for v in range(p1.n):
        c1, c2 = p1.colour_of[v], p2.colour_of[v]
        if image[c1] is None:
            image[c1] = c2
        elif image[c1] != c2:
            return False
    prev = 0
    for c in image[1:]:
        if c < prev:  # type: ignore[operator]
            return False
        prev = c  # type: ignore[assignment]
    return True

"""Deterministic benchmark graph families.

Every family is a pure function of its spec (including the seed), so a plan
can be rerun byte-identically.  The twisted/untwisted companion pair built
over a base graph follows the usual gadget construction: one middle vertex
per even-sized subset of a base vertex's incident edges, an outer pair per
edge end, and companions differing by crossing the pair connection of a
single base edge.
"""

from __future__ import annotations

import enum
import heapq
import random
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

from .graphs import Graph, Permutation, apply_perm_graph


class Family(enum.Enum):
    GNP = "gnp"
    GN_SQRT = "gnsqrt"
    RANDOM_REGULAR = "regular"
    HYPERCUBE = "hypercube"
    RANDOM_TREE = "tree"
    CFI_PAIR = "cfi"


@dataclass(frozen=True)
class FamilySpec:
    """One benchmark instance: a family, its size parameter(s) and a seed.

    ``n`` means vertex count, except HYPERCUBE (dimension) and CFI_PAIR
    (vertex count of the random cubic base graph).
    """

    family: Family
    n: int
    p: Optional[float] = None
    degree: Optional[int] = None
    seed: int = 0

    def validate(self) -> None:
        if self.n < 0:
            raise ValueError("size parameter must be non-negative")
        if self.family is Family.GNP:
            p = 0.5 if self.p is None else self.p
            if not 0.0 <= p <= 1.0:
                raise ValueError("edge probability must lie in [0,1]")
        elif self.family is Family.RANDOM_REGULAR:
            d = 3 if self.degree is None else self.degree
            if d < 0 or d >= max(self.n, 1):
                raise ValueError("regular degree out of range")
            if self.n * d % 2:
                raise ValueError("n*degree must be even")
        elif self.family is Family.CFI_PAIR:
            if self.n < 4 or self.n % 2:
                raise ValueError("cubic base needs an even vertex count >= 4")


def generate(spec: FamilySpec):
    """Build the graph (or graph pair, for CFI_PAIR) described by the spec."""
    spec.validate()
    if spec.family is Family.GNP:
        return gnp(spec.n, 0.5 if spec.p is None else spec.p, spec.seed)
    if spec.family is Family.GN_SQRT:
        return gnp(spec.n, spec.n ** -0.5 if spec.n else 0.0, spec.seed)
    if spec.family is Family.RANDOM_REGULAR:
        return random_regular(spec.n, 3 if spec.degree is None else spec.degree, spec.seed)
    if spec.family is Family.HYPERCUBE:
        return hypercube(spec.n)
    if spec.family is Family.RANDOM_TREE:
        return random_tree(spec.n, spec.seed)
    if spec.family is Family.CFI_PAIR:
        base = random_regular_connected(spec.n, 3, spec.seed)
        return cfi_pair(base)
    raise ValueError("unknown family %r" % (spec.family,))


def gnp(n: int, p: float, seed: int = 0) -> Graph:
    rng = random.Random(seed)
    return Graph(n, [e for e in combinations(range(n), 2) if rng.random() < p])


def random_regular(n: int, d: int, seed: int = 0) -> Graph:
    """Uniform-ish d-regular graph by the configuration model, rejecting
    pairings with loops or repeated edges."""
    if n * d % 2:
        raise ValueError("n*d must be even")
    if d >= n and n > 0:
        raise ValueError("degree must be below n")
    rng = random.Random(seed)
    while True:
        stubs = [v for v in range(n) for _ in range(d)]
        rng.shuffle(stubs)
        edges = set()
        ok = True
        for u, v in zip(stubs[0::2], stubs[1::2]):
            if u == v or (min(u, v), max(u, v)) in edges:
                ok = False
                break
            edges.add((min(u, v), max(u, v)))
        if ok:
            return Graph(n, edges)


def random_regular_connected(n: int, d: int, seed: int = 0) -> Graph:
    rng = random.Random(seed)
    while True:
        g = random_regular(n, d, rng.randrange(1 << 30))
        if _connected(g):
            return g


def _connected(g: Graph) -> bool:
    if g.n == 0:
        return True
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for u in g.neighbours[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == g.n


def hypercube(d: int) -> Graph:
    n = 1 << d
    return Graph(n, [(x, x ^ (1 << b)) for x in range(n) for b in range(d) if x < x ^ (1 << b)])


def random_tree(n: int, seed: int = 0) -> Graph:
    """Uniform labelled tree via a random Pruefer sequence."""
    if n < 2:
        return Graph(n, [])
    rng = random.Random(seed)
    seq = [rng.randrange(n) for _ in range(n - 2)]
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((u, v))
    return Graph(n, edges)


def cfi_pair(base: Graph) -> tuple[Graph, Graph]:
    """The untwisted and once-twisted companions over a connected base.

    Vertex layout, per base vertex v in order: middle vertices for the
    even-sized subsets of v's incident edge list (subsets by increasing
    bitmask), then the a-side outer vertices per incident edge, then the
    b-side ones.  The twisted companion crosses the a/b connection of the
    first base edge.
    """
    if base.n == 0 or base.m == 0:
        raise ValueError("base graph must have at least one edge")
    if not _connected(base):
        raise ValueError("base graph must be connected")
    edge_ids = {e: i for i, e in enumerate(base.edges)}
    incident: list[list[int]] = [[] for _ in range(base.n)]
    for e, i in edge_ids.items():
        incident[e[0]].append(i)
        incident[e[1]].append(i)
    for lst in incident:
        lst.sort()

    a_side: dict[tuple[int, int], int] = {}  # (vertex, edge id) -> outer vertex
    b_side: dict[tuple[int, int], int] = {}
    edges = []
    counter = 0
    for v in range(base.n):
        inc = incident[v]
        d = len(inc)
        middles = [s for s in range(1 << d) if bin(s).count("1") % 2 == 0]
        middle_ids = list(range(counter, counter + len(middles)))
        counter += len(middles)
        for j, e in enumerate(inc):
            a_side[(v, e)] = counter + j
            b_side[(v, e)] = counter + d + j
        counter += 2 * d
        for mid, s in zip(middle_ids, middles):
            for j, e in enumerate(inc):
                if s >> j & 1:
                    edges.append((mid, a_side[(v, e)]))
                else:
                    edges.append((mid, b_side[(v, e)]))

    plain = list(edges)
    twisted = list(edges)
    for (u, v), i in sorted(edge_ids.items(), key=lambda kv: kv[1]):
        au, bu = a_side[(u, i)], b_side[(u, i)]
        av, bv = a_side[(v, i)], b_side[(v, i)]
        plain.append((au, av))
        plain.append((bu, bv))
        if i == 0:
            twisted.append((au, bv))
            twisted.append((bu, av))
        else:
            twisted.append((au, av))
            twisted.append((bu, bv))
    return Graph(counter, plain), Graph(counter, twisted)


def random_relabelling(g: Graph, seed: int = 0) -> tuple[Graph, Permutation]:
    """A uniformly relabelled copy, as benchmark inputs get before processing."""
    rng = random.Random(seed)
    images = list(range(g.n))
    rng.shuffle(images)
    p = Permutation(images)
    return apply_perm_graph(g, p), p

"""Search-tree engines: depth-first and breadth-first traversal with pruning.

Both engines walk the same tree (root = the refined initial colouring,
children = individualizations of the target cell) and agree on the result:
the automorphism group of the coloured graph and, in canonical mode, the
relabelling by the leaf with the greatest node invariant.

The depth-first engine keeps two reference leaves, the first leaf and the
best-invariant leaf, and prunes nodes whose trace neither matches the first
leaf's prefix nor is at least the best leaf's prefix.  The breadth-first
engine keeps, per level, only the nodes with the greatest trace, and descends
one randomized experimental path from every retained node to harvest
automorphisms early.  Discovered automorphisms prune siblings whose
individualized vertices share an orbit of the point-wise stabilizer.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

from .graphs import (
    Colouring,
    ColouredGraph,
    Graph,
    Permutation,
    apply_perm_graph,
)
from .invariant import (
    LeafCertificate,
    TraceCursor,
    TraceOrder,
    TraceValue,
    dist2_degree_profile,
    encode_trace,
    relabelled_graph_bits,
)
from .permgroup import OrbitPartition, PermGroup
from .refine import Workspace
from .target_cells import SelectorStrategy, select


class Mode(enum.Enum):
    GROUP_ONLY = "group"
    CANONICAL = "canonical"


class Traversal(enum.Enum):
    DFS = "dfs"
    BFS = "bfs"


class BudgetExceededError(RuntimeError):
    """The node budget ran out; carries the statistics gathered so far."""

    def __init__(self, stats: dict):
        super().__init__("node budget exceeded")
        self.stats = dict(stats)


_HOOKS: dict[str, Callable[[Graph, Colouring], Sequence[int]]] = {
    "dist2": dist2_degree_profile,
}


@dataclass(frozen=True)
class EngineConfig:
    mode: Mode = Mode.GROUP_ONLY
    strategy: Traversal = Traversal.DFS
    selector: Optional[SelectorStrategy] = None
    seed: int = 0
    node_budget: Optional[int] = None
    level_cap: int = 1 << 16
    fixed_vertex_detection: bool = True
    discrete_children_shortcut: bool = True
    low_degree_shortcut: bool = True
    invariant_hook: Optional[str] = None
    closure_streak: int = 10

    def resolved_selector(self) -> SelectorStrategy:
        if self.selector is not None:
            return self.selector
        if self.strategy is Traversal.BFS:
            return SelectorStrategy.TRACES_ANCESTRAL
        return SelectorStrategy.FIRST_NON_SINGLETON


@dataclass(frozen=True)
class CanonicalForm:
    labelling: Permutation
    certificate: LeafCertificate
    graph: Graph


@dataclass
class EngineResult:
    generators: list[Permutation]
    group_order: int
    orbit_partition: OrbitPartition
    canonical: Optional[CanonicalForm]
    stats: dict


@dataclass(frozen=True)
class SearchNode:
    """A tree node as seen from outside the engine."""

    nu: tuple[int, ...]
    colouring: Colouring
    trace: TraceValue
    target: Optional[tuple[int, ...]]
    ancestry: tuple[frozenset, ...] = ()


# comparison of a node's trace against the first-leaf prefix
_EQ = 0
_DIFF = 1


class _Node:
    __slots__ = ("ws", "nu", "depth", "levels", "cmp_first", "cmp_best",
                 "ancestry", "target", "colouring", "ld_done")

    def __init__(self, ws, nu, levels, cmp_first, cmp_best, ancestry, colouring, ld_done):
        self.ws = ws
        self.nu = nu
        self.depth = len(nu)
        self.levels = levels
        self.cmp_first = cmp_first
        self.cmp_best = cmp_best
        self.ancestry = ancestry
        self.target = None
        self.colouring = colouring
        self.ld_done = ld_done

    def snapshot(self) -> SearchNode:
        return SearchNode(self.nu, self.colouring, TraceValue(self.levels),
                          self.target, self.ancestry)


class _Leaf:
    __slots__ = ("nu", "levels", "images", "inverse", "cert")

    def __init__(self, nu, levels, images, cert):
        self.nu = nu
        self.levels = levels
        self.images = images
        inv = [0] * len(images)
        for v, x in enumerate(images):
            inv[x] = v
        self.inverse = inv
        self.cert = cert


class _Frame:
    __slots__ = ("node", "vertices", "idx", "tried", "orbits", "orbits_version")

    def __init__(self, node):
        self.node = node
        self.vertices = sorted(node.target)
        self.idx = 0
        self.tried = []
        self.orbits = None
        self.orbits_version = -1


class _DualCursor:
    """Early-abort filter for one fragment against the two reference prefixes.

    Aborting is an optimization only; the caller recomputes the final verdicts
    from the completed fragment.  In group-only mode any deviation from the
    first leaf's fragment is fatal; in canonical mode a node survives while it
    still matches the first leaf or is not yet below the best leaf.
    """

    __slots__ = ("c_first", "c_best", "best_state", "canonical")

    def __init__(self, ref_first, ref_best, best_state, canonical):
        self.c_first = TraceCursor(ref_first) if ref_first is not None else None
        self.c_best = TraceCursor(ref_best) if ref_best is not None else None
        self.best_state = best_state
        self.canonical = canonical

    def feed(self, value: int) -> bool:
        alive_first = False
        if self.c_first is not None:
            self.c_first.feed(value)
            alive_first = self.c_first.verdict is TraceOrder.EQUAL_PREFIX
        if not self.canonical:
            return alive_first
        if self.best_state is TraceOrder.GREATER:
            return True
        if self.best_state is TraceOrder.LESS or self.c_best is None:
            return alive_first
        self.c_best.feed(value)
        return alive_first or self.c_best.verdict is not TraceOrder.LESS


def _lcp(a: Sequence[int], b: Sequence[int]) -> int:
    k = 0
    for x, y in zip(a, b):
        if x != y:
            break
        k += 1
    return k


def _order3(candidate: tuple, reference: tuple) -> TraceOrder:
    if candidate == reference:
        return TraceOrder.EQUAL_PREFIX
    return TraceOrder.GREATER if candidate > reference else TraceOrder.LESS


class _Search:
    """Shared state for one engine run over one coloured graph."""

    def __init__(self, graph: Graph, p0: Colouring, cfg: EngineConfig):
        ColouredGraph(graph, p0)  # validates coverage
        self.graph = graph
        self.p0 = p0
        self.cfg = cfg
        self.canonical = cfg.mode is Mode.CANONICAL
        self.selector = cfg.resolved_selector()
        self.rng = random.Random(cfg.seed)
        self.group = PermGroup(graph.n, seed=cfg.seed ^ 0x5EED,
                               closure_streak=cfg.closure_streak)
        self.generators: list[Permutation] = []
        self.hook = _HOOKS[cfg.invariant_hook] if cfg.invariant_hook else None
        self.degrees = [graph.degree(v) for v in range(graph.n)]
        self.stats = {
            "nodes": 0,
            "leaves": 0,
            "experimental_paths": 0,
            "refinements_aborted": 0,
            "prune_pa": 0,
            "prune_pb": 0,
            "prune_pc": 0,
            "automorphisms_found": 0,
            "generators_accepted": 0,
            "best_updates": 0,
            "fixed_vertex_found": 0,
            "low_degree_gens": 0,
            "dc_sweeps": 0,
            "bfs_fallbacks": 0,
            "max_frontier": 0,
        }
        self.first: Optional[_Leaf] = None
        self.best: Optional[_Leaf] = None
        self.first_path: Optional[dict[int, _Node]] = None
        # breadth-first extras
        self.exp_store: dict[bytes, _Leaf] = {}
        self.exp_first: Optional[_Leaf] = None
        self.dc_trigger: Optional[_Node] = None

    # -- node construction --------------------------------------------------

    def _count_node(self) -> None:
        self.stats["nodes"] += 1
        budget = self.cfg.node_budget
        if budget is not None and self.stats["nodes"] > budget:
            raise BudgetExceededError(self.stats)

    def make_root(self) -> _Node:
        self._count_node()
        ws = Workspace(self.graph, self.p0)
        frag = ws.refine(ws.cell_starts())
        level = [self.graph.n, self.graph.m, self.p0.k]
        level.extend(frag)
        colouring = ws.colouring()
        if self.hook is not None:
            level.extend(self.hook(self.graph, colouring))
        return _Node(ws, (), (tuple(level),), _EQ, TraceOrder.EQUAL_PREFIX,
                     (), colouring, False)

    def make_child(self, parent: _Node, v: int) -> Optional[_Node]:
        """Individualize v under parent and refine, pruning against the
        reference prefixes; returns None when the child does not survive."""
        self._count_node()
        depth = parent.depth + 1
        ref_first = None
        if self.first is not None and parent.cmp_first == _EQ and depth < len(self.first.levels):
            ref_first = self.first.levels[depth]
        ref_best = None
        if (self.canonical and self.best is not None
                and parent.cmp_best is TraceOrder.EQUAL_PREFIX
                and depth < len(self.best.levels)):
            ref_best = self.best.levels[depth]
        cursor = None
        if self.first is not None and (ref_first is not None or ref_best is not None
                                       or parent.cmp_best is TraceOrder.LESS):
            cursor = _DualCursor(ref_first, ref_best, parent.cmp_best, self.canonical)
            if not self.canonical and ref_first is None:
                cursor = None
        ws = parent.ws.clone()
        s = ws.individualize(v)
        frag = ws.refine([s], cursor=cursor)
        if frag is None:
            self.stats["refinements_aborted"] += 1
            self.stats["prune_pa" if self.canonical else "prune_pb"] += 1
            return None
        colouring = ws.colouring()
        if self.hook is not None:
            extra = self.hook(self.graph, colouring)
            frag.extend(extra)
            if cursor is not None:
                for x in extra:
                    if not cursor.feed(x):
                        self.stats["prune_pa" if self.canonical else "prune_pb"] += 1
                        return None
        frag_t = tuple(frag)
        if self.first is None:
            cmp_first = _EQ
        elif parent.cmp_first == _EQ and ref_first is not None and frag_t == ref_first:
            cmp_first = _EQ
        else:
            cmp_first = _DIFF
        if not self.canonical:
            if self.first is not None and cmp_first == _DIFF:
                self.stats["prune_pb"] += 1
                return None
            cmp_best = TraceOrder.EQUAL_PREFIX
        else:
            if self.best is None:
                cmp_best = TraceOrder.EQUAL_PREFIX
            elif parent.cmp_best is TraceOrder.EQUAL_PREFIX:
                # A live parent of a non-discrete best path always has a
                # reference fragment here; a missing one means the best leaf's
                # path ended shallower, which equal traces rule out.
                cmp_best = _order3(frag_t, ref_best) if ref_best is not None else TraceOrder.GREATER
            else:
                cmp_best = parent.cmp_best
            if cmp_first == _DIFF and cmp_best is TraceOrder.LESS:
                self.stats["prune_pa"] += 1
                return None
        return _Node(ws, parent.nu + (v,), parent.levels + (frag_t,),
                     cmp_first, cmp_best,
                     parent.ancestry + (frozenset(parent.target),),
                     colouring, parent.ld_done)

    def make_child_plain(self, parent: _Node, v: int) -> _Node:
        """Child with full refinement and no reference pruning (experimental
        paths and the discrete-children sweep)."""
        self._count_node()
        ws = parent.ws.clone()
        s = ws.individualize(v)
        frag = ws.refine([s])
        colouring = ws.colouring()
        if self.hook is not None:
            frag.extend(self.hook(self.graph, colouring))
        return _Node(ws, parent.nu + (v,), parent.levels + (tuple(frag),),
                     _DIFF, TraceOrder.EQUAL_PREFIX,
                     parent.ancestry + (frozenset(parent.target),),
                     colouring, parent.ld_done)

    def ensure_target(self, node: _Node) -> None:
        if node.target is None and not node.ws.is_discrete:
            node.target = select(self.selector, self.graph, node.colouring, node.ancestry)

    # -- automorphism plumbing ------------------------------------------------

    def _verify_automorphism(self, images: Sequence[int]) -> Permutation:
        g = Permutation(images)
        rows = self.graph.bit_rows
        for u, v in self.graph.edges:
            if not rows[images[u]] >> images[v] & 1:
                raise RuntimeError("engine produced a non-automorphism; this is a bug")
        col = self.p0.colour_of
        for v in range(self.graph.n):
            if col[images[v]] != col[v]:
                raise RuntimeError("engine produced a colour-breaking map; this is a bug")
        return g

    def emit_automorphism(self, images: Sequence[int]) -> Permutation:
        g = self._verify_automorphism(images)
        self.stats["automorphisms_found"] += 1
        if self.group.add_generator(g):
            self.generators.append(g)
            self.stats["generators_accepted"] += 1
        return g

    def automorphism_between(self, ref: _Leaf, new_images) -> Permutation:
        """The unique automorphism taking the reference leaf onto the new one:
        relabel by the new leaf, then undo the reference relabelling."""
        inv = ref.inverse
        return self.emit_automorphism([inv[x] for x in new_images])

    def node_orbits(self, nu: tuple[int, ...]) -> OrbitPartition:
        """Orbits of the known automorphisms that fix nu point-wise.

        A sound under-approximation of the point-wise stabilizer's orbits:
        vertices reported equivalent really are equivalent.
        """
        op = OrbitPartition(self.graph.n)
        for g in self.group.strong_images():
            for x in nu:
                if g[x] != x:
                    break
            else:
                op.merge_perm(g)
        return op

    def next_child_vertex(self, fr: _Frame) -> Optional[int]:
        if fr.orbits_version != self.group.version:
            fr.orbits = self.node_orbits(fr.node.nu)
            fr.orbits_version = self.group.version
        orbits = fr.orbits
        tried = fr.tried
        while fr.idx < len(fr.vertices):
            v = fr.vertices[fr.idx]
            fr.idx += 1
            skip = False
            for u in tried:
                if orbits.same(v, u):
                    skip = True
                    break
            if skip:
                self.stats["prune_pc"] += 1
                continue
            tried.append(v)
            return v
        return None

    def leaf_record(self, node: _Node) -> _Leaf:
        images = node.ws.discrete_images()
        cert = encode_trace(node.levels) + relabelled_graph_bits(self.graph, images)
        return _Leaf(node.nu, node.levels, images, cert)

    # -- depth-first engine ----------------------------------------------------

    def run_dfs(self) -> EngineResult:
        root = self.make_root()
        if root.ws.is_discrete:
            rec = self.leaf_record(root)
            self.stats["leaves"] += 1
            self.first = rec
            self.best = rec
        else:
            self.ensure_target(root)
            self.maybe_low_degree(root)
            self._dfs_loop(root, jump_floor=0)
        return self.finalize()

    def _dfs_loop(self, root: _Node, jump_floor: int) -> None:
        stack = [_Frame(root)]
        backjump: Optional[int] = None
        while stack:
            fr = stack[-1]
            if backjump is not None:
                if fr.node.depth > backjump:
                    stack.pop()
                    continue
                backjump = None
            v = self.next_child_vertex(fr)
            if v is None:
                stack.pop()
                continue
            child = self.make_child(fr.node, v)
            if child is None:
                continue
            if child.ws.is_discrete:
                jump = self.process_leaf_dfs(child, stack)
                if jump is not None:
                    backjump = max(jump, jump_floor)
                continue
            self.ensure_target(child)
            self.maybe_low_degree(child)
            self.maybe_fixed_vertex(child)
            stack.append(_Frame(child))

    def process_leaf_dfs(self, leaf: _Node, stack: list[_Frame]) -> Optional[int]:
        self.stats["leaves"] += 1
        rec = self.leaf_record(leaf)
        if self.first is None:
            self.first = rec
            self.first_path = {fr.node.depth: fr.node for fr in stack}
            if self.canonical:
                self.best = rec
            return None
        jump: Optional[int] = None
        if leaf.cmp_first == _EQ and rec.cert == self.first.cert:
            self.automorphism_between(self.first, rec.images)
            jump = _lcp(leaf.nu, self.first.nu)
            self.stats["prune_pc"] += 1
        if self.canonical:
            best = self.best
            if leaf.cmp_best is TraceOrder.GREATER or (
                leaf.cmp_best is TraceOrder.EQUAL_PREFIX and rec.cert > best.cert
            ):
                self.best = rec
                self.stats["best_updates"] += 1
                for fr in stack:
                    fr.node.cmp_best = TraceOrder.EQUAL_PREFIX
            elif leaf.cmp_best is TraceOrder.EQUAL_PREFIX and rec.cert == best.cert:
                self.automorphism_between(best, rec.images)
                j2 = _lcp(leaf.nu, best.nu)
                jump = j2 if jump is None else min(jump, j2)
                self.stats["prune_pc"] += 1
        return jump

    # -- detection on fixed vertices --------------------------------------------

    def maybe_fixed_vertex(self, node: _Node) -> None:
        if (not self.cfg.fixed_vertex_detection or self.first_path is None
                or node.cmp_first != _EQ):
            return
        other = self.first_path.get(node.depth)
        if other is None or other.nu == node.nu:
            return
        images = _fixed_vertex_map(self.graph, other.colouring, node.colouring)
        if images is None:
            return
        try:
            self._verify_automorphism(images)
        except (RuntimeError, ValueError):
            return
        self.stats["fixed_vertex_found"] += 1
        self.emit_automorphism(images)

    # -- low-degree shortcut -------------------------------------------------------

    def low_degree_applies(self, node: _Node) -> bool:
        n = self.graph.n
        easy = (0, 1, 2, n - 1)
        for cell in node.colouring.cells:
            if len(cell) > 1 and any(self.degrees[v] not in easy for v in cell):
                return False
        return True

    def maybe_low_degree(self, node: _Node) -> None:
        if not self.cfg.low_degree_shortcut or node.ld_done or self.graph.n == 0:
            return
        if not self.low_degree_applies(node):
            return
        node.ld_done = True
        for images in _low_degree_candidate_maps(self.graph, node.colouring, self.degrees):
            try:
                self._verify_automorphism(images)
            except (RuntimeError, ValueError):
                continue
            self.stats["low_degree_gens"] += 1
            self.emit_automorphism(images)

    # -- breadth-first engine ----------------------------------------------------

    def run_bfs(self) -> EngineResult:
        root = self.make_root()
        if root.ws.is_discrete:
            rec = self.leaf_record(root)
            self.stats["leaves"] += 1
            self.first = rec
            self.best = rec
            return self.finalize()
        self.ensure_target(root)
        self.maybe_low_degree(root)
        frontier = [root]
        self.experimental_path(root)
        while frontier:
            if self.dc_trigger is not None:
                self.discrete_children_sweep(frontier)
                return self.finalize()
            kept: list[_Node] = []
            best_frag: Optional[tuple[int, ...]] = None
            for node in frontier:
                fr = _Frame(node)
                while True:
                    v = self.next_child_vertex(fr)
                    if v is None:
                        break
                    child = self.make_child_level(node, v, best_frag)
                    if child is None:
                        continue
                    frag = child.levels[-1]
                    if best_frag is None or frag > best_frag:
                        if kept:
                            self.stats["prune_pa"] += len(kept)
                        kept = [child]
                        best_frag = frag
                    else:
                        kept.append(child)
            if not kept:
                break
            self.stats["max_frontier"] = max(self.stats["max_frontier"], len(kept))
            if kept[0].ws.is_discrete:
                self.process_leaf_level(kept)
                break
            if len(kept) > self.cfg.level_cap:
                self.stats["bfs_fallbacks"] += 1
                self._bfs_fallback(kept)
                break
            frontier = kept
            for node in frontier:
                self.ensure_target(node)
                self.maybe_low_degree(node)
                if self.dc_trigger is None:
                    self.experimental_path(node)
        return self.finalize()

    def make_child_level(self, parent: _Node, v: int, best_frag) -> Optional[_Node]:
        """Child generation under the per-level maximum-trace filter."""
        self._count_node()
        cursor = None
        if best_frag is not None:
            cursor = TraceCursor(best_frag, abort_on=frozenset((TraceOrder.LESS,)))
        ws = parent.ws.clone()
        s = ws.individualize(v)
        frag = ws.refine([s], cursor=cursor)
        if frag is None:
            self.stats["refinements_aborted"] += 1
            self.stats["prune_pa"] += 1
            return None
        colouring = ws.colouring()
        if self.hook is not None:
            frag.extend(self.hook(self.graph, colouring))
        frag_t = tuple(frag)
        if best_frag is not None and frag_t < best_frag:
            self.stats["prune_pa"] += 1
            return None
        return _Node(ws, parent.nu + (v,), parent.levels + (frag_t,),
                     _DIFF, TraceOrder.EQUAL_PREFIX,
                     parent.ancestry + (frozenset(parent.target),),
                     colouring, parent.ld_done)

    def experimental_path(self, node: _Node) -> None:
        """Random descent to a leaf, harvesting automorphisms by certificate."""
        self.stats["experimental_paths"] += 1
        current = node
        steps = 0
        while not current.ws.is_discrete:
            self.ensure_target(current)
            cell = sorted(current.target)
            v = cell[self.rng.randrange(len(cell))]
            current = self.make_child_plain(current, v)
            steps += 1
        rec = self.leaf_record(current)
        self.stats["leaves"] += 1
        if self.exp_first is None:
            self.exp_first = rec
        if (steps == 1 and not self.canonical
                and self.cfg.discrete_children_shortcut and self.dc_trigger is None):
            self.dc_trigger = node
        match = self.exp_store.get(rec.cert)
        if match is not None:
            if rec.nu != match.nu:
                self.automorphism_between(match, rec.images)
        else:
            self.exp_store[rec.cert] = rec
        if self.canonical:
            self._consider_best(rec)

    def _consider_best(self, rec: _Leaf) -> None:
        best = self.best
        if best is None or rec.levels > best.levels or (
            rec.levels == best.levels and rec.cert > best.cert
        ):
            self.best = rec
            self.stats["best_updates"] += 1

    def process_leaf_level(self, leaves: list[_Node]) -> None:
        """Final breadth-first level: every retained node is a leaf."""
        store: dict[bytes, _Leaf] = {}
        for node in leaves:
            self.stats["leaves"] += 1
            rec = self.leaf_record(node)
            match = store.get(rec.cert)
            if match is not None:
                self.automorphism_between(match, rec.images)
            else:
                store[rec.cert] = rec
            if self.first is None:
                self.first = rec
            if self.canonical:
                self._consider_best(rec)

    def discrete_children_sweep(self, frontier: list[_Node]) -> None:
        """Group-only endgame once some node has a discrete child: keep all
        discrete children of that node, then give every other node one chance
        to produce a matching discrete child."""
        self.stats["dc_sweeps"] += 1
        trigger = self.dc_trigger
        stored: dict[bytes, _Leaf] = {}
        fr = _Frame(trigger)
        while True:
            v = self.next_child_vertex(fr)
            if v is None:
                break
            child = self.make_child_plain(trigger, v)
            if not child.ws.is_discrete:
                self.stats["prune_pb"] += 1
                continue
            self.stats["leaves"] += 1
            rec = self.leaf_record(child)
            if self.first is None:
                self.first = rec
            match = stored.get(rec.cert)
            if match is not None:
                self.automorphism_between(match, rec.images)
            else:
                stored[rec.cert] = rec
        for node in frontier:
            if node is trigger:
                continue
            fr = _Frame(node)
            while True:
                v = self.next_child_vertex(fr)
                if v is None:
                    break
                child = self.make_child_plain(node, v)
                if not child.ws.is_discrete:
                    self.stats["prune_pb"] += 1
                    continue
                self.stats["leaves"] += 1
                rec = self.leaf_record(child)
                match = stored.get(rec.cert)
                if match is not None:
                    self.automorphism_between(match, rec.images)
                else:
                    self.stats["prune_pb"] += 1
                break

    def _bfs_fallback(self, frontier: list[_Node]) -> None:
        """Level cap exceeded: finish depth-first from the stored frontier.

        The retained nodes share one (maximal) trace, so once the depth-first
        pass finds its first leaf inside the first subtree, the usual
        reference pruning applies across all of them.  The best experimental
        leaf keeps anchoring canonical pruning in the meantime.
        """
        self.first = None
        self.first_path = None
        for node in frontier:
            node.cmp_first = _EQ
            if self.canonical and self.best is not None:
                pref = tuple(self.best.levels[: node.depth + 1])
                node.cmp_best = (TraceOrder.EQUAL_PREFIX if node.levels == pref
                                 else TraceOrder.GREATER)
        for node in frontier:
            self.ensure_target(node)
            self._dfs_loop(node, jump_floor=node.depth)

    # -- shared epilogue -------------------------------------------------------------

    def finalize(self) -> EngineResult:
        # Re-sift everything that was emitted and re-close until the order is
        # stable; random Schreier can be unlucky and this is cheap insurance.
        for _ in range(3):
            missing = [g for g in self.generators if not self.group.contains(g)]
            if not missing:
                break
            for g in missing:
                self.group.add_generator(g)
        self.group.reclose()
        orbit = OrbitPartition(self.graph.n)
        for g in self.generators:
            orbit.merge_perm(g.images)
        canonical = None
        if self.canonical:
            best = self.best
            labelling = Permutation(best.images)
            canonical = CanonicalForm(
                labelling,
                LeafCertificate(best.cert),
                apply_perm_graph(self.graph, labelling),
            )
        return EngineResult(
            generators=list(self.generators),
            group_order=self.group.order(),
            orbit_partition=orbit,
            canonical=canonical,
            stats=dict(self.stats),
        )


# -- candidate construction helpers ------------------------------------------


def _fixed_vertex_map(graph: Graph, a: Colouring, b: Colouring) -> Optional[list[int]]:
    """Extend the forced map on fixed vertices of two same-shape colourings:
    first as the identity elsewhere, then by greedy cell matching.  Returns
    candidate images or None; the caller must verify."""
    cells_a, cells_b = a.cells, b.cells
    if len(cells_a) != len(cells_b):
        return None
    if any(len(ca) != len(cb) for ca, cb in zip(cells_a, cells_b)):
        return None
    n = graph.n
    rows = graph.bit_rows
    forced = {}
    for ca, cb in zip(cells_a, cells_b):
        if len(ca) == 1:
            forced[ca[0]] = cb[0]
    # saucy's case: identity on the non-fixed vertices
    images = list(range(n))
    for x, y in forced.items():
        images[x] = y
    if sorted(images) == list(range(n)):
        if all(rows[images[u]] >> images[v] & 1 for u, v in graph.edges):
            return images
    # greedy cell-to-cell matching guided by adjacency to mapped vertices
    mapping = dict(forced)
    mapped_pairs = list(forced.items())
    for ca, cb in zip(cells_a, cells_b):
        if len(ca) == 1:
            continue
        used = set()
        for u in ca:
            placed = False
            for v in cb:
                if v in used:
                    continue
                if all((rows[u] >> x & 1) == (rows[v] >> y & 1) for x, y in mapped_pairs):
                    mapping[u] = v
                    used.add(v)
                    mapped_pairs.append((u, v))
                    placed = True
                    break
            if not placed:
                return None
    return [mapping[v] for v in range(n)]


def _low_degree_candidate_maps(graph: Graph, p: Colouring, degrees: Sequence[int]):
    """Candidate stabilizer generators for a colouring whose non-trivial cells
    hold only vertices of degree 0, 1, 2 or n-1.  Yields image arrays; the
    caller verifies each, so under-generation is harmless and bad candidates
    get filtered."""
    n = graph.n
    neighbours = graph.neighbours
    identity = list(range(n))
    deg2_pool = set()
    for cell in p.cells:
        if len(cell) < 2:
            continue
        d = degrees[cell[0]]
        if d == 0 or d == n - 1:
            for x, y in zip(cell, cell[1:]):
                images = identity[:]
                images[x], images[y] = y, x
                yield images
        elif d == 1:
            by_anchor: dict[int, list[int]] = {}
            for v in cell:
                by_anchor.setdefault(neighbours[v][0], []).append(v)
            for twins in by_anchor.values():
                for x, y in zip(twins, twins[1:]):
                    images = identity[:]
                    images[x], images[y] = y, x
                    yield images
        elif d == 2:
            deg2_pool.update(cell)
    if not deg2_pool:
        return
    colour = p.colour_of
    comps = _path_cycle_components(neighbours, deg2_pool)
    for kind, seq in comps:
        length = len(seq)
        if kind == "cycle":
            for shift in range(1, length):
                images = identity[:]
                for i in range(length):
                    images[seq[i]] = seq[(i + shift) % length]
                if all(colour[images[v]] == colour[v] for v in seq):
                    yield images
                    break
            for axis in range(length):
                images = identity[:]
                for i in range(length):
                    images[seq[i]] = seq[(axis - i) % length]
                if all(colour[images[v]] == colour[v] for v in seq):
                    yield images
                    break
        else:
            images = identity[:]
            for i in range(length):
                images[seq[i]] = seq[length - 1 - i]
            if all(colour[images[v]] == colour[v] for v in seq):
                yield images
    # swaps of structurally identical components
    sig: dict[tuple, list] = {}
    for kind, seq in comps:
        key = (kind, len(seq), tuple(sorted(colour[v] for v in seq)))
        sig.setdefault(key, []).append(seq)
    for (kind, length, _), group in sig.items():
        for a, b in zip(group, group[1:]):
            if kind == "path":
                alignments = [list(b), list(reversed(b))]
            else:
                alignments = []
                for shift in range(length):
                    rolled = b[shift:] + b[:shift]
                    alignments.append(list(rolled))
                    alignments.append(list(reversed(rolled)))
            for aligned in alignments:
                if any(colour[x] != colour[y] for x, y in zip(a, aligned)):
                    continue
                images = identity[:]
                for x, y in zip(a, aligned):
                    images[x] = y
                    images[y] = x
                yield images
                break


def _path_cycle_components(neighbours, pool: set):
    """Connected components of the graph induced on ``pool`` (members have
    total degree 2): ('path'|'cycle', vertex sequence) with a deterministic
    orientation."""
    comps = []
    seen = set()
    for v0 in sorted(pool):
        if v0 in seen:
            continue

        def inside(x):
            return [u for u in neighbours[x] if u in pool]

        comp = {v0}
        stack = [v0]
        while stack:
            x = stack.pop()
            for u in inside(x):
                if u not in comp:
                    comp.add(u)
                    stack.append(u)
        seen |= comp
        ends = sorted(x for x in comp if len(inside(x)) < 2)
        if ends:
            seq = [ends[0]]
            prev = None
            cur = ends[0]
            while True:
                nxt = [u for u in inside(cur) if u != prev]
                if not nxt:
                    break
                prev, cur = cur, nxt[0]
                seq.append(cur)
            comps.append(("path", seq))
        else:
            startv = min(comp)
            seq = [startv, min(inside(startv))]
            while True:
                nxt = [u for u in inside(seq[-1]) if u != seq[-2]]
                if not nxt or nxt[0] == startv:
                    break
                seq.append(nxt[0])
            comps.append(("cycle", seq))
    return comps


# -- public operations ----------------------------------------------------------


def run(graph: Graph, p0: Optional[Colouring] = None,
        cfg: Optional[EngineConfig] = None) -> EngineResult:
    cfg = cfg or EngineConfig()
    p0 = p0 if p0 is not None else Colouring.unit(graph.n)
    search = _Search(graph, p0, cfg)
    if cfg.strategy is Traversal.BFS:
        return search.run_bfs()
    return search.run_dfs()


def run_dfs(graph: Graph, p0: Optional[Colouring] = None,
            cfg: Optional[EngineConfig] = None) -> EngineResult:
    return run(graph, p0, replace(cfg or EngineConfig(), strategy=Traversal.DFS))


def run_bfs(graph: Graph, p0: Optional[Colouring] = None,
            cfg: Optional[EngineConfig] = None) -> EngineResult:
    return run(graph, p0, replace(cfg or EngineConfig(), strategy=Traversal.BFS))


def make_search_node(graph: Graph, p0: Colouring, nu: Sequence[int],
                     selector: SelectorStrategy = SelectorStrategy.FIRST_NON_SINGLETON) -> SearchNode:
    """Materialize the tree node reached by nu, mainly to drive the node-level
    operations below directly."""
    from .refine import refine_sequence

    ancestry: list[frozenset] = []
    out = refine_sequence(graph, p0, ())
    levels = [out.levels[0]]
    current = out.colouring
    for i, v in enumerate(nu):
        target = select(selector, graph, current, tuple(ancestry))
        ancestry.append(frozenset(target))
        out = refine_sequence(graph, p0, tuple(nu[: i + 1]))
        levels.append(out.levels[-1])
        current = out.colouring
    target = select(selector, graph, current, tuple(ancestry))
    return SearchNode(tuple(nu), current, TraceValue(tuple(levels)), target, tuple(ancestry))


def detect_fixed_vertex_automorphism(cg: ColouredGraph, node_a: SearchNode,
                                     node_b: SearchNode) -> Optional[Permutation]:
    """Automorphism inferred from two equitable nodes with identical traces
    and cell-size profiles: the forced map on fixed vertices, extended first
    as the identity and then by greedy cell matching.  Only a verified
    automorphism is ever returned."""
    if node_a.trace != node_b.trace:
        return None
    images = _fixed_vertex_map(cg.graph, node_a.colouring, node_b.colouring)
    if images is None:
        return None
    try:
        g = Permutation(images)
    except ValueError:
        return None
    if apply_perm_graph(cg.graph, g) != cg.graph:
        return None
    col = cg.colouring.colour_of
    if any(col[images[v]] != col[v] for v in range(cg.graph.n)):
        return None
    return g


def low_degree_shortcut(cg: ColouredGraph, node: SearchNode
                        ) -> Optional[tuple[list[Permutation], Colouring]]:
    """When every non-trivial cell of the node holds only vertices of degree
    0, 1, 2 or n-1, return verified stabilizer generators plus the
    deterministic discrete refinement of the node; otherwise None."""
    graph = cg.graph
    n = graph.n
    degrees = [graph.degree(v) for v in range(n)]
    easy = (0, 1, 2, n - 1)
    for cell in node.colouring.cells:
        if len(cell) > 1 and any(degrees[v] not in easy for v in cell):
            return None
    gens = []
    rows = graph.bit_rows
    col0 = cg.colouring.colour_of
    for images in _low_degree_candidate_maps(graph, node.colouring, degrees):
        ok = all(rows[images[u]] >> images[v] & 1 for u, v in graph.edges)
        if ok and all(col0[images[v]] == col0[v] for v in range(n)):
            gens.append(Permutation(images))
    ws = Workspace(graph, node.colouring)
    while not ws.is_discrete:
        s = next(s for s in ws.cell_starts() if ws.size[s] > 1)
        v = min(ws.cell_members(s))
        sv = ws.individualize(v)
        ws.refine([sv])
    return gens, ws.colouring()


def isomorphic(g1: Graph, g2: Graph, cfg: Optional[EngineConfig] = None,
               p1: Optional[Colouring] = None, p2: Optional[Colouring] = None,
               ) -> Optional[Permutation]:
    """A verified isomorphism g1 -> g2 obtained from canonical forms, or None."""
    if g1.n != g2.n or g1.m != g2.m:
        return None
    cfg = replace(cfg or EngineConfig(), mode=Mode.CANONICAL)
    r1 = run(g1, p1, cfg)
    r2 = run(g2, p2, cfg)
    if r1.canonical.certificate.data != r2.canonical.certificate.data:
        return None
    g = r1.canonical.labelling * r2.canonical.labelling.inverse()
    rows = g2.bit_rows
    for u, v in g1.edges:
        if not rows[g[u]] >> g[v] & 1:
            return None
    return g

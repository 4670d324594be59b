"""Permutation-group bookkeeping via the random Schreier method.

The group is held as a base with transversals plus a pool of strong
generators.  Membership sifting is exact in one direction only: a sifted
identity proves membership, while the structure as a whole is Monte Carlo
(closure is declared after enough consecutive random subproducts sift to the
identity).  An undercomplete structure can only under-report: orders shrink
and stabilizer orbits come out finer, never coarser.
"""

from __future__ import annotations

import random
from typing import Iterable, Optional, Sequence

from .graphs import DimensionError, Permutation

# Consecutive random subproducts that must sift to the identity before the
# structure is declared complete.
DEFAULT_CLOSURE_STREAK = 10


class OrbitPartition:
    """Union-find over 0..n-1 tracking joint orbits of a set of permutations."""

    __slots__ = ("parent", "rank")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, v: int) -> int:
        parent = self.parent
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    def union(self, u: int, v: int) -> None:
        ru, rv = self.find(u), self.find(v)
        if ru == rv:
            return
        if self.rank[ru] < self.rank[rv]:
            ru, rv = rv, ru
        self.parent[rv] = ru
        if self.rank[ru] == self.rank[rv]:
            self.rank[ru] += 1

    def same(self, u: int, v: int) -> bool:
        return self.find(u) == self.find(v)

    def merge_perm(self, images: Sequence[int]) -> None:
        for v, i in enumerate(images):
            if v != i:
                self.union(v, i)

    def classes(self) -> tuple[tuple[int, ...], ...]:
        groups: dict[int, list[int]] = {}
        for v in range(len(self.parent)):
            groups.setdefault(self.find(v), []).append(v)
        return tuple(tuple(sorted(g)) for g in sorted(groups.values()))


def _compose(a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
    return tuple(b[x] for x in a)


def _inverse(a: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(a)
    for v, x in enumerate(a):
        inv[x] = v
    return tuple(inv)


class PermGroup:
    """A permutation group of fixed degree maintained by random Schreier.

    ``base_prefix`` forces the base to start with the given points, which
    makes the strong generators below the prefix a generating set for the
    point-wise stabilizer of those points (possibly a proper subgroup, see
    the module note on Monte Carlo behaviour).
    """

    def __init__(
        self,
        degree: int,
        seed: int = 0,
        base_prefix: Sequence[int] = (),
        closure_streak: int = DEFAULT_CLOSURE_STREAK,
    ):
        self.degree = degree
        self.rng = random.Random(seed)
        self.closure_streak = closure_streak
        self.version = 0
        self._identity = tuple(range(degree))
        self._strong: list[tuple[int, ...]] = []
        self.base: list[int] = list(base_prefix)
        # _transversal_inv[i][x] = images of t_x^-1 where base[i]^{t_x} = x.
        self._transversal_inv: list[dict[int, tuple[int, ...]]] = [
            {b: self._identity} for b in self.base
        ]
        self._stab_cache: dict[tuple[int, ...], tuple[int, OrbitPartition]] = {}
        self._reservoir: list[tuple[int, ...]] = []
        self._reservoir_gens = -1
        self._accu = self._identity

    # -- structure maintenance -------------------------------------------

    def _gens_for_level(self, i: int) -> list[tuple[int, ...]]:
        prefix = self.base[:i]
        return [g for g in self._strong if all(g[b] == b for b in prefix)]

    def _rebuild_level(self, i: int) -> None:
        gens = self._gens_for_level(i)
        inverses = [_inverse(g) for g in gens]
        b = self.base[i]
        tinv = {b: self._identity}
        queue = [b]
        while queue:
            a = queue.pop()
            ta_inv = tinv[a]
            for g, g_inv in zip(gens, inverses):
                x = g[a]
                if x not in tinv:
                    tinv[x] = _compose(g_inv, ta_inv)
                    queue.append(x)
        self._transversal_inv[i] = tinv

    def _sift_images(self, images: Sequence[int]) -> tuple[Optional[tuple[int, ...]], int]:
        """Reduce through the chain; returns (residue or None-if-identity, level)."""
        h = tuple(images)
        for i, b in enumerate(self.base):
            x = h[b]
            if x == b:
                continue
            tinv = self._transversal_inv[i].get(x)
            if tinv is None:
                return h, i
            h = _compose(h, tinv)
        if h == self._identity:
            return None, len(self.base)
        return h, len(self.base)

    def _register(self, residue: tuple[int, ...], level: int) -> None:
        if level == len(self.base):
            # Residue fixes the whole base: extend with its first moved point.
            point = next(v for v, x in enumerate(residue) if x != v)
            self.base.append(point)
            self._transversal_inv.append({point: self._identity})
        self._strong.append(residue)
        for i in range(min(level, len(self.base) - 1), -1, -1):
            self._rebuild_level(i)
        self.version += 1
        self._stab_cache.clear()

    def _stir(self) -> tuple[int, ...]:
        res = self._reservoir
        i = self.rng.randrange(len(res))
        p = res[i]
        if self.rng.random() < 0.5:
            p = _inverse(p)
        j = self.rng.randrange(len(res))
        res[j] = _compose(res[j], p)
        self._accu = _compose(self._accu, res[j])
        return self._accu

    def _random_element(self) -> tuple[int, ...]:
        """Pseudo-random group element by product replacement ("rattle").

        Plain subproducts of the generators mix far too slowly when there are
        only a few of them.  Several stirs per sample keep consecutive samples
        decorrelated even across small quotients of the group.
        """
        if self._reservoir_gens != len(self._strong):
            self._reservoir = [self._identity] * 5 + list(self._strong)
            self._accu = self._identity
            self._reservoir_gens = len(self._strong)
            for _ in range(max(30, 4 * len(self._strong))):
                self._stir()
        for _ in range(9):
            self._stir()
        return self._stir()

    def _random_schreier_generator(self, i: int) -> tuple[int, ...]:
        """A random Schreier generator t_x * g * t_{(x^g)}^-1 of level i;
        any level whose stabilizer is under-generated has such witnesses, so
        sifting these complements the rattle samples."""
        gens = self._gens_for_level(i)
        if not gens:
            return self._identity
        tinv = self._transversal_inv[i]
        x = self.rng.choice(sorted(tinv))
        g = gens[self.rng.randrange(len(gens))]
        w = _compose(_inverse(tinv[x]), g)
        t_y_inv = tinv.get(w[self.base[i]])
        return w if t_y_inv is None else _compose(w, t_y_inv)

    def _witness_levels(self) -> list[int]:
        nb = len(self.base)
        if nb <= 4:
            return list(range(nb))
        # deficiencies concentrate at the deep (recently extended) levels
        levels = {nb - 1, nb - 2, self.rng.randrange(nb), self.rng.randrange(nb)}
        return sorted(levels)

    def _close(self) -> None:
        if not self._strong:
            return
        streak = 0
        while streak < self.closure_streak:
            candidates = [self._random_element()]
            candidates.extend(self._random_schreier_generator(i) for i in self._witness_levels())
            ok = True
            for candidate in candidates:
                residue, level = self._sift_images(candidate)
                if residue is not None:
                    self._register(residue, level)
                    ok = False
            streak = streak + 1 if ok else 0

    def reclose(self, stable_passes: int = 2) -> None:
        """Re-run closure until the structure survives consecutive passes
        unchanged; cheap insurance for consumers that need the order."""
        stable = 0
        while stable < stable_passes:
            before = len(self._strong)
            self._close()
            stable = stable + 1 if len(self._strong) == before else 0

    # -- public surface ---------------------------------------------------

    def add_generator(self, g: Permutation) -> bool:
        """Absorb g; returns True when the group grew."""
        if len(g) != self.degree:
            raise DimensionError("generator degree %d, group degree %d" % (len(g), self.degree))
        residue, level = self._sift_images(g.images)
        if residue is None:
            return False
        self._register(residue, level)
        self._close()
        return True

    def sift(self, g: Permutation) -> Permutation:
        """Residue of g; the identity exactly when g is provably a member."""
        if len(g) != self.degree:
            raise DimensionError("degree mismatch")
        residue, _ = self._sift_images(g.images)
        return Permutation.identity(self.degree) if residue is None else Permutation(residue)

    def contains(self, g: Permutation) -> bool:
        return self.sift(g).is_identity

    def order(self) -> int:
        total = 1
        for tinv in self._transversal_inv:
            total *= len(tinv)
        return total

    @property
    def generators(self) -> list[Permutation]:
        return [Permutation(g) for g in self._strong]

    def strong_images(self) -> list[tuple[int, ...]]:
        return list(self._strong)

    def orbits(self) -> OrbitPartition:
        op = OrbitPartition(self.degree)
        for g in self._strong:
            op.merge_perm(g)
        return op

    def stabilizer_orbits(self, fixed: Sequence[int]) -> OrbitPartition:
        """Orbits of the point-wise stabilizer of ``fixed``.

        Rebuilds a chain with ``fixed`` as base prefix and merges the strong
        generators that fix the prefix.  May under-merge (report finer
        classes), never over-merge.
        """
        key = tuple(fixed)
        hit = self._stab_cache.get(key)
        if hit is not None and hit[0] == self.version:
            return hit[1]
        tmp = PermGroup(
            self.degree,
            seed=self.rng.randrange(1 << 30),
            base_prefix=key,
            closure_streak=self.closure_streak,
        )
        for g in self._strong:
            residue, level = tmp._sift_images(g)
            if residue is not None:
                tmp._register(residue, level)
        tmp._close()
        op = OrbitPartition(self.degree)
        for g in tmp._strong:
            if all(g[b] == b for b in key):
                op.merge_perm(g)
        self._stab_cache[key] = (self.version, op)
        return op

"""Matroid rank oracles: concrete families, minors, direct sums, parallel extensions.

Every oracle presents a loopless matroid on the dense ground set
``{0, ..., ground_size - 1}``.  Subsets are bitmasks (see :mod:`matsec.bitset`).
Oracles are immutable after construction and safe to share between workers;
rank queries are read-only.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence
from pathlib import Path

from .bitset import bit, bits, full_mask, mask_of


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the components of ``a`` and ``b``; True if they were distinct."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


class RankOracle:
    """Base class: a loopless matroid presented by its rank function.

    Subclasses implement :meth:`rank`; every other matroid operation is
    derived from it (some subclasses override the derived operations with
    closed forms that return identical answers).
    """

    def __init__(self, ground_size: int, label: str = "matroid"):
        if ground_size < 0:
            raise ValueError("ground size must be non-negative")
        self.ground_size = ground_size
        self.label = label

    # -- primitive ----------------------------------------------------

    def rank(self, subset: int) -> int:
        raise NotImplementedError

    # -- derived operations -------------------------------------------

    def full(self) -> int:
        return full_mask(self.ground_size)

    def check_subset(self, subset: int) -> None:
        if subset < 0 or subset >> self.ground_size:
            raise ValueError(
                f"subset {bin(subset)} has element ids outside [0, {self.ground_size})"
            )

    def is_independent(self, subset: int) -> bool:
        return self.rank(subset) == subset.bit_count()

    def span(self, subset: int) -> int:
        """All elements whose addition to ``subset`` does not raise the rank."""
        self.check_subset(subset)
        r = self.rank(subset)
        out = subset
        rest = self.full() & ~subset
        for e in bits(rest):
            if self.rank(subset | bit(e)) == r:
                out |= bit(e)
        return out

    def greedy_max_weight(self, weights: Sequence[float]) -> int:
        """Maximum-weight independent set.

        Scans elements by weight descending (ties: smaller id first) and keeps
        each element that preserves independence.
        """
        if len(weights) != self.ground_size:
            raise ValueError("need one weight per element")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be non-negative")
        order = sorted(range(self.ground_size), key=lambda e: (-weights[e], e))
        chosen = 0
        r = 0
        for e in order:
            if self.rank(chosen | bit(e)) > r:
                chosen |= bit(e)
                r += 1
        return chosen

    def minor(self, contract: int = 0, restrict_to: int | None = None) -> "MinorView":
        return MinorView(self, contract, restrict_to)

    def parallel_extension(self, q: int) -> "ParallelExtension":
        return ParallelExtension(self, q)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.label!r} n={self.ground_size}>"


class UniformMatroid(RankOracle):
    """Rank of a subset is ``min(|subset|, k)``."""

    def __init__(self, n: int, k: int, label: str | None = None):
        super().__init__(n, label or f"uniform({n},{k})")
        if n > 0 and k < 1:
            raise ValueError("k = 0 would make every element a loop")
        if k < 0:
            raise ValueError("k must be non-negative")
        self.k = k

    def rank(self, subset: int) -> int:
        self.check_subset(subset)
        return min(subset.bit_count(), self.k)

    def span(self, subset: int) -> int:
        self.check_subset(subset)
        if subset.bit_count() >= self.k:
            return self.full()
        return subset


class PartitionMatroid(RankOracle):
    """Direct sum of uniform matroids over a labelled partition of the ground set.

    ``class_ids[e]`` gives the class of element ``e``; class ``i`` contributes
    ``min(|subset in class i|, capacities[i])`` to the rank.
    """

    def __init__(
        self,
        class_ids: Sequence[int],
        capacities: Sequence[int],
        label: str | None = None,
    ):
        super().__init__(len(class_ids), label or "partition")
        self.capacities = tuple(int(c) for c in capacities)
        self.class_ids = tuple(int(c) for c in class_ids)
        if any(c < 0 or c >= len(self.capacities) for c in self.class_ids):
            raise ValueError("class id out of range")
        masks = [0] * len(self.capacities)
        for e, c in enumerate(self.class_ids):
            masks[c] |= bit(e)
        self.class_masks = tuple(masks)
        for m, cap in zip(self.class_masks, self.capacities):
            if cap < 0:
                raise ValueError("capacities must be non-negative")
            if m and cap == 0:
                raise ValueError("a populated class with capacity 0 creates loops")

    @classmethod
    def from_sizes(
        cls,
        sizes: Sequence[int],
        capacities: Sequence[int],
        label: str | None = None,
    ) -> "PartitionMatroid":
        """Consecutive layout: class i occupies the next ``sizes[i]`` ids."""
        if len(sizes) != len(capacities):
            raise ValueError("need one capacity per class")
        ids = []
        for i, s in enumerate(sizes):
            ids.extend([i] * s)
        return cls(ids, capacities, label)

    def rank(self, subset: int) -> int:
        self.check_subset(subset)
        return sum(
            min((subset & m).bit_count(), cap)
            for m, cap in zip(self.class_masks, self.capacities)
        )

    def span(self, subset: int) -> int:
        self.check_subset(subset)
        out = subset
        for m, cap in zip(self.class_masks, self.capacities):
            if (subset & m).bit_count() >= cap:
                out |= m
        return out

    def greedy_max_weight(self, weights: Sequence[float]) -> int:
        if len(weights) != self.ground_size:
            raise ValueError("need one weight per element")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be non-negative")
        chosen = 0
        for m, cap in zip(self.class_masks, self.capacities):
            members = sorted(bits(m), key=lambda e: (-weights[e], e))
            chosen |= mask_of(members[:cap])
        return chosen


class GraphicMatroid(RankOracle):
    """Edges of a multigraph; a subset is independent iff it is a forest."""

    def __init__(
        self,
        num_vertices: int,
        edges: Sequence[tuple[int, int]],
        label: str | None = None,
    ):
        super().__init__(len(edges), label or f"graphic({num_vertices}v)")
        self.num_vertices = num_vertices
        checked = []
        for u, v in edges:
            if not (0 <= u < num_vertices and 0 <= v < num_vertices):
                raise ValueError(f"edge ({u},{v}) has endpoints outside [0,{num_vertices})")
            if u == v:
                raise ValueError(f"self-loop ({u},{v}) rejected: matroids here are loopless")
            checked.append((u, v))
        self.edges = tuple(checked)

    def rank(self, subset: int) -> int:
        self.check_subset(subset)
        uf = UnionFind(self.num_vertices)
        r = 0
        for e in bits(subset):
            u, v = self.edges[e]
            if uf.union(u, v):
                r += 1
        return r

    def span(self, subset: int) -> int:
        self.check_subset(subset)
        uf = UnionFind(self.num_vertices)
        for e in bits(subset):
            u, v = self.edges[e]
            uf.union(u, v)
        out = 0
        for e in range(self.ground_size):
            u, v = self.edges[e]
            if uf.find(u) == uf.find(v):
                out |= bit(e)
        return out

    def greedy_max_weight(self, weights: Sequence[float]) -> int:
        if len(weights) != self.ground_size:
            raise ValueError("need one weight per element")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be non-negative")
        order = sorted(range(self.ground_size), key=lambda e: (-weights[e], e))
        uf = UnionFind(self.num_vertices)
        chosen = 0
        for e in order:
            u, v = self.edges[e]
            if uf.union(u, v):
                chosen |= bit(e)
        return chosen

    @classmethod
    def from_file(cls, path: str | Path, label: str | None = None) -> "GraphicMatroid":
        """Load from a text edge list: first line ``V E``, then E lines ``u v``."""
        text = Path(path).read_text()
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise ValueError("expected a 'V E' header line")
        nv, ne = int(rows[0][0]), int(rows[0][1])
        body = rows[1:]
        if len(body) != ne:
            raise ValueError(f"header promises {ne} edges, file has {len(body)}")
        edges = [(int(u), int(v)) for u, v in body]
        return cls(nv, edges, label or Path(path).stem)


class DirectSumMatroid(RankOracle):
    """Disjoint union of child matroids; ids are concatenated child blocks."""

    def __init__(self, children: Sequence[RankOracle], label: str | None = None):
        offsets = []
        total = 0
        for c in children:
            offsets.append(total)
            total += c.ground_size
        super().__init__(total, label or "sum(" + ",".join(c.label for c in children) + ")")
        self.children = tuple(children)
        self.offsets = tuple(offsets)

    def _slices(self, subset: int):
        for c, off in zip(self.children, self.offsets):
            yield c, off, (subset >> off) & full_mask(c.ground_size)

    def rank(self, subset: int) -> int:
        self.check_subset(subset)
        return sum(c.rank(s) for c, _, s in self._slices(subset))

    def span(self, subset: int) -> int:
        self.check_subset(subset)
        out = 0
        for c, off, s in self._slices(subset):
            out |= c.span(s) << off
        return out

    def greedy_max_weight(self, weights: Sequence[float]) -> int:
        if len(weights) != self.ground_size:
            raise ValueError("need one weight per element")
        out = 0
        for c, off in zip(self.children, self.offsets):
            sub = weights[off : off + c.ground_size]
            out |= c.greedy_max_weight(sub) << off
        return out


class ExplicitMatroid(RankOracle):
    """Matroid given by an explicit list of bases (small ground sets only).

    The basis-exchange axiom is verified exhaustively at construction, so a
    bad fixture fails fast instead of poisoning downstream computations.
    """

    MAX_GROUND = 24

    def __init__(
        self,
        ground_size: int,
        bases: Iterable[int | Sequence[int]],
        label: str | None = None,
    ):
        super().__init__(ground_size, label or "explicit")
        if ground_size > self.MAX_GROUND:
            raise ValueError(f"explicit matroids support at most {self.MAX_GROUND} elements")
        masks = set()
        for b in bases:
            m = b if isinstance(b, int) else mask_of(b)
            self.check_subset(m)
            masks.add(m)
        if not masks:
            raise ValueError("need at least one basis")
        self.bases = tuple(sorted(masks))
        sizes = {m.bit_count() for m in self.bases}
        if len(sizes) > 1:
            raise ValueError("bases must all have the same size")
        covered = 0
        for m in self.bases:
            covered |= m
        if covered != self.full() and ground_size > 0:
            raise ValueError("every element must lie in some basis (no loops)")
        self._check_exchange()
        self._table: list[int] | None = None
        if ground_size <= 13:
            self._table = self._build_table()

    def _check_exchange(self) -> None:
        base_set = set(self.bases)
        for b1 in self.bases:
            for b2 in self.bases:
                diff = b1 & ~b2
                for x in bits(diff):
                    ok = any((b1 ^ bit(x)) | bit(y) in base_set for y in bits(b2 & ~b1))
                    if not ok:
                        raise ValueError(
                            f"basis exchange fails for {bin(b1)}, {bin(b2)}, element {x}"
                        )

    def _build_table(self) -> list[int]:
        n = self.ground_size
        table = [0] * (1 << n)
        for u in range(1 << n):
            table[u] = max((b & u).bit_count() for b in self.bases)
        return table

    def rank(self, subset: int) -> int:
        self.check_subset(subset)
        if self._table is not None:
            return self._table[subset]
        return max((b & subset).bit_count() for b in self.bases)

    @classmethod
    def from_json(cls, path: str | Path, label: str | None = None) -> "ExplicitMatroid":
        doc = json.loads(Path(path).read_text())
        return cls(doc["ground_size"], doc["bases"], label or Path(path).stem)


class MinorView(RankOracle):
    """Contract one set, restrict to a disjoint one; local ids are dense.

    Local id ``i`` maps to ``base_ids[i]`` in the root oracle (ascending).
    A minor of a minor flattens to a single view over the original root, so
    nesting never stacks rank-call indirection.
    """

    def __init__(self, base: RankOracle, contract: int = 0, restrict_to: int | None = None):
        base.check_subset(contract)
        if restrict_to is None:
            restrict_to = base.full() & ~contract
        base.check_subset(restrict_to)
        if contract & restrict_to:
            raise ValueError("contracted and restricted sets must be disjoint")
        if isinstance(base, MinorView):
            root = base.root
            root_contract = base.to_root(contract) | base.root_contract
            base_ids = tuple(base.base_ids[i] for i in bits(restrict_to))
        else:
            root = base
            root_contract = contract
            base_ids = tuple(bits(restrict_to))
        super().__init__(len(base_ids), f"{root.label}|minor")
        self.root = root
        self.root_contract = root_contract
        self.base_ids = base_ids
        self._contract_rank = root.rank(root_contract)

    def to_root(self, subset: int) -> int:
        self.check_subset(subset)
        return mask_of(self.base_ids[i] for i in bits(subset))

    def from_root(self, root_subset: int) -> int:
        lookup = {b: i for i, b in enumerate(self.base_ids)}
        out = 0
        for e in bits(root_subset):
            if e in lookup:
                out |= bit(lookup[e])
        return out

    def rank(self, subset: int) -> int:
        return self.root.rank(self.to_root(subset) | self.root_contract) - self._contract_rank


class ParallelExtension(RankOracle):
    """Each base element replaced by ``q`` parallel copies.

    Copy ``j`` of base element ``e`` has id ``e * q + j``; the rank of a
    subset is the base rank of its support.
    """

    def __init__(self, base: RankOracle, q: int):
        if not isinstance(q, int) or q < 1:
            raise ValueError("q must be a positive integer")
        super().__init__(base.ground_size * q, f"{base.label}x{q}")
        self.base = base
        self.q = q

    def support(self, subset: int) -> int:
        self.check_subset(subset)
        out = 0
        for i in bits(subset):
            out |= bit(i // self.q)
        return out

    def rank(self, subset: int) -> int:
        return self.base.rank(self.support(subset))


def load_graphic(path: str | Path) -> GraphicMatroid:
    return GraphicMatroid.from_file(path)


def load_explicit(path: str | Path) -> ExplicitMatroid:
    return ExplicitMatroid.from_json(path)

"""Matroid partition by augmenting paths.

Packs a subset into ``h`` independent sets (bins), maximizing the number of
covered elements.  The covered count equals the h-fold union rank
``min over B of |subset - B| + h * rank(B)``, and the final exchange digraph
identifies the maximal set attaining ``max over U of |U| - h * rank(U)``:
exactly the elements from which no augmenting path to a free slot exists.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .bitset import bit, bits
from .matroids import RankOracle


@dataclass
class PartitionRun:
    """A maximum partition of ``subset`` into at most ``h`` independent bins."""

    oracle: RankOracle
    subset: int
    h: int
    bins: list[int]
    covered: int

    def union_rank(self) -> int:
        return self.covered.bit_count()


def _make_rank_cache(oracle: RankOracle):
    cache: dict[int, int] = {}
    raw = oracle.rank

    def rank(mask: int) -> int:
        r = cache.get(mask)
        if r is None:
            r = raw(mask)
            cache[mask] = r
        return r

    return rank


def max_partition(oracle: RankOracle, subset: int, h: int) -> PartitionRun:
    if not isinstance(h, int) or h < 1:
        raise ValueError("h must be a positive integer")
    oracle.check_subset(subset)
    rank = _make_rank_cache(oracle)

    bins: list[int] = []  # only bins in use; an empty bin exists while len(bins) < h
    covered = 0
    for e in bits(subset):
        if _augment(e, bins, h, rank):
            covered |= bit(e)
    return PartitionRun(oracle, subset, h, bins, covered)


def _augment(source: int, bins: list[int], h: int, rank) -> bool:
    """Try to cover ``source``, possibly reshuffling bin contents.

    Breadth-first search over the exchange digraph: an arc u -> v (with
    v in bin j) means v could give its seat to u.  Augmenting along a
    shortest path keeps every bin independent.
    """
    parent: dict[int, tuple[int, int]] = {}  # child -> (parent element, bin of child)
    visited = bit(source)
    queue = deque([source])
    while queue:
        u = queue.popleft()
        ubit = bit(u)
        # direct insertion?
        target_bin = -1
        for j, bj in enumerate(bins):
            if not (bj & ubit) and rank(bj | ubit) == bj.bit_count() + 1:
                target_bin = j
                break
        if target_bin < 0 and len(bins) < h and rank(ubit) == 1:
            bins.append(0)
            target_bin = len(bins) - 1
        if target_bin >= 0:
            # walk back to the source, shifting seats along the path
            mover = u
            j = target_bin
            while True:
                bins[j] |= bit(mover)
                if mover == source:
                    break
                prev, jprev = parent[mover]
                bins[jprev] &= ~bit(mover)
                mover, j = prev, jprev
            return True
        # expand: seats u could take over
        for j, bj in enumerate(bins):
            if bj & ubit:
                continue
            if rank(bj | ubit) == bj.bit_count() + 1:
                continue  # handled above; unreachable, kept for clarity
            size = bj.bit_count()
            for v in bits(bj & ~visited):
                if rank((bj & ~bit(v)) | ubit) == size:
                    visited |= bit(v)
                    parent[v] = (u, j)
                    queue.append(v)
    return False


def union_rank(oracle: RankOracle, subset: int, h: int) -> int:
    """Rank of ``subset`` in the h-fold union of the matroid with itself."""
    return max_partition(oracle, subset, h).union_rank()


def escape_set(run: PartitionRun) -> int:
    """Elements of the subset from which a free slot is reachable.

    Seeds: elements directly insertable into some bin.  Propagation along
    reversed exchange arcs: v escapes if some bin-mate seat u it could take
    escapes.  The complement (within the subset) is the maximal set attaining
    ``max |U| - h * rank(U)``.
    """
    oracle, subset, h, bins = run.oracle, run.subset, run.h, run.bins
    rank = _make_rank_cache(oracle)
    reach = 0
    frontier = []
    has_free_bin = len(bins) < h
    for u in bits(subset):
        ubit = bit(u)
        direct = has_free_bin and rank(ubit) == 1
        if not direct:
            for bj in bins:
                if not (bj & ubit) and rank(bj | ubit) == bj.bit_count() + 1:
                    direct = True
                    break
        if direct:
            reach |= ubit
            frontier.append(u)
    while frontier:
        u = frontier.pop()
        ubit = bit(u)
        for bj in bins:
            if not (bj & ubit):
                continue
            size = bj.bit_count()
            swapped = bj & ~ubit
            for v in bits(subset & ~reach & ~bj):
                if rank(bj | bit(v)) == size:  # v dependent on the bin
                    if rank(swapped | bit(v)) == size:
                        reach |= bit(v)
                        frontier.append(v)
    return reach


def densest_set_integer(oracle: RankOracle, subset: int, h: int) -> int:
    """Maximal maximizer of ``|U| - h * rank(U)`` over subsets of ``subset``."""
    if not isinstance(h, int) or h < 0:
        raise ValueError("h must be a non-negative integer")
    if h == 0:
        return subset
    if h == 1:
        # adding any element changes the objective by 1 - (rank increment) >= 0
        return subset
    if h > subset.bit_count():
        # only rank-0 elements survive once h exceeds any candidate's size
        loops = 0
        for e in bits(subset):
            if oracle.rank(bit(e)) == 0:
                loops |= bit(e)
        return loops
    run = max_partition(oracle, subset, h)
    return subset & ~escape_set(run)

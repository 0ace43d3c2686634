"""Densest sets, principal sequences, and rank-density curves.

The densest set D(S, lam) is the unique maximal maximizer of
``|U| - lam * rank(U)`` over subsets of S.  Integer lam reduces to a matroid
partition run; rational lam = p/q runs the integer routine on a q-fold
parallel extension.  Structured matroid kinds (uniform, partition, graphic,
direct sums, and their minors) take closed-form or graph-specific routes
instead, which is what keeps curve computation on simulation-sized
instances affordable.

Principal sequences come from a parametric search over lam: the maximum of
``|U| - lam * rank(U)`` is a piecewise-linear convex function of lam whose
facets, read off by probing densest sets at line intersections, are exactly
the sequence's sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import graphpsp
from .bitset import bit, bits, mask_of, subsets
from .curves import RankDensityCurve
from .matroids import (
    DirectSumMatroid,
    GraphicMatroid,
    MinorView,
    ParallelExtension,
    PartitionMatroid,
    RankOracle,
    UniformMatroid,
    UnionFind,
)
from .partition import densest_set_integer

_BRUTE_LIMIT = 22
_COPY_LIMIT = 1 << 16


def _as_lambda(lam) -> Fraction:
    lam = Fraction(lam)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    return lam


def brute_force_densest(oracle: RankOracle, subset: int | None, lam) -> int:
    """Exhaustive reference for densest_set; union of all maximizers."""
    subset = oracle.full() if subset is None else subset
    oracle.check_subset(subset)
    lam = _as_lambda(lam)
    if subset.bit_count() > _BRUTE_LIMIT:
        raise ValueError(f"brute force supports at most {_BRUTE_LIMIT} elements")
    p, q = lam.numerator, lam.denominator
    best = 0
    union = 0
    for u in subsets(subset):
        val = q * u.bit_count() - p * oracle.rank(u)
        if val > best:
            best, union = val, u
        elif val == best:
            union |= u
    assert q * union.bit_count() - p * oracle.rank(union) == best
    return union


def densest_set(oracle: RankOracle, subset: int | None, lam) -> int:
    """D(S, lam), the maximal maximizer of |U| - lam*rank(U) over U of S."""
    subset = oracle.full() if subset is None else subset
    oracle.check_subset(subset)
    lam = _as_lambda(lam)
    if lam <= 1:
        # every element adds 1 - lam*(rank increment) >= 0, so S itself
        # maximizes and is maximal among maximizers
        return subset
    return _densest(oracle, subset, lam)


def _densest(oracle: RankOracle, subset: int, lam: Fraction) -> int:
    if subset == 0:
        return 0
    if isinstance(oracle, UniformMatroid):
        s = subset.bit_count()
        return subset if s >= lam * min(oracle.k, s) else 0
    if isinstance(oracle, PartitionMatroid):
        out = 0
        for cap, cmask in zip(oracle.capacities, oracle.class_masks):
            members = subset & cmask
            m = members.bit_count()
            if m and m >= lam * min(cap, m):
                out |= members
        return out
    if isinstance(oracle, GraphicMatroid):
        return graphpsp.densest_edges(oracle, subset, lam)
    if isinstance(oracle, DirectSumMatroid):
        out = 0
        for child, off, sub in oracle._slices(subset):
            out |= _densest(child, sub, lam) << off
        return out
    if isinstance(oracle, MinorView):
        split = _split_view_by_child(oracle, subset)
        if split is not None:
            out = 0
            for sub_view, view_positions in split:
                inner = _densest(sub_view, sub_view.full(), lam)
                for i in bits(inner):
                    out |= bit(view_positions[i])
            return out
        reduced = _reduce_view(oracle)
        if reduced is not None:
            inner, inner_ids, view_of_inner = reduced
            out = 0
            inner_subset = 0
            for j in bits(subset):
                ii = inner_ids[j]
                if ii is None:
                    out |= bit(j)  # loops join every maximal maximizer
                else:
                    inner_subset |= bit(ii)
            if inner is not None and inner_subset:
                for i in bits(_densest(inner, inner_subset, lam)):
                    out |= bit(view_of_inner[i])
            return out
    return _densest_generic(oracle, subset, lam)


def _densest_generic(oracle: RankOracle, subset: int, lam: Fraction) -> int:
    p, q = lam.numerator, lam.denominator
    if q == 1:
        return densest_set_integer(oracle, subset, p)
    if q * subset.bit_count() > _COPY_LIMIT:
        raise ValueError(
            f"denominator {q} would need more than {_COPY_LIMIT} parallel copies"
        )
    ext = ParallelExtension(oracle, q)
    group = (1 << q) - 1
    copies = 0
    for e in bits(subset):
        copies |= group << (e * q)
    packed = densest_set_integer(ext, copies, p)
    out = 0
    for e in bits(subset):
        g = (packed >> (e * q)) & group
        assert g in (0, group), "parallel copies must enter or leave together"
        if g:
            out |= bit(e)
    return out


def _split_view_by_child(view: MinorView, subset: int):
    """For a minor of a direct sum: one sub-view per child, or None."""
    root = view.root
    if not isinstance(root, DirectSumMatroid):
        return None
    out = []
    for child, off in zip(root.children, root.offsets):
        hi = off + child.ground_size
        positions = [j for j in bits(subset) if off <= view.base_ids[j] < hi]
        if not positions:
            continue
        child_contract = (view.root_contract >> off) & child.full()
        restrict = mask_of(view.base_ids[j] - off for j in positions)
        out.append((MinorView(child, child_contract, restrict), positions))
    return out


def _reduce_view(view: MinorView):
    """Collapse a structured minor to a plain oracle over its non-loops.

    Returns (inner oracle or None, view id -> inner id or None for loops,
    inner id -> view id), or None when the root kind has no reduction.
    """
    root = view.root
    n = view.ground_size
    if isinstance(root, UniformMatroid):
        k2 = root.k - min(view.root_contract.bit_count(), root.k)
        if k2 == 0:
            return None, [None] * n, []
        return UniformMatroid(n, k2), list(range(n)), list(range(n))
    if isinstance(root, PartitionMatroid):
        spare = []
        for cap, cmask in zip(root.capacities, root.class_masks):
            spare.append(cap - min((view.root_contract & cmask).bit_count(), cap))
        inner_ids: list[int | None] = []
        view_of_inner: list[int] = []
        class_ids = []
        for j in range(n):
            cls = root.class_ids[view.base_ids[j]]
            if spare[cls] == 0:
                inner_ids.append(None)
            else:
                inner_ids.append(len(view_of_inner))
                view_of_inner.append(j)
                class_ids.append(cls)
        if not view_of_inner:
            return None, inner_ids, []
        used = sorted(set(class_ids))
        remap = {c: i for i, c in enumerate(used)}
        inner = PartitionMatroid(
            [remap[c] for c in class_ids], [spare[c] for c in used]
        )
        return inner, inner_ids, view_of_inner
    if isinstance(root, GraphicMatroid):
        uf = UnionFind(root.num_vertices)
        for e in bits(view.root_contract):
            uf.union(*root.edges[e])
        inner_ids = []
        view_of_inner = []
        edges = []
        for j in range(n):
            u, v = root.edges[view.base_ids[j]]
            a, b = uf.find(u), uf.find(v)
            if a == b:
                inner_ids.append(None)
            else:
                inner_ids.append(len(view_of_inner))
                view_of_inner.append(j)
                edges.append((a, b))
        if not view_of_inner:
            return None, inner_ids, []
        verts = sorted({x for e in edges for x in e})
        vmap = {x: i for i, x in enumerate(verts)}
        inner = GraphicMatroid(len(verts), [(vmap[a], vmap[b]) for a, b in edges])
        return inner, inner_ids, view_of_inner
    return None


# --- principal sequences ---------------------------------------------------


@dataclass(frozen=True)
class PrincipalStep:
    """One layer: ``members`` is the cumulative set S_i in the oracle's ids."""

    members: int
    rank_end: int
    width: int
    density: Fraction


@dataclass(frozen=True)
class PrincipalSequence:
    steps: tuple[PrincipalStep, ...]

    @property
    def sets(self) -> tuple[int, ...]:
        return tuple(s.members for s in self.steps)

    @property
    def densities(self) -> tuple[Fraction, ...]:
        return tuple(s.density for s in self.steps)

    def curve(self) -> RankDensityCurve:
        return RankDensityCurve((s.rank_end, s.density) for s in self.steps)


def principal_sequence(oracle: RankOracle, subset: int | None = None) -> PrincipalSequence:
    """The chain of densest sets of M|subset, labelled by layer densities."""
    subset = oracle.full() if subset is None else subset
    oracle.check_subset(subset)
    layers = _merge_layers(_layers(oracle, subset))
    steps = []
    acc = 0
    rank_end = 0
    for members, width, density in layers:
        acc |= members
        rank_end += width
        steps.append(PrincipalStep(acc, rank_end, width, density))
    seq = PrincipalSequence(tuple(steps))
    assert rank_end == oracle.rank(subset)
    return seq


def rank_density_curve(oracle: RankOracle, subset: int | None = None) -> RankDensityCurve:
    return principal_sequence(oracle, subset).curve()


def _merge_layers(layers):
    out: list[list] = []
    for mask, width, dens in sorted(layers, key=lambda L: L[2], reverse=True):
        assert width >= 1 and dens >= 1
        if out and out[-1][2] == dens:
            out[-1][0] |= mask
            out[-1][1] += width
        else:
            out.append([mask, width, dens])
    return [tuple(L) for L in out]


def _layers(oracle: RankOracle, subset: int):
    """Unmerged (layer mask, rank width, density) triples for M|subset."""
    if subset == 0:
        return []
    if isinstance(oracle, UniformMatroid):
        s = subset.bit_count()
        r = min(oracle.k, s)
        return [(subset, r, Fraction(s, r))]
    if isinstance(oracle, PartitionMatroid):
        out = []
        for cap, cmask in zip(oracle.capacities, oracle.class_masks):
            members = subset & cmask
            m = members.bit_count()
            if m:
                r = min(cap, m)
                out.append((members, r, Fraction(m, r)))
        return out
    if isinstance(oracle, GraphicMatroid):
        return graphpsp.graphic_layers(oracle, subset)
    if isinstance(oracle, DirectSumMatroid):
        out = []
        for child, off, sub in oracle._slices(subset):
            for mask, width, dens in _layers(child, sub):
                out.append((mask << off, width, dens))
        return out
    if isinstance(oracle, MinorView):
        split = _split_view_by_child(oracle, subset)
        if split is not None:
            out = []
            for sub_view, view_positions in split:
                for mask, width, dens in _layers(sub_view, sub_view.full()):
                    out.append(
                        (mask_of(view_positions[i] for i in bits(mask)), width, dens)
                    )
            return out
        reduced = _reduce_view(oracle)
        if reduced is not None:
            inner, inner_ids, view_of_inner = reduced
            loops = [j for j in bits(subset) if inner_ids[j] is None]
            if loops:
                raise ValueError("loops have no density; restrict them away first")
            inner_subset = mask_of(inner_ids[j] for j in bits(subset))
            out = []
            for mask, width, dens in _layers(inner, inner_subset):
                out.append((mask_of(view_of_inner[i] for i in bits(mask)), width, dens))
            return out
    return _envelope_layers(oracle, subset)


def _envelope_layers(oracle: RankOracle, subset: int):
    for e in bits(subset):
        if oracle.rank(bit(e)) == 0:
            raise ValueError("loops have no density; restrict them away first")

    def probe(lam: Fraction):
        t = subset if lam <= 1 else _densest(oracle, subset, lam)
        return t.bit_count(), oracle.rank(t), t

    r_all = oracle.rank(subset)
    lines = upper_envelope(probe, (0, 0, 0), (subset.bit_count(), r_all, subset))
    ranks = sorted(lines)
    out = []
    for r0, r1 in zip(ranks, ranks[1:]):
        c0, t0 = lines[r0]
        c1, t1 = lines[r1]
        assert t0 & ~t1 == 0, "facet sets must be nested"
        out.append((t1 & ~t0, r1 - r0, Fraction(c1 - c0, r1 - r0)))
    return out


def upper_envelope(probe, low, high):
    """Facets of lam -> max(count - lam*rank), given two support lines.

    ``probe(lam)`` must return ``(count, rank, payload)`` for the maximal
    maximizer at lam; ``low``/``high`` are (count, rank, payload) lines of
    the envelope with low rank < high rank.  Returns {rank: (count, payload)}
    covering every facet between the two.
    """
    lines = {low[1]: (low[0], low[2]), high[1]: (high[0], high[2])}
    stack = [((low[0], low[1]), (high[0], high[1]))]
    while stack:
        (ca, ra), (cb, rb) = stack.pop()
        lam = Fraction(cb - ca, rb - ra)
        ct, rt, payload = probe(lam)
        if ct - lam * rt == ca - lam * ra:
            continue  # the two lines meet on the envelope
        if not ra < rt < rb:
            raise AssertionError("parametric probe left its bracket")
        lines[rt] = (ct, payload)
        stack.append(((ca, ra), (ct, rt)))
        stack.append(((ct, rt), (cb, rb)))
    return lines

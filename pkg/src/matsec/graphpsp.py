"""Principal sequences of graphic matroids.

A cycle matroid is the direct sum of its biconnected blocks, so curves are
computed per block and merged by density.  Within a block, the densest set
at a fixed rational density p/q comes from a Dilworth-style sweep: vertices
enter one at a time, and a small max-flow decides which existing blocks of
the running optimal partition merge with the newcomer.  Taking the maximal
min-cut source side at every step keeps the partition coarsest, which is
what makes the extracted set the *maximal* maximizer of q|U| - p*r(U).

The full sequence then follows by divide and conquer: probe at the block's
average density, recurse on the densest set's induced subgraphs (the upper
layers) and on the quotient obtained by contracting it (the lower layers).
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction

from .bitset import bit, bits


class _Dinic:
    """Max flow on a tiny network; arcs stored as interleaved pairs."""

    def __init__(self, n: int):
        self.n = n
        self.adj = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add(self, u: int, v: int, cap_uv: int, cap_vu: int = 0) -> None:
        self.adj[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(cap_uv)
        self.adj[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(cap_vu)

    def max_flow(self, s: int, t: int) -> int:
        to, cap, adj = self.to, self.cap, self.adj
        total = 0
        while True:
            level = [-1] * self.n
            level[s] = 0
            q = deque([s])
            while q:
                u = q.popleft()
                for a in adj[u]:
                    v = to[a]
                    if cap[a] > 0 and level[v] < 0:
                        level[v] = level[u] + 1
                        q.append(v)
            if level[t] < 0:
                return total

            it = [0] * self.n

            def dfs(u: int, f: int) -> int:
                if u == t:
                    return f
                while it[u] < len(adj[u]):
                    a = adj[u][it[u]]
                    v = to[a]
                    if cap[a] > 0 and level[v] == level[u] + 1:
                        d = dfs(v, min(f, cap[a]))
                        if d:
                            cap[a] -= d
                            cap[a ^ 1] += d
                            return d
                    it[u] += 1
                return 0

            while True:
                f = dfs(s, 1 << 62)
                if not f:
                    break
                total += f

    def source_side_maximal(self, t: int) -> list[bool]:
        """After max_flow: True for nodes on the largest min-cut source side,
        i.e. nodes with no residual path to the sink."""
        reach = [False] * self.n
        reach[t] = True
        changed = True
        while changed:
            changed = False
            for u in range(self.n):
                if reach[u]:
                    continue
                for a in self.adj[u]:
                    if self.cap[a] > 0 and reach[self.to[a]]:
                        reach[u] = True
                        changed = True
                        break
        return [not r for r in reach]


# A "pair" is an aggregated parallel class: (u, v, multiplicity, element mask).


def _build_adj(nv: int, pairs) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(nv)]
    for i, (u, v, _mult, _mask) in enumerate(pairs):
        adj[u].append((i, v))
        adj[v].append((i, u))
    return adj


def _biconnected_groups(nv: int, pairs, adj) -> list[list[int]]:
    """Partition pair indices into biconnected blocks (iterative DFS)."""
    disc = [-1] * nv
    low = [0] * nv
    groups: list[list[int]] = []
    estack: list[int] = []
    timer = 0
    for root in range(nv):
        if disc[root] >= 0 or not adj[root]:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, tree_pair, neighbors = stack[-1]
            advanced = False
            for pi, u in neighbors:
                if pi == tree_pair:
                    continue
                if disc[u] < 0:
                    estack.append(pi)
                    disc[u] = low[u] = timer
                    timer += 1
                    stack.append((u, pi, iter(adj[u])))
                    advanced = True
                    break
                if disc[u] < disc[v]:
                    estack.append(pi)
                    if disc[u] < low[v]:
                        low[v] = disc[u]
            if advanced:
                continue
            stack.pop()
            if stack:
                parent = stack[-1][0]
                if low[v] < low[parent]:
                    low[parent] = low[v]
                if low[v] >= disc[parent]:
                    grp = []
                    while True:
                        pi = estack.pop()
                        grp.append(pi)
                        if pi == tree_pair:
                            break
                    groups.append(grp)
        assert not estack
    return groups


def _delta(pairs, vmask: int) -> int:
    """Total multiplicity of pairs with exactly one endpoint in vmask."""
    out = 0
    for u, v, mult, _mask in pairs:
        if ((vmask >> u) & 1) != ((vmask >> v) & 1):
            out += mult
    return out


def _sweep(nv: int, pairs, adj, p: int, q: int) -> list[int]:
    """One Dilworth sweep at density p/q; returns the coarsest optimal
    partition of the vertices as a label array."""
    labels = [-1] * nv
    block_mask: list[int] = []
    block_f: list[int] = []
    alive: list[bool] = []

    deg = [0] * nv
    for u, v, mult, _mask in pairs:
        deg[u] += mult
        deg[v] += mult

    for v in range(nv):
        has_done_neighbor = any(labels[u] >= 0 for _pi, u in adj[v])
        if not has_done_neighbor:
            # merging v with any non-adjacent block is strictly worse
            labels[v] = len(block_mask)
            block_mask.append(bit(v))
            block_f.append(q * deg[v] - 2 * p)
            alive.append(True)
            continue

        live = [i for i, a in enumerate(alive) if a]
        node_of = {b: 1 + j for j, b in enumerate(live)}
        t = 1 + len(live)
        net = _Dinic(t + 1)

        caps: dict[tuple[int, int], int] = {}
        for u, w, mult, _mask in pairs:
            gu = 0 if u == v else (node_of[labels[u]] if labels[u] >= 0 else t)
            gw = 0 if w == v else (node_of[labels[w]] if labels[w] >= 0 else t)
            if gu == gw or (gu, gw) in ((0, t), (t, 0)):
                continue  # internal, or a constant present in every cut
            key = (gu, gw) if gu < gw else (gw, gu)
            caps[key] = caps.get(key, 0) + q * mult
        for (a, b), c in caps.items():
            net.add(a, b, c, c)
        for b in live:
            fb = block_f[b]
            if fb > 0:
                net.add(0, node_of[b], fb)
            elif fb < 0:
                net.add(node_of[b], t, -fb)

        net.max_flow(0, t)
        side = net.source_side_maximal(t)
        vmask = bit(v)
        for b in live:
            if side[node_of[b]]:
                vmask |= block_mask[b]
                alive[b] = False
        idx = len(block_mask)
        block_mask.append(vmask)
        block_f.append(q * _delta(pairs, vmask) - 2 * p)
        alive.append(True)
        for u in bits(vmask):
            labels[u] = idx
    return labels


def _merge_by_density(layers):
    """Sort (mask, width, density) layers by decreasing density, fusing ties."""
    out: list[list] = []
    for mask, width, dens in sorted(layers, key=lambda L: L[2], reverse=True):
        if out and out[-1][2] == dens:
            out[-1][0] |= mask
            out[-1][1] += width
        else:
            out.append([mask, width, dens])
    for a, b in zip(out, out[1:]):
        assert a[2] > b[2]
    return [tuple(L) for L in out]


def _piece_layers(nv: int, pairs):
    """Layers of an arbitrary multigraph piece, unmerged."""
    adj = _build_adj(nv, pairs)
    out = []
    for grp in _biconnected_groups(nv, pairs, adj):
        if len(grp) == 1:
            _u, _v, mult, mask = pairs[grp[0]]
            out.append((mask, 1, Fraction(mult)))
        else:
            out.extend(_dense_block_layers(grp, pairs))
    return out


def _relabel(pair_idx, pairs):
    verts = sorted({p for i in pair_idx for p in (pairs[i][0], pairs[i][1])})
    vmap = {x: j for j, x in enumerate(verts)}
    sub = [(vmap[pairs[i][0]], vmap[pairs[i][1]], pairs[i][2], pairs[i][3]) for i in pair_idx]
    return len(verts), sub


def _dense_block_layers(grp, pairs):
    """Layers of one biconnected block with at least two parallel classes."""
    nv, sub = _relabel(grp, pairs)
    m = sum(mult for _u, _v, mult, _mask in sub)
    rank = nv - 1
    lam = Fraction(m, rank)
    assert lam > 1

    labels = _sweep(nv, sub, _build_adj(nv, sub), lam.numerator, lam.denominator)
    inside = [i for i, (u, v, _m, _k) in enumerate(sub) if labels[u] == labels[v]]
    if len(inside) == len(sub):
        full = 0
        for _u, _v, _m, mask in sub:
            full |= mask
        return [(full, rank, lam)]
    assert inside, "the average density always admits a nonempty densest set"

    by_block: dict[int, list[int]] = {}
    for i in inside:
        by_block.setdefault(labels[sub[i][0]], []).append(i)
    upper = []
    upper_rank = 0
    for idx_list in by_block.values():
        bnv, bsub = _relabel(idx_list, sub)
        upper.extend(_piece_layers(bnv, bsub))
        upper_rank += bnv - 1

    qmap = {lab: j for j, lab in enumerate(sorted(set(labels)))}
    inside_set = set(inside)
    agg: dict[tuple[int, int], list] = {}
    for i, (u, v, mult, mask) in enumerate(sub):
        if i in inside_set:
            continue
        a, b = qmap[labels[u]], qmap[labels[v]]
        assert a != b
        key = (a, b) if a < b else (b, a)
        if key in agg:
            agg[key][2] += mult
            agg[key][3] |= mask
        else:
            agg[key] = [key[0], key[1], mult, mask]
    qpairs = [tuple(x) for x in agg.values()]
    lower = _piece_layers(len(qmap), qpairs)

    upper = _merge_by_density(upper)
    lower = _merge_by_density(lower)
    assert upper[-1][2] > lower[0][2]
    assert upper_rank + sum(w for _m, w, _d in lower) == rank
    return upper + lower


def _aggregate(matroid, subset: int):
    """Relabel touched vertices densely and fuse parallel edges."""
    touched = sorted({x for e in bits(subset) for x in matroid.edges[e]})
    vmap = {x: j for j, x in enumerate(touched)}
    agg: dict[tuple[int, int], list] = {}
    for e in bits(subset):
        u, v = matroid.edges[e]
        a, b = vmap[u], vmap[v]
        key = (a, b) if a < b else (b, a)
        if key in agg:
            agg[key][2] += 1
            agg[key][3] |= bit(e)
        else:
            agg[key] = [key[0], key[1], 1, bit(e)]
    return len(touched), [tuple(x) for x in agg.values()]


def graphic_layers(matroid, subset: int):
    """Principal-sequence layers (element mask, rank width, density) of the
    cycle matroid restricted to the given edges, densities decreasing."""
    if subset == 0:
        return []
    nv, pairs = _aggregate(matroid, subset)
    return _merge_by_density(_piece_layers(nv, pairs))


def densest_edges(matroid, subset: int, lam: Fraction) -> int:
    """Maximal maximizer of |U| - lam*r(U) over edge subsets, for lam > 1."""
    if subset == 0:
        return 0
    nv, pairs = _aggregate(matroid, subset)
    adj = _build_adj(nv, pairs)
    out = 0
    for grp in _biconnected_groups(nv, pairs, adj):
        if len(grp) == 1:
            _u, _v, mult, mask = pairs[grp[0]]
            if mult >= lam:
                out |= mask
        else:
            bnv, bsub = _relabel(grp, pairs)
            labels = _sweep(bnv, bsub, _build_adj(bnv, bsub), lam.numerator, lam.denominator)
            for u, v, _mult, mask in bsub:
                if labels[u] == labels[v]:
                    out |= mask
    return out

"""Shared instance builders and brute-force oracles for the test suite.

Everything here is deliberately independent of the package's own fast
paths: densities are recomputed from edge lists, subset enumeration is
unrestricted, and the subgraph-isomorphism oracle is a plain backtracker.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from itertools import combinations

from bipembed.graphs import BipartiteGraph, Side, VertexId, VertexSet


def random_bipartite(n: int, p: float, rng: random.Random) -> BipartiteGraph:
    edges = [(a, b) for a in range(n) for b in range(n) if rng.random() < p]
    return BipartiteGraph.build(n, n, edges)


def random_min_degree(n: int, delta: int, p: float, rng: random.Random) -> BipartiteGraph:
    """Random bipartite graph patched until min degree >= delta."""
    adj = [[rng.random() < p for _ in range(n)] for _ in range(n)]
    changed = True
    while changed:
        changed = False
        for a in range(n):
            while sum(adj[a]) < delta:
                b = rng.randrange(n)
                if not adj[a][b]:
                    adj[a][b] = True
                    changed = True
        cols = [sum(adj[a][b] for a in range(n)) for b in range(n)]
        for b in range(n):
            while cols[b] < delta:
                a = rng.randrange(n)
                if not adj[a][b]:
                    adj[a][b] = True
                    cols[b] += 1
                    changed = True
    edges = [(a, b) for a in range(n) for b in range(n) if adj[a][b]]
    return BipartiteGraph.build(n, n, edges)


def cycle_graph(n_per_side: int) -> BipartiteGraph:
    """C_{2n} with X-vertices at even cycle positions."""
    edges = []
    for t in range(n_per_side):
        edges.append((t, t))
        edges.append(((t + 1) % n_per_side, t))
    return BipartiteGraph.build(n_per_side, n_per_side, edges)


def planted_blocks(k: int, m: int) -> BipartiteGraph:
    """Disjoint union of k complete K_{m,m} blocks."""
    edges = []
    for blk in range(k):
        for a in range(blk * m, (blk + 1) * m):
            for b in range(blk * m, (blk + 1) * m):
                edges.append((a, b))
    return BipartiteGraph.build(k * m, k * m, edges)


def brute_force_regular(G: BipartiteGraph, U: VertexSet, W: VertexSet, eps: Fraction):
    """Full enumeration over *all* qualifying subset pairs.

    Returns (is_regular, worst deviation) relative to the deviation clause
    only (no density threshold).
    """
    base = Fraction(
        sum((G.adj_a[a] & W.bits).bit_count() for a in U.indices()), U.size * W.size
    )
    u_members = list(U.indices())
    w_members = list(W.indices())
    worst = Fraction(0)
    su = max(1, math.ceil(eps * len(u_members)))
    sw = max(1, math.ceil(eps * len(w_members)))
    for s in range(su, len(u_members) + 1):
        for uc in combinations(u_members, s):
            for t in range(sw, len(w_members) + 1):
                for wc in combinations(w_members, t):
                    mask = 0
                    for i in wc:
                        mask |= 1 << i
                    dens = Fraction(
                        sum((G.adj_a[a] & mask).bit_count() for a in uc), s * t
                    )
                    worst = max(worst, abs(dens - base))
    return worst <= eps, worst


def oracle_is_valid_embedding(G: BipartiteGraph, H: BipartiteGraph, mapping) -> bool:
    """Independent validity check: injective, side-respecting, edge-preserving."""
    seen = set()
    for hv, gv in mapping.items():
        if hv.side is not gv.side:
            return False
        if gv in seen:
            return False
        seen.add(gv)
    for x, y in H.edges():
        gx = mapping.get(VertexId(Side.A, x))
        gy = mapping.get(VertexId(Side.B, y))
        if gx is None or gy is None:
            return False
        if not G.has_edge(gx.index, gy.index):
            return False
    return True


def oracle_find_embedding(G: BipartiteGraph, H: BipartiteGraph):
    """Exhaustive backtracking subgraph-isomorphism search (side-respecting).

    Only usable for tiny instances; returns a mapping or None.
    """
    n = H.size_a
    order = []
    for i in range(n):
        order.append(VertexId(Side.A, i))
        order.append(VertexId(Side.B, i))
    order.sort(key=lambda v: -H.degree(v))
    used_a = set()
    used_b = set()
    mapping: dict[VertexId, VertexId] = {}

    def feasible(hv: VertexId, gv: VertexId) -> bool:
        for hn in H.neighbours(hv):
            gn = mapping.get(hn)
            if gn is not None:
                a, b = (gv.index, gn.index) if hv.side is Side.A else (gn.index, gv.index)
                if not G.has_edge(a, b):
                    return False
        return True

    def rec(t: int) -> bool:
        if t == len(order):
            return True
        hv = order[t]
        used = used_a if hv.side is Side.A else used_b
        size = G.size_a if hv.side is Side.A else G.size_b
        for idx in range(size):
            if idx in used:
                continue
            gv = VertexId(hv.side, idx)
            if feasible(hv, gv):
                used.add(idx)
                mapping[hv] = gv
                if rec(t + 1):
                    return True
                used.discard(idx)
                del mapping[hv]
        return False

    return dict(mapping) if rec(0) else None

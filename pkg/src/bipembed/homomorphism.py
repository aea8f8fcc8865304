"""Cutting a target graph along a bandwidth order and mapping it onto a cycle.

The target H (balanced bipartite, 2n vertices, small bandwidth) is cut into
``ell`` consecutive pieces along a bandwidth labelling.  A random map
``phi`` assigns pieces to the k cluster pairs so that the per-cluster totals
stay below their targets (checked exactly, resampled on failure).  The map
into the doubled cycle C on A_1, B_2, A_2, ..., B_k, A_k, B_1 then sends
most of each piece to its assigned pair and walks short "linking" blocks at
the start of each piece across the intermediate cycle vertices, producing a
graph homomorphism that is verified edge by edge before being returned.

{A_i, B_j} is an edge of C exactly when (j - i) mod k is 0 or 1.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .graphs import BipartiteGraph, GraphError, Side, VertexId
from .ratmath import Rational, frac


@dataclass(frozen=True)
class BandwidthLabelling:
    order: tuple[VertexId, ...]
    bandwidth: int
    positions_a: tuple[int, ...] = field(repr=False)
    positions_b: tuple[int, ...] = field(repr=False)

    def position(self, v: VertexId) -> int:
        return self.positions_a[v.index] if v.side is Side.A else self.positions_b[v.index]


def _labelling_from_order(H: BipartiteGraph, order: Sequence[VertexId]) -> BandwidthLabelling:
    if sorted(order) != sorted(H.vertices()):
        raise GraphError("order is not a permutation of the vertex set")
    pos_a = [0] * H.size_a
    pos_b = [0] * H.size_b
    for t, v in enumerate(order):
        if v.side is Side.A:
            pos_a[v.index] = t
        else:
            pos_b[v.index] = t
    bw = 0
    for x, y in H.edges():
        bw = max(bw, abs(pos_a[x] - pos_b[y]))
    return BandwidthLabelling(tuple(order), bw, tuple(pos_a), tuple(pos_b))


def _cuthill_mckee_order(H: BipartiteGraph) -> list[VertexId]:
    deg = {v: H.degree(v) for v in H.vertices()}
    remaining = sorted(deg, key=lambda v: (deg[v], v.side.value, v.index))
    visited: set[VertexId] = set()
    order: list[VertexId] = []
    for start in remaining:
        if start in visited:
            continue
        queue = [start]
        visited.add(start)
        while queue:
            v = queue.pop(0)
            order.append(v)
            nbrs = sorted(
                (w for w in H.neighbours(v) if w not in visited),
                key=lambda w: (deg[w], w.index),
            )
            for w in nbrs:
                visited.add(w)
                queue.append(w)
    return order


def _exact_small_order(H: BipartiteGraph) -> list[VertexId]:
    """Branch-and-bound optimal bandwidth order for at most 16 vertices."""
    verts = list(H.vertices())
    n = len(verts)
    nbrs = {v: set(H.neighbours(v)) for v in verts}
    lb = max((math.ceil(H.degree(v) / 2) for v in verts), default=0)

    def feasible(bound: int) -> Optional[list[VertexId]]:
        placed: dict[VertexId, int] = {}
        seq: list[VertexId] = []

        def rec(t: int) -> bool:
            if t == n:
                return True
            # a placed vertex with unplaced neighbours must still be reachable
            for u, pu in placed.items():
                if t > pu + bound and any(w not in placed for w in nbrs[u]):
                    return False
            for v in verts:
                if v in placed:
                    continue
                if any(t - placed[u] > bound for u in nbrs[v] if u in placed):
                    continue
                placed[v] = t
                seq.append(v)
                if rec(t + 1):
                    return True
                seq.pop()
                del placed[v]
            return False

        return list(seq) if rec(0) else None

    for bound in range(max(lb, 0), max(n, 1)):
        got = feasible(bound)
        if got is not None:
            return got
    return verts  # n <= 1


def bandwidth_labelling(
    H: BipartiteGraph,
    mode: str = "cuthill-mckee",
    order: Optional[Sequence[VertexId]] = None,
) -> BandwidthLabelling:
    """Produce a vertex order together with its exact (scanned) bandwidth.

    "given" validates the supplied order; "cuthill-mckee" is the BFS level
    heuristic (no optimality claim); "exact-small" is branch-and-bound
    optimal for at most 16 vertices.
    """
    if mode == "given":
        if order is None:
            raise GraphError("given mode needs an order")
        return _labelling_from_order(H, order)
    if mode == "cuthill-mckee":
        return _labelling_from_order(H, _cuthill_mckee_order(H))
    if mode == "exact-small":
        if H.size_a + H.size_b > 16:
            raise GraphError("exact-small limited to 16 vertices")
        return _labelling_from_order(H, _exact_small_order(H))
    raise ValueError(f"unknown labelling mode {mode!r}")


# ---------------------------------------------------------------------------
# pieces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecePartition:
    boundaries: tuple[int, ...]  # start position of each piece
    sizes: tuple[int, ...]
    x_counts: tuple[int, ...]
    y_counts: tuple[int, ...]

    @property
    def ell(self) -> int:
        return len(self.sizes)

    @property
    def min_size(self) -> int:
        return min(self.sizes)


def partition_pieces(
    H: BipartiteGraph, labelling: BandwidthLabelling, ell: int
) -> PiecePartition:
    """Cut the labelling into ell consecutive intervals, larger pieces first."""
    total = H.size_a + H.size_b
    if not 1 <= ell <= total:
        raise GraphError(f"need 1 <= ell <= {total}, got {ell}")
    base, extra = divmod(total, ell)
    sizes = [base + 1] * extra + [base] * (ell - extra)
    boundaries = []
    x_counts = []
    y_counts = []
    start = 0
    for s in sizes:
        boundaries.append(start)
        chunk = labelling.order[start : start + s]
        x = sum(1 for v in chunk if v.side is Side.A)
        x_counts.append(x)
        y_counts.append(s - x)
        start += s
    return PiecePartition(tuple(boundaries), tuple(sizes), tuple(x_counts), tuple(y_counts))


# ---------------------------------------------------------------------------
# randomized balancing of pieces over clusters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BalancingAssignment:
    phi: tuple[int, ...]
    a_totals: tuple[int, ...]
    b_totals: tuple[int, ...]
    class_counts: tuple[int, ...]
    balance_terms: tuple[Fraction, ...]
    retries_used: int
    hypothesis_ok: bool


class BalanceError(RuntimeError):
    def __init__(self, message: str, attempts: int, violation_counts: dict[int, int]):
        super().__init__(message)
        self.attempts = attempts
        self.violation_counts = violation_counts


def balance_assignment(
    targets: Sequence[int],
    x_counts: Sequence[int],
    y_counts: Sequence[int],
    xi: Rational,
    max_retries: int = 50,
    seed: int = 0,
    strict: bool = True,
) -> BalancingAssignment:
    """Sample piece-to-cluster maps until the exact size bounds hold.

    phi(j) = i is drawn with probability targets[i] / n, independently per
    piece; a sample is accepted iff for every cluster both aggregate totals
    stay strictly below targets[i] + xi*n (checked in exact arithmetic).
    With ``strict`` the lemma hypotheses (targets <= n/8, piece sizes at
    most (1+xi)2n/ell, 0 < xi <= 1/4) gate the call; otherwise they are
    only recorded in ``hypothesis_ok``.
    """
    xi = frac(xi)
    k = len(targets)
    ell = len(x_counts)
    if len(y_counts) != ell:
        raise GraphError("x and y piece counts disagree in length")
    n = sum(targets)
    if sum(x_counts) != n or sum(y_counts) != n:
        raise GraphError("piece counts must each sum to the cluster-target total")
    # hypotheses: xi in (0, 1/4], targets at most n/8, pieces at most (1+xi)*2n/ell
    hypothesis_ok = (
        0 < xi <= Fraction(1, 4)
        and all(8 * t <= n for t in targets)
        and all(Fraction(x + y) <= (1 + xi) * Fraction(2 * n, ell) for x, y in zip(x_counts, y_counts))
    )
    if strict and not hypothesis_ok:
        if not 0 < xi <= Fraction(1, 4):
            raise GraphError(f"xi must lie in (0, 1/4], got {xi}")
        if any(8 * t > n for t in targets):
            raise GraphError("a cluster target exceeds n/8")
        raise GraphError("a piece exceeds (1+xi)*2n/ell")
    bound = [targets[i] + xi * n for i in range(k)]
    rng = random.Random(seed)
    violations: dict[int, int] = {i: 0 for i in range(k)}
    for attempt in range(max_retries + 1):
        phi = rng.choices(range(k), weights=targets, k=ell)
        a_tot = [0] * k
        b_tot = [0] * k
        cnt = [0] * k
        for j, i in enumerate(phi):
            a_tot[i] += x_counts[j]
            b_tot[i] += y_counts[j]
            cnt[i] += 1
        bad = [i for i in range(k) if not (a_tot[i] < bound[i] and b_tot[i] < bound[i])]
        if not bad:
            terms = tuple(
                Fraction(ell, 3 * n) * (a_tot[i] - b_tot[i]) for i in range(k)
            )
            return BalancingAssignment(
                tuple(phi), tuple(a_tot), tuple(b_tot), tuple(cnt), terms,
                attempt, hypothesis_ok,
            )
        for i in bad:
            violations[i] += 1
    raise BalanceError(
        f"no admissible assignment within {max_retries} retries",
        max_retries + 1,
        violations,
    )


def failure_probability_bound(k: int, xi: Rational, ell: int) -> float:
    """Union-bound failure estimate for a single sampled assignment.

    2k*exp(-xi^2*ell/2) covers the cluster-count concentration and
    2k*exp(-xi^2*ell/72) the side-imbalance concentration; values above 1
    are clamped (the bound is then vacuous).
    """
    if k < 1 or ell < 1:
        raise GraphError("k and ell must be positive")
    x = float(frac(xi))
    if x <= 0:
        raise GraphError("xi must be positive")
    val = 2 * k * math.exp(-x * x * ell / 2) + 2 * k * math.exp(-x * x * ell / 72)
    return min(1.0, val)


# ---------------------------------------------------------------------------
# the cycle homomorphism
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CycleHomomorphism:
    k: int
    cluster_of_x: tuple[int, ...]
    cluster_of_y: tuple[int, ...]
    linking: frozenset[VertexId]
    preimage_a: tuple[int, ...]
    preimage_b: tuple[int, ...]
    beta_n: int
    phi: tuple[int, ...]

    def image(self, v: VertexId) -> tuple[Side, int]:
        if v.side is Side.A:
            return (Side.A, self.cluster_of_x[v.index])
        return (Side.B, self.cluster_of_y[v.index])


class HomomorphismError(RuntimeError):
    def __init__(self, message: str, edge=None, trace=None):
        super().__init__(message)
        self.edge = edge
        self.trace = trace


def _cycle_edge(a_idx: int, b_idx: int, k: int) -> bool:
    return (b_idx - a_idx) % k in (0, 1)


def build_cycle_homomorphism(
    H: BipartiteGraph,
    labelling: BandwidthLabelling,
    pieces: PiecePartition,
    phi: Sequence[int],
    beta_n: int,
    k: int,
) -> CycleHomomorphism:
    """Map V(H) onto the doubled cycle, linking consecutive pieces.

    Within piece t with previous cluster p = phi[t-1] (phi[0] serves as its
    own predecessor, so the first piece has no linking) and jump
    q = (phi[t] - p) mod k, the first 2q blocks of beta_n positions climb
    the cycle: block j sends its X vertices to A_{p + floor(j/2)} and its Y
    vertices to B_{p + ceil(j/2)} (indices mod k); everything else goes to
    A_{phi[t]} / B_{phi[t]}.  The linking set holds the first 2k*beta_n
    positions of every piece regardless of the jump.  The construction is
    followed by a full edge-by-edge verification pass.
    """
    n = H.size_a
    if H.size_b != n:
        raise GraphError("target must be balanced")
    ell = pieces.ell
    if len(phi) != ell:
        raise GraphError(f"phi must assign all {ell} pieces")
    if any(not 0 <= c < k for c in phi):
        raise GraphError("phi value out of cluster range")
    if beta_n < 1:
        raise GraphError("linking block length must be at least 1")
    if labelling.bandwidth > beta_n:
        raise GraphError(
            f"labelling bandwidth {labelling.bandwidth} exceeds block length {beta_n}"
        )
    if (2 * k + 1) * beta_n > pieces.min_size:
        raise GraphError(
            f"pieces of size {pieces.min_size} cannot host 2k+1 = {2 * k + 1} "
            f"blocks of length {beta_n}"
        )
    cluster_of_x = [-1] * n
    cluster_of_y = [-1] * n
    linking: set[VertexId] = set()
    link_span = 2 * k * beta_n
    for t in range(ell):
        prev = phi[t - 1] if t > 0 else phi[0]
        q = (phi[t] - prev) % k
        limit = 2 * q
        start = pieces.boundaries[t]
        for off in range(pieces.sizes[t]):
            v = labelling.order[start + off]
            if off < link_span:
                linking.add(v)
            block = off // beta_n + 1
            if off < link_span and block <= limit:
                if v.side is Side.A:
                    c = (prev + block // 2) % k
                else:
                    c = (prev + (block + 1) // 2) % k
            else:
                c = phi[t]
            if v.side is Side.A:
                cluster_of_x[v.index] = c
            else:
                cluster_of_y[v.index] = c

    # verification pass: every edge of H must land on an edge of the cycle
    piece_of = _position_to_piece(pieces)
    for x, y in H.edges():
        a_idx = cluster_of_x[x]
        b_idx = cluster_of_y[y]
        if not _cycle_edge(a_idx, b_idx, k):
            px = labelling.positions_a[x]
            py = labelling.positions_b[y]
            trace = {
                "x_position": px, "y_position": py,
                "x_piece": piece_of(px), "y_piece": piece_of(py),
                "x_cluster": a_idx, "y_cluster": b_idx,
            }
            raise HomomorphismError(
                f"edge ({x}, {y}) maps to non-cycle pair (A_{a_idx}, B_{b_idx})",
                edge=(x, y), trace=trace,
            )
    pre_a = [0] * k
    pre_b = [0] * k
    for c in cluster_of_x:
        pre_a[c] += 1
    for c in cluster_of_y:
        pre_b[c] += 1
    return CycleHomomorphism(
        k, tuple(cluster_of_x), tuple(cluster_of_y), frozenset(linking),
        tuple(pre_a), tuple(pre_b), beta_n, tuple(phi),
    )


def _position_to_piece(pieces: PiecePartition):
    import bisect

    def lookup(pos: int) -> int:
        return bisect.bisect_right(pieces.boundaries, pos) - 1

    return lookup


@dataclass
class ClauseReport:
    ok: bool
    detail: str = ""


@dataclass
class HomomorphismReport:
    homomorphism: ClauseReport
    linking_size: ClauseReport
    matching_edges: ClauseReport
    preimage_bounds: ClauseReport

    @property
    def ok(self) -> bool:
        return (
            self.homomorphism.ok
            and self.linking_size.ok
            and self.matching_edges.ok
            and self.preimage_bounds.ok
        )


def verify_cycle_homomorphism(
    H: BipartiteGraph,
    hom: CycleHomomorphism,
    targets: Sequence[int],
    xi: Rational,
) -> HomomorphismReport:
    """Re-check the homomorphism and its three size guarantees from scratch."""
    xi = frac(xi)
    k = hom.k
    n = H.size_a
    homo = ClauseReport(True)
    matching = ClauseReport(True)
    for x, y in H.edges():
        a_idx = hom.cluster_of_x[x]
        b_idx = hom.cluster_of_y[y]
        if not _cycle_edge(a_idx, b_idx, k) and homo.ok:
            homo = ClauseReport(False, f"edge ({x},{y}) -> (A_{a_idx}, B_{b_idx})")
        vx, vy = VertexId(Side.A, x), VertexId(Side.B, y)
        if vx not in hom.linking and vy not in hom.linking:
            if a_idx != b_idx and matching.ok:
                matching = ClauseReport(
                    False,
                    f"non-linking edge ({x},{y}) not on a matching pair "
                    f"(A_{a_idx}, B_{b_idx})",
                )
    bound = xi * 2 * k * n
    size_ok = len(hom.linking) <= bound
    link = ClauseReport(
        size_ok, f"|S| = {len(hom.linking)} vs bound {bound}"
    )
    pre = ClauseReport(True)
    for i in range(k):
        lim = targets[i] + xi * n
        if not (hom.preimage_a[i] < lim and hom.preimage_b[i] < lim):
            pre = ClauseReport(
                False,
                f"cluster {i}: preimages {hom.preimage_a[i]}/{hom.preimage_b[i]} "
                f"not below {lim}",
            )
            break
    return HomomorphismReport(homo, link, matching, pre)

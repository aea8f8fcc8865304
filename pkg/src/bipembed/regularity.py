"""Certification and construction of regular / super-regular pair structure.

The notions certified here:

* a pair (U, W) with density at least ``d`` is (eps, d)-regular when every
  pair of subsets U' of U, W' of W with |U'| >= eps|U| and |W'| >= eps|W|
  has |d(U', W') - d(U, W)| <= eps (boundary equality counts as regular);
* the pair is super-regular when additionally every vertex of U has at least
  d|W| neighbours in W and vice versa.

Exact regularity testing is exponential, so every check records whether it
ran exhaustively (ground truth, only allowed below an enumeration cap) or by
sampling subset pairs at the minimal qualifying size (statistical verdict,
relative to the recorded sample count).  All density comparisons are exact
rational arithmetic.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Optional, Sequence

from .graphs import (
    BipartiteGraph,
    GraphError,
    Side,
    SideMismatchError,
    VertexId,
    VertexSet,
    density,
)
from .ratmath import Rational, ceil_frac, frac, sqrt_upper

ENUMERATION_CAP_DEFAULT = 1 << 22
SAMPLE_BUDGET_DEFAULT = 2000


class Strategy(str, Enum):
    EXHAUSTIVE = "exhaustive"
    SAMPLED = "sampled"


class Verdict(str, Enum):
    REGULAR = "certified-regular"
    IRREGULAR = "certified-irregular"
    DENSITY_BELOW = "density-below-threshold"
    SUPER_REGULAR = "certified-super-regular"
    SUPER_FAILED = "failed-super-regular"


@dataclass(frozen=True)
class RegularityParams:
    epsilon: Fraction
    d: Fraction

    def __post_init__(self):
        object.__setattr__(self, "epsilon", frac(self.epsilon))
        object.__setattr__(self, "d", frac(self.d))
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not 0 <= self.d <= 1:
            raise ValueError(f"d must lie in [0, 1], got {self.d}")


@dataclass(frozen=True)
class DeviationWitness:
    subset_u: VertexSet
    subset_w: VertexSet
    witness_density: Fraction
    deviation: Fraction


@dataclass(frozen=True)
class PairCertificate:
    pair: tuple[VertexSet, VertexSet]
    params: RegularityParams
    verdict: Verdict
    base_density: Fraction
    witness: Optional[DeviationWitness]
    strategy: Strategy
    samples_used: int
    failing_vertex: Optional[VertexId] = None
    note: str = ""


class EnumerationCapExceeded(ValueError):
    pass


def min_subset_size(epsilon: Fraction, size: int) -> int:
    """Smallest subset cardinality satisfying |U'| >= epsilon*|U|."""
    return max(1, ceil_frac(epsilon * size))


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _qualifying_subset_count(size: int, smin: int) -> int:
    return sum(math.comb(size, s) for s in range(smin, size + 1))


def _normalise_pair(U: VertexSet, W: VertexSet) -> tuple[VertexSet, VertexSet]:
    if U.side is W.side:
        raise SideMismatchError("pair must span both sides")
    return (U, W) if U.side is Side.A else (W, U)


def _subset_density(adj: Sequence[int], members: Sequence[int], mask: int, msize: int) -> Fraction:
    e = sum((adj[m] & mask).bit_count() for m in members)
    return Fraction(e, len(members) * msize)


def _exhaustive_extremes(G, U: VertexSet, W: VertexSet, s_u: int, s_w: int):
    """Extremal subset densities over pairs at minimal qualifying sizes.

    Over all qualifying subset pairs the extreme densities are attained with
    both sides at minimal size: fixing one side of an extremal pair, the
    other side can be replaced by its most extreme minimal-size subset
    without reducing the deviation.  So enumerating one side at its minimal
    size and sorting the other side's degrees is a complete exact decision.
    """
    # enumerate the side with the smaller number of minimal-size subsets
    if math.comb(W.size, s_w) <= math.comb(U.size, s_u):
        enum_set, opt_set, s_enum, s_opt = W, U, s_w, s_u
        adj = G.adj_a if U.side is Side.A else G.adj_b
    else:
        enum_set, opt_set, s_enum, s_opt = U, W, s_u, s_w
        adj = G.adj_b if U.side is Side.A else G.adj_a
    opt_members = list(opt_set.indices())
    best_hi = None  # (density, opt indices, enum indices)
    best_lo = None
    for chosen in combinations(list(enum_set.indices()), s_enum):
        mask = 0
        for i in chosen:
            mask |= 1 << i
        degs = sorted(((adj[m] & mask).bit_count(), m) for m in opt_members)
        lo_sum = sum(d for d, _ in degs[:s_opt])
        hi_sum = sum(d for d, _ in degs[-s_opt:])
        denom = s_opt * s_enum
        lo = Fraction(lo_sum, denom)
        hi = Fraction(hi_sum, denom)
        if best_lo is None or lo < best_lo[0]:
            best_lo = (lo, tuple(m for _, m in degs[:s_opt]), chosen)
        if best_hi is None or hi > best_hi[0]:
            best_hi = (hi, tuple(m for _, m in degs[-s_opt:]), chosen)

    def to_witness_sets(opt_idx, enum_idx):
        opt_vs = VertexSet.from_indices(opt_set.side, opt_set.universe, opt_idx)
        enum_vs = VertexSet.from_indices(enum_set.side, enum_set.universe, enum_idx)
        if opt_vs.side is Side.A:
            return opt_vs, enum_vs
        return enum_vs, opt_vs

    return best_lo, best_hi, to_witness_sets


def check_regular_pair(
    G: BipartiteGraph,
    U: VertexSet,
    W: VertexSet,
    params: RegularityParams,
    strategy: Strategy = Strategy.SAMPLED,
    budget: int = SAMPLE_BUDGET_DEFAULT,
    seed: int = 0,
    enumeration_cap: int = ENUMERATION_CAP_DEFAULT,
    sample_sizes: Optional[tuple[int, int]] = None,
) -> PairCertificate:
    """Certify or refute the subset-density condition for one pair.

    Sampled subsets default to the minimal qualifying size (deviation
    witnesses concentrate there on planted instances); ``sample_sizes``
    overrides that choice.  Exhaustive mode refuses above the enumeration
    cap and its verdicts are unconditional.
    """
    U, W = _normalise_pair(U, W)
    if not U or not W:
        raise GraphError("regularity check needs nonempty sets")
    strategy = Strategy(strategy)
    base = density(G, U, W)
    if base < params.d:
        return PairCertificate(
            (U, W), params, Verdict.DENSITY_BELOW, base, None, strategy, 0,
            note=f"base density {base} below d={params.d}",
        )
    eps = params.epsilon
    s_u = min_subset_size(eps, U.size)
    s_w = min_subset_size(eps, W.size)
    if sample_sizes is not None:
        s_u, s_w = sample_sizes
        if not (eps * U.size <= s_u <= U.size and eps * W.size <= s_w <= W.size):
            raise GraphError("sample sizes must be qualifying subset sizes")
    if s_u >= U.size and s_w >= W.size:
        # only the full pair qualifies; its deviation is zero
        return PairCertificate(
            (U, W), params, Verdict.REGULAR, base, None, strategy, 0,
            note="vacuous: only full subsets qualify at this epsilon",
        )

    if strategy is Strategy.EXHAUSTIVE:
        count = _qualifying_subset_count(U.size, s_u) * _qualifying_subset_count(W.size, s_w)
        if count > enumeration_cap:
            raise EnumerationCapExceeded(
                f"{count} qualifying subset pairs exceed cap {enumeration_cap}"
            )
        best_lo, best_hi, to_sets = _exhaustive_extremes(G, U, W, s_u, s_w)
        for val, opt_idx, enum_idx in (best_hi, best_lo):
            dev = abs(val - base)
            if dev > eps:
                wu, ww = to_sets(opt_idx, enum_idx)
                return PairCertificate(
                    (U, W), params, Verdict.IRREGULAR, base,
                    DeviationWitness(wu, ww, val, dev), strategy, 0,
                )
        return PairCertificate((U, W), params, Verdict.REGULAR, base, None, strategy, 0)

    rng = random.Random(seed)
    u_members = list(U.indices())
    w_members = list(W.indices())

    def verdict_from(uc, wc, val, t):
        dev = abs(val - base)
        if dev > eps:
            wit = DeviationWitness(
                VertexSet.from_indices(Side.A, U.universe, uc),
                VertexSet.from_indices(Side.B, W.universe, wc),
                val, dev,
            )
            return PairCertificate(
                (U, W), params, Verdict.IRREGULAR, base, wit, strategy, t + 1
            )
        return None

    def extremal_response(adj, responders, mask, msize, s):
        """Minimal-size responder subsets with extreme density into mask."""
        degs = sorted(((adj[m] & mask).bit_count(), m) for m in responders)
        lo = [m for _, m in degs[:s]]
        hi = [m for _, m in degs[-s:]]
        denom = s * msize
        return (
            (lo, Fraction(sum(d for d, _ in degs[:s]), denom)),
            (hi, Fraction(sum(d for d, _ in degs[-s:]), denom)),
        )

    for t in range(budget):
        kind = t & 3
        if kind in (0, 2):
            # uniform independent subset pair at minimal qualifying size
            uc = u_members if s_u >= len(u_members) else rng.sample(u_members, s_u)
            wc = w_members if s_w >= len(w_members) else rng.sample(w_members, s_w)
            wmask = 0
            for i in wc:
                wmask |= 1 << i
            val = _subset_density(G.adj_a, uc, wmask, len(wc))
            hit = verdict_from(uc, wc, val, t)
            if hit:
                return hit
        elif kind == 1:
            # neighbourhood-seeded: W' inside N(a), U' an extremal response.
            # Uniform pairs concentrate at the base density, so structured
            # deviations (planted blocks) are found via seeded draws.
            a = rng.choice(u_members)
            pool = [i for i in _bits(G.adj_a[a] & W.bits)]
            if len(pool) < s_w:
                continue
            wc = rng.sample(pool, s_w)
            wmask = 0
            for i in wc:
                wmask |= 1 << i
            for uc, val in extremal_response(G.adj_a, u_members, wmask, s_w, s_u):
                hit = verdict_from(uc, wc, val, t)
                if hit:
                    return hit
        else:
            b = rng.choice(w_members)
            pool = [i for i in _bits(G.adj_b[b] & U.bits)]
            if len(pool) < s_u:
                continue
            uc = rng.sample(pool, s_u)
            umask = 0
            for i in uc:
                umask |= 1 << i
            for wc, val in extremal_response(G.adj_b, w_members, umask, s_u, s_w):
                hit = verdict_from(uc, wc, val, t)
                if hit:
                    return hit
    return PairCertificate((U, W), params, Verdict.REGULAR, base, None, strategy, budget)


def check_super_regular_pair(
    G: BipartiteGraph,
    U: VertexSet,
    W: VertexSet,
    params: RegularityParams,
    strategy: Strategy = Strategy.SAMPLED,
    budget: int = SAMPLE_BUDGET_DEFAULT,
    seed: int = 0,
    enumeration_cap: int = ENUMERATION_CAP_DEFAULT,
) -> PairCertificate:
    """Super-regularity check; the degree condition is always exhaustive."""
    U, W = _normalise_pair(U, W)
    if not U or not W:
        raise GraphError("regularity check needs nonempty sets")
    strategy = Strategy(strategy)
    base = density(G, U, W)
    if base < params.d:
        return PairCertificate(
            (U, W), params, Verdict.SUPER_FAILED, base, None, strategy, 0,
            note=f"base density {base} below d={params.d}",
        )
    thr_u = params.d * W.size
    for a in U.indices():
        if (G.adj_a[a] & W.bits).bit_count() < thr_u:
            return PairCertificate(
                (U, W), params, Verdict.SUPER_FAILED, base, None, strategy, 0,
                failing_vertex=VertexId(Side.A, a),
                note=f"degree below {thr_u} into partner",
            )
    thr_w = params.d * U.size
    for b in W.indices():
        if (G.adj_b[b] & U.bits).bit_count() < thr_w:
            return PairCertificate(
                (U, W), params, Verdict.SUPER_FAILED, base, None, strategy, 0,
                failing_vertex=VertexId(Side.B, b),
                note=f"degree below {thr_w} into partner",
            )
    inner = check_regular_pair(G, U, W, params, strategy, budget, seed, enumeration_cap)
    if inner.verdict is Verdict.REGULAR:
        return PairCertificate(
            (U, W), params, Verdict.SUPER_REGULAR, base, None,
            strategy, inner.samples_used, note=inner.note,
        )
    return PairCertificate(
        (U, W), params, Verdict.SUPER_FAILED, base, inner.witness,
        strategy, inner.samples_used, note="regularity failed",
    )


@dataclass(frozen=True)
class TypicalVertices:
    vertices: VertexSet
    threshold: Fraction
    subset_large_enough: bool


def typical_vertices(
    G: BipartiteGraph,
    A: VertexSet,
    B: VertexSet,
    bprime: VertexSet,
    params: RegularityParams,
) -> TypicalVertices:
    """Vertices of A with at least (d - eps)|B'| neighbours in B' <= B.

    When (A, B) is a certified regular pair and |B'| >= eps|B|, at most
    eps|A| vertices of A are missing from the result.  A smaller B' voids
    that guarantee; the set is still computed but the report is flagged.
    """
    if bprime.side is not B.side or bprime.bits & ~B.bits:
        raise GraphError("B' must be a subset of B")
    adequate = bprime.size >= params.epsilon * B.size
    threshold = (params.d - params.epsilon) * bprime.size
    bits = 0
    adj = G.adj_a if A.side is Side.A else G.adj_b
    for a in A.indices():
        if (adj[a] & bprime.bits).bit_count() >= threshold:
            bits |= 1 << a
    return TypicalVertices(VertexSet(A.side, A.universe, bits), threshold, adequate)


def rebound_after_perturbation(
    params: RegularityParams, alpha: Rational, beta: Rational
) -> RegularityParams:
    """Regularity parameters surviving a relative perturbation of the pair.

    Moving an alpha-fraction in/out of one cluster and a beta-fraction of
    the other weakens (eps, d) to (eps + 3(sqrt(alpha) + sqrt(beta)),
    d - 2(alpha + beta)); epsilon is capped at 1 and d floored at 0.
    Square roots are exact for perfect squares, otherwise rounded up so the
    returned epsilon is never optimistic.
    """
    a = frac(alpha)
    b = frac(beta)
    if a < 0 or b < 0:
        raise ValueError("perturbation fractions must be nonnegative")
    eps = params.epsilon + 3 * (sqrt_upper(a) + sqrt_upper(b))
    d = params.d - 2 * (a + b)
    return RegularityParams(min(eps, Fraction(1)), max(d, Fraction(0)))


# ---------------------------------------------------------------------------
# cluster partitions and reduced graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClusterPartition:
    clusters_a: tuple[VertexSet, ...]
    clusters_b: tuple[VertexSet, ...]
    exceptional_a: VertexSet
    exceptional_b: VertexSet

    @property
    def k(self) -> int:
        return len(self.clusters_a)

    def __post_init__(self):
        if len(self.clusters_a) != len(self.clusters_b):
            raise GraphError("cluster counts differ between sides")

    def sizes_a(self) -> list[int]:
        return [c.size for c in self.clusters_a]

    def sizes_b(self) -> list[int]:
        return [c.size for c in self.clusters_b]

    @property
    def is_equipartition(self) -> bool:
        sizes = {c.size for c in self.clusters_a} | {c.size for c in self.clusters_b}
        return len(sizes) == 1

    def validate(self, G: BipartiteGraph) -> None:
        for side, groups, exc, size in (
            (Side.A, self.clusters_a, self.exceptional_a, G.size_a),
            (Side.B, self.clusters_b, self.exceptional_b, G.size_b),
        ):
            total = exc.bits
            count = exc.size
            for c in groups:
                if c.side is not side or c.universe != size:
                    raise GraphError("cluster on wrong side or universe")
                total |= c.bits
                count += c.size
            if count != size or total != (1 << size) - 1:
                raise GraphError(f"{side.value}-side clusters do not partition the side")

    def cluster_of(self, v: VertexId) -> Optional[int]:
        groups = self.clusters_a if v.side is Side.A else self.clusters_b
        for i, c in enumerate(groups):
            if v.index in c:
                return i
        return None


@dataclass(frozen=True)
class ReducedGraph:
    """Bipartite graph on cluster indices; edges mark certified regular pairs."""

    k: int
    edges: frozenset[tuple[int, int]]
    params: RegularityParams
    certificates: Mapping[tuple[int, int], PairCertificate] = field(
        default_factory=dict, compare=False, hash=False
    )

    def degree_a(self, i: int) -> int:
        return sum(1 for (x, _) in self.edges if x == i)

    def degree_b(self, j: int) -> int:
        return sum(1 for (_, y) in self.edges if y == j)

    def min_degree(self) -> int:
        if self.k == 0:
            return 0
        return min(
            min(self.degree_a(i) for i in range(self.k)),
            min(self.degree_b(j) for j in range(self.k)),
        )

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges


def random_equipartition(G: BipartiteGraph, k: int, rng: random.Random) -> ClusterPartition:
    """Seeded equitable partition; the n mod k leftovers per side go exceptional."""
    if k < 1 or k > min(G.size_a, G.size_b):
        raise GraphError(f"cannot cut sides of {G.size_a}+{G.size_b} into {k} clusters")
    out: dict[Side, tuple[list[VertexSet], VertexSet]] = {}
    for side, size in ((Side.A, G.size_a), (Side.B, G.size_b)):
        order = list(range(size))
        rng.shuffle(order)
        L = size // k
        clusters = [
            VertexSet.from_indices(side, size, order[i * L : (i + 1) * L]) for i in range(k)
        ]
        exceptional = VertexSet.from_indices(side, size, order[k * L :])
        out[side] = (clusters, exceptional)
    return ClusterPartition(
        tuple(out[Side.A][0]), tuple(out[Side.B][0]), out[Side.A][1], out[Side.B][1]
    )


def _restamp(cert: PairCertificate, params: RegularityParams) -> PairCertificate:
    """Re-evaluate a deviation-only certificate against a density threshold.

    The deviation verdict is unaffected by d, so only the density gate moves.
    """
    if cert.base_density < params.d:
        return PairCertificate(
            cert.pair, params, Verdict.DENSITY_BELOW, cert.base_density, None,
            cert.strategy, cert.samples_used,
            note=f"base density {cert.base_density} below d={params.d}",
        )
    return PairCertificate(
        cert.pair, params, cert.verdict, cert.base_density, cert.witness,
        cert.strategy, cert.samples_used, cert.failing_vertex, cert.note,
    )


def maximal_reduced_graph(
    G: BipartiteGraph,
    partition: ClusterPartition,
    params: RegularityParams,
    strategy: Strategy = Strategy.SAMPLED,
    budget: int = SAMPLE_BUDGET_DEFAULT,
    seed: int = 0,
    enumeration_cap: int = ENUMERATION_CAP_DEFAULT,
    precomputed: Optional[Mapping[tuple[int, int], PairCertificate]] = None,
) -> ReducedGraph:
    """Edge (i, j) present iff (A_i, B_j) certifies regular with density >= d."""
    k = partition.k
    edges = set()
    certs: dict[tuple[int, int], PairCertificate] = {}
    for i in range(k):
        for j in range(k):
            if precomputed is not None and (i, j) in precomputed:
                cert = _restamp(precomputed[(i, j)], params)
            else:
                cert = check_regular_pair(
                    G, partition.clusters_a[i], partition.clusters_b[j], params,
                    strategy, budget, _mix_seed(seed, i, j), enumeration_cap,
                )
            certs[(i, j)] = cert
            if cert.verdict is Verdict.REGULAR:
                edges.add((i, j))
    return ReducedGraph(k, frozenset(edges), params, certs)


def _mix_seed(seed: int, *parts: int) -> int:
    h = seed & 0xFFFFFFFF
    for p in parts:
        h = (h * 1000003 ^ (p + 0x9E3779B9)) & 0xFFFFFFFF
    return h


# ---------------------------------------------------------------------------
# witness-driven partition builder
# ---------------------------------------------------------------------------


@dataclass
class PartitionBuildResult:
    partition: ClusterPartition
    reduced: ReducedGraph
    fraction_regular: Fraction
    rounds: int
    k: int


class PartitionBuildError(RuntimeError):
    def __init__(self, message: str, best: Optional[PartitionBuildResult]):
        super().__init__(message)
        self.best = best


def _split_cluster_by_witness(
    G: BipartiteGraph,
    cluster: VertexSet,
    partner_bits: int,
    high_first: bool,
) -> tuple[list[int], list[int]]:
    adj = G.adj_a if cluster.side is Side.A else G.adj_b
    members = sorted(
        cluster.indices(),
        key=lambda m: (-(adj[m] & partner_bits).bit_count() if high_first
                       else (adj[m] & partner_bits).bit_count(), m),
    )
    half = (len(members) + 1) // 2
    return members[:half], members[half:]


def _split_cluster_randomly(cluster: VertexSet, rng: random.Random) -> tuple[list[int], list[int]]:
    members = list(cluster.indices())
    rng.shuffle(members)
    half = (len(members) + 1) // 2
    return members[:half], members[half:]


def _piece_profiles(G: BipartiteGraph, pieces: list[list[int]], side: Side,
                    opposite_pieces: list[list[int]]) -> list[list[float]]:
    adj = G.adj_a if side is Side.A else G.adj_b
    opp_masks = []
    for q in opposite_pieces:
        m = 0
        for i in q:
            m |= 1 << i
        opp_masks.append((m, len(q)))
    profiles = []
    for p in pieces:
        row = []
        for m, qlen in opp_masks:
            e = sum((adj[v] & m).bit_count() for v in p)
            row.append(e / (len(p) * qlen) if p and qlen else 0.0)
        profiles.append(row)
    return profiles


def _pair_pieces_by_similarity(profiles: list[list[float]]) -> list[tuple[int, int]]:
    n = len(profiles)
    scored = []
    for p in range(n):
        for q in range(p + 1, n):
            dist = sum((a - b) ** 2 for a, b in zip(profiles[p], profiles[q]))
            scored.append((dist, p, q))
    scored.sort()
    used = [False] * n
    pairs = []
    for _, p, q in scored:
        if not used[p] and not used[q]:
            used[p] = used[q] = True
            pairs.append((p, q))
    return pairs


def _equalise(
    side_clusters: dict[Side, list[list[int]]],
    exceptional: dict[Side, list[int]],
    target: int,
) -> None:
    """Trim every cluster to the common target size, keeping lowest indices."""
    for side, groups in side_clusters.items():
        for g in groups:
            g.sort()
            if len(g) > target:
                exceptional[side].extend(g[target:])
                del g[target:]


def build_regular_partition(
    G: BipartiteGraph,
    params: RegularityParams,
    k0: int,
    kmax: int,
    strategy: Strategy = Strategy.SAMPLED,
    budget: int = SAMPLE_BUDGET_DEFAULT,
    seed: int = 0,
    enumeration_cap: int = ENUMERATION_CAP_DEFAULT,
    max_rounds: int = 40,
    regroup_stall: int = 2,
) -> PartitionBuildResult:
    """Witness-driven refinement towards a partition regular on most pairs.

    Starting from a seeded random equipartition with k0 clusters per side,
    each round certifies all k^2 cross pairs at the deviation-only threshold
    (d plays no role while building; the returned reduced graph applies it).
    Rounds that fall short split every cluster in half along the most
    deviating witness direction and regroup the halves by neighbourhood
    similarity at the same k; when regrouping stalls, k doubles instead,
    up to kmax.
    """
    if not G.is_balanced:
        raise GraphError("partition builder expects a balanced graph")
    if G.size_a < kmax:
        raise GraphError(f"side size {G.size_a} below kmax={kmax}")
    if not 1 <= k0 <= kmax:
        raise GraphError(f"need 1 <= k0 <= kmax, got {k0}, {kmax}")
    rng = random.Random(seed)
    deviation_only = RegularityParams(params.epsilon, Fraction(0))
    part = random_equipartition(G, k0, rng)
    k = k0
    best: Optional[PartitionBuildResult] = None
    best_frac_at_k: Optional[Fraction] = None
    stall = 0
    for round_no in range(max_rounds):
        certs: dict[tuple[int, int], PairCertificate] = {}
        regular = 0
        for i in range(k):
            for j in range(k):
                cert = check_regular_pair(
                    G, part.clusters_a[i], part.clusters_b[j], deviation_only,
                    strategy, budget, _mix_seed(seed, round_no, i, j), enumeration_cap,
                )
                certs[(i, j)] = cert
                if cert.verdict is Verdict.REGULAR:
                    regular += 1
        fraction = Fraction(regular, k * k)
        candidate = PartitionBuildResult(
            part,
            maximal_reduced_graph(G, part, params, strategy, budget, seed,
                                  enumeration_cap, precomputed=certs),
            fraction, round_no + 1, k,
        )
        if best is None or fraction > best.fraction_regular:
            best = candidate
        if fraction >= 1 - params.epsilon:
            _check_exceptional_budget(G, part, params.epsilon)
            return candidate

        # split every cluster into witness-guided (or random) halves
        pieces: dict[Side, list[list[int]]] = {Side.A: [], Side.B: []}
        for side, clusters in ((Side.A, part.clusters_a), (Side.B, part.clusters_b)):
            for idx, cluster in enumerate(clusters):
                incident = [
                    c for key, c in certs.items()
                    if c.verdict is Verdict.IRREGULAR
                    and key[0 if side is Side.A else 1] == idx
                ]
                if incident:
                    cert = max(incident, key=lambda c: c.witness.deviation)
                    wit = cert.witness
                    partner = wit.subset_w if side is Side.A else wit.subset_u
                    high_first = wit.witness_density > cert.base_density
                    p1, p2 = _split_cluster_by_witness(G, cluster, partner.bits, high_first)
                else:
                    p1, p2 = _split_cluster_randomly(cluster, rng)
                pieces[side].append(p1)
                pieces[side].append(p2)

        if best_frac_at_k is not None and fraction <= best_frac_at_k:
            stall += 1
        else:
            stall = 0
            best_frac_at_k = fraction

        exceptional = {
            Side.A: list(part.exceptional_a.indices()),
            Side.B: list(part.exceptional_b.indices()),
        }
        if stall >= regroup_stall:
            if 2 * k > kmax:
                raise PartitionBuildError(
                    f"certification threshold unreached and 2k={2 * k} exceeds kmax={kmax}",
                    best,
                )
            groups = {side: [list(p) for p in pieces[side]] for side in (Side.A, Side.B)}
            k = 2 * k
            stall = 0
            best_frac_at_k = None
        else:
            groups = {}
            for side in (Side.A, Side.B):
                profiles = _piece_profiles(
                    G, pieces[side], side, pieces[side.opposite()]
                )
                merged = [
                    sorted(pieces[side][p] + pieces[side][q])
                    for p, q in _pair_pieces_by_similarity(profiles)
                ]
                groups[side] = merged
        target = min(len(g) for side in (Side.A, Side.B) for g in groups[side])
        _equalise(groups, exceptional, target)
        part = ClusterPartition(
            tuple(VertexSet.from_indices(Side.A, G.size_a, g) for g in groups[Side.A]),
            tuple(VertexSet.from_indices(Side.B, G.size_b, g) for g in groups[Side.B]),
            VertexSet.from_indices(Side.A, G.size_a, exceptional[Side.A]),
            VertexSet.from_indices(Side.B, G.size_b, exceptional[Side.B]),
        )
    raise PartitionBuildError(f"no certified partition within {max_rounds} rounds", best)


def _check_exceptional_budget(G: BipartiteGraph, part: ClusterPartition, eps: Fraction) -> None:
    bound = eps * G.size_a
    if part.exceptional_a.size > bound or part.exceptional_b.size > bound:
        raise PartitionBuildError(
            f"exceptional sets exceed eps*n={bound} "
            f"({part.exceptional_a.size}, {part.exceptional_b.size})",
            None,
        )


# ---------------------------------------------------------------------------
# super-regularisation on a bounded-degree subgraph of the reduced graph
# ---------------------------------------------------------------------------


@dataclass
class SuperRegularizeResult:
    partition: ClusterPartition
    moved_a: dict[int, list[int]]
    moved_b: dict[int, list[int]]
    trimmed_a: int
    trimmed_b: int
    certificates: dict[tuple[int, int], PairCertificate]
    recert_ok: bool


class SuperRegularizeError(RuntimeError):
    def __init__(self, message: str, pair: Optional[tuple[int, int]] = None):
        super().__init__(message)
        self.pair = pair


def super_regularize(
    G: BipartiteGraph,
    partition: ClusterPartition,
    rstar_edges: Iterable[tuple[int, int]],
    params: RegularityParams,
    recert_params: Optional[RegularityParams] = None,
    strategy: Strategy = Strategy.SAMPLED,
    budget: int = SAMPLE_BUDGET_DEFAULT,
    seed: int = 0,
    max_degree: int = 2,
    exceptional_bound: Optional[Fraction] = None,
) -> SuperRegularizeResult:
    """Move low-degree vertices of each listed pair to the exceptional sets.

    For every edge (i, j) of the bounded-degree subgraph, vertices of A_i
    with fewer than (d - eps)|B_j| neighbours in B_j (and symmetrically in
    B_j) leave their cluster; clusters are then trimmed to a common size
    and, when requested, every listed pair is re-certified super-regular at
    the weakened parameters.
    """
    edges = sorted(set(rstar_edges))
    k = partition.k
    deg_a = [0] * k
    deg_b = [0] * k
    for i, j in edges:
        if not (0 <= i < k and 0 <= j < k):
            raise GraphError(f"pair index {(i, j)} out of range for k={k}")
        deg_a[i] += 1
        deg_b[j] += 1
    if edges and max(max(deg_a), max(deg_b)) > max_degree:
        raise GraphError(f"subgraph max degree exceeds {max_degree}")

    thr = params.d - params.epsilon
    moved_a: dict[int, list[int]] = {i: [] for i in range(k)}
    moved_b: dict[int, list[int]] = {j: [] for j in range(k)}
    moves_per_pair: dict[tuple[int, int], int] = {e: 0 for e in edges}
    bad_a: dict[int, set[int]] = {i: set() for i in range(k)}
    bad_b: dict[int, set[int]] = {j: set() for j in range(k)}
    for i, j in edges:
        A_i = partition.clusters_a[i]
        B_j = partition.clusters_b[j]
        need_a = thr * B_j.size
        need_b = thr * A_i.size
        for a in A_i.indices():
            if (G.adj_a[a] & B_j.bits).bit_count() < need_a:
                if a not in bad_a[i]:
                    bad_a[i].add(a)
                moves_per_pair[(i, j)] += 1
        for b in B_j.indices():
            if (G.adj_b[b] & A_i.bits).bit_count() < need_b:
                if b not in bad_b[j]:
                    bad_b[j].add(b)
                moves_per_pair[(i, j)] += 1

    groups = {
        Side.A: [sorted(set(c.indices()) - bad_a[i]) for i, c in enumerate(partition.clusters_a)],
        Side.B: [sorted(set(c.indices()) - bad_b[j]) for j, c in enumerate(partition.clusters_b)],
    }
    exceptional = {
        Side.A: list(partition.exceptional_a.indices()),
        Side.B: list(partition.exceptional_b.indices()),
    }
    for i in range(k):
        moved_a[i] = sorted(bad_a[i])
        moved_b[i] = sorted(bad_b[i])
        exceptional[Side.A].extend(moved_a[i])
        exceptional[Side.B].extend(moved_b[i])

    sizes_before = [len(g) for g in groups[Side.A]] + [len(g) for g in groups[Side.B]]
    target = min(sizes_before)
    trimmed_a = sum(len(g) - target for g in groups[Side.A])
    trimmed_b = sum(len(g) - target for g in groups[Side.B])
    _equalise(groups, exceptional, target)

    result_part = ClusterPartition(
        tuple(VertexSet.from_indices(Side.A, G.size_a, g) for g in groups[Side.A]),
        tuple(VertexSet.from_indices(Side.B, G.size_b, g) for g in groups[Side.B]),
        VertexSet.from_indices(Side.A, G.size_a, exceptional[Side.A]),
        VertexSet.from_indices(Side.B, G.size_b, exceptional[Side.B]),
    )
    if exceptional_bound is not None:
        bound = exceptional_bound * G.size_a
        if result_part.exceptional_a.size > bound or result_part.exceptional_b.size > bound:
            worst = max(moves_per_pair, key=lambda e: moves_per_pair[e]) if edges else None
            raise SuperRegularizeError(
                f"exceptional set exceeds bound {bound} after degree cleaning",
                pair=worst,
            )

    certs: dict[tuple[int, int], PairCertificate] = {}
    recert_ok = True
    if recert_params is not None:
        for i, j in edges:
            cert = check_super_regular_pair(
                G, result_part.clusters_a[i], result_part.clusters_b[j],
                recert_params, strategy, budget, _mix_seed(seed, i, j),
            )
            certs[(i, j)] = cert
            if cert.verdict is not Verdict.SUPER_REGULAR:
                recert_ok = False
    return SuperRegularizeResult(
        result_part, moved_a, moved_b, trimmed_a, trimmed_b, certs, recert_ok
    )

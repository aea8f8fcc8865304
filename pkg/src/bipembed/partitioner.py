"""Host-side machinery: parameter schedules, exceptional-vertex absorption,
cluster-size redistribution, and the two-phase host partition pipeline.

Phase 1 builds a regular partition of the dense balanced host whose reduced
graph carries a Hamilton cycle, relabels clusters along that cycle (so pair
(A_i, B_i) is a matching edge and (A_i, B_{i+1}) a cycle edge), makes the
partition super-regular on the cycle, and absorbs the exceptional vertices
into clusters where they have high degree.  Phase 2 then adjusts the
cluster sizes to externally requested exact values by walking vertices
around the cycle, one source-to-sink route at a time.

Faithful mode derives every constant from the proof's closed forms in
exact rational arithmetic and refuses to run when the asserted
inequalities fail; practical mode takes user overrides and flags every
report so overridden constants are never presented as derived ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .graphs import BipartiteGraph, GraphError, Side, VertexId, VertexSet
from .hamilton import find_hamilton_cycle
from .ratmath import Rational, ceil_frac, frac, sqrt_upper
from .regularity import (
    ClusterPartition,
    PairCertificate,
    PartitionBuildResult,
    RegularityParams,
    Strategy,
    Verdict,
    build_regular_partition,
    check_regular_pair,
    check_super_regular_pair,
    rebound_after_perturbation,
    super_regularize,
)

HALF = Fraction(1, 2)


class ScheduleError(ValueError):
    pass


class PipelineStageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class RootExpr:
    """Exact value of the form base + coeff * sqrt(radicand), all rational."""

    base: Fraction
    coeff: Fraction
    radicand: Fraction

    def __float__(self) -> float:
        return float(self.base) + float(self.coeff) * math.sqrt(float(self.radicand))

    def le(self, bound: Fraction) -> bool:
        rhs = bound - self.base
        if rhs < 0:
            return False
        return self.coeff * self.coeff * self.radicand <= rhs * rhs

    def upper(self) -> Fraction:
        return self.base + self.coeff * sqrt_upper(self.radicand)


@dataclass(frozen=True)
class ParameterSchedule:
    """Derived (or overridden) constants steering the whole pipeline.

    Faithful mode: all fields below come from the closed forms, evaluated
    exactly, and ``checks`` records the audited inequalities.  Practical
    mode: the working tiers are user-supplied and ``mode`` flags that fact
    in every downstream report.
    """

    mode: str
    gamma: Fraction
    max_degree: int
    epsilon: Fraction
    k0: int
    kmax: int
    embed_density: Fraction
    partition_epsilon: Fraction
    partition_density: Fraction
    refined_epsilon: Fraction
    refined_density: Fraction
    absorbed_epsilon: RootExpr
    absorbed_density: Fraction
    size_slack: Fraction
    target_slack: Fraction
    min_clusters_for_cycle: int
    checks: tuple[tuple[str, bool], ...] = field(default=())

    @property
    def is_faithful(self) -> bool:
        return self.mode == "faithful"

    def working_params(self) -> RegularityParams:
        """Parameters used to certify the phase-1 regular partition."""
        return RegularityParams(self.partition_epsilon, self.partition_density)

    def final_params(self) -> RegularityParams:
        """Parameters the finished (G1)-(G3) partition is certified at."""
        return RegularityParams(self.epsilon, self.embed_density)


def derive_parameter_schedule(
    gamma: Rational,
    max_degree: int,
    epsilon: Rational,
    k0: int,
    mode: str = "faithful",
    overrides: Optional[Mapping[str, Rational]] = None,
    kmax: Optional[int] = None,
) -> ParameterSchedule:
    """Build the constant chain for one pipeline run.

    Faithful mode evaluates, in exact rational arithmetic,
    embed_density = gamma^2/100, partition tiers eps' = eps^3*gamma^3 and
    d' = eps + gamma^2, the refinements eps'' = eps'/(1-2eps') and
    d'' = d' - 4eps', the post-absorption pair
    (eps'' + 6*sqrt(eps''/(gamma(1-eps''))), d'' - 4eps''/(gamma(1-eps''))),
    and slack values small enough for the final adjustment; it verifies the
    inequalities this chain is supposed to satisfy and raises
    :class:`ScheduleError` naming the first violated one.
    """
    gamma = frac(gamma)
    epsilon = frac(epsilon)
    if mode == "practical":
        ov = dict(overrides or {})
        eps_work = frac(ov.get("epsilon", epsilon if epsilon else Fraction(1, 4)))
        d_work = frac(ov.get("d", Fraction(3, 10)))
        size_slack = frac(ov.get("size_slack", Fraction(3, 10)))
        target_slack = frac(ov.get("target_slack", Fraction(1, 4)))
        km = kmax if kmax is not None else max(2 * k0, k0)
        if not 0 < gamma < HALF:
            raise ScheduleError(f"gamma must lie in (0, 1/2), got {gamma}")
        return ParameterSchedule(
            mode="practical",
            gamma=gamma,
            max_degree=max_degree,
            epsilon=eps_work,
            k0=k0,
            kmax=km,
            embed_density=d_work,
            partition_epsilon=eps_work,
            partition_density=d_work,
            refined_epsilon=eps_work,
            refined_density=d_work,
            absorbed_epsilon=RootExpr(eps_work, Fraction(0), Fraction(0)),
            absorbed_density=d_work,
            size_slack=size_slack,
            target_slack=target_slack,
            min_clusters_for_cycle=k0,
            checks=(("practical-overrides", True),),
        )
    if mode != "faithful":
        raise ScheduleError(f"unknown mode {mode!r}")
    if not 0 < gamma < Fraction(1, 20):
        raise ScheduleError(f"faithful mode needs 0 < gamma < 1/20, got {gamma}")
    if not 0 < epsilon <= gamma * gamma / 1000:
        raise ScheduleError(
            f"faithful mode needs 0 < epsilon <= gamma^2/1000 = {gamma * gamma / 1000}, "
            f"got {epsilon}"
        )
    embed_density = gamma * gamma / 100
    eps_p = epsilon ** 3 * gamma ** 3
    d_p = epsilon + gamma * gamma
    eps_pp = eps_p / (1 - 2 * eps_p)
    d_pp = d_p - 4 * eps_p
    shift = eps_pp / (gamma * (1 - eps_pp))
    eps_hat = RootExpr(eps_pp, Fraction(6), shift)
    d_hat = d_pp - 4 * shift

    checks = []
    checks.append(("absorbed_epsilon <= epsilon/10", eps_hat.le(epsilon / 10)))
    checks.append(
        ("absorbed_density - epsilon >= 2*embed_density", d_hat - epsilon >= 2 * embed_density)
    )
    margin = gamma - d_p - eps_pp
    checks.append(("gamma - partition_density - refined_epsilon > 0", margin > 0))
    checks.append(
        (
            "(1/2+gamma-refined_epsilon)/(1-refined_density) >= 1/2+2*gamma/3",
            (HALF + gamma - eps_pp) / (1 - d_pp) >= HALF + 2 * gamma / 3,
        )
    )
    checks.append(
        ("refined_density/(1-refined_density) <= gamma/6", d_pp / (1 - d_pp) <= gamma / 6)
    )
    for name, ok in checks:
        if not ok:
            raise ScheduleError(f"derived-constant inequality violated: {name}")

    k_min = max(k0, ceil_frac(1 / margin))
    km = kmax if kmax is not None else max(k0, k_min)
    # slack chosen so 100*kmax*sqrt(slack) <= eps/10 and
    # 100*kmax^2*sqrt(slack) <= embed_density, exactly
    root = min(epsilon / (1000 * km), embed_density / (100 * km * km))
    size_slack = root * root
    target_slack = size_slack * epsilon / (100 * max_degree * km * km)
    return ParameterSchedule(
        mode="faithful",
        gamma=gamma,
        max_degree=max_degree,
        epsilon=epsilon,
        k0=k0,
        kmax=km,
        embed_density=embed_density,
        partition_epsilon=eps_p,
        partition_density=d_p,
        refined_epsilon=eps_pp,
        refined_density=d_pp,
        absorbed_epsilon=eps_hat,
        absorbed_density=d_hat,
        size_slack=size_slack,
        target_slack=target_slack,
        min_clusters_for_cycle=k_min,
        checks=tuple(checks),
    )


# ---------------------------------------------------------------------------
# exceptional-vertex absorption
# ---------------------------------------------------------------------------


def candidate_index_set(
    G: BipartiteGraph,
    x: VertexId,
    y: VertexId,
    partition: ClusterPartition,
    refined_density: Rational,
) -> frozenset[int]:
    """Clusters where both x (A-side) and y (B-side) have high degree."""
    if x.side is not Side.A or y.side is not Side.B:
        raise GraphError("candidate_index_set expects (A-side, B-side) vertices")
    d = frac(refined_density)
    out = []
    for i in range(partition.k):
        B_i = partition.clusters_b[i]
        A_i = partition.clusters_a[i]
        if (G.adj_a[x.index] & B_i.bits).bit_count() >= d * B_i.size and (
            G.adj_b[y.index] & A_i.bits
        ).bit_count() >= d * A_i.size:
            out.append(i)
    return frozenset(out)


class AbsorptionError(RuntimeError):
    def __init__(self, message: str, pair=None):
        super().__init__(message)
        self.pair = pair


@dataclass
class AbsorptionResult:
    partition: ClusterPartition
    gains: tuple[int, ...]  # exceptional pairs added per cluster
    pair_assignments: tuple[tuple[int, int, int], ...]  # (x, y, cluster)
    gain_bound: int
    bound_ok: bool


def absorb_exceptional_vertices(
    G: BipartiteGraph,
    partition: ClusterPartition,
    refined_density: Rational,
    gamma: Rational,
) -> AbsorptionResult:
    """Empty the exceptional sets by assigning index-paired (x, y) vertices.

    Each pair goes to the least-loaded cluster among those where both
    vertices keep high degree; with every candidate set of size at least
    gamma*k, no cluster gains more than ceil(|A_0| / (gamma*k)) pairs.
    """
    gamma = frac(gamma)
    if partition.exceptional_a.size != partition.exceptional_b.size:
        raise AbsorptionError(
            f"exceptional sets differ in size: {partition.exceptional_a.size} vs "
            f"{partition.exceptional_b.size}"
        )
    k = partition.k
    xs = sorted(partition.exceptional_a.indices())
    ys = sorted(partition.exceptional_b.indices())
    clusters_a = [c.bits for c in partition.clusters_a]
    clusters_b = [c.bits for c in partition.clusters_b]
    work = ClusterPartition(
        partition.clusters_a, partition.clusters_b,
        partition.exceptional_a, partition.exceptional_b,
    )
    gains = [0] * k
    assignments = []
    for x, y in zip(xs, ys):
        cand = candidate_index_set(
            G, VertexId(Side.A, x), VertexId(Side.B, y), work, refined_density
        )
        if not cand:
            raise AbsorptionError(
                f"pair (A{x}, B{y}) has no admissible cluster", pair=(x, y)
            )
        i = min(cand, key=lambda c: (gains[c], c))
        clusters_a[i] |= 1 << x
        clusters_b[i] |= 1 << y
        gains[i] += 1
        assignments.append((x, y, i))
        work = ClusterPartition(
            tuple(VertexSet(Side.A, G.size_a, b) for b in clusters_a),
            tuple(VertexSet(Side.B, G.size_b, b) for b in clusters_b),
            VertexSet(Side.A, G.size_a, 0),
            VertexSet(Side.B, G.size_b, 0),
        )
    total = len(xs)
    bound = ceil_frac(Fraction(total) / (gamma * k)) if total else 0
    result = ClusterPartition(
        tuple(VertexSet(Side.A, G.size_a, b) for b in clusters_a),
        tuple(VertexSet(Side.B, G.size_b, b) for b in clusters_b),
        VertexSet(Side.A, G.size_a, 0),
        VertexSet(Side.B, G.size_b, 0),
    )
    return AbsorptionResult(
        result, tuple(gains), tuple(assignments), bound, max(gains, default=0) <= bound
    )


# ---------------------------------------------------------------------------
# cluster-size redistribution along the cycle
# ---------------------------------------------------------------------------


class RedistributionError(RuntimeError):
    def __init__(self, message: str, cluster=None, side=None):
        super().__init__(message)
        self.cluster = cluster
        self.side = side


@dataclass
class RedistributionResult:
    partition: ClusterPartition
    iterations: int
    vertex_moves: int
    route_log: tuple[tuple[str, int, int], ...]  # (side, source, sink) per iteration
    rebounded_params: RegularityParams
    symmetric_difference_a: tuple[int, ...]
    symmetric_difference_b: tuple[int, ...]
    xi_cap_enforced: bool


def redistribute_cluster_sizes(
    G: BipartiteGraph,
    partition: ClusterPartition,
    deltas_a: Sequence[int],
    deltas_b: Sequence[int],
    xi: Rational,
    params: RegularityParams,
    enforce_xi_cap: bool = True,
) -> RedistributionResult:
    """Adjust cluster sizes to |A_i| + deltas_a[i] by cyclic vertex walks.

    A-side vertices only travel forward (i -> i+1) and B-side vertices only
    backward (i -> i-1): those are the directions for which the pair used
    to justify the move, (A_i, B_{i+1}), is regular.  Each iteration picks
    the lowest-index source and routes one vertex along consecutive
    clusters until a sink gains one vertex; intermediate clusters end the
    iteration at their original size.  Each move takes the lowest-index
    vertex with enough neighbours ahead (arrival keeps the target pair's
    degree condition) whose removal keeps every partner vertex above the
    degree threshold.

    The move count t satisfies t <= k*xi*n, and the output pairs are
    reported at the weakened parameters (eps' + 100k*sqrt(xi),
    d' - 100k^2*sqrt(xi) - eps'), clamped into [0, 1].
    """
    xi = frac(xi)
    k = partition.k
    n = G.size_a
    if partition.exceptional_a.size or partition.exceptional_b.size:
        raise RedistributionError("redistribution expects empty exceptional sets")
    if len(deltas_a) != k or len(deltas_b) != k:
        raise RedistributionError("delta vectors must have one entry per cluster")
    if sum(deltas_a) != 0 or sum(deltas_b) != 0:
        raise RedistributionError("deltas must sum to zero on each side")
    for i in range(k):
        if abs(deltas_a[i]) > xi * n or abs(deltas_b[i]) > xi * n:
            raise RedistributionError(
                f"delta at cluster {i} exceeds xi*n = {xi * n}", cluster=i
            )
    if enforce_xi_cap and xi > Fraction(1, 20 * k * k):
        raise RedistributionError(f"xi = {xi} exceeds 1/(20k^2) = {Fraction(1, 20 * k * k)}")
    for i in range(k):
        if 2 * k * partition.clusters_a[i].size < n or 2 * k * partition.clusters_b[i].size < n:
            raise RedistributionError(f"cluster {i} smaller than n/(2k)", cluster=i)

    d_thr = params.d
    bits_a = [c.bits for c in partition.clusters_a]
    bits_b = [c.bits for c in partition.clusters_b]
    size_a = [c.size for c in partition.clusters_a]
    size_b = [c.size for c in partition.clusters_b]
    orig_a = list(bits_a)
    orig_b = list(bits_b)
    # degree of every B vertex into A_i / every A vertex into B_i, maintained
    deg_into_a = [
        [(G.adj_b[b] & bits_a[i]).bit_count() for b in range(G.size_b)] for i in range(k)
    ]
    deg_into_b = [
        [(G.adj_a[a] & bits_b[i]).bit_count() for a in range(G.size_a)] for i in range(k)
    ]

    def move_a(src: int) -> None:
        dst = (src + 1) % k
        need_in = d_thr * size_b[dst]
        chosen = -1
        m = bits_a[src]
        while m:
            low = m & -m
            v = low.bit_length() - 1
            m ^= low
            if (G.adj_a[v] & bits_b[dst]).bit_count() < need_in:
                continue
            ok = True
            nb = G.adj_a[v] & bits_b[src]
            floor_after = d_thr * (size_a[src] - 1)
            while nb:
                lw = nb & -nb
                w = lw.bit_length() - 1
                nb ^= lw
                if deg_into_a[src][w] - 1 < floor_after:
                    ok = False
                    break
            if ok:
                chosen = v
                break
        if chosen < 0:
            raise RedistributionError(
                f"no eligible vertex to move out of A-cluster {src}; "
                "the pair used for the move was not usably regular",
                cluster=src, side="A",
            )
        bits_a[src] &= ~(1 << chosen)
        bits_a[dst] |= 1 << chosen
        size_a[src] -= 1
        size_a[dst] += 1
        row = G.adj_a[chosen]
        m = row
        while m:
            low = m & -m
            w = low.bit_length() - 1
            m ^= low
            deg_into_a[src][w] -= 1
            deg_into_a[dst][w] += 1

    def move_b(src: int) -> None:
        dst = (src - 1) % k
        need_in = d_thr * size_a[dst]
        chosen = -1
        m = bits_b[src]
        while m:
            low = m & -m
            w = low.bit_length() - 1
            m ^= low
            if (G.adj_b[w] & bits_a[dst]).bit_count() < need_in:
                continue
            ok = True
            nb = G.adj_b[w] & bits_a[src]
            floor_after = d_thr * (size_b[src] - 1)
            while nb:
                lv = nb & -nb
                v = lv.bit_length() - 1
                nb ^= lv
                if deg_into_b[src][v] - 1 < floor_after:
                    ok = False
                    break
            if ok:
                chosen = w
                break
        if chosen < 0:
            raise RedistributionError(
                f"no eligible vertex to move out of B-cluster {src}",
                cluster=src, side="B",
            )
        bits_b[src] &= ~(1 << chosen)
        bits_b[dst] |= 1 << chosen
        size_b[src] -= 1
        size_b[dst] += 1
        row = G.adj_b[chosen]
        m = row
        while m:
            low = m & -m
            v = low.bit_length() - 1
            m ^= low
            deg_into_b[src][v] -= 1
            deg_into_b[dst][v] += 1

    iterations = 0
    vertex_moves = 0
    route_log = []
    for side_name, sizes, targets, mover, step in (
        ("A", size_a, [partition.clusters_a[i].size + deltas_a[i] for i in range(k)],
         move_a, +1),
        ("B", size_b, [partition.clusters_b[i].size + deltas_b[i] for i in range(k)],
         move_b, -1),
    ):
        guard = 0
        while True:
            sources = [i for i in range(k) if sizes[i] > targets[i]]
            if not sources:
                break
            src = sources[0]
            j = src
            sink = src
            while True:
                dst = (j + step) % k
                was_sink = sizes[dst] < targets[dst]
                mover(j)
                vertex_moves += 1
                if was_sink:
                    sink = dst
                    break
                j = dst
            iterations += 1
            route_log.append((side_name, src, sink))
            guard += 1
            if guard > k * n:  # pragma: no cover - safety valve
                raise RedistributionError("redistribution failed to converge")

    sqrt_xi = sqrt_upper(xi)
    eps_out = min(params.epsilon + 100 * k * sqrt_xi, Fraction(1))
    d_out = max(params.d - 100 * k * k * sqrt_xi - params.epsilon, Fraction(0))
    out = ClusterPartition(
        tuple(VertexSet(Side.A, G.size_a, b) for b in bits_a),
        tuple(VertexSet(Side.B, G.size_b, b) for b in bits_b),
        VertexSet(Side.A, G.size_a, 0),
        VertexSet(Side.B, G.size_b, 0),
    )
    return RedistributionResult(
        out,
        iterations,
        vertex_moves,
        tuple(route_log),
        RegularityParams(eps_out, d_out) if eps_out > 0 else params,
        tuple((orig_a[i] ^ bits_a[i]).bit_count() for i in range(k)),
        tuple((orig_b[i] ^ bits_b[i]).bit_count() for i in range(k)),
        enforce_xi_cap,
    )


# ---------------------------------------------------------------------------
# phase 1: build, orient, super-regularise, absorb
# ---------------------------------------------------------------------------


@dataclass
class HostPartitionState:
    schedule: ParameterSchedule
    partition: ClusterPartition  # cycle-ordered, exceptional sets empty
    k: int
    target_sizes: tuple[int, ...]
    matching_certificates: dict[int, PairCertificate]
    offset_certificates: dict[int, PairCertificate]
    reduced_edges: frozenset[tuple[int, int]]  # relabelled reduced graph
    hat_params: RegularityParams
    absorption: AbsorptionResult
    build: PartitionBuildResult

    @property
    def n(self) -> int:
        return sum(self.target_sizes) + self.partition.exceptional_a.size

    def certificates_ok(self) -> bool:
        return all(
            c.verdict is Verdict.SUPER_REGULAR for c in self.matching_certificates.values()
        ) and all(c.verdict is Verdict.REGULAR for c in self.offset_certificates.values())


def prepare_host_partition(
    G: BipartiteGraph,
    schedule: ParameterSchedule,
    strategy: Strategy = Strategy.SAMPLED,
    budget: int = 2000,
    seed: int = 0,
) -> HostPartitionState:
    """Phase 1 of the host pipeline; see the module docstring.

    Raises :class:`PipelineStageError` with the failing stage name.
    """
    n = G.size_a
    if not G.is_balanced:
        raise PipelineStageError("hypotheses", "host graph is not balanced")
    if G.min_degree() < (HALF + schedule.gamma) * n:
        raise PipelineStageError(
            "hypotheses",
            f"minimum degree {G.min_degree()} below (1/2+gamma)n = {(HALF + schedule.gamma) * n}",
        )
    params = schedule.working_params()
    try:
        build = build_regular_partition(
            G, params, schedule.k0, schedule.kmax, strategy, budget, seed
        )
    except Exception as e:
        raise PipelineStageError("regular-partition", str(e)) from e
    k = build.k
    red = build.reduced

    # minimum-degree checks on the reduced graph (k vertices per side)
    nu = HALF + schedule.gamma
    inherited = (nu - schedule.partition_density - schedule.refined_epsilon) * k
    if red.min_degree() < inherited:
        raise PipelineStageError(
            "reduced-degree",
            f"reduced graph min degree {red.min_degree()} below inherited bound {inherited}",
        )
    if red.min_degree() < Fraction(k, 2) + 1:
        raise PipelineStageError(
            "reduced-degree",
            f"reduced graph min degree {red.min_degree()} below k/2+1 = {Fraction(k, 2) + 1}; "
            "no Hamilton cycle is guaranteed",
        )
    rg = BipartiteGraph.build(k, k, red.edges)
    try:
        cyc = find_hamilton_cycle(rg, seed=seed)
    except Exception as e:
        raise PipelineStageError("reduced-hamilton-cycle", str(e)) from e

    # relabel clusters so the cycle reads A_0, B_1, A_1, B_2, ..., A_{k-1}, B_0
    order = cyc.order
    new_a = [0] * k
    new_b = [0] * k
    pos_a = {}
    pos_b = {}
    for i in range(k):
        old_a = order[2 * i].index
        old_b = order[2 * i + 1].index
        new_a[i] = old_a
        new_b[(i + 1) % k] = old_b
        pos_a[old_a] = i
        pos_b[old_b] = (i + 1) % k
    part = ClusterPartition(
        tuple(build.partition.clusters_a[new_a[i]] for i in range(k)),
        tuple(build.partition.clusters_b[new_b[i]] for i in range(k)),
        build.partition.exceptional_a,
        build.partition.exceptional_b,
    )
    relabelled_edges = frozenset((pos_a[i], pos_b[j]) for i, j in red.edges)
    rstar = [(i, i) for i in range(k)] + [(i, (i + 1) % k) for i in range(k)]

    refined = RegularityParams(schedule.refined_epsilon, schedule.refined_density)
    try:
        sup = super_regularize(
            G, part, rstar, params,
            recert_params=None, strategy=strategy, budget=budget, seed=seed,
            exceptional_bound=schedule.refined_epsilon if schedule.is_faithful
            else schedule.epsilon,
        )
    except Exception as e:
        raise PipelineStageError("super-regularize", str(e)) from e
    try:
        absorption = absorb_exceptional_vertices(
            G, sup.partition, schedule.refined_density, schedule.gamma
        )
    except AbsorptionError as e:
        raise PipelineStageError("absorb-exceptional", str(e)) from e
    if not absorption.bound_ok:
        raise PipelineStageError(
            "absorb-exceptional",
            f"a cluster gained more than the bound {absorption.gain_bound}",
        )
    final = absorption.partition
    sizes_a = final.sizes_a()
    sizes_b = final.sizes_b()
    if sizes_a != sizes_b:
        raise PipelineStageError("absorb-exceptional", "cluster sizes differ between sides")
    for i, s in enumerate(sizes_a):
        if 2 * k * s < n:
            raise PipelineStageError(
                "target-sizes", f"cluster {i} of size {s} is below n/(2k)"
            )

    if schedule.is_faithful:
        hat = RegularityParams(
            min(schedule.absorbed_epsilon.upper(), Fraction(1)),
            max(schedule.absorbed_density, Fraction(0)),
        )
    else:
        worst = max(
            (Fraction(absorption.gains[i], sizes_a[i]) for i in range(k)),
            default=Fraction(0),
        )
        hat = rebound_after_perturbation(refined, worst, worst)
    matching = {}
    offsets = {}
    for i in range(k):
        matching[i] = check_super_regular_pair(
            G, final.clusters_a[i], final.clusters_b[i], hat,
            strategy, budget, seed + 101 + i,
        )
        offsets[i] = check_regular_pair(
            G, final.clusters_a[i], final.clusters_b[(i + 1) % k], hat,
            strategy, budget, seed + 501 + i,
        )
    state = HostPartitionState(
        schedule, final, k, tuple(sizes_a), matching, offsets,
        relabelled_edges, hat, absorption, build,
    )
    if not state.certificates_ok():
        bad = [i for i, c in matching.items() if c.verdict is not Verdict.SUPER_REGULAR]
        bad += [f"offset {i}" for i, c in offsets.items() if c.verdict is not Verdict.REGULAR]
        raise PipelineStageError(
            "pair-certification", f"pairs failed at the post-absorption parameters: {bad}"
        )
    return state


# ---------------------------------------------------------------------------
# phase 2: hit exact externally requested sizes
# ---------------------------------------------------------------------------


@dataclass
class ResizeResult:
    partition: ClusterPartition
    redistribution: RedistributionResult
    certified_params: RegularityParams
    matching_certificates: dict[int, PairCertificate]
    offset_certificates: dict[int, PairCertificate]
    certificates_ok: bool


def resize_host_partition(
    state: HostPartitionState,
    G: BipartiteGraph,
    a_sizes: Sequence[int],
    b_sizes: Sequence[int],
    strategy: Strategy = Strategy.SAMPLED,
    budget: int = 2000,
    seed: int = 0,
) -> ResizeResult:
    """Phase 2: realise |A_i| = a_sizes[i], |B_i| = b_sizes[i] exactly.

    Requested sizes may exceed the phase-1 targets by at most size_slack*n
    each.  Certification of the resized pairs happens at the schedule's
    final parameters; the redistribution's own weakened parameters are
    recorded alongside.
    """
    sched = state.schedule
    k = state.k
    n = sum(state.target_sizes)
    if len(a_sizes) != k or len(b_sizes) != k:
        raise PipelineStageError("resize", "size vectors must have one entry per cluster")
    if sum(a_sizes) != n or sum(b_sizes) != n:
        raise PipelineStageError("resize", f"requested sizes must sum to n = {n}")
    cap = sched.size_slack * n
    for i in range(k):
        if a_sizes[i] > state.target_sizes[i] + cap or b_sizes[i] > state.target_sizes[i] + cap:
            raise PipelineStageError(
                "resize",
                f"requested size at cluster {i} exceeds target + size_slack*n = "
                f"{state.target_sizes[i]} + {cap}",
            )
    deltas_a = [a_sizes[i] - state.target_sizes[i] for i in range(k)]
    deltas_b = [b_sizes[i] - state.target_sizes[i] for i in range(k)]
    worst = max(
        [abs(d) for d in deltas_a] + [abs(d) for d in deltas_b] + [0]
    )
    xi = Fraction(worst, n) if worst else Fraction(1, 20 * k * k)
    enforce = sched.is_faithful
    redis = redistribute_cluster_sizes(
        G, state.partition, deltas_a, deltas_b, xi, state.hat_params,
        enforce_xi_cap=enforce,
    )
    final_params = sched.final_params()
    part = redis.partition
    matching = {}
    offsets = {}
    ok = True
    for i in range(k):
        # clusters resized to zero carry no pair to certify
        if part.clusters_a[i].size and part.clusters_b[i].size:
            matching[i] = check_super_regular_pair(
                G, part.clusters_a[i], part.clusters_b[i], final_params,
                strategy, budget, seed + 301 + i,
            )
            if matching[i].verdict is not Verdict.SUPER_REGULAR:
                ok = False
        nxt = (i + 1) % k
        if part.clusters_a[i].size and part.clusters_b[nxt].size:
            offsets[i] = check_regular_pair(
                G, part.clusters_a[i], part.clusters_b[nxt], final_params,
                strategy, budget, seed + 701 + i,
            )
            if offsets[i].verdict is not Verdict.REGULAR:
                ok = False
    return ResizeResult(part, redis, final_params, matching, offsets, ok)

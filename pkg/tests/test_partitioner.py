import random
from fractions import Fraction

import pytest

from bipembed.graphs import BipartiteGraph, Side, VertexId, VertexSet
from bipembed.partitioner import (
    AbsorptionError,
    PipelineStageError,
    RedistributionError,
    ScheduleError,
    absorb_exceptional_vertices,
    candidate_index_set,
    derive_parameter_schedule,
    prepare_host_partition,
    redistribute_cluster_sizes,
    resize_host_partition,
)
from bipembed.regularity import (
    ClusterPartition,
    RegularityParams,
    Strategy,
    Verdict,
    check_regular_pair,
    check_super_regular_pair,
)

from helpers import planted_blocks, random_bipartite, random_min_degree


def make_partition(g, k, assignment_a, assignment_b):
    ca = tuple(
        VertexSet.from_indices(Side.A, g.size_a, [v for v, c in assignment_a.items() if c == i])
        for i in range(k)
    )
    cb = tuple(
        VertexSet.from_indices(Side.B, g.size_b, [v for v, c in assignment_b.items() if c == i])
        for i in range(k)
    )
    in_a = {v for v in assignment_a}
    in_b = {v for v in assignment_b}
    ea = VertexSet.from_indices(Side.A, g.size_a, [v for v in range(g.size_a) if v not in in_a])
    eb = VertexSet.from_indices(Side.B, g.size_b, [v for v in range(g.size_b) if v not in in_b])
    return ClusterPartition(ca, cb, ea, eb)


def contiguous_partition(g, k, m):
    aa = {i: i // m for i in range(k * m)}
    return make_partition(g, k, aa, dict(aa))


class TestSchedule:
    def test_faithful_gamma_004(self):
        g = Fraction(1, 25)  # 0.04
        eps = g * g / 1000
        sched = derive_parameter_schedule(g, 2, eps, 2, "faithful")
        assert sched.embed_density == g * g / 100
        assert sched.partition_epsilon == eps ** 3 * g ** 3
        assert sched.partition_density == eps + g * g
        assert all(ok for _, ok in sched.checks)
        assert sched.min_clusters_for_cycle >= 2
        # slack really satisfies its defining inequalities, exactly
        from bipembed.ratmath import exact_sqrt

        root = exact_sqrt(sched.size_slack)
        assert root is not None
        assert 100 * sched.kmax * root <= sched.epsilon / 10
        assert 100 * sched.kmax ** 2 * root <= sched.embed_density

    def test_practical_passthrough(self):
        sched = derive_parameter_schedule(
            Fraction(1, 25), 2, 0, 8, "practical",
            overrides={"epsilon": Fraction(1, 4), "d": Fraction(3, 10)},
        )
        assert sched.mode == "practical"
        assert sched.epsilon == Fraction(1, 4)
        assert sched.embed_density == Fraction(3, 10)

    def test_gamma_above_bound_rejected(self):
        with pytest.raises(ScheduleError):
            derive_parameter_schedule(Fraction(1, 10), 2, Fraction(1, 10**7), 2, "faithful")

    def test_epsilon_above_bound_rejected(self):
        with pytest.raises(ScheduleError):
            derive_parameter_schedule(Fraction(1, 25), 2, Fraction(1, 100), 2, "faithful")

    def test_faithful_audit_three_gammas(self):
        for g in (Fraction(1, 100), Fraction(1, 50), Fraction(1, 25)):
            sched = derive_parameter_schedule(g, 2, g * g / 1000, 2, "faithful")
            assert all(ok for _, ok in sched.checks)
            assert sched.absorbed_epsilon.le(sched.epsilon / 10)
            assert sched.absorbed_density - sched.epsilon >= 2 * sched.embed_density


class TestCandidateIndexSet:
    def test_complete_graph_full_range(self):
        g = planted_blocks(1, 16)
        part = contiguous_partition(g, 4, 4)
        out = candidate_index_set(
            g, VertexId(Side.A, 0), VertexId(Side.B, 0), part, Fraction(1)
        )
        assert out == frozenset(range(4))

    def test_isolated_vertex_empty(self):
        g = BipartiteGraph.build(16, 16, [(a, b) for a in range(1, 16) for b in range(16)])
        part = contiguous_partition(g, 4, 4)
        out = candidate_index_set(
            g, VertexId(Side.A, 0), VertexId(Side.B, 0), part, Fraction(3, 10)
        )
        assert out == frozenset()

    def test_random_instance_gamma_k_bound(self):
        rng = random.Random(0)
        n, k = 256, 4
        gamma = Fraction(1, 10)
        g = random_min_degree(n, 154, 0.62, rng)  # delta >= (1/2+0.1)*256 = 153.6
        part = contiguous_partition(g, k, n // k)
        for _ in range(20):
            x = VertexId(Side.A, rng.randrange(n))
            y = VertexId(Side.B, rng.randrange(n))
            got = candidate_index_set(g, x, y, part, Fraction(3, 10))
            assert len(got) >= gamma * k


class TestAbsorption:
    def test_empty_exceptional_identity(self):
        g = planted_blocks(2, 8)
        part = contiguous_partition(g, 2, 8)
        res = absorb_exceptional_vertices(g, part, Fraction(1, 2), Fraction(1, 10))
        assert res.partition.sizes_a() == [8, 8]
        assert res.gains == (0, 0)

    def test_forced_single_candidate(self):
        # blocks of 4; vertex A8/B8 attached only to block 1 (cluster index 1)
        edges = []
        for blk in range(2):
            for a in range(blk * 4, (blk + 1) * 4):
                for b in range(blk * 4, (blk + 1) * 4):
                    edges.append((a, b))
        edges += [(8, b) for b in range(4, 8)]
        edges += [(a, 8) for a in range(4, 8)]
        g = BipartiteGraph.build(9, 9, edges)
        aa = {i: i // 4 for i in range(8)}
        part = make_partition(g, 2, aa, dict(aa))
        assert part.exceptional_a.size == 1
        res = absorb_exceptional_vertices(g, part, Fraction(1, 2), Fraction(1, 10))
        assert res.gains == (0, 1)
        assert 8 in res.partition.clusters_a[1]
        assert 8 in res.partition.clusters_b[1]
        assert res.partition.exceptional_a.size == 0

    def test_unequal_exceptional_rejected(self):
        g = planted_blocks(2, 4)
        aa = {i: i // 4 for i in range(7)}  # A7 exceptional
        bb = {i: i // 4 for i in range(8)}
        part = make_partition(g, 2, aa, bb)
        with pytest.raises(AbsorptionError):
            absorb_exceptional_vertices(g, part, Fraction(1, 2), Fraction(1, 10))

    def test_no_candidate_reported(self):
        g = BipartiteGraph.build(9, 9, [(a, b) for a in range(8) for b in range(8)])
        aa = {i: i // 4 for i in range(8)}
        part = make_partition(g, 2, aa, dict(aa))
        with pytest.raises(AbsorptionError) as exc:
            absorb_exceptional_vertices(g, part, Fraction(1, 2), Fraction(1, 10))
        assert exc.value.pair == (8, 8)

    def test_random_instance_bound_and_recert(self):
        rng = random.Random(3)
        n, k = 256, 4
        g = random_min_degree(n, 154, 0.62, rng)
        m = 60  # clusters of 60, 16 exceptional vertices per side
        aa = {}
        order = list(range(n))
        rng.shuffle(order)
        for pos, v in enumerate(order[: k * m]):
            aa[v] = pos // m
        order_b = list(range(n))
        rng.shuffle(order_b)
        bb = {v: pos // m for pos, v in enumerate(order_b[: k * m])}
        part = make_partition(g, k, aa, bb)
        assert part.exceptional_a.size == 16
        res = absorb_exceptional_vertices(g, part, Fraction(3, 10), Fraction(1, 10))
        assert res.partition.exceptional_a.size == 0
        assert max(res.gains) <= res.gain_bound
        assert res.bound_ok
        # pairs still certify after absorption, at parameters weakened by
        # the measured per-cluster gain fraction
        from bipembed.regularity import rebound_after_perturbation, Strategy, Verdict, check_regular_pair

        worst = max(
            Fraction(res.gains[i], res.partition.clusters_a[i].size) for i in range(k)
        )
        hat = rebound_after_perturbation(
            RegularityParams(Fraction(1, 4), Fraction(3, 10)), worst, worst
        )
        for i in range(k):
            cert = check_regular_pair(
                g, res.partition.clusters_a[i], res.partition.clusters_b[i],
                hat, Strategy.SAMPLED, 400, i,
            )
            assert cert.verdict is not Verdict.IRREGULAR
        # conservation
        total = set()
        for c in res.partition.clusters_a:
            total |= set(c.indices())
        assert total == set(range(n))


class TestRedistribution:
    def make_dense_cycle_instance(self, k, m, p, seed):
        rng = random.Random(seed)
        g = random_bipartite(k * m, p, rng)
        part = contiguous_partition(g, k, m)
        return g, part

    def test_zero_deltas_identity(self):
        g, part = self.make_dense_cycle_instance(4, 32, 0.6, 0)
        res = redistribute_cluster_sizes(
            g, part, [0] * 4, [0] * 4, Fraction(1, 1000), RegularityParams(Fraction(1, 4), Fraction(3, 10)),
        )
        assert res.iterations == 0
        assert res.partition.sizes_a() == part.sizes_a()

    def test_single_forced_move(self):
        # xi <= 1/(20k^2) means xi*n >= 1 needs n >= 20k^2, so use m = 128
        k, m = 2, 128
        rng = random.Random(1)
        g = random_bipartite(k * m, 0.6, rng)
        part = contiguous_partition(g, k, m)
        res = redistribute_cluster_sizes(
            g, part, [+1, -1], [0, 0], Fraction(1, 20 * k * k),
            RegularityParams(Fraction(1, 4), Fraction(3, 10)),
        )
        assert res.partition.sizes_a() == [m + 1, m - 1]
        assert res.partition.sizes_b() == [m, m]
        assert res.iterations == 1

    def test_exact_sizes_and_move_bound(self):
        k, m = 4, 256
        g, part = self.make_dense_cycle_instance(k, m, 0.55, 2)
        n = k * m
        xi = Fraction(1, 20 * k * k)
        cap = int(xi * n)
        rng = random.Random(5)
        for trial in range(6):
            da = self.random_deltas(rng, k, cap)
            db = self.random_deltas(rng, k, cap)
            res = redistribute_cluster_sizes(
                g, part, da, db, xi, RegularityParams(Fraction(1, 4), Fraction(3, 10)),
            )
            assert res.partition.sizes_a() == [m + d for d in da]
            assert res.partition.sizes_b() == [m + d for d in db]
            assert res.iterations <= k * xi * n
            # conservation
            all_a = set()
            for c in res.partition.clusters_a:
                assert not (set(c.indices()) & all_a)
                all_a |= set(c.indices())
            assert all_a == set(range(n))

    @staticmethod
    def random_deltas(rng, k, cap):
        while True:
            d = [rng.randint(-cap, cap) for _ in range(k - 1)]
            last = -sum(d)
            if abs(last) <= cap:
                return d + [last]

    def test_route_log_accounting(self):
        k, m = 4, 256
        g, part = self.make_dense_cycle_instance(k, m, 0.55, 7)
        xi = Fraction(1, 20 * k * k)
        res = redistribute_cluster_sizes(
            g, part, [3, -3, 0, 0], [0, -2, 2, 0], xi,
            RegularityParams(Fraction(1, 4), Fraction(3, 10)),
        )
        assert res.iterations == len(res.route_log) == 5
        for side, src, sink in res.route_log:
            assert side in ("A", "B")
            assert src != sink

    def test_delta_bound_violation(self):
        g, part = self.make_dense_cycle_instance(2, 16, 0.9, 0)
        with pytest.raises(RedistributionError):
            redistribute_cluster_sizes(
                g, part, [5, -5], [0, 0], Fraction(1, 80),
                RegularityParams(Fraction(1, 4), Fraction(3, 10)),
            )

    def test_xi_cap_enforced(self):
        g, part = self.make_dense_cycle_instance(2, 16, 0.9, 0)
        with pytest.raises(RedistributionError):
            redistribute_cluster_sizes(
                g, part, [1, -1], [0, 0], Fraction(1, 4),
                RegularityParams(Fraction(1, 4), Fraction(3, 10)),
            )

    def test_sum_zero_required(self):
        g, part = self.make_dense_cycle_instance(2, 16, 0.9, 0)
        with pytest.raises(RedistributionError):
            redistribute_cluster_sizes(
                g, part, [1, 0], [0, 0], Fraction(1, 80),
                RegularityParams(Fraction(1, 4), Fraction(3, 10)),
            )

    def test_recertification_at_working_params(self):
        # after real moves on a dense instance the pairs still certify at
        # the original working parameters (sampled)
        k, m = 4, 256
        g, part = self.make_dense_cycle_instance(k, m, 0.6, 9)
        xi = Fraction(1, 20 * k * k)
        res = redistribute_cluster_sizes(
            g, part, [3, -1, -2, 0], [1, 1, -1, -1], xi,
            RegularityParams(Fraction(1, 4), Fraction(3, 10)),
        )
        params = RegularityParams(Fraction(1, 4), Fraction(3, 10))
        for i in range(k):
            cert = check_super_regular_pair(
                g, res.partition.clusters_a[i], res.partition.clusters_b[i],
                params, Strategy.SAMPLED, 400, i,
            )
            assert cert.verdict is Verdict.SUPER_REGULAR


class TestHostPhases:
    def practical_schedule(self, gamma, k0=4, **ov):
        overrides = {"epsilon": Fraction(1, 4), "d": Fraction(3, 10)}
        overrides.update(ov)
        return derive_parameter_schedule(gamma, 2, 0, k0, "practical", overrides, kmax=2 * k0)

    def test_phase1_on_dense_random_host(self):
        rng = random.Random(11)
        n = 256
        g = random_min_degree(n, 205, 0.82, rng)  # delta >= 0.8n
        sched = self.practical_schedule(Fraction(3, 10), k0=4)
        state = prepare_host_partition(g, sched, budget=400, seed=1)
        assert state.k == 4
        assert sum(state.target_sizes) == n
        assert state.partition.exceptional_a.size == 0
        state.partition.validate(g)  # conservation: still a true partition
        assert state.certificates_ok()
        # alternation: matching pairs super-regular, offset pairs regular
        for i in range(state.k):
            assert state.matching_certificates[i].verdict is Verdict.SUPER_REGULAR
            assert state.offset_certificates[i].verdict is Verdict.REGULAR

    def test_phase1_complete_host(self):
        # a complete host: any equipartition certifies, the reduced graph is
        # complete bipartite, and each cluster target is n/k
        n, k0 = 64, 8
        g = BipartiteGraph.build(n, n, [(a, b) for a in range(n) for b in range(n)])
        sched = self.practical_schedule(Fraction(2, 5), k0=8)
        state = prepare_host_partition(g, sched, budget=200, seed=9)
        assert state.k == 8
        assert state.target_sizes == (8,) * 8
        assert len(state.reduced_edges) == 64
        assert state.certificates_ok()

    def test_phase1_rejects_low_degree(self):
        g = planted_blocks(2, 16)  # disconnected: delta = 16 < (1/2+g)*32
        sched = self.practical_schedule(Fraction(1, 10), k0=2)
        with pytest.raises(PipelineStageError) as exc:
            prepare_host_partition(g, sched, budget=200, seed=0)
        assert exc.value.stage == "hypotheses"

    def test_phase2_identity_and_shift(self):
        rng = random.Random(13)
        n = 256
        g = random_min_degree(n, 205, 0.82, rng)
        sched = self.practical_schedule(Fraction(3, 10), k0=4)
        state = prepare_host_partition(g, sched, budget=400, seed=2)
        # identity
        res = resize_host_partition(state, g, state.target_sizes, state.target_sizes,
                                    budget=400, seed=3)
        assert res.partition.sizes_a() == list(state.target_sizes)
        assert res.redistribution.iterations == 0
        assert res.certificates_ok
        # shift one unit between two clusters
        a = list(state.target_sizes)
        a[0] += 1
        a[1] -= 1
        res2 = resize_host_partition(state, g, a, state.target_sizes, budget=400, seed=4)
        assert res2.partition.sizes_a() == a
        assert res2.certificates_ok

    def test_phase2_rejects_oversized_request(self):
        rng = random.Random(17)
        n = 256
        g = random_min_degree(n, 205, 0.82, rng)
        sched = self.practical_schedule(Fraction(3, 10), k0=4)
        state = prepare_host_partition(g, sched, budget=400, seed=5)
        a = list(state.target_sizes)
        bump = int(sched.size_slack * n) + 8
        a[0] += bump
        a[1] -= bump
        with pytest.raises(PipelineStageError):
            resize_host_partition(state, g, a, state.target_sizes, budget=200, seed=6)

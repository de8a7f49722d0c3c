import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcakit.exploration import (
    Binomial,
    GwTreeSample,
    Regular,
    TreeStatsSpec,
    _binomial_draw,
    explore,
    explore_bipartite,
    gw_sizes,
    ilog2ceil,
    sample_gw_tree,
    stats_from_sizes,
    tail_slope,
    tree_stats,
)
from lcakit.graphs import (
    BipartiteChoices,
    LocalGraph,
    gen_bipartite_choices,
    gen_bounded_degree,
    path_graph,
)
from lcakit.ranks import (
    FullPseudorandom,
    RandomStream,
    Seed,
    derive_subseed,
    rank_key_fn,
)

SEED = Seed.from_hex("5eed" * 16)


def closure_oracle(g, root, key_of):
    """Independent fixed-point computation of the decreasing-rank closure."""
    members = {root}
    changed = True
    while changed:
        changed = False
        for v in list(members):
            for w in g.neighbors(v):
                if w not in members and key_of(w) < key_of(v):
                    members.add(w)
                    changed = True
    return members


class TestExplore:
    def test_isolated_root(self):
        g = LocalGraph.from_edges(3, [(1, 2)])
        rs = explore(g, 0, SEED)
        assert rs.vertices() == (0,)
        assert not rs.truncated
        assert rs.probes == 1

    def test_single_edge_rule_both_directions(self):
        g = LocalGraph.from_edges(2, [(0, 1)])
        key_of = rank_key_fn(SEED, FullPseudorandom(), 2)
        lo, hi = sorted((0, 1), key=key_of)
        assert explore(g, hi, SEED).vertices() == tuple(sorted((lo, hi)))
        assert explore(g, lo, SEED).vertices() == (lo,)

    def test_descending_path_includes_everything(self):
        # find a seed whose ranks strictly decrease along a 3-path
        g = path_graph(3)
        for i in range(1000):
            s = derive_subseed(SEED, b"desc:%d" % i)
            key_of = rank_key_fn(s, FullPseudorandom(), 3)
            if key_of(0) > key_of(1) > key_of(2):
                rs = explore(g, 0, s)
                assert set(rs.vertices()) == {0, 1, 2}
                return
        pytest.fail("no witness seed found")

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6), st.integers(2, 12), st.integers(1, 4))
    def test_matches_fixed_point_oracle(self, tag, n, d):
        g = gen_bounded_degree(derive_subseed(SEED, b"g:%d" % tag), n, d)
        s = derive_subseed(SEED, b"r:%d" % tag)
        key_of = rank_key_fn(s, FullPseudorandom(), n)
        for root in range(g.n):
            rs = explore(g, root, s)
            assert set(rs.vertices()) == closure_oracle(g, root, key_of)

    def test_members_sorted_ascending_by_rank(self):
        g = gen_bounded_degree(SEED, 50, 4)
        rs = explore(g, 0, SEED)
        keys = [(r.value, r.owner) for _, r in rs.members]
        assert keys == sorted(keys)

    def test_closure_soundness(self):
        # every non-root member has an in-set neighbor of strictly greater rank
        g = gen_bounded_degree(SEED, 80, 5)
        for root in range(0, 80, 7):
            rs = explore(g, root, SEED)
            ranks = dict(rs.members)
            for v, rank in rs.members:
                if v == root:
                    continue
                assert any(
                    w in ranks and ranks[w] > rank for w in g.neighbors(v)
                )

    def test_cap_monotonicity(self):
        g = gen_bounded_degree(SEED, 200, 5)
        for root in range(0, 200, 11):
            full = explore(g, root, SEED)
            if full.size < 3:
                continue
            small = explore(g, root, SEED, cap=2)
            assert small.truncated
            assert set(small.vertices()) <= set(full.vertices())
            bigger = explore(g, root, SEED, cap=full.size)
            assert set(small.vertices()) <= set(bigger.vertices())

    def test_determinism(self):
        g = gen_bounded_degree(SEED, 100, 4)
        assert explore(g, 3, SEED) == explore(g, 3, SEED)

    def test_kwise_ordering_matches_oracle_too(self):
        from lcakit.ranks import KWiseIndependent

        kind = KWiseIndependent(6, 1009)
        g = gen_bounded_degree(SEED, 30, 3)
        key_of = rank_key_fn(SEED, kind, 30)
        for root in range(0, 30, 5):
            rs = explore(g, root, SEED, kind)
            assert set(rs.vertices()) == closure_oracle(g, root, key_of)

    def test_root_out_of_range(self):
        with pytest.raises(ValueError):
            explore(path_graph(3), 5, SEED)

    def test_cap_must_be_positive(self):
        with pytest.raises(ValueError):
            explore(path_graph(3), 0, SEED, cap=0)


class TestExploreBipartite:
    def test_untouched_bins_leave_singleton(self):
        # ball 0's bins are chosen by nobody else
        bc = BipartiteChoices.from_choices(3, 4, 2, [(0, 1), (2, 3), (2, 3)])
        rs = explore_bipartite(bc, 0, SEED)
        assert rs.vertices() == (0,)

    def test_two_balls_sharing_bins(self):
        bc = BipartiteChoices.from_choices(2, 2, 2, [(0, 1), (0, 1)])
        key_of = rank_key_fn(SEED, FullPseudorandom(), 2)
        lo, hi = sorted((0, 1), key=key_of)
        assert set(explore_bipartite(bc, hi, SEED).vertices()) == {0, 1}
        assert explore_bipartite(bc, lo, SEED).vertices() == (lo,)

    def test_members_are_balls_sorted_by_rank(self):
        bc = gen_bipartite_choices(SEED, 300, 100, 2)
        rs = explore_bipartite(bc, 7, SEED)
        assert all(0 <= b < 300 for b in rs.vertices())
        keys = [(r.value, r.owner) for _, r in rs.members]
        assert keys == sorted(keys)
        assert rs.members[-1][0] == 7  # root arrives last among its closure

    def test_closure_supports_exact_replay(self):
        # every bin of a member ball has all its earlier choosers in the set
        bc = gen_bipartite_choices(SEED, 400, 200, 2)
        key_of = rank_key_fn(SEED, FullPseudorandom(), 400)
        rs = explore_bipartite(bc, 11, SEED)
        members = set(rs.vertices())
        for b in members:
            for u in bc.choices_of(b):
                for w in bc.choosers_of(u):
                    if key_of(w) < key_of(b):
                        assert w in members

    def test_truncation_flag(self):
        bc = BipartiteChoices.from_choices(3, 1, 1, [(0,), (0,), (0,)])
        ranks = sorted(range(3), key=rank_key_fn(SEED, FullPseudorandom(), 3))
        rs = explore_bipartite(bc, ranks[-1], SEED, cap=1)
        assert rs.truncated


class TestGwSampler:
    def test_zero_offspring_probability(self):
        sample = sample_gw_tree(SEED, Binomial(100, 0.0))
        assert sample == GwTreeSample(size=1, depth=0, extinct=True)

    def test_supercritical_rejected(self):
        with pytest.raises(ValueError, match="subcritical"):
            sample_gw_tree(SEED, Regular(3, 3))
        with pytest.raises(ValueError, match="subcritical"):
            sample_gw_tree(SEED, Binomial(10, 0.2))

    def test_regular_mean_total_progeny(self):
        samples = gw_sizes(SEED, Regular(3, 9), 10**4)
        mean = sum(s.size for s in samples) / len(samples)
        assert abs(mean - 1.5) / 1.5 < 0.05
        assert all(s.extinct for s in samples)

    def test_binomial_mean_total_progeny(self):
        samples = gw_sizes(SEED, Binomial(10**4, 3 / (9 * 10**4)), 10**4)
        mean = sum(s.size for s in samples) / len(samples)
        assert abs(mean - 1.5) / 1.5 < 0.05

    def test_deterministic(self):
        assert sample_gw_tree(SEED, Regular(3, 9)) == sample_gw_tree(SEED, Regular(3, 9))

    def test_cap_reports_not_extinct(self):
        # with cap=1 any tree that spawns a child reports non-extinction
        found = False
        for i in range(50):
            s = derive_subseed(SEED, b"cap:%d" % i)
            sample = sample_gw_tree(s, Regular(3, 4), cap=1)
            assert sample.size == 1
            if not sample.extinct:
                found = True
        assert found

    def test_binomial_draw_moments(self):
        stream = RandomStream(SEED, b"bin")
        n, q, trials = 50, 0.1, 20000
        draws = [_binomial_draw(stream, n, q) for _ in range(trials)]
        mean = sum(draws) / trials
        var = sum((x - mean) ** 2 for x in draws) / trials
        assert abs(mean - n * q) < 0.1
        assert abs(var - n * q * (1 - q)) < 0.2


class TestTreeStats:
    def test_single_isolated_vertex(self):
        spec = TreeStatsSpec("bounded", 1, 1, instances=1, queries_per_instance=1)
        ts = tree_stats(spec, SEED)
        assert ts.sizes == ((1, 1),)
        assert ts.mean_size == 1.0 and ts.max_size == 1

    def test_histogram_mass_equals_trials(self):
        spec = TreeStatsSpec("bounded", 64, 3, instances=2, queries_per_instance=40)
        ts = tree_stats(spec, SEED)
        assert sum(c for _, c in ts.sizes) == ts.trials == 80

    def test_tail_exceedance(self):
        ts = stats_from_sizes([1, 2, 3, 4], thresholds=(2, 4))
        assert ts.tail == ((2, 0.5), (4, 0.0))

    def test_deterministic_dict(self):
        spec = TreeStatsSpec("binomial", 64, 3, instances=2, queries_per_instance=20)
        assert tree_stats(spec, SEED).to_dict() == tree_stats(spec, SEED).to_dict()

    def test_unknown_generator(self):
        with pytest.raises(ValueError, match="unknown generator"):
            tree_stats(TreeStatsSpec("bogus", 8, 2), SEED)


class TestTailSlope:
    def test_exact_geometric_decay(self):
        # sizes with Pr[size >= s] halving each step fit slope -1 exactly
        sizes = []
        for s, count in enumerate([64, 32, 16, 8, 4, 2, 1], start=1):
            sizes.extend([s] * (count - (count // 2 if s < 7 else 0)))
        slope = tail_slope(sizes, 1, 7)
        assert slope < -0.5

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            tail_slope([1, 1, 1], 5, 30)


class TestIlog2Ceil:
    def test_values(self):
        assert ilog2ceil(1) == 1
        assert ilog2ceil(2) == 1
        assert ilog2ceil(3) == 2
        assert ilog2ceil(40) == 6
        assert ilog2ceil(1024) == 10

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            ilog2ceil(0)


class TestPathClosureProbability:
    def test_two_vertex_half(self):
        g = path_graph(2)
        trials = 10**4
        hits = sum(
            explore(g, 0, derive_subseed(SEED, b"p2:%d" % t)).size == 2
            for t in range(trials)
        )
        se = math.sqrt(0.25 / trials)
        assert abs(hits / trials - 0.5) <= 3 * se

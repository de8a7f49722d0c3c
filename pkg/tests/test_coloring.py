import warnings

import pytest

from lcakit.coloring import (
    COLORS,
    ColoringFailure,
    ColoringParams,
    PhaseThresholds,
    ThresholdError,
    color_all,
    color_query,
    coloring_state,
    compute_thresholds,
    sat_all,
    sat_query,
    sat_state,
    verify_assignment,
    verify_coloring,
)
from lcakit.graphs import CnfFormula, Hypergraph, gen_cnf, gen_hypergraph
from lcakit.ranks import RandomStream, Seed, derive_subseed

SEED = Seed.from_hex("5eed" * 16)

LENIENT = ColoringParams(lenient=True)


def lenient_params():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return LENIENT


class TestComputeThresholds:
    def test_reference_values(self):
        got = compute_thresholds(40, 2)
        assert got == PhaseThresholds(k1=40, k2=33, k3=26, k4=19, delta=7)

    def test_too_small_k_raises(self):
        with pytest.raises(ThresholdError, match="k4"):
            compute_thresholds(20, 2)

    def test_admissibility_boundary_is_inclusive(self):
        # d=2 needs 2^(k4-1) >= 3e ~ 8.15: k4=5 passes, k4=4 fails
        assert compute_thresholds(26, 2).k4 == 5
        with pytest.raises(ThresholdError, match="e\\*"):
            compute_thresholds(25, 2)

    def test_lenient_warns_and_floors(self):
        with pytest.warns(UserWarning, match="inadmissible"):
            got = compute_thresholds(5, 2, lenient=True)
        assert got.k2 >= 1 and got.k3 >= 1 and got.k4 >= 1

    def test_small_d_clamp(self):
        # the cubic factor degenerates below d=2; clamped form stays defined
        assert compute_thresholds(40, 1).delta == 5
        assert compute_thresholds(40, 2).delta == 7

    def test_rejects_bad_inputs(self):
        with pytest.raises(ThresholdError):
            compute_thresholds(1, 2)
        with pytest.raises(ThresholdError):
            compute_thresholds(10, -1)


def phase1_reference(view_kind, inst, state):
    """Global sequential simulation of the first random-coloring pass.

    Independent of the query engine: walks all items in rank order with
    explicit per-constraint state, and checks that a constraint turns
    dangerous at exactly k2 unassigned items.
    """
    k2 = state.thresholds.k2
    order = sorted(range(inst.m), key=state.key_of)
    values = {}
    saved = set()
    assigned = {c: 0 for c in range(inst.n)}
    killed = set()
    dangerous = set()
    first_color = {}
    if view_kind == "cnf":
        want = [dict(cl) for cl in inst.clauses]
        members = inst.vars_of
        cons_of = inst.clauses_of
    else:
        members = inst.vertices_of
        cons_of = inst.edges_of
    for v in order:
        if v in saved:
            continue
        val = state._coin(0, v)
        values[v] = val
        for c in cons_of(v):
            if c in killed or c in dangerous:
                continue
            assigned[c] += 1
            if view_kind == "cnf":
                safe = want[c][v] == bool(val)
            else:
                safe = c in first_color and first_color[c] != val
                first_color.setdefault(c, val)
            if safe:
                killed.add(c)
            elif inst.k - assigned[c] == k2:
                dangerous.add(c)
                unassigned = [w for w in members(c) if w not in values]
                assert len(unassigned) == k2  # danger fires exactly at k2
                saved.update(unassigned)
    return values, saved, killed


class TestPhaseOneAgainstGlobalReference:
    @pytest.mark.parametrize("i", range(4))
    def test_hypergraph_lenient_small(self, i):
        inst = gen_hypergraph(derive_subseed(SEED, b"p1h:%d" % i), 60, 8, 5, 2)
        state = coloring_state(inst, derive_subseed(SEED, b"p1hr:%d" % i), lenient_params())
        values, saved, killed = phase1_reference("hyper", inst, state)
        for x in range(inst.m):
            state._ensure(x)
        assert state.color1 == values
        assert state.saved1 == saved
        for e in range(inst.n):
            assert state._survived1(e) == (e not in killed)

    def test_hypergraph_strict_scale(self):
        inst = gen_hypergraph(SEED, 400, 20, 40, 2)
        state = coloring_state(inst, derive_subseed(SEED, b"p1s"))
        values, saved, killed = phase1_reference("hyper", inst, state)
        for x in range(inst.m):
            state._ensure(x)
        assert state.color1 == values and state.saved1 == saved

    @pytest.mark.parametrize("i", range(4))
    def test_cnf_lenient_small(self, i):
        inst = gen_cnf(derive_subseed(SEED, b"p1c:%d" % i), 60, 8, 5, 2)
        state = sat_state(inst, derive_subseed(SEED, b"p1cr:%d" % i), lenient_params())
        values, saved, killed = phase1_reference("cnf", inst, state)
        for x in range(inst.m):
            state._ensure(x)
        assert state.color1 == values
        assert state.saved1 == saved


class TestColorQuery:
    def test_single_edge_rerun_stable(self):
        inst = Hypergraph.from_edges(6, [(0, 1, 2, 3, 4, 5)])
        params = lenient_params()
        for x in range(6):
            a = color_query(inst, x, SEED, params)
            b = color_query(inst, x, SEED, params)
            assert a.color == b.color
            assert a.color in COLORS
            assert 1 <= a.phase_resolved <= 4

    def test_zero_edge_instance(self):
        inst = Hypergraph.from_edges(1, [])
        a = color_query(inst, 0, SEED)
        assert a.color in COLORS and a.phase_resolved == 1
        assert color_query(inst, 0, SEED) == a

    def test_phase_one_resolution_has_small_probe_count(self):
        inst = gen_hypergraph(SEED, 400, 20, 40, 2)
        state = coloring_state(inst, SEED)
        answers = [color_query(inst, x, SEED, state=state) for x in range(inst.m)]
        assert any(a.phase_resolved == 1 for a in answers)
        assert all(a.probes >= 0 for a in answers)

    def test_out_of_range(self):
        inst = gen_hypergraph(SEED, 40, 4, 5, 2)
        with pytest.raises(ValueError):
            color_query(inst, 40, SEED, lenient_params())

    def test_fresh_equals_shared_state(self):
        inst = gen_hypergraph(SEED, 400, 20, 40, 2)
        rseed = derive_subseed(SEED, b"fs")
        full = color_all(inst, rseed)
        for x in range(0, inst.m, 13):
            assert color_query(inst, x, rseed).color == full[x]

    def test_query_order_irrelevant(self):
        inst = gen_hypergraph(SEED, 200, 10, 40, 2)
        rseed = derive_subseed(SEED, b"ord")
        forward = [color_query(inst, x, rseed).color for x in range(inst.m)]
        backward = [color_query(inst, x, rseed).color for x in reversed(range(inst.m))]
        assert forward == backward[::-1]

    def test_kwise_ordering_supported(self):
        from lcakit.ranks import KWiseIndependent, next_prime

        inst = gen_hypergraph(SEED, 200, 10, 40, 2)
        params = ColoringParams(kind=KWiseIndependent(16, next_prime(200**3)))
        colors = color_all(inst, SEED, params)
        assert verify_coloring(inst, colors)
        assert color_query(inst, 3, SEED, params).color == colors[3]


class TestColorAll:
    def test_proper_on_generated_instances(self):
        for i in range(5):
            inst = gen_hypergraph(derive_subseed(SEED, b"ca:%d" % i), 400, 20, 40, 2)
            colors = color_all(inst, derive_subseed(SEED, b"car:%d" % i))
            assert verify_coloring(inst, colors)

    def test_proper_on_lenient_small_instances(self):
        ok = 0
        for i in range(20):
            inst = gen_hypergraph(derive_subseed(SEED, b"cl:%d" % i), 60, 8, 6, 2)
            try:
                colors = color_all(inst, derive_subseed(SEED, b"clr:%d" % i), lenient_params())
            except ColoringFailure:
                continue
            assert verify_coloring(inst, colors)
            ok += 1
        assert ok > 10  # failures allowed under inadmissible thresholds, not the norm

    def test_phase_values_never_rewritten(self):
        inst = gen_hypergraph(SEED, 400, 20, 40, 2)
        state = coloring_state(inst, SEED)
        snapshots = {}
        for x in range(inst.m):
            state.query(x)
            for v, val in state.final.items():
                assert snapshots.setdefault(v, val) == val


class TestVerifyColoring:
    def test_all_one_color_fails(self):
        inst = Hypergraph.from_edges(4, [(0, 1, 2, 3)])
        assert not verify_coloring(inst, ["red"] * 4)

    def test_two_vertex_edge_red_blue(self):
        inst = Hypergraph.from_edges(2, [(0, 1)])
        assert verify_coloring(inst, ["red", "blue"])

    def test_length_checked(self):
        inst = Hypergraph.from_edges(2, [(0, 1)])
        with pytest.raises(ValueError):
            verify_coloring(inst, ["red"])

    def test_monochromatic_frequency_matches_power_of_two(self):
        # a random coloring misses a k-edge with probability 2^(1-k)
        k, trials = 8, 20000
        inst = Hypergraph.from_edges(k, [tuple(range(k))])
        stream = RandomStream(SEED, b"mono")
        bad = sum(
            not verify_coloring(inst, [COLORS[stream.randrange(2)] for _ in range(k)])
            for _ in range(trials)
        )
        expected = 2 ** (1 - k)
        se = (expected * (1 - expected) / trials) ** 0.5
        assert abs(bad / trials - expected) <= 4 * se


class TestSat:
    def test_single_clause_satisfied(self):
        inst = CnfFormula.from_clauses(2, [[(0, True), (1, True)]])
        params = lenient_params()
        values = sat_all(inst, SEED, params)
        assert verify_assignment(inst, values)
        for var in range(2):
            again = sat_query(inst, var, SEED, params)
            assert again.value == values[var]

    def test_sat_all_passes_evaluator(self):
        for i in range(5):
            inst = gen_cnf(derive_subseed(SEED, b"sa:%d" % i), 400, 20, 40, 2)
            values = sat_all(inst, derive_subseed(SEED, b"sar:%d" % i))
            assert verify_assignment(inst, values)

    def test_requery_stable(self):
        inst = gen_cnf(SEED, 200, 10, 40, 2)
        a = sat_query(inst, 5, SEED)
        assert sat_query(inst, 5, SEED) == a

    def test_verify_assignment_checks(self):
        inst = CnfFormula.from_clauses(2, [[(0, True), (1, False)]])
        assert verify_assignment(inst, [True, True])
        assert verify_assignment(inst, [False, False])
        assert not verify_assignment(inst, [False, True])
        with pytest.raises(ValueError):
            verify_assignment(inst, [True])


class TestFailureModes:
    def test_strict_premise_violation_raises_threshold_error(self):
        inst = gen_hypergraph(SEED, 60, 8, 5, 2)
        with pytest.raises(ThresholdError):
            color_query(inst, 0, SEED)  # k=5, d=2 is inadmissible in strict mode

    def test_tree_cap_failure_is_counted_failure(self):
        inst = gen_hypergraph(SEED, 400, 20, 40, 2)
        params = ColoringParams(tree_cap=1)
        state = coloring_state(inst, SEED, params)
        with pytest.raises(ColoringFailure) as err:
            for x in range(inst.m):
                state.query(x)
        assert err.value.reason == "tree_cap"

    def test_failure_carries_reason(self):
        try:
            raise ColoringFailure("component", "too big")
        except ColoringFailure as exc:
            assert exc.reason == "component"

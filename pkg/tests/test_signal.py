import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopdwell.digraph import Digraph, SimpleLoop, SubgraphPartition, enumerate_simple_loops
from loopdwell.errors import InadmissibleSignal, MissingPartition, SynthesisFailure
from loopdwell.signal import (
    Dwell,
    DwellFlee,
    LoopwiseDwellFlee,
    SimpleLoopDwell,
    SwitchingSignal,
    check_admissible,
    class_membership,
    random_walk,
    standard_decomposition,
    switch_counters,
    synthesize_signal,
)

from conftest import FIG1_MODES, random_strong_graph

seeds = st.integers(0, 2**32 - 1)


def restart_scan_oracle(modes):
    """Literal reading: scan the residual from the start, cut at the first repeat, start over."""
    edges = list(range(1, len(modes)))  # residual edge indices
    extracted = []
    while True:
        if not edges:
            return extracted, edges
        verts = [modes[edges[0] - 1]] + [modes[e] for e in edges]
        cut = None
        for pos in range(1, len(verts)):
            if verts[pos] in verts[:pos]:
                cut = (verts.index(verts[pos]), pos)
                break
        if cut is None:
            return extracted, edges
        a, b = cut
        extracted.append((SimpleLoop(tuple(verts[a:b])), tuple(edges[a:b])))
        edges = edges[:a] + edges[b:]


def fig1_signal(durations=None):
    d = durations if durations is not None else [1.0] * len(FIG1_MODES)
    return SwitchingSignal(FIG1_MODES, d)


class TestSignalModel:
    def test_rejects_bad_durations(self):
        with pytest.raises(ValueError):
            SwitchingSignal((1, 2), (1.0, 0.0))
        with pytest.raises(ValueError):
            SwitchingSignal((1, 2), (1.0,))

    def test_switch_times(self):
        sig = SwitchingSignal((1, 2, 1), (0.5, 1.0, 2.0))
        np.testing.assert_allclose(sig.switch_times, [0, 0.5, 1.5, 3.5])
        assert sig.edge(2) == (2, 1)


class TestAdmissible:
    def test_fig1_signal(self, fig1):
        assert check_admissible(fig1_signal(), fig1)

    def test_missing_self_loop(self):
        adm = check_admissible(SwitchingSignal((1, 1), (1, 1)), Digraph(2, [(1, 2), (2, 1)]))
        assert not adm and adm.step == 1 and adm.edge == (1, 1)

    def test_ring(self):
        ring = Digraph(3, [(1, 2), (2, 3), (3, 1)])
        assert check_admissible(SwitchingSignal((1, 2, 3, 1, 2), [1] * 5), ring)


class TestStandardDecomposition:
    def test_table_one(self, fig1):
        d = np.arange(1, 14) / 10
        dec = standard_decomposition(fig1_signal(d), fig1)
        got = [(inst.loop.vertices, inst.edge_indices) for inst in dec.instances]
        assert got == [((1, 3), (2, 3)), ((1, 4, 3, 2), (1, 4, 5, 6)), ((1, 4, 3), (8, 9, 10))]
        assert dec.residual_edges == (7, 11, 12)
        assert dec.instances[1].total_time == pytest.approx(d[0] + d[3] + d[4] + d[5])
        assert dec.instances[2].total_time == pytest.approx(d[7] + d[8] + d[9])

    def test_vertex_distinct_path(self, fig1):
        dec = standard_decomposition(SwitchingSignal((2, 1, 4, 3), [1] * 4), fig1)
        assert dec.instances == () and dec.residual_edges == (1, 2, 3)

    def test_two_short_loops(self, fig1):
        dec = standard_decomposition(SwitchingSignal((1, 3, 1, 3, 1), [1] * 5), fig1)
        assert [i.loop.vertices for i in dec.instances] == [(1, 3), (1, 3)]
        assert dec.residual_edges == ()

    def test_inadmissible(self, fig1):
        with pytest.raises(InadmissibleSignal):
            standard_decomposition(SwitchingSignal((1, 2), (1, 1)), fig1)

    def test_loop_ids_follow_enumeration(self, fig1):
        loops = enumerate_simple_loops(fig1)
        for inst in standard_decomposition(fig1_signal(), fig1).instances:
            assert loops[inst.loop_id - 1] == inst.loop

    @settings(max_examples=200, deadline=None)
    @given(seeds, st.integers(2, 5), st.integers(1, 40))
    def test_matches_restart_scan(self, seed, k, length):
        rng = np.random.default_rng(seed)
        g = random_strong_graph(rng, k)
        modes = random_walk(g, length, rng)
        dec = standard_decomposition(SwitchingSignal(modes, [1] * length), g)
        oracle, residual = restart_scan_oracle(modes)
        assert [(i.loop, i.edge_indices) for i in dec.instances] == oracle
        assert list(dec.residual_edges) == residual

    @settings(max_examples=200, deadline=None)
    @given(seeds, st.integers(1, 5), st.integers(1, 40))
    def test_structural_invariants(self, seed, k, length):
        rng = np.random.default_rng(seed)
        g = random_strong_graph(rng, k)
        modes = random_walk(g, length, rng)
        d = rng.uniform(0.1, 2.0, length)
        sig = SwitchingSignal(modes, d)
        dec = standard_decomposition(sig, g)
        used = [e for inst in dec.instances for e in inst.edge_indices] + list(dec.residual_edges)
        assert sorted(used) == list(range(1, length))
        assert len(set(dec.residual_vertices)) == len(dec.residual_vertices)
        assert len(dec.residual_edges) <= k - 1
        for inst in dec.instances:
            assert all(e in g.edges for e in inst.loop.edges)
        total = sum(i.total_time for i in dec.instances) + sum(d[e - 1] for e in dec.residual_edges)
        assert total == pytest.approx(d[: length - 1].sum())
        if length >= k + 1:
            assert dec.instances

    @settings(max_examples=100, deadline=None)
    @given(seeds, st.integers(1, 4), st.integers(2, 30))
    def test_prefix_containment(self, seed, k, length):
        rng = np.random.default_rng(seed)
        g = random_strong_graph(rng, k)
        sig = SwitchingSignal(random_walk(g, length, rng), [1] * length)
        previous = []
        for n in range(1, length + 1):
            current = [(i.loop, i.edge_indices) for i in standard_decomposition(sig.prefix(n), g).instances]
            assert current[: len(previous)] == previous
            previous = current


class TestMembership:
    def test_simple_loop_dwell_constraints(self, fig1):
        d = np.ones(13)
        rep = class_membership(fig1_signal(d), fig1, SimpleLoopDwell((2.0, 1.0, 3.5, 5.0)))
        labels = {c.label: c for c in rep.constraints}
        # loop order: 1->3->1, 1->3->2->1, 1->4->3->1, 1->4->3->2->1
        assert {c.bound for c in rep.constraints} == {2.0, 3.5, 5.0}
        assert rep.passed is False
        assert [c.value for c in rep.violations] == [4.0, 3.0]
        assert len(labels) == 3

    def test_loopwise_dwell_flee(self, fig1):
        part = SubgraphPartition(fig1, {1, 2})
        d = np.arange(1, 14, dtype=float)
        spec = LoopwiseDwellFlee((1.0, 1.0, 1.0, 1.0), (100.0, 100.0, 100.0, 100.0))
        rep = class_membership(fig1_signal(d), fig1, spec, part)
        values = sorted((c.sense, c.value) for c in rep.constraints)
        # 1->3->1 instance: d2 on stable 1 and d3 on unstable 3
        assert (">=", 2.0) in values and ("<=", 3.0) in values
        # 1->4->3->1 instance: d8 is stable time, d9 + d10 unstable time
        assert (">=", 8.0) in values and ("<=", 19.0) in values
        assert rep.passed

    def test_missing_partition(self, fig1):
        with pytest.raises(MissingPartition):
            class_membership(fig1_signal(), fig1, DwellFlee(1.0, 1.0))

    def test_zero_slack_passes(self):
        ring = Digraph(2, [(1, 2), (2, 1)])
        rep = class_membership(SwitchingSignal((1, 2, 1), (0.7, 0.7, 0.7)), ring, Dwell(0.7))
        assert rep.passed and rep.min_slack == 0.0

    def test_dwell_flee(self):
        ring = Digraph(2, [(1, 2), (2, 1)])
        part = SubgraphPartition(ring, {1})
        ok = SwitchingSignal((1, 2, 1, 2), (2.0, 0.5, 3.0, 0.1))
        bad = SwitchingSignal((1, 2, 1, 2), (2.0, 0.6, 1.0, 0.1))
        assert class_membership(ok, ring, DwellFlee(2.0, 0.5), part).passed
        assert len(class_membership(bad, ring, DwellFlee(2.0, 0.5), part).violations) == 2

    def test_parameters_positive(self):
        with pytest.raises(ValueError):
            Dwell(0.0)
        with pytest.raises(ValueError):
            LoopwiseDwellFlee((1.0,), (0.0,))


class TestSwitchCounters:
    def test_all_stable(self, fig1):
        assert switch_counters(fig1_signal(), SubgraphPartition(fig1, fig1.vertices), 9) == (9, 0)

    def test_alternating(self):
        ring = Digraph(2, [(1, 2), (2, 1)])
        sig = SwitchingSignal([1, 2] * 5, [1] * 10)
        assert switch_counters(sig, SubgraphPartition(ring, {1}), 10) == (5, 5)

    def test_fig1(self, fig1):
        # modes 2,1,1,2,1,1 are stable: six of thirteen
        ns, nu = switch_counters(fig1_signal(), SubgraphPartition(fig1, {1, 2}))
        assert (ns, nu) == (6, 7)


class TestSynthesis:
    def test_two_ring_dwell(self):
        ring = Digraph(2, [(1, 2), (2, 1)])
        sig = synthesize_signal(ring, Dwell(1.0), 6, seed=3)
        assert all(a != b for a, b in zip(sig.modes, sig.modes[1:]))
        assert min(sig.durations) >= 1.0

    def test_deterministic(self, fig1):
        spec = SimpleLoopDwell((1.0, 2.0, 2.0, 3.0))
        assert synthesize_signal(fig1, spec, 30, seed=11) == synthesize_signal(fig1, spec, 30, seed=11)

    def test_fig1_loop_dwell(self, fig1, loop_example):
        spec = SimpleLoopDwell((0.5, 2.6, 2.7, 2.9))
        sig = synthesize_signal(fig1, spec, 50, seed=0)
        assert class_membership(sig, fig1, spec).passed

    def test_sink_reported(self):
        with pytest.raises(SynthesisFailure):
            synthesize_signal(Digraph(2, [(1, 2)]), Dwell(1.0), 5, seed=0, start=1)

    @settings(max_examples=100, deadline=None)
    @given(seeds, st.integers(1, 5), st.sampled_from(["dwell", "loop", "dwell-flee", "loopwise"]))
    def test_soundness(self, seed, k, variant):
        rng = np.random.default_rng(seed)
        g = random_strong_graph(rng, k)
        part = SubgraphPartition(g, {int(v) for v in g.vertices if rng.random() < 0.6})
        p = len(enumerate_simple_loops(g))
        spec = {
            "dwell": lambda: Dwell(rng.uniform(0.1, 3)),
            "loop": lambda: SimpleLoopDwell(tuple(rng.uniform(0.1, 5, p))),
            "dwell-flee": lambda: DwellFlee(rng.uniform(0.1, 3), rng.uniform(0.1, 3)),
            "loopwise": lambda: LoopwiseDwellFlee(tuple(rng.uniform(0.1, 5, p)), tuple(rng.uniform(0.1, 5, p))),
        }[variant]()
        sig = synthesize_signal(g, spec, int(rng.integers(1, 60)), rng, part)
        assert check_admissible(sig, g)
        assert class_membership(sig, g, spec, part).passed

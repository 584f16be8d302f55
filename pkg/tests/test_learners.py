import numpy as np
import pytest

import csgs.learners as learners
from csgs.counts import build_index
from csgs.dataset import Dataset, VariableSchema, full_context, unique_rows
from csgs.errors import DataError
from csgs.indep import TestResult as IndepResult
from csgs.learners import LearnerConfig, LearnerStats, csgs, gs_pass, gsmn, stats_to_json
from csgs.model import sample, synth_model
from csgs.structures import CanonicalGraph, UGraph


def binary_schema(n):
    return VariableSchema(tuple(f"x{i}" for i in range(n)), (2,) * n)


def dataset(rows):
    rows = np.asarray(rows)
    return Dataset(binary_schema(rows.shape[1]), rows)


def result(independent, reliable=True):
    return IndepResult(0.0, 1, 1.0 if independent else 0.0, 100, independent, reliable)


def hamming(g1: UGraph, g2: UGraph) -> int:
    return len(set(g1.edges()) ^ set(g2.edges()))


class TestGsPassSemantics:
    """Scripted-oracle checks of the grow/shrink mechanics."""

    def test_conditioning_contexts_track_the_current_blanket(self, monkeypatch):
        calls = []

        def fake(ix, a, b, ctx, alpha):
            calls.append((a, b, ctx.vars, ctx.values))
            return result(independent=not ({a, b} == {0, 1} and len(ctx) == 0))

        monkeypatch.setattr(learners, "context_independent", fake)
        d = dataset([[1, 0, 1]])
        ix = build_index(d)
        stats = LearnerStats()
        cg = gs_pass(
            CanonicalGraph(UGraph(3), full_context((1, 0, 1))), ix, LearnerConfig(), stats
        )
        assert cg.graph.edges() == [(0, 1)]
        # Node 0: grow tests 1 then 2 (blanket empty, then {1}); shrink re-tests 1.
        assert calls[0] == (0, 1, (), ())
        assert calls[1] == (0, 2, (1,), (0,))
        assert calls[2] == (0, 1, (), ())
        # Node 1: 0 already adjacent, so only 2 is grown against blanket {0}.
        assert calls[3] == (1, 2, (0,), (1,))
        assert calls[4] == (1, 0, (), ())
        # Node 2: grow against 0 and 1 with empty blanket; nothing to shrink.
        assert calls[5] == (2, 0, (), ())
        assert calls[6] == (2, 1, (), ())
        assert len(calls) == 7
        assert stats.grow_tests == 5
        assert stats.shrink_tests == 2

    def test_shrink_sees_earlier_removals(self, monkeypatch):
        calls = []

        def fake(ix, a, b, ctx, alpha):
            calls.append((a, b, ctx.vars))
            if {a, b} == {0, 1}:
                return result(independent=False)
            if (a, b) == (0, 2):
                # Dependent only for the very first, unconditioned grow test.
                return result(independent=len(ctx) >= 1)
            return result(independent=True)

        monkeypatch.setattr(learners, "context_independent", fake)
        d = dataset([[0, 0, 0]])
        ix = build_index(d)
        cfg = LearnerConfig(node_order=(0, 2, 1))
        cg = gs_pass(
            CanonicalGraph(UGraph(3), full_context((0, 0, 0))), ix, cfg, LearnerStats()
        )
        assert cg.graph.edges() == [(0, 1)]
        # Shrink of node 0 first drops (0,2) conditioning on {1}, then re-tests
        # (0,1) against the already-shrunk blanket (empty context).
        assert (0, 2, (1,)) in calls
        assert calls[calls.index((0, 2, (1,))) + 1] == (0, 1, ())

    def test_all_queries_stay_inside_the_graphs_context(self, monkeypatch):
        recorded = []

        def fake(ix, a, b, ctx, alpha):
            recorded.append(ctx)
            return result(independent=(a + b) % 2 == 0)

        monkeypatch.setattr(learners, "context_independent", fake)
        xi = (1, 0, 1, 0)
        d = dataset([list(xi)])
        cg = gs_pass(
            CanonicalGraph(UGraph(4), full_context(xi)),
            build_index(d),
            LearnerConfig(),
            LearnerStats(),
        )
        for ctx in recorded:
            for a, v in ctx.items():
                assert xi[a] == v

    def test_unreliable_tests_are_counted_and_decide_independent(self, monkeypatch):
        monkeypatch.setattr(
            learners,
            "context_independent",
            lambda ix, a, b, ctx, alpha: result(independent=True, reliable=False),
        )
        d = dataset([[0, 0]])
        stats = LearnerStats()
        cg = gs_pass(
            CanonicalGraph(UGraph(2), full_context((0, 0))),
            build_index(d),
            LearnerConfig(),
            stats,
        )
        assert cg.graph.edges() == []
        assert stats.unreliable_tests == stats.grow_tests == 2


class TestGsPassOnData:
    def test_deterministic_pair_yields_single_edge(self):
        rows = (
            [[0, 0, 0]] * 500 + [[0, 0, 1]] * 500 + [[1, 1, 0]] * 500 + [[1, 1, 1]] * 500
        )
        d = dataset(rows)
        ix = build_index(d)
        cg = gs_pass(
            CanonicalGraph(UGraph(3), full_context((0, 0, 0))),
            ix,
            LearnerConfig(),
            LearnerStats(),
        )
        assert cg.graph.edges() == [(0, 1)]

    def test_independent_data_edge_rate_near_alpha(self):
        slots = 0
        edges = 0
        for seed in range(100):
            rng = np.random.default_rng(5000 + seed)
            d = dataset(rng.integers(0, 2, size=(2000, 3)))
            ix = build_index(d)
            ctx = unique_rows(d)[0][0]
            cg = gs_pass(
                CanonicalGraph(UGraph(3), ctx), ix, LearnerConfig(), LearnerStats()
            )
            slots += 3
            edges += cg.graph.edge_count()
        assert abs(edges / slots - 0.05) <= 0.03

    def test_shrink_empties_complete_graph_on_independent_data(self):
        rng = np.random.default_rng(77)
        d = dataset(rng.integers(0, 2, size=(2000, 3)))
        ix = build_index(d)
        stats = LearnerStats()
        cg = gs_pass(
            CanonicalGraph(UGraph.complete(3), unique_rows(d)[0][0]),
            ix,
            LearnerConfig(),
            stats,
        )
        assert cg.graph.edges() == []
        # Node 0 starts fully connected, so its pass is shrink-only; later
        # nodes re-test removed pairs in their grow phases and keep them out.
        assert stats.shrink_tests >= 3


class TestCsgs:
    def test_one_graph_per_unique_row(self):
        d = dataset([[0, 1], [0, 1], [1, 0]])
        model, feats, stats = csgs(d, LearnerConfig())
        assert len(model.graphs) == 2
        assert [cg.context.values for cg in model.graphs] == [(0, 1), (1, 0)]

    def test_single_repeated_row(self):
        d = dataset([[1, 0, 1]] * 50)
        model, feats, stats = csgs(d, LearnerConfig())
        assert len(model.graphs) == 1
        assert stats.total_tests <= 2 * 3 * 3

    def test_budget_respected_on_random_data(self):
        rng = np.random.default_rng(83)
        for _ in range(5):
            n = int(rng.integers(2, 6))
            d = dataset(rng.integers(0, 2, size=(int(rng.integers(20, 400)), n)))
            _, _, stats = csgs(d, LearnerConfig())
            m = len(unique_rows(d))
            assert stats.total_tests <= 2 * m * n * n
            assert stats.grow_tests + stats.shrink_tests == stats.total_tests
            assert sum(stats.per_context_tests.values()) == stats.total_tests

    def test_parallel_matches_serial(self):
        gt = synth_model(5, seed=4)
        d = sample(gt.model, 3000, seed=4)
        serial_model, serial_feats, serial_stats = csgs(d, LearnerConfig(parallel=False))
        par_model, par_feats, par_stats = csgs(d, LearnerConfig(parallel=True))
        assert [cg.context for cg in serial_model.graphs] == [
            cg.context for cg in par_model.graphs
        ]
        assert [cg.graph.edges() for cg in serial_model.graphs] == [
            cg.graph.edges() for cg in par_model.graphs
        ]
        assert serial_feats == par_feats
        a = stats_to_json(serial_stats, algorithm="csgs", n=5, rows=len(d), m=len(serial_model.graphs))
        b = stats_to_json(par_stats, algorithm="csgs", n=5, rows=len(d), m=len(par_model.graphs))
        a.pop("wall_ms")
        b.pop("wall_ms")
        assert a == b

    def test_recovers_context_structure_better_than_gsmn(self):
        # Two-context generator: star when the flag is 1, complete when 0.
        per_seed = []
        for seed in (1, 2, 3):
            gt = synth_model(6, seed=seed)
            d = sample(gt.model, 10_000, seed=seed)
            target = {
                cg.context: cg.graph for cg in gt.canonical.graphs
            }
            model, _, _ = csgs(d, LearnerConfig())
            csgs_dist = float(
                np.mean([hamming(cg.graph, target[cg.context]) for cg in model.graphs])
            )
            graph, _ = gsmn(d, LearnerConfig())
            gsmn_dist = float(
                np.mean([hamming(graph, target[cg.context]) for cg in model.graphs])
            )
            per_seed.append((csgs_dist, gsmn_dist))
        assert sum(c for c, _ in per_seed) < sum(g for _, g in per_seed)

    def test_node_order_affects_only_via_config(self):
        gt = synth_model(4, seed=8)
        d = sample(gt.model, 2000, seed=8)
        a, _, _ = csgs(d, LearnerConfig())
        b, _, _ = csgs(d, LearnerConfig(node_order=(0, 1, 2, 3)))
        assert [cg.graph.edges() for cg in a.graphs] == [cg.graph.edges() for cg in b.graphs]

    def test_invalid_node_order_rejected(self):
        d = dataset([[0, 1], [1, 0]])
        with pytest.raises(DataError):
            csgs(d, LearnerConfig(node_order=(0, 0)))


class TestGsmn:
    def test_deterministic_pair_gets_edge(self):
        rng = np.random.default_rng(89)
        x = rng.integers(0, 2, size=2000)
        c = rng.integers(0, 2, size=2000)
        d = dataset(np.stack([x, x, c], axis=1))
        g, stats = gsmn(d, LearnerConfig())
        assert g.has_edge(0, 1)
        assert stats.total_tests > 0

    def test_independent_data_edge_rate_near_alpha(self):
        slots = 0
        edges = 0
        for seed in range(100):
            rng = np.random.default_rng(7000 + seed)
            d = dataset(rng.integers(0, 2, size=(1000, 3)))
            g, _ = gsmn(d, LearnerConfig())
            slots += 3
            edges += g.edge_count()
        assert abs(edges / slots - 0.05) <= 0.03

    def test_stats_json_shape(self):
        d = dataset([[0, 1], [1, 0], [0, 1]])
        g, stats = gsmn(d, LearnerConfig())
        record = stats_to_json(stats, algorithm="gsmn", n=2, rows=3, m=2)
        assert record["kind"] == "stats"
        assert record["tests_total"] == record["tests_grow"] + record["tests_shrink"]
        assert set(record) >= {
            "algorithm",
            "n",
            "rows",
            "m",
            "tests_grow",
            "tests_shrink",
            "tests_total",
            "unreliable",
            "wall_ms",
        }

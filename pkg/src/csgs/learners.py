"""Structure learners: grow-shrink over canonical graphs, plus the
single-graph baseline.

The canonical-model learner seeds one empty graph per unique training row
and refines each with a grow pass (add an edge when the pair tests dependent
given the blanket instantiated to the graph's own context values) followed by
a shrink pass (drop an edge when the pair tests independent given the rest of
the blanket, again instantiated).  The baseline uses the same skeleton with
conditioning *sets* instead of assignments and learns one graph for all rows.

Edges are shared and symmetric: adding or removing (a, b) updates both
blankets immediately, so later nodes see earlier nodes' edges.  Unreliable
tests count toward the budget and decide independent.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .counts import CountIndex, DEFAULT_LEAF_THRESHOLD, build_index
from .dataset import Dataset, unique_rows
from .errors import DataError
from .indep import conditional_independent, context_independent
from .structures import (
    CanonicalGraph,
    CanonicalModel,
    FORMAT,
    Feature,
    UGraph,
    edges_symmetric,
    generate_features,
)

__all__ = ["LearnerConfig", "LearnerStats", "gs_pass", "csgs", "gsmn", "stats_to_json"]


@dataclass
class LearnerConfig:
    alpha: float = 0.05
    node_order: tuple[int, ...] | None = None
    leaf_threshold: int = DEFAULT_LEAF_THRESHOLD
    parallel: bool = False

    def order_for(self, n: int) -> tuple[int, ...]:
        """The fixed node order; ascending ids unless configured."""
        if self.node_order is None:
            return tuple(range(n))
        order = tuple(int(a) for a in self.node_order)
        if sorted(order) != list(range(n)):
            raise DataError("node_order must be a permutation of the variables")
        return order


@dataclass
class LearnerStats:
    grow_tests: int = 0
    shrink_tests: int = 0
    unreliable_tests: int = 0
    per_context_tests: dict[int, int] = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def total_tests(self) -> int:
        return self.grow_tests + self.shrink_tests

    def absorb(self, other: "LearnerStats", context: int | None = None) -> None:
        self.grow_tests += other.grow_tests
        self.shrink_tests += other.shrink_tests
        self.unreliable_tests += other.unreliable_tests
        if context is not None:
            self.per_context_tests[context] = other.total_tests


def gs_pass(
    g: CanonicalGraph, ix: CountIndex, cfg: LearnerConfig, stats: LearnerStats
) -> CanonicalGraph:
    """One grow pass and one shrink pass per node, in the configured order.

    Conditioning contexts are the graph's own canonical assignment restricted
    to the current blanket, so every count query stays inside this context's
    strata.  The graph is refined in place and returned.
    """
    graph, ctx = g.graph, g.context
    order = cfg.order_for(graph.n)
    for a in order:
        for b in order:
            if b == a or graph.has_edge(a, b):
                continue
            cond = ctx.restrict(graph.neighbors(a))
            res = context_independent(ix, a, b, cond, cfg.alpha)
            stats.grow_tests += 1
            if not res.reliable:
                stats.unreliable_tests += 1
            if not res.independent:
                graph.add_edge(a, b)
        snapshot = [b for b in order if graph.has_edge(a, b)]
        for b in snapshot:
            if not graph.has_edge(a, b):
                continue
            cond = ctx.restrict(graph.neighbors(a) - {b})
            res = context_independent(ix, a, b, cond, cfg.alpha)
            stats.shrink_tests += 1
            if not res.reliable:
                stats.unreliable_tests += 1
            if res.independent:
                graph.remove_edge(a, b)
        assert edges_symmetric(graph)
    return g


def csgs(
    d: Dataset, cfg: LearnerConfig, progress=None, index: CountIndex | None = None
) -> tuple[CanonicalModel, set[Feature], LearnerStats]:
    """Learn a canonical model: one grow-shrink graph per unique training row.

    Canonical graphs are mutually independent and may be learned concurrently
    over the shared count index; aggregation follows context order either
    way, so results do not depend on scheduling.  ``progress``, when given,
    is called as ``progress(done, total)`` after each context finishes.
    """
    start = time.perf_counter()
    contexts = [ctx for ctx, _ in unique_rows(d)]
    ix = index if index is not None else build_index(d, cfg.leaf_threshold)
    n = d.schema.n

    def learn_one(ctx):
        st = LearnerStats()
        cg = gs_pass(CanonicalGraph(UGraph(n), ctx), ix, cfg, st)
        return cg, st

    if cfg.parallel and len(contexts) > 1:
        with ThreadPoolExecutor() as pool:
            runs = pool.map(learn_one, contexts)
            results = []
            for res in runs:
                results.append(res)
                if progress is not None:
                    progress(len(results), len(contexts))
    else:
        results = []
        for ctx in contexts:
            results.append(learn_one(ctx))
            if progress is not None:
                progress(len(results), len(contexts))

    stats = LearnerStats()
    graphs = []
    for i, (cg, st) in enumerate(results):
        graphs.append(cg)
        stats.absorb(st, context=i)
    stats.wall_time = time.perf_counter() - start
    model = CanonicalModel(d.schema, tuple(graphs))
    feats = generate_features(model)
    bound = 2 * len(contexts) * n * n
    if stats.total_tests > bound:
        raise AssertionError(
            f"independence-test budget exceeded: {stats.total_tests} > {bound}"
        )
    return model, feats, stats


def gsmn(
    d: Dataset, cfg: LearnerConfig, index: CountIndex | None = None
) -> tuple[UGraph, LearnerStats]:
    """Single-graph grow-shrink with conditioning sets (not assignments)."""
    start = time.perf_counter()
    ix = index if index is not None else build_index(d, cfg.leaf_threshold)
    n = d.schema.n
    g = UGraph(n)
    stats = LearnerStats()
    order = cfg.order_for(n)
    for a in order:
        for b in order:
            if b == a or g.has_edge(a, b):
                continue
            res = conditional_independent(ix, a, b, g.neighbors(a), cfg.alpha)
            stats.grow_tests += 1
            if not res.reliable:
                stats.unreliable_tests += 1
            if not res.independent:
                g.add_edge(a, b)
        snapshot = [b for b in order if g.has_edge(a, b)]
        for b in snapshot:
            if not g.has_edge(a, b):
                continue
            res = conditional_independent(ix, a, b, g.neighbors(a) - {b}, cfg.alpha)
            stats.shrink_tests += 1
            if not res.reliable:
                stats.unreliable_tests += 1
            if res.independent:
                g.remove_edge(a, b)
        assert edges_symmetric(g)
    stats.wall_time = time.perf_counter() - start
    return g, stats


def stats_to_json(
    stats: LearnerStats, *, algorithm: str, n: int, rows: int, m: int
) -> dict:
    """Plot-ready record of one learning run."""
    return {
        "format": FORMAT,
        "kind": "stats",
        "algorithm": algorithm,
        "n": n,
        "rows": rows,
        "m": m,
        "tests_grow": stats.grow_tests,
        "tests_shrink": stats.shrink_tests,
        "tests_total": stats.total_tests,
        "unreliable": stats.unreliable_tests,
        "per_context_tests": {str(k): v for k, v in sorted(stats.per_context_tests.items())},
        "wall_ms": round(stats.wall_time * 1000.0, 3),
    }

"""Partial-assignment counting over a dataset via a lazily built ADTree.

Each tree node covers the rows matching the (variable, value) pairs on its
path from the root; paths visit variables in ascending id order, and branches
with zero count are never materialized.  Nodes covering fewer rows than
``leaf_threshold`` keep only their row ids and answer deeper queries by
scanning them.  Expansion happens on first demand and is memoized, so only
contexts that are actually queried cost anything.

Expansion is guarded by a lock: one index can serve concurrent learners.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .dataset import Context, Dataset, check_context
from .errors import DataError

__all__ = ["CountIndex", "ContingencyTable", "build_index", "count", "contingency"]

DEFAULT_LEAF_THRESHOLD = 16


class _Node:
    __slots__ = ("rows", "children")

    def __init__(self, rows: np.ndarray):
        self.rows = rows
        # var -> {value -> _Node}; populated lazily, None until first expansion
        self.children: dict[int, dict[int, "_Node"]] | None = None


class CountIndex:
    """Count service over one dataset; shareable read-only across threads."""

    def __init__(self, dataset: Dataset, leaf_threshold: int = DEFAULT_LEAF_THRESHOLD):
        if leaf_threshold < 1:
            raise DataError("leaf_threshold must be at least 1")
        self.schema = dataset.schema
        self.data = dataset.rows
        self.leaf_threshold = leaf_threshold
        self._root = _Node(np.arange(len(dataset), dtype=np.int64))
        self._lock = threading.Lock()
        self._nodes = 1
        self._expansions = 0
        self._max_depth = 0
        self._queries = 0
        self._leaf_scans = 0

    def count(self, ctx: Context) -> int:
        """Number of rows matching every (var = value) pair of the context."""
        check_context(ctx, self.schema)
        result, depth, scans = self._count(self._root, list(ctx.items()), 0)
        with self._lock:
            self._queries += 1
            self._leaf_scans += scans
            if depth > self._max_depth:
                self._max_depth = depth
        return result

    def _count(self, node: _Node, pairs: list, depth: int) -> tuple[int, int, int]:
        if not pairs:
            return int(node.rows.size), depth, 0
        if node.rows.size < self.leaf_threshold:
            sub = self.data[node.rows]
            mask = np.ones(sub.shape[0], dtype=bool)
            for a, v in pairs:
                mask &= sub[:, a] == v
            return int(mask.sum()), depth, 1
        a, v = pairs[0]
        children = node.children
        vary = children.get(a) if children is not None else None
        if vary is None:
            vary = self._expand(node, a)
        child = vary.get(v)
        if child is None:
            return 0, depth, 0
        return self._count(child, pairs[1:], depth + 1)

    def _expand(self, node: _Node, a: int) -> dict[int, _Node]:
        with self._lock:
            if node.children is None:
                node.children = {}
            vary = node.children.get(a)
            if vary is not None:
                return vary
            col = self.data[node.rows, a]
            vary = {}
            for v in np.unique(col):
                vary[int(v)] = _Node(node.rows[col == v])
            node.children[a] = vary
            self._nodes += len(vary)
            self._expansions += 1
            return vary

    def stats(self) -> dict:
        """Debug counters; totals are exact even under concurrent queries."""
        return {
            "nodes": self._nodes,
            "expansions": self._expansions,
            "max_depth": self._max_depth,
            "queries": self._queries,
            "leaf_scans": self._leaf_scans,
            "leaf_threshold": self.leaf_threshold,
            "rows": int(self.data.shape[0]),
        }


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Joint counts of two variables inside one context stratum."""

    var_a: int
    var_b: int
    cells: np.ndarray
    total: int
    context: Context


def _extended(ctx: Context, extra: tuple[tuple[int, int], ...]) -> Context:
    pairs = sorted(list(ctx.items()) + list(extra))
    return Context(tuple(a for a, _ in pairs), tuple(v for _, v in pairs))


def build_index(d: Dataset, leaf_threshold: int = DEFAULT_LEAF_THRESHOLD) -> CountIndex:
    return CountIndex(d, leaf_threshold)


def count(ix: CountIndex, ctx: Context) -> int:
    return ix.count(ctx)


def contingency(ix: CountIndex, a: int, b: int, ctx: Context) -> ContingencyTable:
    """Counts of (X_a, X_b) value pairs among rows matching ``ctx``."""
    if a == b:
        raise DataError("contingency variables must differ")
    if a in ctx.vars or b in ctx.vars:
        raise DataError("tested variable appears in the conditioning context")
    check_context(ctx, ix.schema)
    ra, rb = ix.schema.arities[a], ix.schema.arities[b]
    cells = np.zeros((ra, rb), dtype=np.int64)
    for u in range(ra):
        for v in range(rb):
            cells[u, v] = ix.count(_extended(ctx, ((a, u), (b, v))))
    cells.setflags(write=False)
    return ContingencyTable(a, b, cells, int(cells.sum()), ctx)

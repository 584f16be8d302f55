"""Graphs, canonical models, features, and the JSON forms of each.

A canonical model pairs full assignments (contexts) with one instantiated
graph each; features are indicator functions over variable subsets.  Feature
generation projects each graph's maximal cliques onto its own context and
deduplicates globally, which keeps the induced log-linear model minimal while
every variable retains unary terms through singleton cliques.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .dataset import Context, VariableSchema, check_context, full_context
from .errors import DataError

__all__ = [
    "UGraph",
    "CanonicalGraph",
    "CanonicalModel",
    "Feature",
    "markov_blanket",
    "maximal_cliques",
    "generate_features",
    "induce_graph",
    "encodes_context_independence",
    "clique_table_features",
    "edges_symmetric",
    "FORMAT",
    "schema_to_json",
    "schema_from_json",
    "canonical_model_to_json",
    "canonical_model_from_json",
    "graph_to_json",
    "graph_from_json",
    "feature_set_to_json",
    "feature_set_from_json",
]

FORMAT = "csgs-v1"


class UGraph:
    """Mutable undirected graph over nodes 0..n-1, no self loops."""

    __slots__ = ("n", "_adj")

    def __init__(self, n: int, edges=()):
        if n < 0:
            raise DataError("node count must be non-negative")
        self.n = n
        self._adj: list[set[int]] = [set() for _ in range(n)]
        for a, b in edges:
            self.add_edge(a, b)

    def _check_node(self, a: int) -> None:
        if not 0 <= a < self.n:
            raise DataError(f"node {a} outside graph of size {self.n}")

    def add_edge(self, a: int, b: int) -> None:
        self._check_node(a)
        self._check_node(b)
        if a == b:
            raise DataError("self loops are not allowed")
        self._adj[a].add(b)
        self._adj[b].add(a)

    def remove_edge(self, a: int, b: int) -> None:
        self._check_node(a)
        self._check_node(b)
        self._adj[a].discard(b)
        self._adj[b].discard(a)

    def has_edge(self, a: int, b: int) -> bool:
        self._check_node(a)
        self._check_node(b)
        return b in self._adj[a]

    def neighbors(self, a: int) -> set[int]:
        self._check_node(a)
        return set(self._adj[a])

    def edges(self) -> list[tuple[int, int]]:
        return sorted(
            (a, b) for a in range(self.n) for b in self._adj[a] if a < b
        )

    def edge_count(self) -> int:
        return sum(len(s) for s in self._adj) // 2

    def copy(self) -> "UGraph":
        return UGraph(self.n, self.edges())

    @classmethod
    def complete(cls, n: int) -> "UGraph":
        return cls(n, itertools.combinations(range(n), 2))

    def __eq__(self, other) -> bool:
        if not isinstance(other, UGraph):
            return NotImplemented
        return self.n == other.n and self._adj == other._adj

    def __repr__(self) -> str:
        return f"UGraph(n={self.n}, edges={self.edges()})"


def edges_symmetric(g: UGraph) -> bool:
    """Adjacency symmetry check, used by debug assertions in the learners."""
    return all(a in g._adj[b] for a in range(g.n) for b in g._adj[a])


def markov_blanket(g: UGraph, a: int) -> set[int]:
    """Neighbors of ``a``: the variables that shield it from the rest."""
    return g.neighbors(a)


def maximal_cliques(g: UGraph) -> list[tuple[int, ...]]:
    """All inclusion-maximal cliques (Bron-Kerbosch with pivoting).

    Each clique is sorted and the list is in lexicographic order; isolated
    nodes appear as singleton cliques.
    """
    adj = [frozenset(g._adj[a]) for a in range(g.n)]
    out: list[tuple[int, ...]] = []

    def expand(r: set[int], p: set[int], x: set[int]) -> None:
        if not p and not x:
            if r:
                out.append(tuple(sorted(r)))
            return
        pivot = max(p | x, key=lambda u: len(adj[u] & p))
        for v in sorted(p - adj[pivot]):
            expand(r | {v}, p & adj[v], x & adj[v])
            p.remove(v)
            x.add(v)

    expand(set(), set(range(g.n)), set())
    return sorted(out)


@dataclass(frozen=True, order=True)
class Feature:
    """Indicator over a variable subset: fires when the assignment matches."""

    scope: tuple[int, ...]
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.scope:
            raise DataError("feature scope must be non-empty")
        if len(self.scope) != len(self.values):
            raise DataError("feature scope and values differ in length")
        if any(b <= a for a, b in zip(self.scope, self.scope[1:])):
            raise DataError("feature scope must be strictly increasing")

    def matches(self, row) -> bool:
        return all(row[a] == v for a, v in zip(self.scope, self.values))


@dataclass(frozen=True)
class CanonicalGraph:
    """An instantiated graph scoped to one canonical (full) assignment."""

    graph: UGraph
    context: Context

    def __post_init__(self) -> None:
        if not self.context.is_full(self.graph.n):
            raise DataError("canonical graph context must assign every variable")


@dataclass(frozen=True)
class CanonicalModel:
    """A set of canonical contexts with one instantiated graph each."""

    schema: VariableSchema
    graphs: tuple[CanonicalGraph, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "graphs", tuple(self.graphs))
        contexts = [cg.context for cg in self.graphs]
        if len(set(contexts)) != len(contexts):
            raise DataError("canonical contexts must be pairwise distinct")
        for cg in self.graphs:
            if cg.graph.n != self.schema.n:
                raise DataError("all canonical graphs must span the schema")
            check_context(cg.context, self.schema)


def generate_features(cm: CanonicalModel) -> set[Feature]:
    """Maximal cliques of every canonical graph, projected onto its context.

    The result is a set: identical (scope, values) projections from different
    contexts collapse to one feature.
    """
    feats: set[Feature] = set()
    for cg in cm.graphs:
        vals = cg.context.values
        for clique in maximal_cliques(cg.graph):
            feats.add(Feature(clique, tuple(vals[a] for a in clique)))
    return feats


def induce_graph(feats, n: int) -> UGraph:
    """Graph with an edge wherever two variables share a feature scope."""
    g = UGraph(n)
    for f in feats:
        if f.scope[-1] >= n:
            raise DataError(f"feature scope {f.scope} outside graph of size {n}")
        for a, b in itertools.combinations(f.scope, 2):
            g.add_edge(a, b)
    return g


def _matches_context(f: Feature, ctx: Context) -> bool:
    # True when every context variable appears in the scope with equal value.
    pos = {a: i for i, a in enumerate(f.scope)}
    for w, val in ctx.items():
        i = pos.get(w)
        if i is None or f.values[i] != val:
            return False
    return True


def encodes_context_independence(feats, a: int, b: int, ctx: Context) -> bool:
    """Whether the feature set asserts X_a independent of X_b in context ``ctx``.

    True iff no feature that instantiates the context (scope covers ctx.vars
    with matching values) contains both variables in its scope.
    """
    if a == b:
        raise DataError("variables must differ")
    if a in ctx.vars or b in ctx.vars:
        raise DataError("tested variable appears in the context")
    for f in feats:
        if a in f.scope and b in f.scope and _matches_context(f, ctx):
            return False
    return True


def clique_table_features(g: UGraph, schema: VariableSchema) -> set[Feature]:
    """One indicator per assignment of each maximal clique.

    This is the table-potential reading of a plain graph, used to fit weights
    for single-graph structures.
    """
    if g.n != schema.n:
        raise DataError("graph and schema disagree on variable count")
    feats: set[Feature] = set()
    for clique in maximal_cliques(g):
        for vals in itertools.product(*(range(schema.arities[a]) for a in clique)):
            feats.add(Feature(clique, vals))
    return feats


# --- JSON forms -----------------------------------------------------------


def schema_to_json(schema: VariableSchema) -> dict:
    return {
        "names": list(schema.names),
        "arities": list(schema.arities),
        "labels": None
        if schema.labels is None
        else [None if l is None else list(l) for l in schema.labels],
    }


def schema_from_json(obj: dict) -> VariableSchema:
    labels = obj.get("labels")
    if labels is not None:
        labels = tuple(None if l is None else tuple(l) for l in labels)
    return VariableSchema(tuple(obj["names"]), tuple(int(r) for r in obj["arities"]), labels)


def _require_format(obj: dict, kind: str) -> None:
    if obj.get("format") != FORMAT:
        raise DataError(f"unsupported format {obj.get('format')!r}, expected {FORMAT!r}")
    if obj.get("kind") != kind:
        raise DataError(f"expected a {kind!r} file, found {obj.get('kind')!r}")


def canonical_model_to_json(cm: CanonicalModel) -> dict:
    return {
        "format": FORMAT,
        "kind": "canonical_model",
        "schema": schema_to_json(cm.schema),
        "graphs": [
            {
                "context": list(cg.context.values),
                "edges": [list(e) for e in cg.graph.edges()],
            }
            for cg in cm.graphs
        ],
    }


def canonical_model_from_json(obj: dict) -> CanonicalModel:
    _require_format(obj, "canonical_model")
    schema = schema_from_json(obj["schema"])
    graphs = []
    for entry in obj["graphs"]:
        g = UGraph(schema.n, [tuple(e) for e in entry["edges"]])
        graphs.append(CanonicalGraph(g, full_context(entry["context"])))
    return CanonicalModel(schema, tuple(graphs))


def graph_to_json(schema: VariableSchema, g: UGraph) -> dict:
    return {
        "format": FORMAT,
        "kind": "graph",
        "schema": schema_to_json(schema),
        "edges": [list(e) for e in g.edges()],
    }


def graph_from_json(obj: dict) -> tuple[VariableSchema, UGraph]:
    _require_format(obj, "graph")
    schema = schema_from_json(obj["schema"])
    return schema, UGraph(schema.n, [tuple(e) for e in obj["edges"]])


def feature_set_to_json(feats, weights=None) -> dict:
    """Serialize features (optionally weighted) sorted by (scope, values)."""
    items = sorted(feats)
    if weights is not None:
        by_feat = dict(zip(feats, weights))
        entries = [
            {"scope": list(f.scope), "values": list(f.values), "weight": float(by_feat[f])}
            for f in items
        ]
    else:
        entries = [{"scope": list(f.scope), "values": list(f.values)} for f in items]
    return {"format": FORMAT, "kind": "features", "features": entries}


def feature_set_from_json(obj: dict) -> tuple[list[Feature], list[float] | None]:
    _require_format(obj, "features")
    feats = []
    weights = []
    weighted = False
    for entry in obj["features"]:
        feats.append(Feature(tuple(entry["scope"]), tuple(entry["values"])))
        if "weight" in entry:
            weighted = True
            weights.append(float(entry["weight"]))
    if weighted and len(weights) != len(feats):
        raise DataError("either all or no features may carry weights")
    return feats, (weights if weighted else None)

"""Log-linear Markov networks over discrete variables.

The joint is p(x) = exp(sum_j w_j f_j(x)) / Z with indicator features f_j.
Inference here is exact by enumeration of val(V) (capped, see
ENUMERATION_CAP), which covers partition, KL divergence, and sampling.
Weight learning maximizes the pseudo-likelihood, the product of per-variable
conditionals, which never needs Z.  Natural logarithms throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .dataset import Dataset, VariableSchema, full_context
from .errors import DataError, NumericalError
from .structures import (
    CanonicalGraph,
    CanonicalModel,
    FORMAT,
    Feature,
    UGraph,
    canonical_model_from_json,
    canonical_model_to_json,
    schema_from_json,
    schema_to_json,
)

__all__ = [
    "LogLinearModel",
    "GroundTruth",
    "ENUMERATION_CAP",
    "enumerate_states",
    "log_score",
    "partition",
    "kl_divergence",
    "pseudo_log_likelihood",
    "pll_gradient",
    "fit_weights",
    "sample",
    "synth_model",
    "model_to_json",
    "model_from_json",
    "ground_truth_to_json",
    "ground_truth_from_json",
]

ENUMERATION_CAP = 2**24


@dataclass(frozen=True, eq=False)
class LogLinearModel:
    """Features plus aligned weights over a shared schema."""

    schema: VariableSchema
    features: tuple[Feature, ...]
    weights: np.ndarray

    def __post_init__(self) -> None:
        feats = tuple(self.features)
        w = np.asarray(self.weights, dtype=np.float64).copy()
        if w.ndim != 1 or w.shape[0] != len(feats):
            raise DataError("weights must align one-to-one with features")
        if not np.all(np.isfinite(w)):
            raise DataError("weights must be finite")
        for f in feats:
            if f.scope[-1] >= self.schema.n:
                raise DataError(f"feature scope {f.scope} outside schema")
            for a, v in zip(f.scope, f.values):
                if not 0 <= v < self.schema.arities[a]:
                    raise DataError(f"feature value {v} invalid for variable {a}")
        w.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "weights", w)


def enumerate_states(schema: VariableSchema) -> np.ndarray:
    """All joint assignments, first variable slowest (row-major)."""
    size = schema.joint_size()
    if size > ENUMERATION_CAP:
        raise NumericalError(
            f"{size} joint states exceed the enumeration cap ({ENUMERATION_CAP}); "
            "use sampling-only workflows"
        )
    grids = np.meshgrid(*[np.arange(r) for r in schema.arities], indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1).astype(np.int64)


def _match_matrix(features, states: np.ndarray) -> np.ndarray:
    """Boolean (rows x features) matrix of indicator firings."""
    out = np.empty((states.shape[0], len(features)), dtype=bool)
    for j, f in enumerate(features):
        col = np.ones(states.shape[0], dtype=bool)
        for a, v in zip(f.scope, f.values):
            col &= states[:, a] == v
        out[:, j] = col
    return out


def log_score(mdl: LogLinearModel, x) -> float:
    """Unnormalized log probability: sum of weights of the features x matches."""
    total = 0.0
    for f, w in zip(mdl.features, mdl.weights):
        if f.matches(x):
            total += float(w)
    return total


def _all_scores(mdl: LogLinearModel, states: np.ndarray) -> np.ndarray:
    return _match_matrix(mdl.features, states).astype(np.float64) @ mdl.weights


def partition(mdl: LogLinearModel) -> float:
    """log Z by exact enumeration with max-subtraction."""
    scores = _all_scores(mdl, enumerate_states(mdl.schema))
    return float(logsumexp(scores))


def kl_divergence(p: LogLinearModel, q: LogLinearModel) -> float:
    """KL(p || q) by full enumeration; tiny float negatives report as 0."""
    if p.schema != q.schema:
        raise DataError("models must share a schema")
    states = enumerate_states(p.schema)
    lp = _all_scores(p, states)
    lp -= logsumexp(lp)
    lq = _all_scores(q, states)
    lq -= logsumexp(lq)
    kl = float(np.exp(lp) @ (lp - lq))
    if -1e-12 < kl < 0.0:
        kl = 0.0
    return kl


class _PllWorkspace:
    """Precomputed masks for repeated pseudo-likelihood evaluations.

    Rows are deduplicated with multiplicities (the objective is a sum of
    identical per-row terms), so evaluation cost scales with the number of
    distinct rows, not the dataset size.
    """

    def __init__(self, schema: VariableSchema, features, rows: np.ndarray):
        self.schema = schema
        self.features = tuple(features)
        uniq, mult = np.unique(rows, axis=0, return_counts=True)
        self.uniq = uniq
        self.mult = mult.astype(np.float64)
        self.match = _match_matrix(self.features, uniq).astype(np.float64)
        self.total_rows = float(rows.shape[0])
        # Per variable a: feature indices containing a, the value each needs
        # at a, the match on scope minus a, and the observed-value indicator.
        self.per_var = []
        for a in range(schema.n):
            idx = np.array(
                [j for j, f in enumerate(self.features) if a in f.scope], dtype=np.int64
            )
            vals = np.array(
                [self.features[j].values[self.features[j].scope.index(a)] for j in idx],
                dtype=np.int64,
            )
            minus = np.ones((uniq.shape[0], idx.size), dtype=np.float64)
            for k, j in enumerate(idx):
                f = self.features[j]
                col = np.ones(uniq.shape[0], dtype=bool)
                for b, v in zip(f.scope, f.values):
                    if b != a:
                        col &= uniq[:, b] == v
                minus[:, k] = col
            observed = (uniq[:, a][:, None] == vals[None, :]).astype(np.float64)
            self.per_var.append((idx, vals, minus, observed))

    def _conditionals(self, w: np.ndarray):
        """Per-variable score matrices S_a (uniq x arity) and their logsumexp."""
        base = self.match @ w
        out = []
        for a in range(self.schema.n):
            idx, vals, minus, _ = self.per_var[a]
            ra = self.schema.arities[a]
            s = np.empty((self.uniq.shape[0], ra), dtype=np.float64)
            own = self.match[:, idx] @ w[idx] if idx.size else 0.0
            for v in range(ra):
                sel = vals == v
                add = minus[:, sel] @ w[idx[sel]] if idx.size else 0.0
                s[:, v] = base - own + add
            out.append((s, logsumexp(s, axis=1)))
        return out

    def value(self, w: np.ndarray) -> float:
        total = 0.0
        for a, (s, lse) in enumerate(self._conditionals(w)):
            obs = np.take_along_axis(s, self.uniq[:, a][:, None], axis=1)[:, 0]
            total += float(self.mult @ (obs - lse))
        return total

    def gradient(self, w: np.ndarray) -> np.ndarray:
        grad = np.zeros_like(w)
        conds = self._conditionals(w)
        for a in range(self.schema.n):
            idx, vals, minus, observed = self.per_var[a]
            if idx.size == 0:
                continue
            s, lse = conds[a]
            probs = np.exp(s - lse[:, None])
            grad[idx] += ((observed - probs[:, vals]) * minus).T @ self.mult
        return grad


def _check_schema(mdl: LogLinearModel, d: Dataset) -> None:
    if mdl.schema != d.schema:
        raise DataError("model and dataset schemas differ")


def pseudo_log_likelihood(mdl: LogLinearModel, d: Dataset) -> float:
    """Sum over rows and variables of log p(x_a | x_rest)."""
    _check_schema(mdl, d)
    return _PllWorkspace(mdl.schema, mdl.features, d.rows).value(mdl.weights)


def pll_gradient(mdl: LogLinearModel, d: Dataset) -> np.ndarray:
    """Gradient of the pseudo-log-likelihood in the model's weights."""
    _check_schema(mdl, d)
    return _PllWorkspace(mdl.schema, mdl.features, d.rows).gradient(mdl.weights)


def fit_weights(
    features,
    d: Dataset,
    reg: float = 0.0,
    *,
    max_iter: int = 500,
    tol: float = 1e-5,
) -> LogLinearModel:
    """Maximize PLL - reg * ||w||^2 / 2 by gradient ascent with backtracking.

    Starts from zero weights; stops when the gradient sup-norm drops below
    ``tol`` or after ``max_iter`` iterations.
    """
    if reg < 0:
        raise DataError("regularization strength must be non-negative")
    feats = tuple(sorted(set(features)))
    ws = _PllWorkspace(d.schema, feats, d.rows)
    w = np.zeros(len(feats), dtype=np.float64)

    def objective(wv: np.ndarray) -> float:
        val = ws.value(wv) - 0.5 * reg * float(wv @ wv)
        if not np.isfinite(val):
            raise NumericalError("pseudo-likelihood objective is not finite")
        return val

    f = objective(w)
    step = 1.0
    for _ in range(max_iter):
        g = ws.gradient(w) - reg * w
        if g.size == 0 or float(np.abs(g).max()) < tol:
            break
        gsq = float(g @ g)
        step = min(step * 2.0, 1e3)
        while step >= 1e-14:
            trial = w + step * g
            ft = objective(trial)
            if ft >= f + 1e-4 * step * gsq:
                w, f = trial, ft
                break
            step *= 0.5
        if step < 1e-14:
            break
    return LogLinearModel(d.schema, feats, w)


def sample(mdl: LogLinearModel, count: int, seed: int) -> Dataset:
    """Exact draws from the enumerated joint, reproducible per seed."""
    if count <= 0:
        raise DataError("sample count must be positive")
    if not 0 <= int(seed) < 2**64:
        raise DataError("seed must be a 64-bit unsigned integer")
    states = enumerate_states(mdl.schema)
    scores = _all_scores(mdl, states)
    probs = np.exp(scores - logsumexp(scores))
    probs /= probs.sum()
    rng = np.random.default_rng(int(seed))
    idx = rng.choice(states.shape[0], size=count, p=probs)
    return Dataset(mdl.schema, states[idx])


@dataclass(frozen=True)
class GroundTruth:
    """A generating model plus its canonical-structure reading."""

    model: LogLinearModel
    canonical: CanonicalModel
    w_index: int


def synth_model(
    n: int, weight_low: float = -1.0, weight_high: float = 1.0, seed: int = 0
) -> GroundTruth:
    """Binary model whose structure flips with a context variable w (id 0).

    Triple features (w, a, b) fixed at w = 0 couple every pair outside w when
    w takes value 0; pair features (w, a) over all four value combinations
    tie every variable to w in both contexts; unary features cover every
    variable/value.  Weights are drawn uniformly from [weight_low,
    weight_high).  The canonical reading is a complete graph for every
    context with w = 0 and a star centered at w for w = 1, over all of
    val(V).
    """
    if n < 3:
        raise DataError("synthetic model needs at least 3 variables")
    if weight_low > weight_high:
        raise DataError("weight range is empty")
    schema = VariableSchema(tuple(f"x{i}" for i in range(n)), (2,) * n)
    w = 0
    others = range(1, n)
    feats: list[Feature] = []
    for a, b in itertools.combinations(others, 2):
        for va, vb in itertools.product((0, 1), repeat=2):
            feats.append(Feature((w, a, b), (0, va, vb)))
    for a in others:
        for vw, va in itertools.product((0, 1), repeat=2):
            feats.append(Feature((w, a), (vw, va)))
    for a in range(n):
        for v in (0, 1):
            feats.append(Feature((a,), (v,)))
    feats = sorted(feats)
    rng = np.random.default_rng(int(seed))
    weights = rng.uniform(weight_low, weight_high, size=len(feats))
    model = LogLinearModel(schema, tuple(feats), weights)

    star = UGraph(n, ((w, a) for a in others))
    complete = UGraph.complete(n)
    graphs = []
    for values in itertools.product((0, 1), repeat=n):
        g = complete.copy() if values[w] == 0 else star.copy()
        graphs.append(CanonicalGraph(g, full_context(values)))
    return GroundTruth(model, CanonicalModel(schema, tuple(graphs)), w)


# --- JSON forms -----------------------------------------------------------


def model_to_json(mdl: LogLinearModel) -> dict:
    order = sorted(range(len(mdl.features)), key=lambda j: mdl.features[j])
    return {
        "format": FORMAT,
        "kind": "model",
        "schema": schema_to_json(mdl.schema),
        "features": [
            {
                "scope": list(mdl.features[j].scope),
                "values": list(mdl.features[j].values),
                "weight": float(mdl.weights[j]),
            }
            for j in order
        ],
    }


def model_from_json(obj: dict) -> LogLinearModel:
    if obj.get("format") != FORMAT:
        raise DataError(f"unsupported format {obj.get('format')!r}")
    if obj.get("kind") != "model":
        raise DataError(f"expected a 'model' file, found {obj.get('kind')!r}")
    schema = schema_from_json(obj["schema"])
    feats = []
    weights = []
    for entry in obj["features"]:
        feats.append(Feature(tuple(entry["scope"]), tuple(entry["values"])))
        weights.append(float(entry["weight"]))
    return LogLinearModel(schema, tuple(feats), np.asarray(weights))


def ground_truth_to_json(gt: GroundTruth) -> dict:
    return {
        "format": FORMAT,
        "kind": "ground_truth",
        "w_index": gt.w_index,
        "model": model_to_json(gt.model),
        "canonical": canonical_model_to_json(gt.canonical),
    }


def ground_truth_from_json(obj: dict) -> GroundTruth:
    if obj.get("format") != FORMAT:
        raise DataError(f"unsupported format {obj.get('format')!r}")
    if obj.get("kind") != "ground_truth":
        raise DataError(f"expected a 'ground_truth' file, found {obj.get('kind')!r}")
    return GroundTruth(
        model_from_json(obj["model"]),
        canonical_model_from_json(obj["canonical"]),
        int(obj["w_index"]),
    )

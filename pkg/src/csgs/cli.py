"""Command-line pipeline: generate models and data, learn structures, fit
weights, score divergences, and run benchmark sweeps.

Output is machine-first (JSON and CSV).  Every run writes a manifest beside
its outputs recording the command, parameters, seed, and paths; outputs are
byte-identical across repeated runs except for timing fields.  Exit codes:
0 success, 1 usage, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv as _csv
import itertools
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

from .counts import DEFAULT_LEAF_THRESHOLD, build_index
from .dataset import Dataset, load_csv, save_csv, unique_rows
from .errors import DataError, NumericalError
from .learners import LearnerConfig, csgs, gsmn, stats_to_json
from .model import (
    LogLinearModel,
    fit_weights,
    ground_truth_from_json,
    ground_truth_to_json,
    kl_divergence,
    model_from_json,
    model_to_json,
    sample,
    synth_model,
)
from .structures import (
    FORMAT,
    canonical_model_from_json,
    canonical_model_to_json,
    clique_table_features,
    feature_set_to_json,
    generate_features,
    graph_from_json,
    graph_to_json,
)

DEFAULT_ALPHA = 0.05
DEFAULT_L2 = 0.01
DEFAULT_WEIGHT_RANGE = (-1.0, 1.0)


class _Parser(argparse.ArgumentParser):
    # Usage problems exit 1 (argparse's default is 2, reserved for data errors).
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: line {exc.lineno}: {exc.msg}") from None


def _write_manifest(path, command, parameters, inputs, outputs, started) -> None:
    _write_json(
        path,
        {
            "format": FORMAT,
            "kind": "manifest",
            "command": command,
            "parameters": parameters,
            "seed": parameters.get("seed"),
            "inputs": sorted(str(p) for p in inputs),
            "outputs": sorted(str(p) for p in outputs),
            "started_at": started,
            "finished_at": _utcnow(),
        },
    )


def _parse_weight_range(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise DataError(f"weight range must be 'low,high', got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise DataError(f"weight range must be numeric, got {text!r}") from None
    if lo > hi:
        raise DataError("weight range is empty")
    return lo, hi


def _parse_order(text: str, n: int) -> tuple[int, ...] | None:
    if text == "asc":
        return None
    if text == "desc":
        return tuple(reversed(range(n)))
    try:
        order = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise DataError(f"node order must be 'asc', 'desc', or comma ids, got {text!r}") from None
    return order


def _load_data(args) -> Dataset:
    return load_csv(args.data, header=args.header)


def _structure_features(obj: dict, data: Dataset):
    """Features implied by a structure file (canonical model or graph)."""
    kind = obj.get("kind")
    if kind == "canonical_model":
        cm = canonical_model_from_json(obj)
        if cm.schema.arities != data.schema.arities:
            raise DataError("structure and dataset schemas differ")
        return generate_features(cm)
    if kind == "graph":
        schema, g = graph_from_json(obj)
        if schema.arities != data.schema.arities:
            raise DataError("structure and dataset schemas differ")
        return clique_table_features(g, schema)
    raise DataError(f"not a structure file (kind={kind!r})")


# --- commands ---------------------------------------------------------------


def cmd_gen_model(args) -> int:
    started = _utcnow()
    lo, hi = _parse_weight_range(args.weight_range)
    gt = synth_model(args.num_vars, lo, hi, args.seed)
    model_path = f"{args.out}.model.json"
    truth_path = f"{args.out}.truth.json"
    _write_json(model_path, model_to_json(gt.model))
    _write_json(truth_path, ground_truth_to_json(gt))
    _write_manifest(
        f"{args.out}.manifest.json",
        "gen-model",
        {
            "n": args.num_vars,
            "seed": args.seed,
            "weight_range": [lo, hi],
        },
        [],
        [model_path, truth_path],
        started,
    )
    print(json.dumps({"model": model_path, "truth": truth_path}))
    return 0


def cmd_gen_data(args) -> int:
    started = _utcnow()
    mdl = _read_model_file(args.model)
    data = sample(mdl, args.rows, args.seed)
    save_csv(data, args.out)
    _write_manifest(
        f"{args.out}.manifest.json",
        "gen-data",
        {"rows": args.rows, "seed": args.seed},
        [args.model],
        [args.out],
        started,
    )
    print(json.dumps({"data": args.out, "rows": args.rows}))
    return 0


def cmd_learn(args) -> int:
    started = _utcnow()
    data = _load_data(args)
    order = _parse_order(args.order, data.schema.n)
    cfg = LearnerConfig(
        alpha=args.alpha,
        node_order=order,
        leaf_threshold=args.leaf_threshold,
        parallel=args.parallel,
    )
    progress = None
    if args.progress:
        def progress(done, total):
            print(f"learned context {done}/{total}", file=sys.stderr)

    rows = len(data)
    m = len(unique_rows(data))
    index = build_index(data, cfg.leaf_threshold) if args.tree_stats else None
    outputs = []
    structure_path = f"{args.out}.structure.json"
    stats_path = f"{args.out}.stats.json"
    if args.algorithm == "csgs":
        cm, feats, stats = csgs(data, cfg, progress=progress, index=index)
        _write_json(structure_path, canonical_model_to_json(cm))
        if args.features:
            _write_json(args.features, feature_set_to_json(feats))
            outputs.append(args.features)
    else:
        if args.features:
            raise DataError("--features is only available for the csgs algorithm")
        g, stats = gsmn(data, cfg, index=index)
        _write_json(structure_path, graph_to_json(data.schema, g))
    record = stats_to_json(stats, algorithm=args.algorithm, n=data.schema.n, rows=rows, m=m)
    if index is not None:
        record["count_index"] = index.stats()
    _write_json(stats_path, record)
    outputs = [structure_path, stats_path] + outputs
    _write_manifest(
        f"{args.out}.manifest.json",
        "learn",
        {
            "algorithm": args.algorithm,
            "alpha": args.alpha,
            "order": args.order,
            "leaf_threshold": args.leaf_threshold,
            "parallel": args.parallel,
            "header": args.header,
        },
        [args.data],
        outputs,
        started,
    )
    print(json.dumps({"structure": structure_path, "stats": stats_path}))
    return 0


def cmd_fit(args) -> int:
    started = _utcnow()
    data = _load_data(args)
    obj = _read_json(args.structure)
    feats = _structure_features(obj, data)
    mdl = fit_weights(feats, data, args.l2)
    _write_json(args.out, model_to_json(mdl))
    _write_manifest(
        f"{args.out}.manifest.json",
        "fit",
        {"l2": args.l2, "header": args.header},
        [args.structure, args.data],
        [args.out],
        started,
    )
    print(json.dumps({"model": args.out, "features": len(mdl.features)}))
    return 0


def _read_model_file(path) -> LogLinearModel:
    obj = _read_json(path)
    kind = obj.get("kind")
    if kind == "model":
        return model_from_json(obj)
    if kind == "ground_truth":
        return ground_truth_from_json(obj).model
    raise DataError(f"{path}: expected a model or ground-truth file, found kind={kind!r}")


def cmd_eval(args) -> int:
    started = _utcnow()
    truth = _read_model_file(args.truth)
    obj = _read_json(args.model)
    kind = obj.get("kind")
    inputs = [args.model, args.truth]
    fitted_from = None
    if kind in ("model", "ground_truth"):
        mdl = model_from_json(obj) if kind == "model" else ground_truth_from_json(obj).model
    elif kind in ("canonical_model", "graph"):
        if args.data is None:
            raise DataError("evaluating a structure needs --data to fit weights")
        data = _load_data(args)
        feats = _structure_features(obj, data)
        mdl = fit_weights(feats, data, args.l2)
        fitted_from = args.data
        inputs.append(args.data)
    else:
        raise DataError(f"{args.model}: unsupported kind {kind!r}")
    kl = kl_divergence(truth, mdl)
    record = {
        "format": FORMAT,
        "kind": "kl",
        "kl": kl,
        "model": str(args.model),
        "truth": str(args.truth),
        "fitted_from": fitted_from,
        "l2": args.l2 if fitted_from else None,
    }
    if args.out:
        _write_json(args.out, record)
        _write_manifest(
            f"{args.out}.manifest.json",
            "eval",
            {"l2": args.l2, "header": args.header},
            inputs,
            [args.out],
            started,
        )
    print(json.dumps(record))
    return 0


def _bench_cell(spec: dict, cell: tuple) -> dict:
    algorithm, n, rows, seed = cell
    lo, hi = spec["weight_range"]
    gt = synth_model(n, lo, hi, seed)
    data = sample(gt.model, rows, seed)
    cfg = LearnerConfig(alpha=spec["alpha"], leaf_threshold=spec["leaf_threshold"])
    if algorithm == "csgs":
        _, feats, stats = csgs(data, cfg)
    else:
        g, stats = gsmn(data, cfg)
        feats = clique_table_features(g, data.schema)
    fitted = fit_weights(feats, data, spec["l2"])
    kl = kl_divergence(gt.model, fitted)
    return {
        "algorithm": algorithm,
        "n": n,
        "rows": rows,
        "seed": seed,
        "kl": kl,
        "tests": stats.total_tests,
        "wall_ms": round(stats.wall_time * 1000.0, 3),
    }


def _read_sweep(path) -> dict:
    obj = _read_json(path)
    spec = {}
    for key in ("n", "rows", "seeds", "algorithms"):
        if key not in obj:
            raise DataError(f"{path}: sweep is missing the {key!r} list")
        if not isinstance(obj[key], list) or not obj[key]:
            raise DataError(f"{path}: sweep key {key!r} must be a non-empty list")
        spec[key] = obj[key]
    for alg in spec["algorithms"]:
        if alg not in ("csgs", "gsmn"):
            raise DataError(f"{path}: unknown algorithm {alg!r}")
    spec["alpha"] = float(obj.get("alpha", DEFAULT_ALPHA))
    spec["l2"] = float(obj.get("l2", DEFAULT_L2))
    spec["leaf_threshold"] = int(obj.get("leaf_threshold", DEFAULT_LEAF_THRESHOLD))
    wr = obj.get("weight_range", list(DEFAULT_WEIGHT_RANGE))
    if not isinstance(wr, list) or len(wr) != 2:
        raise DataError(f"{path}: weight_range must be [low, high]")
    spec["weight_range"] = (float(wr[0]), float(wr[1]))
    return spec


def cmd_bench(args) -> int:
    started = _utcnow()
    spec = _read_sweep(args.sweep)
    cells = sorted(
        itertools.product(spec["algorithms"], spec["n"], spec["rows"], spec["seeds"])
    )
    if args.parallel:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(lambda c: _bench_cell(spec, c), cells))
    else:
        results = [_bench_cell(spec, c) for c in cells]
    fields = ["algorithm", "n", "rows", "seed", "kl", "tests", "wall_ms"]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(fields)
        for r in results:
            writer.writerow(
                [r["algorithm"], r["n"], r["rows"], r["seed"], f"{r['kl']:.12g}", r["tests"], r["wall_ms"]]
            )
    _write_manifest(
        f"{args.out}.manifest.json",
        "bench",
        {"sweep": str(args.sweep), "parallel": args.parallel},
        [args.sweep],
        [args.out],
        started,
    )
    print(json.dumps({"table": args.out, "cells": len(results)}))
    return 0


# --- wiring -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="csgs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-model", help="generate a synthetic two-context model")
    p.add_argument("-n", "--num-vars", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weight-range", default="-1,1", metavar="LO,HI")
    p.add_argument("--out", required=True, metavar="PREFIX")
    p.set_defaults(func=cmd_gen_model)

    p = sub.add_parser("gen-data", help="sample a dataset from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="CSV")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("learn", help="learn a structure from a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--algorithm", choices=("csgs", "gsmn"), required=True)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--order", default="asc", help="asc, desc, or comma-separated ids")
    p.add_argument("--leaf-threshold", type=int, default=DEFAULT_LEAF_THRESHOLD)
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--header", action="store_true", help="data file has a header line")
    p.add_argument("--progress", action="store_true", help="per-context progress on stderr")
    p.add_argument("--tree-stats", action="store_true", help="embed count-index counters in stats")
    p.add_argument("--features", metavar="PATH", help="also write the generated feature set (csgs)")
    p.add_argument("--out", required=True, metavar="PREFIX")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("fit", help="fit weights for a learned structure")
    p.add_argument("--structure", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--l2", type=float, default=DEFAULT_L2)
    p.add_argument("--header", action="store_true")
    p.add_argument("--out", required=True, metavar="MODEL_JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="KL divergence of a model or structure vs ground truth")
    p.add_argument("--model", required=True, help="model JSON or structure JSON")
    p.add_argument("--truth", required=True, help="ground-truth or model JSON")
    p.add_argument("--data", help="dataset for weight fitting when --model is a structure")
    p.add_argument("--l2", type=float, default=DEFAULT_L2)
    p.add_argument("--header", action="store_true")
    p.add_argument("--out", help="write the KL record here as JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run a sweep and emit a CSV table")
    p.add_argument("--sweep", required=True, help="JSON file with explicit lists per axis")
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--out", required=True, metavar="CSV")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except DataError as exc:
        print(f"csgs: data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"csgs: i/o error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError, OverflowError) as exc:
        print(f"csgs: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Discrete datasets: schemas, partial assignments, CSV ingestion, unique rows.

All values are stored as non-negative integer codes.  Categorical CSV columns
are mapped to codes in first-appearance order and the mapping is kept in the
schema, so files can be written back with their original labels.  Arities are
inferred from the data (max code + 1, never below 2) and are shared by every
module downstream; a dataset is immutable once constructed.
"""

from __future__ import annotations

import csv as _csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = [
    "VariableSchema",
    "Context",
    "Dataset",
    "EMPTY_CONTEXT",
    "full_context",
    "check_context",
    "load_csv",
    "save_csv",
    "unique_rows",
]


@dataclass(frozen=True)
class VariableSchema:
    """Names and arities of the domain variables.

    ``labels``, when present, gives the code -> label mapping per column for
    data that arrived as categorical text (``None`` entry = numeric column).
    """

    names: tuple[str, ...]
    arities: tuple[int, ...]
    labels: tuple[tuple[str, ...] | None, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.names) != len(self.arities):
            raise DataError("names and arities differ in length")
        if len(set(self.names)) != len(self.names):
            raise DataError("variable names must be distinct")
        if any(int(r) < 2 for r in self.arities):
            raise DataError("every arity must be at least 2")
        if self.labels is not None and len(self.labels) != len(self.names):
            raise DataError("labels must cover every column")

    @property
    def n(self) -> int:
        return len(self.names)

    def joint_size(self) -> int:
        """Number of full assignments |val(V)|."""
        size = 1
        for r in self.arities:
            size *= int(r)
        return size


@dataclass(frozen=True, order=True)
class Context:
    """A partial assignment: strictly increasing variable ids with codes.

    A context over all variables is a canonical (full) assignment.
    """

    vars: tuple[int, ...]
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.vars) != len(self.values):
            raise DataError("context vars and values differ in length")
        if any(b <= a for a, b in zip(self.vars, self.vars[1:])):
            raise DataError("context variables must be strictly increasing")

    def __len__(self) -> int:
        return len(self.vars)

    def items(self):
        return zip(self.vars, self.values)

    def is_full(self, n: int) -> bool:
        return self.vars == tuple(range(n))

    def restrict(self, keep) -> "Context":
        """Sub-context over ``keep``, which must all be assigned here."""
        kept = sorted(int(a) for a in keep)
        pos = {a: i for i, a in enumerate(self.vars)}
        try:
            vals = tuple(self.values[pos[a]] for a in kept)
        except KeyError as exc:
            raise DataError(f"variable {exc.args[0]} not assigned in context") from None
        return Context(tuple(kept), vals)


EMPTY_CONTEXT = Context((), ())


def full_context(values) -> Context:
    """Canonical assignment over variables 0..n-1."""
    vals = tuple(int(v) for v in values)
    return Context(tuple(range(len(vals))), vals)


def check_context(ctx: Context, schema: VariableSchema) -> None:
    """Raise DataError if the context names a variable or value outside the schema."""
    for a, v in ctx.items():
        if not 0 <= a < schema.n:
            raise DataError(f"variable {a} outside schema of size {schema.n}")
        if not 0 <= v < schema.arities[a]:
            raise DataError(f"value {v} invalid for variable {a} (arity {schema.arities[a]})")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Complete discrete samples: one row per draw, codes per the schema."""

    schema: VariableSchema
    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.ascontiguousarray(np.asarray(self.rows, dtype=np.int64))
        if rows.ndim != 2 or rows.shape[1] != self.schema.n:
            raise DataError("rows must be a 2-d array matching the schema width")
        if rows.shape[0] == 0:
            raise DataError("dataset must contain at least one row")
        if rows.min() < 0:
            raise DataError("negative code in dataset")
        if (rows.max(axis=0) >= np.asarray(self.schema.arities)).any():
            raise DataError("code exceeds declared arity")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return int(self.rows.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.schema == other.schema and np.array_equal(self.rows, other.rows)


def _encode_column(cells: list[str]) -> tuple[np.ndarray, tuple[str, ...] | None]:
    # Numeric column iff every field is a non-negative integer; anything else
    # makes the whole column categorical, coded by first appearance.
    try:
        vals = [int(c) for c in cells]
    except ValueError:
        vals = None
    if vals is not None and min(vals) >= 0:
        return np.asarray(vals, dtype=np.int64), None
    seen: dict[str, int] = {}
    codes = [seen.setdefault(c, len(seen)) for c in cells]
    return np.asarray(codes, dtype=np.int64), tuple(seen)


def load_csv(path, header: bool = False) -> Dataset:
    """Load a comma-separated sample file.

    One sample per line; fields are non-negative integer codes or categorical
    labels (mapped to codes in first-appearance order).  Arity per column is
    max observed code + 1, clamped to a minimum of 2.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        raw = [row for row in _csv.reader(fh) if row]
    if not raw:
        raise DataError(f"{path}: empty file")
    names = None
    if header:
        names = [c.strip() for c in raw[0]]
        raw = raw[1:]
        if not raw:
            raise DataError(f"{path}: header present but no data rows")
    offset = 2 if header else 1
    ncol = len(raw[0])
    for i, row in enumerate(raw):
        if len(row) != ncol:
            raise DataError(
                f"{path}: row {i + offset} has {len(row)} fields, expected {ncol}"
            )
    if names is None:
        names = [f"x{j}" for j in range(ncol)]
    cols = []
    labels: list[tuple[str, ...] | None] = []
    for j in range(ncol):
        cells = []
        for i, row in enumerate(raw):
            c = row[j].strip()
            if c == "":
                raise DataError(f"{path}: row {i + offset}, column {j}: empty field")
            cells.append(c)
        codes, lab = _encode_column(cells)
        cols.append(codes)
        labels.append(lab)
    arities = tuple(max(2, int(c.max()) + 1) for c in cols)
    lab_tuple = tuple(labels) if any(l is not None for l in labels) else None
    schema = VariableSchema(tuple(names), arities, lab_tuple)
    return Dataset(schema, np.stack(cols, axis=1))


def save_csv(d: Dataset, path, header: bool = False) -> None:
    """Write a dataset back to CSV, using original labels where known."""
    labels = d.schema.labels
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        if header:
            writer.writerow(d.schema.names)
        for row in d.rows.tolist():
            out = []
            for j, code in enumerate(row):
                lab = labels[j] if labels is not None else None
                out.append(lab[code] if lab is not None and code < len(lab) else str(code))
            writer.writerow(out)


def unique_rows(d: Dataset) -> list[tuple[Context, int]]:
    """Distinct full rows in first-appearance order, with multiplicities.

    The list length is the number of unique samples; multiplicities sum to
    the row count.
    """
    if len(d) == 0:
        raise DataError("empty dataset")
    counts: dict[tuple[int, ...], int] = {}
    for row in map(tuple, d.rows.tolist()):
        counts[row] = counts.get(row, 0) + 1
    allvars = tuple(range(d.schema.n))
    return [(Context(allvars, row), mult) for row, mult in counts.items()]

"""Pearson chi-square decisions for context-specific and conditional independence.

Context tests evaluate one contingency table restricted to an assignment;
conditional tests stratify over every assignment of the conditioning set and
sum the per-stratum statistics.  Tests abstain (decide independent with
``reliable=False``) when the stratum is too small for the asymptotics:
effective sample size below ``RELIABILITY_FACTOR`` times the degrees of
freedom, a Cochran-style rule.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from .counts import ContingencyTable, CountIndex, contingency
from .dataset import Context
from .errors import DataError, NumericalError

__all__ = [
    "TestResult",
    "chi_square",
    "context_independent",
    "conditional_independent",
    "RELIABILITY_FACTOR",
    "DOF_LIMIT",
]

RELIABILITY_FACTOR = 5
DOF_LIMIT = 10**6


@dataclass(frozen=True)
class TestResult:
    statistic: float
    dof: int
    p_value: float
    effective_n: int
    independent: bool
    reliable: bool


def _survival(statistic: float, dof: int) -> float:
    # Chi-square tail = regularized upper incomplete gamma Q(dof/2, x/2).
    return float(gammaincc(dof / 2.0, statistic / 2.0))


def _table_terms(cells: np.ndarray) -> tuple[float, int]:
    """Statistic and raw dof contribution of one table (may be negative).

    Cells with zero expected count are skipped; each all-zero row or column
    subtracts one degree of freedom.
    """
    total = cells.sum()
    rowsums = cells.sum(axis=1)
    colsums = cells.sum(axis=0)
    expected = np.outer(rowsums, colsums) / total
    mask = expected > 0
    diff = cells - expected
    stat = float((diff[mask] ** 2 / expected[mask]).sum())
    dof = (cells.shape[0] - 1) * (cells.shape[1] - 1)
    dof -= int((rowsums == 0).sum()) + int((colsums == 0).sum())
    return stat, dof


def _decide(stat: float, dof: int, effective_n: int, alpha: float) -> TestResult:
    p = _survival(stat, dof)
    reliable = effective_n >= RELIABILITY_FACTOR * dof
    independent = (p > alpha) or not reliable
    return TestResult(stat, dof, p, effective_n, independent, reliable)


def chi_square(table: ContingencyTable, alpha: float) -> TestResult:
    """Pearson test of one contingency table at significance ``alpha``."""
    cells = table.cells
    if cells.shape[0] < 2 or cells.shape[1] < 2:
        raise DataError("contingency table must be at least 2x2")
    total = int(cells.sum())
    if total == 0:
        return TestResult(0.0, 1, 1.0, 0, independent=True, reliable=False)
    stat, dof = _table_terms(cells)
    return _decide(stat, max(dof, 1), total, alpha)


def context_independent(
    ix: CountIndex, a: int, b: int, ctx: Context, alpha: float
) -> TestResult:
    """Test X_a against X_b inside the stratum selected by ``ctx``."""
    return chi_square(contingency(ix, a, b, ctx), alpha)


def conditional_independent(
    ix: CountIndex, a: int, b: int, cond, alpha: float
) -> TestResult:
    """Test X_a against X_b given the variable set ``cond``.

    Stratifies over every assignment of ``cond``; empty strata are skipped
    and their dof contribution removed.
    """
    cond = sorted({int(c) for c in cond})
    if a == b or a in cond or b in cond:
        raise DataError("tested variables must be distinct from the conditioning set")
    arities = ix.schema.arities
    ra, rb = arities[a], arities[b]
    strata = 1
    for c in cond:
        strata *= arities[c]
    nominal_dof = (ra - 1) * (rb - 1) * strata
    if nominal_dof > DOF_LIMIT:
        raise NumericalError(
            f"conditional test would need {nominal_dof} degrees of freedom; "
            "abstain (treat as independent at this significance level) instead"
        )
    stat = 0.0
    dof = 0
    effective_n = 0
    for values in itertools.product(*(range(arities[c]) for c in cond)):
        table = contingency(ix, a, b, Context(tuple(cond), values))
        if table.total == 0:
            continue
        s, k = _table_terms(table.cells)
        stat += s
        dof += k
        effective_n += table.total
    if effective_n == 0:
        return TestResult(0.0, 1, 1.0, 0, independent=True, reliable=False)
    return _decide(stat, max(dof, 1), effective_n, alpha)

"""Reordered outcome tables and the counterfactual obstruction.

``build_reordered_table`` regroups a trial log into four-column rows:

* keyed by lambda alone, the god's-eye regrouping available when the source
  space is small and discrete — complete rows appear and (for models whose
  outcomes are deterministic given setting and lambda) every row sum is +/-2;
* keyed by (lambda, t), the honest key once instruments depend on time —
  keys are unique per trial, no row can ever fill its four columns, and row
  sums are Undefined.

Undefined is a first-class tag, not NaN or None: it supports no arithmetic
and no numeric coercion, so nothing downstream can total it up by accident.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import CHSH_SIGNS
from .errors import ContinuousLambdaUnorderable
from .simulate import TrialLog


class KeyMode(enum.Enum):
    LAMBDA_ONLY = "lambda"
    LAMBDA_TIME = "lambda-time"


@dataclass(frozen=True)
class Factual:
    """A cell backed by an actual trial: the signed outcome product."""

    product: int

    def __post_init__(self):
        if self.product not in (-1, 1):
            raise ValueError(f"cell product must be +1 or -1, got {self.product!r}")


@dataclass(frozen=True)
class Counterfactual:
    """A cell for a setting pair that was not measured at that row's time."""


TableCell = Factual | Counterfactual


@dataclass(frozen=True)
class LambdaKey:
    lam: int


@dataclass(frozen=True)
class LambdaTimeKey:
    lam: float
    t: int


RowKey = LambdaKey | LambdaTimeKey


@dataclass(frozen=True)
class TableRow:
    key: RowKey
    cells: tuple[TableCell, TableCell, TableCell, TableCell]

    @property
    def complete(self) -> bool:
        return all(isinstance(c, Factual) for c in self.cells)


@dataclass(frozen=True)
class OutcomeTable:
    rows: tuple[TableRow, ...]
    complete_rows: int
    leftover_trials: int
    n_trials: int
    key_mode: KeyMode


@dataclass(frozen=True)
class Sum:
    """A defined row sum; for deterministic-outcome models always +/-2."""

    value: int


@dataclass(frozen=True)
class Undefined:
    """A row sum that must not be computed: the row has counterfactual cells.

    Deliberately supports no arithmetic and no conversion to int/float.
    """


RowSum = Sum | Undefined


def _require_four_columns(log: TrialLog) -> None:
    if log.n_pairs != 4:
        raise ValueError(f"outcome tables need a four-pair log, got {log.n_pairs} pairs")


def build_reordered_table(log: TrialLog, key_mode: KeyMode) -> OutcomeTable:
    """Greedily regroup trials into four-column rows by the chosen key.

    Lambda-only keys require a discrete source: a continuous lambda never
    repeats, so regrouping by equal value would be vacuous, and binning it
    would manufacture the very argument under test. Matching is greedy
    first-fit in trial-index order, which makes leftover counts reproducible.
    """
    _require_four_columns(log)
    n = len(log)
    signed = log.a.astype(np.int64) * log.b.astype(np.int64)
    signs = np.asarray(CHSH_SIGNS, dtype=np.int64)
    signed = signs[log.pair_id] * signed

    if key_mode is KeyMode.LAMBDA_TIME:
        # (lambda, t) is unique per trial: no key can ever fill four columns.
        rows = []
        discrete = log.lambda_kind == "discrete"
        blank = Counterfactual()
        factual = {1: Factual(1), -1: Factual(-1)}
        lam_col = log.lam.astype(np.int64) if discrete else log.lam
        pid_col = log.pair_id.tolist()
        t_col = log.t.tolist()
        signed_col = signed.tolist()
        for lam, pid, t, sp in zip(lam_col.tolist(), pid_col, t_col, signed_col):
            cells: list[TableCell] = [blank] * 4
            cells[pid] = factual[sp]
            rows.append(TableRow(key=LambdaTimeKey(lam=lam, t=t), cells=tuple(cells)))
        return OutcomeTable(
            rows=tuple(rows),
            complete_rows=0,
            leftover_trials=n,
            n_trials=n,
            key_mode=key_mode,
        )

    if log.lambda_kind != "discrete":
        raise ContinuousLambdaUnorderable(
            "lambda-keyed reordering needs a discrete source whose value set is "
            "much smaller than the number of trials; a continuous lambda never repeats"
        )

    lam_int = log.lam.astype(np.int64)
    rows = []
    used = 0
    for lam_value in np.unique(lam_int):
        queues = [
            np.flatnonzero((lam_int == lam_value) & (log.pair_id == pid)) for pid in range(4)
        ]
        n_rows = min(len(q) for q in queues)
        for j in range(n_rows):
            cells = tuple(Factual(int(signed[queues[k][j]])) for k in range(4))
            rows.append(TableRow(key=LambdaKey(lam=int(lam_value)), cells=cells))
        used += 4 * n_rows
    return OutcomeTable(
        rows=tuple(rows),
        complete_rows=len(rows),
        leftover_trials=n - used,
        n_trials=n,
        key_mode=key_mode,
    )


def row_sums(table: OutcomeTable) -> list[RowSum]:
    """Sum each complete row; rows with any counterfactual cell stay Undefined.

    For models whose outcomes are deterministic given (setting, lambda), every
    defined sum is +/-2 — the caller asserts that where it applies. The
    setting-pair-dependent diagnostic produces defined sums of +4, which is
    the point of that construction, so this function reports values honestly
    rather than enforcing the +/-2 band.
    """
    return [_row_sum(row) for row in table.rows]


def _row_sum(row: TableRow) -> RowSum:
    if row.complete:
        return Sum(sum(c.product for c in row.cells))  # type: ignore[union-attr]
    return Undefined()


@dataclass(frozen=True)
class BalanceReport:
    """Per-lambda pair counts and the largest standardized deviation."""

    per_key_pair_counts: dict[int, tuple[int, ...]]
    max_abs_z: float


def lln_balance_check(log: TrialLog) -> BalanceReport:
    """How evenly each lambda value spreads over the setting pairs.

    Under the multinomial null (pair choice independent of lambda, uniform
    over pairs), each count c is Binomial(n_lam, 1/4); z standardizes against
    that. Returns the worst |z| over all (lambda, pair).
    """
    if log.lambda_kind != "discrete":
        raise ContinuousLambdaUnorderable(
            "the balance check counts repeats of lambda values; a continuous source has none"
        )
    _require_four_columns(log)
    p = 1.0 / log.n_pairs
    lam_int = log.lam.astype(np.int64)
    counts: dict[int, tuple[int, ...]] = {}
    max_abs_z = 0.0
    for lam_value in np.unique(lam_int):
        mask = lam_int == lam_value
        n_lam = int(np.count_nonzero(mask))
        c = tuple(int(np.count_nonzero(log.pair_id[mask] == pid)) for pid in range(log.n_pairs))
        counts[int(lam_value)] = c
        sd = np.sqrt(n_lam * p * (1.0 - p))
        for ck in c:
            z = abs(ck - n_lam * p) / sd
            max_abs_z = max(max_abs_z, float(z))
    return BalanceReport(per_key_pair_counts=counts, max_abs_z=max_abs_z)


# --- Serialization and rendering --------------------------------------------


def _key_to_json(key: RowKey) -> dict:
    if isinstance(key, LambdaKey):
        return {"lambda": key.lam}
    return {"lambda": key.lam, "t": key.t}


def _cell_to_json(cell: TableCell) -> dict:
    if isinstance(cell, Factual):
        return {"kind": "factual", "product": cell.product}
    return {"kind": "counterfactual"}


def table_to_json_obj(table: OutcomeTable) -> dict:
    return {
        "schema": "bell-lab.outcome-table.v1",
        "key_mode": table.key_mode.value,
        "complete_rows": table.complete_rows,
        "leftover_trials": table.leftover_trials,
        "n_trials": table.n_trials,
        "rows": [
            {"key": _key_to_json(row.key), "cells": [_cell_to_json(c) for c in row.cells]}
            for row in table.rows
        ],
    }


def table_from_json_obj(obj: dict) -> OutcomeTable:
    if obj.get("schema") != "bell-lab.outcome-table.v1":
        raise ValueError(f"unexpected outcome-table schema {obj.get('schema')!r}")
    key_mode = KeyMode(obj["key_mode"])
    rows = []
    for r in obj["rows"]:
        k = r["key"]
        key: RowKey
        if "t" in k:
            key = LambdaTimeKey(lam=k["lambda"], t=k["t"])
        else:
            key = LambdaKey(lam=k["lambda"])
        cells = tuple(
            Factual(c["product"]) if c["kind"] == "factual" else Counterfactual() for c in r["cells"]
        )
        rows.append(TableRow(key=key, cells=cells))
    return OutcomeTable(
        rows=tuple(rows),
        complete_rows=obj["complete_rows"],
        leftover_trials=obj["leftover_trials"],
        n_trials=obj["n_trials"],
        key_mode=key_mode,
    )


_COLUMN_HEADS = ("+(a,c)", "-(a,b)", "-(d,b)", "-(d,c)")


def render_table(table: OutcomeTable, max_rows: int = 24) -> str:
    """Plain-text view: complete rows sum to a number, partial rows to '?'.

    In (lambda, t) mode the one factual cell per row is starred — the column
    actually measured at that tick; the rest were never measured.
    """
    lines = []
    head = "  ".join(f"{h:>7}" for h in _COLUMN_HEADS)
    lines.append(f"{'key':>16}  {head}   sum")
    for row in table.rows[:max_rows]:
        rsum = _row_sum(row)
        if isinstance(row.key, LambdaKey):
            key_txt = f"lam={row.key.lam}"
        else:
            lam = row.key.lam
            lam_txt = f"{lam}" if isinstance(lam, int) else f"{lam:.4f}"
            key_txt = f"lam={lam_txt} t={row.key.t}"
        cells_txt = []
        for cell in row.cells:
            if isinstance(cell, Factual):
                mark = "*" if not row.complete else " "
                cells_txt.append(f"{mark}{cell.product:+d}".rjust(7))
            else:
                cells_txt.append(f"{'?':>7}")
        sum_txt = f"{rsum.value:+d}" if isinstance(rsum, Sum) else "?"
        lines.append(f"{key_txt:>16}  {'  '.join(cells_txt)}   {sum_txt}")
    if len(table.rows) > max_rows:
        lines.append(f"... ({len(table.rows) - max_rows} more rows)")
    lines.append(
        f"complete rows: {table.complete_rows}   leftover trials: {table.leftover_trials}"
        f"   total trials: {table.n_trials}"
    )
    return "\n".join(lines)

"""Per-iteration solver traces and their CSV serialization.

Every driver in this library emits the same trace schema so runs can be
compared side by side.  Row k describes the state at iterate x_k together
with the step taken from it: ``oracle_calls`` is the cumulative number of
oracle calls consumed *before* iteration k (so the ledger identity
``N_k = sum_{i<k} (1 + j_i)`` can be read off directly), and the final row
records the terminal point with a zero step.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

from .errors import TraceSchemaError

#: Exact column order of the trace CSV files.
TRACE_COLUMNS = (
    "k",
    "j",
    "lambda",
    "H",
    "f",
    "F",
    "grad_norm",
    "step_norm",
    "oracle_calls",
    "time_s",
)

_INT_COLUMNS = {"k", "j", "oracle_calls"}

#: Statuses a finished run can carry.
STATUSES = ("converged", "budget-exhausted", "error")


@dataclass
class TraceRecord:
    k: int
    j: int
    lam: float
    h: float
    f: float
    objective: float
    grad_norm: float
    step_norm: float
    oracle_calls: int
    time_s: float

    def as_tuple(self):
        return (
            self.k,
            self.j,
            self.lam,
            self.h,
            self.f,
            self.objective,
            self.grad_norm,
            self.step_norm,
            self.oracle_calls,
            self.time_s,
        )


@dataclass
class Trace:
    """A completed (or aborted) solver run."""

    records: list[TraceRecord] = field(default_factory=list)
    status: str = "error"
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def column(self, name):
        idx = TRACE_COLUMNS.index(name)
        return [rec.as_tuple()[idx] for rec in self.records]

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    @property
    def iterations(self) -> int:
        """Number of completed iterations (the terminal row is not one)."""
        return max(len(self.records) - 1, 0)

    def to_csv(self, path=None) -> str:
        """Serialize to CSV with 17 significant digits; write to path if given."""
        buf = io.StringIO()
        buf.write(",".join(TRACE_COLUMNS) + "\n")
        for rec in self.records:
            values = rec.as_tuple()
            cells = []
            for name, value in zip(TRACE_COLUMNS, values):
                if name in _INT_COLUMNS:
                    cells.append(str(int(value)))
                else:
                    cells.append(format(float(value), ".17g"))
            buf.write(",".join(cells) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def parse_trace_csv(text: str) -> list[TraceRecord]:
    """Parse and validate a trace CSV, raising TraceSchemaError when malformed."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise TraceSchemaError("trace file is empty")
    header = tuple(lines[0].split(","))
    if header != TRACE_COLUMNS:
        raise TraceSchemaError(
            f"unexpected header {header!r}, expected {TRACE_COLUMNS!r}"
        )
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(TRACE_COLUMNS):
            raise TraceSchemaError(f"line {lineno}: expected {len(TRACE_COLUMNS)} cells")
        try:
            values = {}
            for name, cell in zip(TRACE_COLUMNS, cells):
                values[name] = int(cell) if name in _INT_COLUMNS else float(cell)
        except ValueError as exc:
            raise TraceSchemaError(f"line {lineno}: {exc}") from exc
        records.append(
            TraceRecord(
                k=values["k"],
                j=values["j"],
                lam=values["lambda"],
                h=values["H"],
                f=values["f"],
                objective=values["F"],
                grad_norm=values["grad_norm"],
                step_norm=values["step_norm"],
                oracle_calls=values["oracle_calls"],
                time_s=values["time_s"],
            )
        )
    validate_records(records)
    return records


def validate_records(records) -> None:
    """Schema checks shared by the writer tests and the benchmark harness.

    Verifies consecutive iteration numbers, finite residual and objective
    columns, strictly increasing cumulative oracle calls and non-decreasing
    time stamps.
    """
    if not records:
        raise TraceSchemaError("trace has no records")
    for idx, rec in enumerate(records):
        if rec.k != idx:
            raise TraceSchemaError(f"row {idx}: iteration counter {rec.k} out of order")
        if rec.j < 0:
            raise TraceSchemaError(f"row {idx}: negative trial count")
        if not math.isfinite(rec.grad_norm) or not math.isfinite(rec.objective):
            raise TraceSchemaError(f"row {idx}: non-finite residual or objective")
        if idx > 0:
            prev = records[idx - 1]
            if rec.oracle_calls <= prev.oracle_calls:
                raise TraceSchemaError(
                    f"row {idx}: oracle_calls must be strictly increasing"
                )
            if rec.time_s < prev.time_s:
                raise TraceSchemaError(f"row {idx}: time_s decreased")


def validate_trace_file(path) -> list[TraceRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace_csv(fh.read())

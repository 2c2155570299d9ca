"""The metrics CSV contract: column set, row parsing, glob loading.

One row per evaluation.  The column set is fixed; a file whose header
is missing columns or carries unknown ones is rejected with an error
that lists the offending columns, so a schema drift in a producer is
caught before any output is written.
"""

from __future__ import annotations

import csv
import glob
from dataclasses import dataclass

COLUMNS = ("scenario", "variant", "seed", "step", "mean_return",
           "std_return", "mean_aoi", "tx_rate", "estimator_loss",
           "critic_loss", "scheduler_loss")

_INT_COLUMNS = ("seed", "step")
_FLOAT_COLUMNS = ("mean_return", "std_return", "mean_aoi", "tx_rate",
                  "estimator_loss", "critic_loss", "scheduler_loss")


class SchemaError(ValueError):
    """An input CSV does not match the documented metrics schema."""


@dataclass(frozen=True)
class EvalRow:
    scenario: str
    variant: str
    seed: int
    step: int
    mean_return: float
    std_return: float
    mean_aoi: float
    tx_rate: float
    estimator_loss: float
    critic_loss: float
    scheduler_loss: float


def _check_header(path: str, header: list[str] | None) -> None:
    if header is None:
        raise SchemaError(f"{path}: empty file, expected a header row")
    missing = [c for c in COLUMNS if c not in header]
    unexpected = [c for c in header if c not in COLUMNS]
    duplicated = sorted({c for c in header if header.count(c) > 1})
    problems = []
    if missing:
        problems.append(f"missing columns {missing}")
    if unexpected:
        problems.append(f"unexpected columns {unexpected}")
    if duplicated:
        problems.append(f"duplicated columns {duplicated}")
    if problems:
        raise SchemaError(f"{path}: {'; '.join(problems)}")


def read_rows(path: str) -> list[EvalRow]:
    """Parse one metrics CSV, validating the header and every value."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(path, header)
        index = {c: header.index(c) for c in COLUMNS}
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected "
                                  f"{len(header)} fields, got {len(record)}")
            values: dict = {"scenario": record[index["scenario"]],
                            "variant": record[index["variant"]]}
            for col in _INT_COLUMNS:
                raw = record[index[col]]
                try:
                    values[col] = int(raw)
                except ValueError:
                    raise SchemaError(f"{path}:{lineno}: column {col!r} "
                                      f"is not an integer: {raw!r}") from None
            for col in _FLOAT_COLUMNS:
                raw = record[index[col]]
                try:
                    values[col] = float(raw)
                except ValueError:
                    raise SchemaError(f"{path}:{lineno}: column {col!r} "
                                      f"is not a float: {raw!r}") from None
            rows.append(EvalRow(**values))
    return rows


def load_glob(pattern: str) -> list[EvalRow]:
    """Read every CSV matching the glob, in sorted path order.

    All files are validated before the merged rows are returned, so a
    caller that writes output only after this call cannot leave partial
    results behind on a schema error.  An empty match yields an empty
    list, not an error.
    """
    rows: list[EvalRow] = []
    for path in sorted(glob.glob(pattern, recursive=True)):
        rows.extend(read_rows(path))
    return rows

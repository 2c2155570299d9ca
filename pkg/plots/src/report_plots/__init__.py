"""Offline figures and summary tables for wncs metrics CSVs.

This package reads only the documented metrics CSV schema; it never
imports the training code.
"""

from .curves import CurveGroup, CurvePoint, aggregate_curves
from .schema import COLUMNS, EvalRow, SchemaError, load_glob, read_rows
from .summary import SummaryRow, format_table, summarize, write_summary_csv

__all__ = [
    "COLUMNS", "CurveGroup", "CurvePoint", "EvalRow", "SchemaError",
    "SummaryRow", "aggregate_curves", "format_table", "load_glob",
    "read_rows", "summarize", "write_summary_csv",
]

"""Final-return summary: mean +- std across seeds per scenario/variant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import spread
from .schema import EvalRow

SUMMARY_COLUMNS = ("scenario", "variant", "seeds", "final_step",
                   "final_return_mean", "final_return_std")


@dataclass(frozen=True)
class SummaryRow:
    scenario: str
    variant: str
    seeds: int
    final_step: int
    final_mean: float
    final_std: float


def summarize(rows: list[EvalRow]) -> list[SummaryRow]:
    """Aggregate the last evaluation of each run across seeds.

    The last evaluation of a run is its largest-step row; final_step
    reports the largest such step in the group.  The +- value is the
    sample std across seeds (zero for a single seed by convention).
    """
    finals: dict[tuple[str, str], dict[int, EvalRow]] = {}
    for row in rows:
        per_seed = finals.setdefault((row.scenario, row.variant), {})
        best = per_seed.get(row.seed)
        if best is None or row.step > best.step:
            per_seed[row.seed] = row
    out = []
    for (scenario, variant) in sorted(finals):
        last = [finals[(scenario, variant)][s]
                for s in sorted(finals[(scenario, variant)])]
        values = [r.mean_return for r in last]
        out.append(SummaryRow(scenario=scenario, variant=variant,
                              seeds=len(values),
                              final_step=max(r.step for r in last),
                              final_mean=float(np.mean(values)),
                              final_std=spread(values)))
    return out


def format_table(rows: list[SummaryRow]) -> str:
    """Render the summary as an aligned text table (header always shown)."""
    cells = [("scenario", "variant", "seeds", "final step", "final return")]
    for r in rows:
        cells.append((r.scenario, r.variant, str(r.seeds),
                      str(r.final_step),
                      f"{r.final_mean:.1f} +- {r.final_std:.1f}"))
    widths = [max(len(row[i]) for row in cells) for i in range(5)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in cells]
    return "\n".join(lines)


def write_summary_csv(rows: list[SummaryRow], path: str) -> None:
    """Write the summary table as CSV with lossless float formatting."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for r in rows:
            fh.write(f"{r.scenario},{r.variant},{r.seeds},{r.final_step},"
                     f"{r.final_mean!r},{r.final_std!r}\n")

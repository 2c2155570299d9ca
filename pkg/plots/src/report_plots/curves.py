"""Seed aggregation of evaluation rows into per-variant learning curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .schema import EvalRow


@dataclass(frozen=True)
class CurvePoint:
    step: int
    mean: float
    std: float
    seeds: int


def spread(values: list[float]) -> float:
    """Sample std across seeds; a single sample is 0 by convention."""
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1))


@dataclass(frozen=True)
class CurveGroup:
    """One (scenario, variant) learning curve aggregated over seeds.

    Steps are strictly increasing and every band half-width is
    non-negative (a single seed gives a zero-width band).
    """

    scenario: str
    variant: str
    points: tuple[CurvePoint, ...]

    def __post_init__(self):
        steps = [p.step for p in self.points]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError(f"{self.scenario}/{self.variant}: steps must "
                             f"be strictly increasing, got {steps}")
        if any(p.std < 0 for p in self.points):
            raise ValueError(f"{self.scenario}/{self.variant}: negative "
                             "band width")


def aggregate_curves(rows: list[EvalRow]) -> list[CurveGroup]:
    """Group rows by (scenario, variant) and average returns over seeds.

    A repeated (scenario, variant, seed, step) key is ambiguous (the
    same run matched the glob twice) and is rejected.  Groups and steps
    come back sorted, so the result is a pure function of the row set.
    """
    seen: set[tuple] = set()
    by_group: dict[tuple[str, str], dict[int, list[float]]] = {}
    for row in rows:
        key = (row.scenario, row.variant, row.seed, row.step)
        if key in seen:
            raise ValueError(f"duplicate evaluation row for scenario="
                             f"{row.scenario!r} variant={row.variant!r} "
                             f"seed={row.seed} step={row.step}")
        seen.add(key)
        steps = by_group.setdefault((row.scenario, row.variant), {})
        steps.setdefault(row.step, []).append(row.mean_return)
    groups = []
    for (scenario, variant) in sorted(by_group):
        points = []
        for step in sorted(by_group[(scenario, variant)]):
            values = by_group[(scenario, variant)][step]
            points.append(CurvePoint(step=step,
                                     mean=float(np.mean(values)),
                                     std=spread(values),
                                     seeds=len(values)))
        groups.append(CurveGroup(scenario, variant, tuple(points)))
    return groups

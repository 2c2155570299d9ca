"""Learning-curve figures: one per scenario, one banded curve per variant."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .curves import CurveGroup  # noqa: E402

_CAPTION = "Shaded band: +-1 std over seeds."


def _safe_name(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in label)


def render_figures(groups: list[CurveGroup], out_dir: str,
                   dpi: int = 150) -> list[str]:
    """Write one PNG per scenario under out_dir; returns the paths.

    Variants are drawn in sorted label order with the default color
    cycle, so the figure content is a pure function of the curve
    groups.  Each file lands via an atomic rename.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    scenarios = sorted({g.scenario for g in groups})
    for scenario in scenarios:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for group in sorted((g for g in groups if g.scenario == scenario),
                            key=lambda g: g.variant):
            steps = [p.step for p in group.points]
            means = [p.mean for p in group.points]
            low = [p.mean - p.std for p in group.points]
            high = [p.mean + p.std for p in group.points]
            (line,) = ax.plot(steps, means, label=group.variant)
            ax.fill_between(steps, low, high, alpha=0.2,
                            color=line.get_color(), linewidth=0)
        ax.set_xlabel("training steps")
        ax.set_ylabel("evaluation return")
        ax.set_title(scenario)
        ax.legend()
        ax.grid(True, alpha=0.3)
        fig.text(0.5, 0.01, _CAPTION, ha="center", fontsize=8)
        fig.tight_layout(rect=(0, 0.03, 1, 1))
        path = os.path.join(out_dir, f"{_safe_name(scenario)}.png")
        tmp = path + ".tmp"
        fig.savefig(tmp, format="png", dpi=dpi,
                    metadata={"Software": None})
        plt.close(fig)
        os.replace(tmp, path)
        written.append(path)
    return written

"""SVG line charts of aggregate metrics (size, error %, hole %).

Thin wrapper over matplotlib with the Agg backend; each chart shows the
mean series with a +-1 standard deviation band, one curve per labeled
batch, mirroring the usual presentation of multi-run assembly metrics.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .analysis import AggregateRow  # noqa: E402

_METRICS = (
    ("size", "Seed assembly size (tiles)", "size"),
    ("error_pct", "Errors (% of assembly)", "errors"),
    ("hole_pct", "Holes (% of assembly)", "holes"),
)


def write_charts(
    batches: dict[str, Sequence[AggregateRow]],
    output_dir: str | Path,
    stem: str = "aggregate",
) -> list[Path]:
    """One SVG per metric; ``batches`` maps a legend label to its rows."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for key, ylabel, suffix in _METRICS:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for label, rows in batches.items():
            t = [r.time for r in rows]
            mean = [getattr(r, f"{key}_mean") for r in rows]
            std = [getattr(r, f"{key}_std") for r in rows]
            lo = [m - s for m, s in zip(mean, std)]
            hi = [m + s for m, s in zip(mean, std)]
            (line,) = ax.plot(t, mean, label=label)
            ax.fill_between(t, lo, hi, alpha=0.2, color=line.get_color())
        ax.set_xlabel("Time (s)")
        ax.set_ylabel(ylabel)
        if len(batches) > 1:
            ax.legend()
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = out / f"{stem}_{suffix}.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written

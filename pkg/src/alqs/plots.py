"""Figure rendering for aggregated run reports.

Renders one PNG per metric: mean learning curve over labeled-set size with a
shaded +/- std band, mirroring how multi-seed runs are usually presented.
Uses the Agg backend so it works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import ValidationError  # noqa: E402


def render_metric_curves(aggregate: dict, out_dir: str | Path) -> list[Path]:
    """Write <metric>.png files from an aggregate summary; returns the paths."""
    iterations = aggregate.get("iterations", [])
    if not iterations:
        raise ValidationError("aggregate summary has no iterations to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labeled = [row["labeled_count"] for row in iterations]
    metric_names = sorted(iterations[0]["metrics"])
    written = []
    for name in metric_names:
        means = [row["metrics"][name]["mean"] for row in iterations]
        stds = [row["metrics"][name]["std"] for row in iterations]
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.plot(labeled, means, marker="o", linewidth=1.5)
        ax.fill_between(
            labeled,
            [m - s for m, s in zip(means, stds)],
            [m + s for m, s in zip(means, stds)],
            alpha=0.25,
        )
        ax.set_xlabel("labeled documents")
        ax.set_ylabel(name)
        ax.set_title(f"{name} (mean ± std over {aggregate.get('runs', '?')} runs)")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = out_dir / f"{name}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def render_overlap_bars(aggregate: dict, out_dir: str | Path) -> Path:
    """Write overlap.png: mean full/partial batch-overlap percent per iteration."""
    iterations = aggregate.get("iterations", [])
    if not iterations:
        raise ValidationError("aggregate summary has no iterations to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    xs = [row["iteration"] for row in iterations]
    full = [row["overlap_full_pct"]["mean"] for row in iterations]
    partial = [row["overlap_partial_pct"]["mean"] for row in iterations]
    width = 0.4
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar([x - width / 2 for x in xs], full, width=width, label="full")
    ax.bar([x + width / 2 for x in xs], partial, width=width, label="partial")
    ax.set_xlabel("iteration")
    ax.set_ylabel("batch overlap (%)")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "overlap.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

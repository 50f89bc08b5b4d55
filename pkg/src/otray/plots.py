"""Figure rendering for the plot-table outputs (headless matplotlib)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def render_plot_tables(plots: dict, out_dir) -> list:
    """One PNG per plot table: first column on x, remaining numeric columns
    as lines (log-y when the data span decades)."""
    out = Path(out_dir)
    paths = []
    for name, (header, rows) in sorted(plots.items()):
        if not rows:
            continue
        cols = list(zip(*rows))
        numeric = [_as_floats(c) for c in cols]
        if numeric[0] is None or all(c is None for c in numeric[1:]):
            continue
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        x = numeric[0]
        positives = []
        for label, ys in zip(header[1:], numeric[1:]):
            if ys is None:
                continue
            ax.plot(x, ys, marker="o" if len(x) <= 16 else None, label=label)
            positives.extend(y for y in ys if y > 0)
        if positives and max(positives) / max(min(positives), 1e-300) > 1e3:
            ax.set_yscale("log")
        ax.set_xlabel(header[0])
        ax.set_title(name.replace("_", " "))
        ax.legend(fontsize=8)
        fig.tight_layout()
        p = out / f"{name}.png"
        fig.savefig(p, dpi=120)
        plt.close(fig)
        paths.append(p)
    return paths


def _as_floats(col):
    try:
        return [float(v) for v in col]
    except (TypeError, ValueError):
        return None

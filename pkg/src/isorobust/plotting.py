"""PNG figures for reports: allocation tables and schedule timelines."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402

from .model import IsolationLevel  # noqa: E402
from .oracle.schedule import OP0, MVSchedule, dependencies  # noqa: E402

_LEVEL_COLORS = ["#9ecae1", "#fdd0a2", "#e6550d"]


def allocation_heatmap(rows, model, path: str | Path) -> Path:
    """One row per promotion choice, one column per template, coloured by level."""
    names = [t.name for t in model.templates]
    grid = [[int(r.allocation[n]) for n in names] for r in rows]
    fig, ax = plt.subplots(figsize=(1.2 * len(names) + 3, 0.35 * len(rows) + 1.2))
    ax.imshow(grid, cmap=ListedColormap(_LEVEL_COLORS), vmin=0, vmax=2, aspect="auto")
    ax.set_xticks(range(len(names)), [t.short_name for t in model.templates])
    ax.set_yticks(range(len(rows)),
                  [f"({r.group}) {r.label}" if r.group else r.label for r in rows])
    for i, row in enumerate(grid):
        for j, v in enumerate(row):
            ax.text(j, i, IsolationLevel(v).name, ha="center", va="center", fontsize=8)
    ax.set_title("Lowest robust allocation per promotion choice")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def schedule_timeline(s: MVSchedule, path: str | Path, title: str = "") -> Path:
    """Transactions as lanes, operations at their schedule position, and
    dependency edges drawn as arrows (dashed for rw-antidependencies)."""
    txns = s.transactions
    lane = {t: i for i, t in enumerate(txns)}
    fig, ax = plt.subplots(figsize=(0.8 * len(s.order) + 2, 0.7 * len(txns) + 1.2))
    xy = {}
    for x, oid in enumerate(s.order):
        o = s.ops[oid]
        y = lane[o.txn]
        xy[oid] = (x, y)
        label = "C" if o.kind == "C" else f"{o.kind}[{o.obj}]"
        ax.annotate(label, (x, y), ha="center", va="center", fontsize=7,
                    bbox=dict(boxstyle="round,pad=0.2", fc="white", ec="grey"))
    for e in dependencies(s):
        if e.from_op == OP0:
            continue
        ax.annotate("", xy=xy[e.to_op], xytext=xy[e.from_op],
                    arrowprops=dict(arrowstyle="->", lw=0.8,
                                    linestyle="--" if e.kind == "rw" else "-", color="#555"))
    ax.set_yticks(range(len(txns)), txns)
    ax.set_xticks([])
    ax.set_xlim(-0.8, len(s.order) - 0.2)
    ax.set_ylim(len(txns) - 0.5, -0.5)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

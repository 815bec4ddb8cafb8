"""Optional matplotlib figures for cell partitions and distinguished involutions."""

from __future__ import annotations

from collections import Counter
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .cells import CellPartition  # noqa: E402
from .coxeter import CoxeterGroup  # noqa: E402


def plot_cells(group: CoxeterGroup, partition: CellPartition, path: str | Path) -> Path:
    """Length profile of each block: rows are blocks, columns are lengths."""
    blocks = partition.blocks
    radius = max((group.length(w) for b in blocks for w in b), default=0)
    fig, ax = plt.subplots(figsize=(7, max(2.5, 0.22 * len(blocks) + 1)))
    for i, block in enumerate(blocks):
        counts = Counter(group.length(w) for w in block)
        cert = any(w in partition.certified for w in block)
        xs = sorted(counts)
        ax.scatter(xs, [i] * len(xs), s=[12 + 6 * counts[x] for x in xs],
                   c="tab:blue" if cert else "lightgray", edgecolors="k", linewidths=0.3)
    ax.set_xlabel("length")
    ax.set_ylabel("block")
    ax.set_xlim(-0.5, radius + 0.5)
    ax.set_title(f"{group.system.name}: {partition.side} cells, radius {partition.radius} "
                 f"({len(partition.certified_blocks())} certified)")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_dinv(records, path: str | Path) -> Path:
    """Stacked histogram of record lengths by verdict."""
    by = {}
    for r in records:
        by.setdefault(r.verdict, Counter())[r.length] += 1
    lengths = sorted({r.length for r in records}) or [0]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    bottom = [0] * len(lengths)
    for verdict in sorted(by):
        vals = [by[verdict].get(n, 0) for n in lengths]
        ax.bar(lengths, vals, bottom=bottom, label=verdict)
        bottom = [a + b for a, b in zip(bottom, vals)]
    ax.set_xlabel("length")
    ax.set_ylabel("records")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

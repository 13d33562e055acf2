"""Figures for the report path (matplotlib, Agg backend, fixed metadata for byte-stable PNGs)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

_META = {"Software": None}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def curve_figure(path: Path, curves: dict[str, Sequence], title: str) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    for method, points in curves.items():
        xs = [p.center for p in points if p.instances]
        ys = [p.mean_log_ratio for p in points if p.instances]
        ax.plot(xs, ys, marker="o", label=method)
    ax.axhline(0.0, color="grey", lw=0.8)
    ax.set_xlabel("fraction of run completed")
    ax.set_ylabel("mean ln(estimate / truth)")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def error_factor_figure(path: Path, rows: Sequence, factors: Sequence[int], title: str) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.5, 3.8))
    width = 0.8 / max(1, len(rows))
    for n, r in enumerate(rows):
        xs = [i + n * width for i in range(len(factors))]
        ax.bar(xs, r.percentages, width, label=f"{r.method} {r.label}")
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(factors))])
    ax.set_xticklabels([f"x{k}" for k in factors])
    ax.set_ylim(0, 100)
    ax.set_ylabel("% within error factor")
    ax.set_title(title)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def chain_figure(path: Path, restarts: Sequence[int], plain: Sequence[float], augmented: Sequence[float],
                 title: str) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    ax.plot(restarts[: len(plain)], plain, marker="o", label="x_r")
    ax.plot(restarts[: len(augmented)], augmented, marker="s", label="augmented x_r")
    ax.set_xlabel("restart")
    ax.set_ylabel("% within factor 2")
    ax.set_ylim(0, 100)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path

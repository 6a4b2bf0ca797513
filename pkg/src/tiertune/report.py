"""Figure rendering for the CLI report paths.

Each CSV-producing command can drop a companion PNG next to its output.
matplotlib is imported lazily so CSV-only runs never pay for it.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def figure_path(out: str | Path) -> Path:
    return Path(out).with_suffix(".png")


def sweep_figure(
    ratios: Sequence[float],
    throughputs: Sequence[float],
    path: str | Path,
    title: str,
) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(ratios, throughputs, marker="o", ms=3, lw=1.2)
    best = max(range(len(ratios)), key=lambda i: throughputs[i])
    ax.axvline(ratios[best], color="tab:red", lw=0.8, ls="--")
    ax.annotate(
        f"max @ {ratios[best]:g}%",
        (ratios[best], throughputs[best]),
        textcoords="offset points",
        xytext=(6, -2),
        fontsize=8,
        color="tab:red",
    )
    ax.set_xlabel("pages on CXL (%)")
    ax.set_ylabel("normalized throughput")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def tune_figure(rows, path: str | Path, title: str) -> Path:
    plt = _pyplot()
    intervals = [r.interval for r in rows]
    fig, (ax_ratio, ax_perf) = plt.subplots(
        2, 1, figsize=(6.0, 4.6), sharex=True, height_ratios=[1, 1.4]
    )
    ax_ratio.step([r.interval for r in rows], [r.ratio for r in rows], where="post")
    ax_ratio.set_ylabel("pages on CXL (%)")
    ax_ratio.set_ylim(-4, 104)
    ax_ratio.grid(alpha=0.3)
    ax_perf.plot(intervals, [r.true_throughput for r in rows], label="throughput", lw=1.2)
    ax_perf.plot(
        intervals,
        [r.estimate for r in rows],
        label="model estimate",
        lw=1.0,
        ls="--",
    )
    ax_perf.set_xlabel("interval")
    ax_perf.set_ylabel("normalized value")
    ax_perf.legend(fontsize=8)
    ax_perf.grid(alpha=0.3)
    fig.suptitle(title)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def fit_figure(
    targets: Sequence[float],
    estimates: Sequence[float],
    r: float,
    path: str | Path,
    title: str,
) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.4, 4.0))
    ax.scatter(targets, estimates, s=18)
    lo = min(min(targets), min(estimates))
    hi = max(max(targets), max(estimates))
    ax.plot([lo, hi], [lo, hi], color="gray", lw=0.8, ls=":")
    ax.set_xlabel("measured normalized throughput")
    ax.set_ylabel("model estimate")
    ax.set_title(f"{title} (Pearson r = {r:.3f})")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out

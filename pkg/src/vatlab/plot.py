"""SVG figures: training learning curves and top-down evaluation trajectories."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps the SVG bytes reproducible
_SVG_META = {"Date": None, "Creator": None}
plt.rcParams["svg.hashsalt"] = "vatlab"


def moving_average(x: Sequence[float], window: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("nothing to smooth")
    window = max(1, min(window, x.size))
    c = np.concatenate([[0.0], np.cumsum(x)])
    out = np.empty_like(x)
    for i in range(x.size):
        lo = max(0, i - window + 1)
        out[i] = (c[i + 1] - c[lo]) / (i + 1 - lo)
    return out


def learning_curve_svg(records: Sequence[dict], path: str | Path, window: int = 50,
                       sources: Sequence[str] = ("actor", "htg"), title: str = "Training reward") -> Path:
    """Mean reward per step of each episode, smoothed, against the global episode index."""
    if not records:
        raise ValueError("empty training log")
    recs = sorted(records, key=lambda r: r["episode"])
    fig, ax = plt.subplots(figsize=(7, 4))
    drawn = 0
    for src in sources:
        sel = [r for r in recs if r["source"] == src]
        if not sel:
            continue
        ep = [r["episode"] for r in sel]
        ax.plot(ep, moving_average([r["mean_reward"] for r in sel], window), label=f"{src} episodes",
                gid=f"curve-{src}")
        drawn += 1
    if drawn == 0:
        plt.close(fig)
        raise ValueError(f"no records with source in {tuple(sources)}")
    ax.set_xlabel("episode")
    ax.set_ylabel(f"mean reward per step (moving avg, {window})")
    ax.set_title(title)
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def trajectory_svg(run_log: Sequence[dict], path: str | Path, arena_size: tuple[float, float] | None = None,
                   title: str | None = None) -> Path:
    """Top-down view of one evaluation run: tracker and target paths with start markers."""
    if not run_log:
        raise ValueError("empty trajectory log")
    tr = np.array([r["tracker"][:2] for r in run_log])
    tg = np.array([r["target"][:2] for r in run_log])
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(tr[:, 0], tr[:, 1], color="tab:blue", label="tracker", gid="tracker-path")
    ax.plot(tg[:, 0], tg[:, 1], color="tab:red", label="target", gid="target-path")
    ax.plot(*tr[0], "o", color="tab:blue")
    ax.plot(*tg[0], "o", color="tab:red")
    if arena_size is not None:
        ax.set_xlim(0, arena_size[0])
        ax.set_ylim(0, arena_size[1])
    ax.set_aspect("equal")
    ax.set_xlabel("x [cm]")
    ax.set_ylabel("y [cm]")
    ax.set_title(title or f"run {run_log[0].get('run', 0)}")
    ax.legend(loc="best")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path

"""Figures rendered next to the exported tables.

Everything goes through :class:`matplotlib.figure.Figure` so no pyplot state or
interactive backend is involved.
"""

from __future__ import annotations

import os
from typing import Sequence

from matplotlib.figure import Figure

ARM_STYLE = {
    "with": dict(color="tab:blue", marker="o", label="with congestion handler"),
    "without": dict(color="tab:red", marker="s", label="without congestion handler"),
}

# keeps PNG bytes independent of the matplotlib build
_PNG_METADATA = {"Software": None}


def _save(fig: Figure, path: os.PathLike | str, description: str = "") -> None:
    meta = dict(_PNG_METADATA)
    if description:
        meta["Description"] = description
    try:
        fig.savefig(path, dpi=120, metadata=meta)
    except OSError as exc:
        raise OSError(f"cannot write figure {os.fspath(path)}: {exc.strerror or exc}") from exc


def _new(width: float = 6.4, height: float = 4.0):
    fig = Figure(figsize=(width, height), layout="constrained")
    ax = fig.add_subplot()
    ax.grid(True, alpha=0.3)
    return fig, ax


def plot_sweep(rows: Sequence, outdir: os.PathLike | str, description: str = "") -> list[str]:
    """Requests serviced and requests dropped versus aggregate capacity, one line per arm."""
    caps = [r.capacity for r in rows]
    paths = []
    for metric, ylabel, fname in (
        ("serviced", "Requests serviced (mean)", "sweep_serviced.png"),
        ("dropped", "Requests dropped (mean)", "sweep_dropped.png"),
    ):
        fig, ax = _new()
        for arm in ("with", "without"):
            ax.plot(caps, [getattr(r, f"mean_{metric}_{arm}") for r in rows], **ARM_STYLE[arm])
        ax.set_xlabel("Aggregate queue capacity (packets)")
        ax.set_ylabel(ylabel)
        ax.legend()
        path = os.path.join(outdir, fname)
        _save(fig, path, description)
        paths.append(path)
    return paths


def plot_cdf(cdf_by_arm: dict, path: os.PathLike | str, description: str = "") -> str:
    """Step plot of completion-time CDFs; ``cdf_by_arm`` maps arm -> [(t, F), ...]."""
    fig, ax = _new()
    for arm, points in cdf_by_arm.items():
        if not points:
            continue
        ts = [0] + [t for t, _ in points]
        fs = [0.0] + [f for _, f in points]
        style = dict(ARM_STYLE[arm])
        style.pop("marker")
        ax.step(ts, fs, where="post", **style)
    ax.set_xlabel("Request completion time (slots)")
    ax.set_ylabel("CDF")
    ax.set_ylim(0, 1.02)
    if any(cdf_by_arm.values()):
        ax.legend(loc="lower right")
    _save(fig, path, description)
    return os.fspath(path)


def plot_pairs(pairs: Sequence, path: os.PathLike | str, description: str = "") -> str:
    """Per-seed serviced counts for the two arms of a paired comparison."""
    fig, ax = _new()
    idx = list(range(len(pairs)))
    width = 0.4
    ax.bar([i - width / 2 for i in idx], [w.requests_serviced for w, _ in pairs], width, color="tab:blue", label=ARM_STYLE["with"]["label"])
    ax.bar([i + width / 2 for i in idx], [wo.requests_serviced for _, wo in pairs], width, color="tab:red", label=ARM_STYLE["without"]["label"])
    ax.set_xticks(idx)
    ax.set_xlabel("Seed index")
    ax.set_ylabel("Requests serviced")
    ax.legend()
    _save(fig, path, description)
    return os.fspath(path)


def plot_potential(report, path: os.PathLike | str, description: str = "") -> str:
    fig, ax = _new()
    ax.plot(range(len(report.potential_series)), report.potential_series, color=ARM_STYLE[report.arm]["color"])
    ax.set_xlabel("Slot")
    ax.set_ylabel("MDC potential (serviced / received)")
    ax.set_ylim(0, 1.02)
    _save(fig, path, description)
    return os.fspath(path)

"""Deterministic cumulative-regret figures.

Two figure kinds: one panel of per-task mean cumulative regret with a
standard-error band per agent, and a 2x2 grid of such panels for the
transfer experiment's four shift norms. Output is written as both PNG and
SVG with all timestamp-like metadata stripped, so rerunning on the same
inputs reproduces the files byte for byte.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

REQUIRED_COLUMNS = ("agent", "task", "mean_cumulative_regret", "stderr")

DEFAULT_STYLE = {
    "meta_tslb": "#d62728",
    "meta_ts": "#1f77b4",
    "oracle_ts": "#2ca02c",
    "marginal_ts": "#7f7f7f",
}

_FALLBACK_CYCLE = ("#9467bd", "#8c564b", "#e377c2", "#bcbd22", "#17becf")

FIGURE_KINDS = ("per_task_regret", "generalization_grid")


class SchemaError(ValueError):
    """The input CSV does not carry the summary schema; the message names
    the first missing column."""


@dataclass(frozen=True)
class PlotSpec:
    """What to plot and where to put it.

    ``inputs`` holds one summary CSV for the single-panel kind and one per
    grid panel for the transfer grid; ``panel_labels`` annotates the grid
    panels. ``output`` is the path stem: .png and .svg are appended.
    """

    inputs: tuple[str, ...]
    kind: str
    output: str
    style: dict[str, str] = field(default_factory=dict)
    panel_labels: tuple[str, ...] = ()
    title: str = ""

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"figure kind must be one of {FIGURE_KINDS}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        if self.kind == "per_task_regret" and len(self.inputs) != 1:
            raise ValueError("per_task_regret takes exactly one input CSV")
        if self.kind == "generalization_grid" and len(self.inputs) != 4:
            raise ValueError("generalization_grid takes exactly four input CSVs")
        if self.panel_labels and len(self.panel_labels) != len(self.inputs):
            raise ValueError("need one panel label per input")


def load_summary(path: str | Path) -> dict[str, tuple[list[int], list[float], list[float]]]:
    """Parse one summary CSV into per-agent (tasks, means, stderrs) series."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in REQUIRED_COLUMNS:
            if column not in header:
                raise SchemaError(f"missing column: {column}")
        series: dict[str, tuple[list[int], list[float], list[float]]] = {}
        for row in reader:
            agent = row["agent"]
            tasks, means, errs = series.setdefault(agent, ([], [], []))
            tasks.append(int(row["task"]))
            means.append(float(row["mean_cumulative_regret"]))
            errs.append(float(row["stderr"]))
    if not series:
        raise SchemaError("missing column: no data rows found")
    return series


def _agent_color(agent: str, style: dict[str, str], fallback_index: int) -> str:
    if agent in style:
        return style[agent]
    if agent in DEFAULT_STYLE:
        return DEFAULT_STYLE[agent]
    return _FALLBACK_CYCLE[fallback_index % len(_FALLBACK_CYCLE)]


def _draw_panel(ax, series, style):
    for i, (agent, (tasks, means, errs)) in enumerate(sorted(series.items())):
        color = _agent_color(agent, style, i)
        ax.plot(tasks, means, label=agent, color=color, linewidth=1.6)
        lower = [m - e for m, e in zip(means, errs)]
        upper = [m + e for m, e in zip(means, errs)]
        ax.fill_between(tasks, lower, upper, color=color, alpha=0.2, linewidth=0)
    ax.set_xlabel("task")
    ax.set_ylabel("mean cumulative regret")
    ax.grid(True, alpha=0.3)


def _apply_deterministic_rcparams():
    plt.rcParams["svg.hashsalt"] = "regretplot"
    plt.rcParams["svg.fonttype"] = "none"
    plt.rcParams["figure.dpi"] = 100
    plt.rcParams["savefig.dpi"] = 100


def plot_summary(spec: PlotSpec) -> list[Path]:
    """Render the figure and write PNG and SVG next to the output stem.

    Inputs are read once and never written; outputs carry the agent list in
    their metadata and no timestamps, so identical inputs give identical
    bytes.
    """
    _apply_deterministic_rcparams()
    loaded = [load_summary(path) for path in spec.inputs]
    all_agents = sorted({agent for series in loaded for agent in series})

    if spec.kind == "per_task_regret":
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        _draw_panel(ax, loaded[0], spec.style)
        ax.legend(loc="upper right", frameon=False)
        if spec.title:
            ax.set_title(spec.title)
    else:
        fig, axes = plt.subplots(2, 2, figsize=(10.2, 7.6), sharex=True)
        labels = spec.panel_labels or tuple(Path(p).stem for p in spec.inputs)
        for ax, series, label in zip(axes.ravel(), loaded, labels):
            _draw_panel(ax, series, spec.style)
            ax.set_title(label)
        axes[0, 0].legend(loc="upper right", frameon=False)
        if spec.title:
            fig.suptitle(spec.title)
    fig.tight_layout()

    stem = Path(spec.output)
    stem.parent.mkdir(parents=True, exist_ok=True)
    agents_note = "agents: " + ",".join(all_agents)
    png_path = stem.with_suffix(".png")
    svg_path = stem.with_suffix(".svg")
    fig.savefig(
        png_path,
        format="png",
        metadata={"Description": agents_note, "Software": "regretplot"},
    )
    fig.savefig(
        svg_path,
        format="svg",
        metadata={"Description": agents_note, "Date": None, "Creator": "regretplot"},
    )
    plt.close(fig)
    return [png_path, svg_path]

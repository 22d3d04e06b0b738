"""CSV serialization and the bar-chart / learning-curve figures.

Figures are drawn on a bare ``matplotlib.figure.Figure`` (no pyplot state) and
saved as SVG with a fixed hash salt and no timestamp, so identical inputs give
identical bytes.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib
from matplotlib.figure import Figure

from .metrics import EpisodeMetrics

RESULTS_HEADER = [
    "experiment_id",
    "agent",
    "seed",
    "episode",
    "reward_sum",
    "tcr_percent",
    "art_seconds_or_empty",
    "failures",
    "capacity_violations",
    "tmax_violations",
]
SUMMARY_HEADER = [
    "agent",
    "seeds",
    "median_reward",
    "median_tcr",
    "median_art",
    "capacity_violations",
    "tmax_violations",
]
CURVE_HEADER = [
    "episode",
    "reward_sum",
    "tcr_percent",
    "art_seconds_or_empty",
    "failures",
    "capacity_violations",
    "tmax_violations",
]

CHARTS = {
    "avg_reward.svg": ("median_reward", "Average reward"),
    "tcr.svg": ("median_tcr", "Task completion rate (%)"),
    "art.svg": ("median_art", "Average response time (s)"),
}


def fmt(x: float | None) -> str:
    """Nine significant digits; ``None`` becomes the empty field."""
    if x is None:
        return ""
    return format(float(x), ".9g")


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_bytes(buf.getvalue().encode("utf-8"))


def episode_fields(m: EpisodeMetrics) -> list[str]:
    return [
        fmt(m.reward_sum),
        fmt(m.tcr),
        fmt(m.art),
        str(m.failures),
        str(m.capacity_violations),
        str(m.tmax_violations),
    ]


def write_results_csv(report, path: str | Path) -> None:
    rows = []
    for row in report.rows:
        for k, m in enumerate(report.eval_episodes[(row.agent, row.seed)]):
            rows.append([report.experiment_id, row.agent, str(row.seed), str(k), *episode_fields(m)])
    _write_csv(Path(path), RESULTS_HEADER, rows)


def write_summary_csv(summary: list[dict], path: str | Path) -> None:
    rows = [
        [
            s["agent"],
            str(s["seeds"]),
            fmt(s["median_reward"]),
            fmt(s["median_tcr"]),
            fmt(s["median_art"]),
            str(s["capacity_violations"]),
            str(s["tmax_violations"]),
        ]
        for s in summary
    ]
    _write_csv(Path(path), SUMMARY_HEADER, rows)


def write_curve_csv(curve: list[EpisodeMetrics], path: str | Path) -> None:
    _write_csv(Path(path), CURVE_HEADER, ([str(k), *episode_fields(m)] for k, m in enumerate(curve)))


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _new_figure(width: float = 6.0, height: float = 3.6) -> Figure:
    return Figure(figsize=(width, height), dpi=100)


def _save_svg(fig: Figure, path: Path) -> None:
    with matplotlib.rc_context({"svg.hashsalt": "constellation-rl", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})


def bar_chart(labels: Sequence[str], values: Sequence[float | None], ylabel: str, path: str | Path) -> None:
    fig = _new_figure()
    ax = fig.add_subplot(1, 1, 1)
    heights = [0.0 if v is None else v for v in values]
    bars = ax.bar(range(len(labels)), heights, color="#4c72b0", edgecolor="black", linewidth=0.6)
    for bar, v in zip(bars, values):
        text = "n/a" if v is None else f"{v:.3g}"
        ax.annotate(
            text,
            (bar.get_x() + bar.get_width() / 2, bar.get_height()),
            ha="center",
            va="bottom",
            fontsize=8,
            xytext=(0, 2),
            textcoords="offset points",
        )
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, fontsize=9)
    ax.set_ylabel(ylabel)
    ax.axhline(0.0, color="black", linewidth=0.6)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    _save_svg(fig, Path(path))


def render_summary_charts(summary_csv: str | Path, out_dir: str | Path) -> list[Path]:
    """Draw the three comparison charts from a summary.csv file."""
    rows = read_csv(summary_csv)
    labels = [r["agent"] for r in rows]
    written = []
    for name, (column, ylabel) in CHARTS.items():
        values = [float(r[column]) if r[column] != "" else None for r in rows]
        path = Path(out_dir) / name
        bar_chart(labels, values, ylabel, path)
        written.append(path)
    return written


def learning_curve(curve: list[EpisodeMetrics], title: str, path: str | Path, window: int = 10) -> None:
    fig = _new_figure(6.0, 3.2)
    ax = fig.add_subplot(1, 1, 1)
    rewards = [m.reward_sum for m in curve]
    ax.plot(range(len(rewards)), rewards, color="#999999", linewidth=0.6, label="episode")
    if len(rewards) >= window:
        smooth = [sum(rewards[i - window + 1 : i + 1]) / window for i in range(window - 1, len(rewards))]
        ax.plot(range(window - 1, len(rewards)), smooth, color="#c44e52", linewidth=1.4, label=f"{window}-episode mean")
    ax.set_xlabel("Training episode")
    ax.set_ylabel("Reward")
    ax.set_title(title, fontsize=10)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save_svg(fig, Path(path))

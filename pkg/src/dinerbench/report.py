"""Report rendering: condition tables as markdown/CSV/JSON plus figures.

One row per condition with the full extended column set (deadlock rate,
throughput and fairness with stds, time to deadlock, starvation count,
message-action consistency). Figures summarizing the same rows are written
as PNGs next to the tabular output.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .metrics import ConditionReport
from .runner import STANDARD_CONDITIONS

COLUMNS = ("Condition", "Episodes", "DL", "TP", "TP std", "FR", "FR std", "TTD", "SC", "MAC")


def _na(value: Optional[float], fmt: str) -> str:
    return "N/A" if value is None else format(value, fmt)


def _row(r: ConditionReport) -> list[str]:
    return [
        r.condition_code,
        str(r.episodes),
        f"{r.deadlock_rate:.2f}",
        f"{r.throughput_mean:.3f}",
        f"{r.throughput_std:.3f}",
        f"{r.fairness_mean:.3f}",
        f"{r.fairness_std:.3f}",
        _na(r.time_to_deadlock, ".1f"),
        f"{r.starvation_mean:.2f}",
        _na(r.message_action_consistency, ".1f"),
    ]


def sort_reports(reports: Sequence[ConditionReport]) -> list[ConditionReport]:
    order = {code: i for i, code in enumerate(STANDARD_CONDITIONS)}
    return sorted(reports, key=lambda r: (order.get(r.condition_code, len(order)), r.condition_code))


def render_markdown(reports: Sequence[ConditionReport]) -> str:
    lines = [
        "| " + " | ".join(COLUMNS) + " |",
        "|" + "|".join("---" for _ in COLUMNS) + "|",
    ]
    for r in sort_reports(reports):
        lines.append("| " + " | ".join(_row(r)) + " |")
    flagged = [r for r in sort_reports(reports) if r.zero_meal_episodes]
    if flagged:
        lines.append("")
        for r in flagged:
            lines.append(
                f"*{r.condition_code}: {r.zero_meal_episodes} episode(s) with zero total "
                f"meals; their fairness is reported as 1.00 (all equal at zero).*"
            )
    return "\n".join(lines) + "\n"


def render_csv(reports: Sequence[ConditionReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(COLUMNS)
    for r in sort_reports(reports):
        writer.writerow(_row(r))
    return buf.getvalue()


def render_json(reports: Sequence[ConditionReport]) -> str:
    return json.dumps([r.__dict__ for r in sort_reports(reports)], indent=2, sort_keys=True) + "\n"


def render_report(reports: Sequence[ConditionReport], fmt: str) -> str:
    renderers = {"md": render_markdown, "csv": render_csv, "json": render_json}
    if fmt not in renderers:
        raise ValueError(f"unknown report format {fmt!r}; choose md, csv or json")
    return renderers[fmt](reports)


def render_figures(reports: Sequence[ConditionReport], out_dir: Path) -> list[Path]:
    """Bar charts of the headline metrics, one PNG per chart."""
    out_dir.mkdir(parents=True, exist_ok=True)
    ordered = sort_reports(reports)
    codes = [r.condition_code for r in ordered]
    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(7, 4))
    colors = ["tab:orange" if c.startswith("sim") else "tab:blue" for c in codes]
    ax.bar(codes, [r.deadlock_rate for r in ordered], color=colors)
    ax.set_ylabel("Deadlock rate")
    ax.set_ylim(0, 1.05)
    ax.set_title("Deadlock rate by condition (orange = simultaneous)")
    fig.tight_layout()
    path = out_dir / "deadlock_rate.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    axes[0].bar(codes, [r.throughput_mean for r in ordered],
                yerr=[r.throughput_std for r in ordered], capsize=3, color="tab:green")
    axes[0].set_ylabel("Throughput (meals/timestep)")
    axes[1].bar(codes, [r.fairness_mean for r in ordered],
                yerr=[r.fairness_std for r in ordered], capsize=3, color="tab:purple")
    axes[1].set_ylabel("Fairness")
    axes[1].set_ylim(0, 1.05)
    for ax in axes:
        ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    path = out_dir / "throughput_fairness.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written

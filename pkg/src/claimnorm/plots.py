"""Figure rendering for evaluation and ablation reports.

Every report path emits a PNG alongside its delimited output so runs can
be eyeballed without reloading the JSON.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import MetricReport, _pct

_METRIC_LABELS = ["ROUGE-1 F1", "ROUGE-2 F1", "ROUGE-L F1", "BLEU-4", "METEOR"]


def _metric_values(report: MetricReport) -> list[float]:
    return [
        _pct(report.rouge1[2]),
        _pct(report.rouge2[2]),
        _pct(report.rougeL[2]),
        _pct(report.bleu4),
        _pct(report.meteor),
    ]


def plot_report(report: MetricReport, path, title: str | None = None) -> Path:
    """Bar chart of one run's headline metrics."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = _metric_values(report)
    fig, ax = plt.subplots(figsize=(7, 4))
    bars = ax.bar(_METRIC_LABELS, values, color="#4878d0")
    ax.bar_label(bars, fmt="%.2f", padding=2, fontsize=9)
    ax.set_ylabel("score × 100")
    ax.set_ylim(0, max(100.0, max(values) * 1.1))
    ax.set_title(title or f"{report.language} (n={report.n}, missing={report.n_missing})")
    ax.spines[["top", "right"]].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_comparison(
    reports: list[MetricReport], labels: list[str], path, title: str = "Configuration comparison"
) -> Path:
    """Grouped bars comparing several runs (e.g. ablation variants)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n_groups = len(_METRIC_LABELS)
    width = 0.8 / max(1, len(reports))
    x = np.arange(n_groups)
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for i, (report, label) in enumerate(zip(reports, labels)):
        offset = (i - (len(reports) - 1) / 2) * width
        ax.bar(x + offset, _metric_values(report), width, label=label)
    ax.set_xticks(x, _METRIC_LABELS)
    ax.set_ylabel("score × 100")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.spines[["top", "right"]].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path

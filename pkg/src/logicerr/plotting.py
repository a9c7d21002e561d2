"""PNG figures for evaluation reports.

Uses ``Figure`` directly instead of pyplot so no global backend state is
touched, and strips the software/date metadata so reruns are byte-identical.
"""

from __future__ import annotations

import os
from pathlib import Path

from matplotlib.figure import Figure

from logicerr.evaluate import AugmentationReport, EvalReport
from logicerr.taxonomy import TYPE_IDS, Taxonomy, load_taxonomy

_PNG_METADATA = {"Software": None}


def _save(fig: Figure, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="png", dpi=100, metadata=_PNG_METADATA)
    return path


def _names(tax: Taxonomy) -> list[str]:
    return [tax.get(t).name for t in TYPE_IDS]


def plot_classification(report: EvalReport, path: str | os.PathLike, taxonomy: Taxonomy | None = None) -> Path:
    """Accuracy and FPR per type as two side-by-side bar panels."""
    tax = taxonomy or load_taxonomy()
    fig = Figure(figsize=(10, 4))
    acc_ax, fpr_ax = fig.subplots(1, 2)
    xs = range(len(TYPE_IDS))

    acc = [float(report.accuracy[t].fraction or 0) * 100 for t in TYPE_IDS]
    acc_ax.bar(xs, acc, color="#4c72b0")
    acc_ax.set_ylim(0, 100)
    acc_ax.set_ylabel("accuracy (%)")
    avg = report.average_accuracy
    acc_ax.set_title(f"Accuracy, AVG {avg.render()}")

    rates = [float(report.fpr[t]) if report.fpr[t] is not None else 0.0 for t in TYPE_IDS]
    fpr_ax.bar(xs, rates, color="#dd8452")
    fpr_ax.set_ylim(0, 1)
    fpr_ax.set_ylabel("false positive rate")
    fpr_ax.set_title(f"FPR ({report.fpr_mode})")

    for ax in (acc_ax, fpr_ax):
        ax.set_xticks(list(xs))
        ax.set_xticklabels(_names(tax), rotation=45, ha="right", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_augmentation(report: AugmentationReport, path: str | os.PathLike, taxonomy: Taxonomy | None = None) -> Path:
    """Stacked outcome counts per target type."""
    tax = taxonomy or load_taxonomy()
    fig = Figure(figsize=(8, 4))
    ax = fig.subplots()
    xs = list(range(len(TYPE_IDS)))
    bottom = [0] * len(TYPE_IDS)
    for field, label, color in (
        ("right", "right augmentation", "#55a868"),
        ("other", "other logical error", "#ccb974"),
        ("not_logical", "not a logical error", "#c44e52"),
    ):
        heights = [getattr(report.per_type[t], field) for t in TYPE_IDS]
        ax.bar(xs, heights, bottom=bottom, label=label, color=color)
        bottom = [b + h for b, h in zip(bottom, heights)]
    ax.set_xticks(xs)
    ax.set_xticklabels(_names(tax), rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("samples")
    ax.set_title(f"Augmentation outcomes (total {report.totals.augmented})")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)

"""Accuracy / false-positive metrics and augmentation outcome tables.

Everything is kept as exact integer pairs or ``Fraction``; rounding only
happens when a report is rendered.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from logicerr.dataset import AugmentedSample, Dataset, Outcome
from logicerr.errors import EvaluationError, InvalidArgument
from logicerr.taxonomy import TYPE_IDS, Taxonomy, load_taxonomy

FPR_MODES = ("negatives", "paper-rowwise")
FORMATS = ("text", "csv", "json")


def round_half_away(x: Fraction) -> int:
    sign = -1 if x < 0 else 1
    return sign * int(abs(x) + Fraction(1, 2))


@dataclass(frozen=True)
class Ratio:
    correct: int
    total: int

    def __post_init__(self):
        if self.correct < 0 or self.total < 0 or self.correct > self.total:
            raise InvalidArgument(f"bad ratio {self.correct}/{self.total}")

    @property
    def fraction(self) -> Fraction | None:
        return Fraction(self.correct, self.total) if self.total else None

    def percent(self) -> int | None:
        f = self.fraction
        return None if f is None else round_half_away(100 * f)

    def render(self) -> str:
        pct = self.percent()
        head = "n/a" if pct is None else f"{pct}%"
        return f"{head} ({self.correct}/{self.total})"

    def __add__(self, other: "Ratio") -> "Ratio":
        return Ratio(self.correct + other.correct, self.total + other.total)


def render_rate(x: Fraction | None, places: int = 3) -> str:
    if x is None:
        return "n/a"
    scaled = round_half_away(x * 10**places)
    return f"{scaled / 10**places:.{places}f}"


Labels = Mapping[str, Sequence[bool]]


def _labels_of(labels: Labels | Dataset) -> Labels:
    return labels.labels() if isinstance(labels, Dataset) else labels


def _grid(results, labels: Labels | Dataset) -> list[tuple[Sequence[bool], Mapping]]:
    """Pairs each result with its sample's label; rejects unlabelled or repeated samples."""
    labels = _labels_of(labels)
    seen = set()
    grid = []
    for r in results:
        if r.sample_ref in seen:
            raise EvaluationError(f"sample {r.sample_ref} appears in more than one result")
        seen.add(r.sample_ref)
        label = labels.get(r.sample_ref)
        if label is None:
            raise EvaluationError(f"sample {r.sample_ref} has no label")
        if len(label) != len(TYPE_IDS):
            raise EvaluationError(f"sample {r.sample_ref}: label length {len(label)}, expected {len(TYPE_IDS)}")
        grid.append((label, r.verdicts))
    return grid


def accuracy(results, labels: Labels | Dataset) -> dict[str, Ratio]:
    """Recall per type: of samples labelled t, how many had prompt t answer Yes."""
    correct = Counter()
    total = Counter()
    for label, verdicts in _grid(results, labels):
        for j, t in enumerate(TYPE_IDS):
            if label[j]:
                total[t] += 1
                correct[t] += verdicts[t].is_yes
    return {t: Ratio(correct[t], total[t]) for t in TYPE_IDS}


def average_accuracy(per_type: Mapping[str, Ratio]) -> Ratio:
    out = Ratio(0, 0)
    for t in TYPE_IDS:
        out = out + per_type[t]
    return out


def fpr(results, labels: Labels | Dataset, mode: str = "negatives") -> dict[str, Fraction | None]:
    """False-positive rate per type; None where the denominator is zero.

    ``negatives``: among samples not labelled t, the share whose prompt t said Yes.
    ``paper-rowwise``: among samples labelled t, Yes answers on prompts for
    types the sample does not carry, over ten times the number of such samples.
    """
    if mode not in FPR_MODES:
        raise InvalidArgument(f"unknown fpr mode {mode!r}; expected one of {', '.join(FPR_MODES)}")
    num = Counter()
    den = Counter()
    for label, verdicts in _grid(results, labels):
        if mode == "negatives":
            for j, t in enumerate(TYPE_IDS):
                if not label[j]:
                    den[t] += 1
                    num[t] += verdicts[t].is_yes
        else:
            wrong_yes = sum(verdicts[u].is_yes for k, u in enumerate(TYPE_IDS) if not label[k])
            for j, t in enumerate(TYPE_IDS):
                if label[j]:
                    den[t] += len(TYPE_IDS)
                    num[t] += wrong_yes
    return {t: Fraction(num[t], den[t]) if den[t] else None for t in TYPE_IDS}


def average_rate(per_type: Mapping[str, Fraction | None]) -> Fraction | None:
    values = [v for v in per_type.values() if v is not None]
    return sum(values, Fraction(0)) / len(values) if values else None


@dataclass(frozen=True)
class EvalReport:
    accuracy: Mapping[str, Ratio]
    fpr: Mapping[str, Fraction | None]
    average_accuracy: Ratio
    average_fpr: Fraction | None
    fpr_mode: str = "negatives"
    config_snapshot: str = ""
    # the other fpr mode, filled in for verbose reports
    alt_fpr: Mapping[str, Fraction | None] | None = None
    alt_fpr_mode: str | None = None


def evaluate(results, labels: Labels | Dataset, fpr_mode: str = "negatives", *,
             config_snapshot: str = "", verbose: bool = False) -> EvalReport:
    results = list(results)
    acc = accuracy(results, labels)
    rates = fpr(results, labels, fpr_mode)
    alt_mode = alt = None
    if verbose:
        alt_mode = next(m for m in FPR_MODES if m != fpr_mode)
        alt = fpr(results, labels, alt_mode)
    return EvalReport(acc, rates, average_accuracy(acc), average_rate(rates), fpr_mode,
                      config_snapshot, alt, alt_mode)


# --- augmentation outcomes -------------------------------------------------------

@dataclass(frozen=True)
class AugmentationRow:
    augmented: int = 0
    right: int = 0
    other: int = 0
    not_logical: int = 0

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.augmented, self.right, self.other, self.not_logical)

    def __add__(self, other: "AugmentationRow") -> "AugmentationRow":
        return AugmentationRow(*(a + b for a, b in zip(self.as_tuple(), other.as_tuple())))


@dataclass(frozen=True)
class AugmentationReport:
    per_type: Mapping[str, AugmentationRow]
    totals: AugmentationRow
    failed: Mapping[str, int] = field(default_factory=dict)


_OUTCOME_FIELD = {Outcome.RIGHT: "right", Outcome.OTHER_TYPE: "other", Outcome.NOT_LOGICAL: "not_logical"}


def augmentation_table(augmented: Iterable[AugmentedSample]) -> AugmentationReport:
    counts = {t: Counter() for t in TYPE_IDS}
    failed = Counter()
    unresolved = []
    for aug in augmented:
        if aug.failed:
            failed[aug.target_type] += 1
        elif aug.outcome is Outcome.UNRESOLVED:
            unresolved.append(aug.id)
        else:
            counts[aug.target_type][_OUTCOME_FIELD[aug.outcome]] += 1
    if unresolved:
        raise EvaluationError(f"unresolved augmentations: {', '.join(sorted(unresolved))}")
    rows = {}
    for t in TYPE_IDS:
        c = counts[t]
        rows[t] = AugmentationRow(c["right"] + c["other"] + c["not_logical"], c["right"], c["other"], c["not_logical"])
    totals = AugmentationRow()
    for row in rows.values():
        totals = totals + row
    return AugmentationReport(rows, totals, {t: failed[t] for t in TYPE_IDS if failed[t]})


# --- rendering -------------------------------------------------------------------

def _fraction_json(x: Fraction | None):
    if x is None:
        return None
    return {"numerator": x.numerator, "denominator": x.denominator, "value": float(x)}


def _ratio_json(r: Ratio) -> dict:
    return {"correct": r.correct, "total": r.total, "rendered": r.render()}


def _table(rows: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"


def _csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _eval_rows(report: EvalReport, tax: Taxonomy) -> list[list[str]]:
    header = ["type", "accuracy", f"fpr ({report.fpr_mode})"]
    if report.alt_fpr is not None:
        header.append(f"fpr ({report.alt_fpr_mode})")
    rows = [header]
    for t in TYPE_IDS:
        row = [tax.get(t).label, report.accuracy[t].render(), render_rate(report.fpr[t])]
        if report.alt_fpr is not None:
            row.append(render_rate(report.alt_fpr[t]))
        rows.append(row)
    avg = ["AVG", report.average_accuracy.render(), render_rate(report.average_fpr)]
    if report.alt_fpr is not None:
        avg.append(render_rate(average_rate(report.alt_fpr)))
    rows.append(avg)
    return rows


def _aug_rows(report: AugmentationReport, tax: Taxonomy) -> list[list[str]]:
    rows = [["type", "augmented", "right", "other", "not_logical"]]
    for t in TYPE_IDS:
        rows.append([tax.get(t).name, *map(str, report.per_type[t].as_tuple())])
    rows.append(["Total", *map(str, report.totals.as_tuple())])
    return rows


def _eval_json(report: EvalReport, tax: Taxonomy) -> dict:
    doc = {
        "kind": "classification",
        "fpr_mode": report.fpr_mode,
        "per_type": {
            t: {
                "name": tax.get(t).name,
                "accuracy": _ratio_json(report.accuracy[t]),
                "fpr": _fraction_json(report.fpr[t]),
            }
            for t in TYPE_IDS
        },
        "average_accuracy": _ratio_json(report.average_accuracy),
        "average_fpr": _fraction_json(report.average_fpr),
        "config_snapshot": report.config_snapshot,
    }
    if report.alt_fpr is not None:
        doc["alt_fpr_mode"] = report.alt_fpr_mode
        for t in TYPE_IDS:
            doc["per_type"][t]["alt_fpr"] = _fraction_json(report.alt_fpr[t])
    return doc


def _aug_json(report: AugmentationReport, tax: Taxonomy) -> dict:
    def row(r: AugmentationRow) -> dict:
        return dict(zip(("augmented", "right", "other", "not_logical"), r.as_tuple()))

    return {
        "kind": "augmentation",
        "per_type": {t: {"name": tax.get(t).name, **row(report.per_type[t])} for t in TYPE_IDS},
        "totals": row(report.totals),
        "failed": dict(report.failed),
    }


def render_report(report: EvalReport | AugmentationReport, fmt: str = "text", taxonomy: Taxonomy | None = None) -> str:
    if fmt not in FORMATS:
        raise InvalidArgument(f"unknown report format {fmt!r}; expected one of {', '.join(FORMATS)}")
    tax = taxonomy or load_taxonomy()
    if isinstance(report, EvalReport):
        rows, doc = _eval_rows, _eval_json
    elif isinstance(report, AugmentationReport):
        rows, doc = _aug_rows, _aug_json
    else:
        raise InvalidArgument(f"cannot render {type(report).__name__}")
    if fmt == "json":
        return json.dumps(doc(report, tax), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        return _csv(rows(report, tax))
    text = _table(rows(report, tax))
    if isinstance(report, AugmentationReport) and report.failed:
        failed = ", ".join(f"{t}={n}" for t, n in sorted(report.failed.items()))
        text += f"failed augmentations (not tabulated): {failed}\n"
    return text

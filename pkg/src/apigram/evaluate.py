"""Confusion matrix and classification metrics.

Per-class accuracy is one-vs-rest: (TP + TN) / total.  Zero-denominator
precision/recall/F1 are reported as 0 and flagged rather than NaN.  The
multiclass MCC uses the covariance form over the count matrix, with a zero
denominator mapping to 0.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyMatrix, MissingTruth
from .profile_classify import ClassificationResult

PER_CLASS_ACCURACY_DEFINITION = "one-vs-rest: (TP + TN) / total"


@dataclass(frozen=True)
class ConfusionMatrix:
    """Integer count matrix; rows are true classes, columns predicted."""

    classes: tuple[str, ...]
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def permuted(self, order: Sequence[str]) -> "ConfusionMatrix":
        """The same tallies under a different class ordering."""
        if sorted(order) != sorted(self.classes):
            raise ValueError("permutation must cover exactly the same classes")
        idx = [self.classes.index(c) for c in order]
        return ConfusionMatrix(classes=tuple(order),
                               counts=self.counts[np.ix_(idx, idx)])


@dataclass(frozen=True)
class ClassMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    # metric names that hit a zero denominator and were reported as 0
    zero_division: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class MetricsReport:
    per_class: dict[str, ClassMetrics]
    accuracy: float
    macro_f1: float
    mcc: float
    total: int


def confusion(results: list[ClassificationResult],
              truth: Mapping[str, str]) -> ConfusionMatrix:
    """Tally predictions against ground truth.

    Class order is the sorted union of true and predicted class names.
    Raises MissingTruth when a result's sample_id has no truth entry.
    """
    for r in results:
        if r.sample_id not in truth:
            raise MissingTruth(f"no ground-truth label for sample {r.sample_id!r}")
    classes = tuple(sorted({truth[r.sample_id] for r in results}
                           | {r.predicted for r in results}))
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for r in results:
        counts[index[truth[r.sample_id]], index[r.predicted]] += 1
    return ConfusionMatrix(classes=classes, counts=counts)


def _safe_div(num: int, den: int, name: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Per-class one-vs-rest metrics plus aggregate accuracy, macro-F1, MCC."""
    total = cm.total
    if total == 0:
        raise EmptyMatrix("confusion matrix holds zero samples")

    counts = cm.counts
    per_class: dict[str, ClassMetrics] = {}
    f1_sum = 0.0
    for i, name in enumerate(cm.classes):
        tp = int(counts[i, i])
        fn = int(counts[i, :].sum()) - tp
        fp = int(counts[:, i].sum()) - tp
        tn = total - tp - fn - fp
        flags: list[str] = []
        precision = _safe_div(tp, tp + fp, "precision", flags)
        recall = _safe_div(tp, tp + fn, "recall", flags)
        if precision + recall == 0.0:
            flags.append("f1")
            f1 = 0.0
        else:
            f1 = 2.0 * precision * recall / (precision + recall)
        per_class[name] = ClassMetrics(
            accuracy=(tp + tn) / total,
            precision=precision,
            recall=recall,
            f1=f1,
            zero_division=tuple(flags),
        )
        f1_sum += f1

    # Covariance-form multiclass MCC over exact integer tallies.
    trace = int(np.trace(counts))
    t_k = [int(v) for v in counts.sum(axis=1)]
    p_k = [int(v) for v in counts.sum(axis=0)]
    num = trace * total - sum(t * p for t, p in zip(t_k, p_k))
    den_sq = (total * total - sum(p * p for p in p_k)) * \
             (total * total - sum(t * t for t in t_k))
    mcc = 0.0 if den_sq == 0 else num / math.sqrt(den_sq)

    return MetricsReport(
        per_class=per_class,
        accuracy=trace / total,
        macro_f1=f1_sum / len(cm.classes),
        mcc=mcc,
        total=total,
    )


def confusion_to_csv(cm: ConfusionMatrix) -> str:
    """CSV rendering with class-name headers; rows true, columns predicted."""
    out = io.StringIO()
    out.write("true\\predicted," + ",".join(cm.classes) + "\n")
    for i, name in enumerate(cm.classes):
        out.write(name + "," + ",".join(str(int(v)) for v in cm.counts[i]) + "\n")
    return out.getvalue()


def metrics_to_json(report: MetricsReport) -> str:
    payload = {
        "per_class_accuracy_definition": PER_CLASS_ACCURACY_DEFINITION,
        "total": report.total,
        "accuracy": report.accuracy,
        "macro_f1": report.macro_f1,
        "mcc": report.mcc,
        "per_class": {
            name: {
                "accuracy": m.accuracy,
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "zero_division": list(m.zero_division),
            }
            for name, m in report.per_class.items()
        },
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def metrics_table(report: MetricsReport) -> str:
    """Aligned plain-text table of per-class and aggregate metrics."""
    lines = [f"# per-class accuracy is {PER_CLASS_ACCURACY_DEFINITION}"]
    rows = [("class", "accuracy", "precision", "recall", "f1", "flags")]
    for name in sorted(report.per_class):
        m = report.per_class[name]
        rows.append((name, f"{m.accuracy:.4f}", f"{m.precision:.4f}",
                     f"{m.recall:.4f}", f"{m.f1:.4f}",
                     ",".join(m.zero_division) or "-"))
    widths = [max(len(r[i]) for r in rows) for i in range(6)]
    for r in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    lines.append(f"samples   {report.total}")
    lines.append(f"accuracy  {report.accuracy:.6f}")
    lines.append(f"macro_f1  {report.macro_f1:.6f}")
    lines.append(f"mcc       {report.mcc:.6f}")
    return "\n".join(lines) + "\n"

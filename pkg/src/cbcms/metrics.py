"""Per-label and macro precision/recall/F1 for multi-label predictions.

Conventions (fixed here, used everywhere):
- precision = TP/(TP+FP), recall = TP/(TP+FN), F1 = 2PR/(P+R)
- any zero denominator yields 0.0
- macro averages are unweighted means over labels; labels with zero support
  in the ground truth are excluded from macro averages
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .labels import JURISDICTIONS, LABEL_SPACE, Label


def precision(tp: int, fp: int) -> float:
    return tp / (tp + fp) if tp + fp else 0.0


def recall(tp: int, fn: int) -> float:
    return tp / (tp + fn) if tp + fn else 0.0


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


@dataclass(frozen=True)
class MetricCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def support(self) -> int:
        return self.tp + self.fn

    @property
    def precision(self) -> float:
        return precision(self.tp, self.fp)

    @property
    def recall(self) -> float:
        return recall(self.tp, self.fn)

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)


@dataclass(frozen=True)
class LabelMetrics:
    label: Label
    counts: MetricCounts


@dataclass(frozen=True)
class MacroMetrics:
    precision: float
    recall: float
    f1: float
    n_labels: int


@dataclass(frozen=True)
class EvalReport:
    per_label: tuple[LabelMetrics, ...]
    macro_by_jurisdiction: dict[str, MacroMetrics]
    macro_overall: MacroMetrics

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["jurisdiction", "category", "label", "support", "precision", "recall", "f1"])
        for lm in self.per_label:
            writer.writerow(
                [
                    lm.label.jurisdiction,
                    lm.label.category,
                    lm.label.name,
                    lm.counts.support,
                    f"{lm.counts.precision:.6f}",
                    f"{lm.counts.recall:.6f}",
                    f"{lm.counts.f1:.6f}",
                ]
            )
        for jur in JURISDICTIONS:
            m = self.macro_by_jurisdiction[jur]
            writer.writerow([jur, "macro", "", m.n_labels, f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.f1:.6f}"])
        m = self.macro_overall
        writer.writerow(["ALL", "macro", "", m.n_labels, f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.f1:.6f}"])
        return buf.getvalue()


def _macro(per_label: list[LabelMetrics]) -> MacroMetrics:
    with_support = [lm for lm in per_label if lm.counts.support > 0]
    if not with_support:
        return MacroMetrics(0.0, 0.0, 0.0, 0)
    ps = [lm.counts.precision for lm in with_support]
    rs = [lm.counts.recall for lm in with_support]
    fs = [lm.counts.f1 for lm in with_support]
    n = len(with_support)
    return MacroMetrics(sum(ps) / n, sum(rs) / n, sum(fs) / n, n)


def evaluate_predictions(y_true: np.ndarray, y_pred: np.ndarray) -> EvalReport:
    """Score a (n_rows, 51) 0/1 prediction matrix against ground truth."""
    y_true = np.asarray(y_true, dtype=bool)
    y_pred = np.asarray(y_pred, dtype=bool)
    if y_true.shape != y_pred.shape or y_true.ndim != 2 or y_true.shape[1] != len(LABEL_SPACE):
        raise ValueError(f"expected matching (n, {len(LABEL_SPACE)}) matrices")

    tp = (y_true & y_pred).sum(axis=0)
    fp = (~y_true & y_pred).sum(axis=0)
    fn = (y_true & ~y_pred).sum(axis=0)
    tn = (~y_true & ~y_pred).sum(axis=0)

    per_label = [
        LabelMetrics(LABEL_SPACE.label_at(i), MetricCounts(int(tp[i]), int(fp[i]), int(fn[i]), int(tn[i])))
        for i in range(len(LABEL_SPACE))
    ]
    macro_by_jur = {
        jur: _macro([lm for lm in per_label if lm.label.jurisdiction == jur])
        for jur in JURISDICTIONS
    }
    return EvalReport(
        per_label=tuple(per_label),
        macro_by_jurisdiction=macro_by_jur,
        macro_overall=_macro(per_label),
    )

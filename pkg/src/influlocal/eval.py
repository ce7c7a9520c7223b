"""AUC / precision / recall / F1 and evaluation reports."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata


class UndefinedMetricError(ValueError):
    pass


def auc(labels, scores) -> float:
    """Mann-Whitney AUC; tied positive/negative pairs count one half."""
    labels = np.asarray(labels).astype(bool)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs at least one positive and one negative")
    ranks = rankdata(scores)  # average ranks for ties
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def prf1(labels, scores, threshold: float = 0.5):
    """Precision, recall, F1 and confusion counts for ``score >= threshold``.

    Precision is 0 with no predicted positives, recall is 0 with no actual
    positives, and F1 is 0 when P + R = 0.
    """
    labels = np.asarray(labels).astype(bool)
    pred = np.asarray(scores, dtype=np.float64) >= threshold
    tp = int(np.sum(pred & labels))
    fp = int(np.sum(pred & ~labels))
    fn = int(np.sum(~pred & labels))
    tn = int(np.sum(~pred & ~labels))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall, f1_from(precision, recall), {"tp": tp, "fp": fp, "tn": tn, "fn": fn}


def f1_from(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


@dataclass
class EvalReport:
    auc: float
    precision: float
    recall: float
    f1: float
    threshold: float
    counts: dict
    labels: list = field(default_factory=list, repr=False)
    scores: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {"auc": round(self.auc, 4), "precision": round(self.precision, 4),
                "recall": round(self.recall, 4), "f1": round(self.f1, 4),
                "threshold": self.threshold, "counts": self.counts}

    def save(self, path: str, **meta) -> None:
        doc = {"metrics": self.summary(), **meta}
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=1)
            fh.write("\n")

    def save_scores(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("label score\n")
            for y, s in zip(self.labels, self.scores):
                fh.write(f"{int(y)} {float(s)!r}\n")

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate(predictor, instances, labels=None, threshold: float = 0.5) -> EvalReport:
    """Score every instance once with ``predictor`` and compute all metrics.

    ``predictor`` maps the instance sequence to per-instance scores.  With a
    single-class test set (or constant scores) AUC is undefined and the
    error propagates.
    """
    scores = np.asarray(predictor(instances), dtype=np.float64)
    if labels is None:
        labels = [inst.label for inst in instances]
    labels = np.asarray(labels, dtype=np.int64)
    if len(scores) != len(labels):
        raise ValueError("predictor returned the wrong number of scores")
    p, r, f, counts = prf1(labels, scores, threshold)
    return EvalReport(auc(labels, scores), p, r, f, threshold, counts,
                      labels.tolist(), scores.tolist())

"""Classification metrics: ROC curves, AUC with DeLong intervals, accuracy."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from strokerf.dataset.cohort import Cohort

_Z_95 = 1.96


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int
    threshold: float

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_json(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
                "threshold": self.threshold}


@dataclass(frozen=True)
class RocCurve:
    """Ordered (fpr, tpr, threshold) points; thresholds strictly decreasing."""

    points: tuple[tuple[float, float, float], ...]
    n_pos: int
    n_neg: int


@dataclass(frozen=True)
class AucResult:
    auc: float
    ci_low: float
    ci_high: float
    se: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.ci_low <= self.auc <= self.ci_high <= 1.0:
            raise ValueError(
                f"need 0 <= ci_low <= auc <= ci_high <= 1, got "
                f"({self.ci_low}, {self.auc}, {self.ci_high})")

    def to_json(self) -> dict:
        return {"auc": self.auc, "ci_low": self.ci_low, "ci_high": self.ci_high,
                "se": self.se}


def _check_scores_labels(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.ndim != 1 or y.ndim != 1:
        raise ValueError("scores and labels must be 1-dimensional")
    if s.size != y.size:
        raise ValueError(f"length mismatch: {s.size} scores vs {y.size} labels")
    if np.isnan(s).any():
        raise ValueError("scores must not contain NaN")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    return s, y.astype(np.int64)


def roc_curve(scores, labels) -> RocCurve:
    """ROC points at every distinct score; tied scores advance jointly."""
    s, y = _check_scores_labels(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError(f"need both classes, got {n_pos} positive / {n_neg} negative")
    order = np.argsort(-s, kind="stable")
    points = [(0.0, 0.0, math.inf)]
    tp = fp = 0
    i = 0
    while i < y.size:
        j = i
        while j < y.size and s[order[j]] == s[order[i]]:
            j += 1
        block = y[order[i:j]]
        tp += int(block.sum())
        fp += block.size - int(block.sum())
        points.append((fp / n_neg, tp / n_pos, float(s[order[i]])))
        i = j
    return RocCurve(points=tuple(points), n_pos=n_pos, n_neg=n_neg)


def auc_trapezoid(curve: RocCurve) -> float:
    """Trapezoidal area under the curve.

    With joint tie segments this equals the Mann-Whitney pair statistic
    (wins + half-ties over n_pos * n_neg).
    """
    area = 0.0
    for (x0, y0, _), (x1, y1, _) in zip(curve.points, curve.points[1:]):
        area += (x1 - x0) * (y1 + y0) * 0.5
    return area


def _midrank(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.float64)
    i = 0
    while i < x.size:
        j = i
        while j < x.size and x[order[j]] == x[order[i]]:
            j += 1
        ranks[order[i:j]] = (i + j + 1) / 2.0
        i = j
    return ranks


def auc_ci(scores, labels) -> AucResult:
    """AUC with a DeLong covariance standard error and 95% interval.

    The interval is auc +/- 1.96 * se, clipped to [0, 1].
    """
    s, y = _check_scores_labels(scores, labels)
    pos = s[y == 1]
    neg = s[y == 0]
    m, n = pos.size, neg.size
    if m < 2 or n < 2:
        raise ValueError(f"need at least 2 records per class, got {m} positive / {n} negative")
    tz = _midrank(s)
    tx = _midrank(pos)
    ty = _midrank(neg)
    v10 = (tz[y == 1] - tx) / n
    v01 = 1.0 - (tz[y == 0] - ty) / m
    auc = (float(tz[y == 1].sum()) - m * (m + 1) / 2.0) / (m * n)
    s10 = float(np.var(v10, ddof=1))
    s01 = float(np.var(v01, ddof=1))
    se = math.sqrt(s10 / m + s01 / n)
    return AucResult(auc=auc,
                     ci_low=max(0.0, auc - _Z_95 * se),
                     ci_high=min(1.0, auc + _Z_95 * se),
                     se=se)


def accuracy(scores, labels, threshold: float = 0.5) -> tuple[float, ConfusionMatrix]:
    """Fraction correct with score >= threshold classified positive."""
    s, y = _check_scores_labels(scores, labels)
    if s.size == 0:
        raise ValueError("need at least one record")
    pred = s >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    tn = int(np.sum(~pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    cm = ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn, threshold=threshold)
    return (tp + tn) / s.size, cm


@dataclass(frozen=True)
class SingleVariableRoc:
    """Orientation-corrected discrimination of one raw feature."""

    feature: str
    result: AucResult
    flipped: bool

    def to_json(self) -> dict:
        return {"feature": self.feature, "flipped": self.flipped, **self.result.to_json()}


def single_variable_roc(cohort: Cohort, feature: str, target: str) -> SingleVariableRoc:
    """AUC of one feature used directly as the score.

    A feature whose raw orientation discriminates below chance is flipped
    (score negated) and flagged.
    """
    mat, _ = cohort.feature_matrix((feature,))
    col = mat[:, 0]
    y = cohort.labels(target)
    ok = ~np.isnan(col)
    a = col[ok & (y == 1)]
    b = col[ok & (y == 0)]
    if a.size < 2 or b.size < 2:
        raise ValueError(
            f"feature {feature!r} needs 2 non-missing values per class, "
            f"got {a.size} positive / {b.size} negative")
    vals = col[ok]
    if float(vals.min()) == float(vals.max()):
        raise ValueError(f"feature {feature!r} is constant; no discrimination possible")
    res = auc_ci(vals, y[ok])
    flipped = res.auc < 0.5
    if flipped:
        res = auc_ci(-vals, y[ok])
    return SingleVariableRoc(feature=feature, result=res, flipped=flipped)


def save_roc_csv(curve: RocCurve, path) -> None:
    """One (fpr, tpr, threshold) row per curve point."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr", "threshold"])
        for fpr, tpr, thr in curve.points:
            w.writerow([repr(fpr), repr(tpr), "inf" if math.isinf(thr) else repr(thr)])

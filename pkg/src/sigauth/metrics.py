"""Verification metrics: confusion counts, FAR/FRR, ROC curves, the equal
error rate, and speedup records.

Genuine is the positive class and a sample is accepted when its score is >=
the threshold.  ROC thresholds are the sorted distinct scores with -inf and
+inf sentinels, so the curve always starts at (FAR=1, FRR=0) and ends at
(FAR=0, FRR=1).  The EER is read off the curve by linear interpolation at
the first index where FAR - FRR stops being positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyScores,
    NoNegatives,
    NonPositiveTime,
    NoPositives,
    SingleClassScores,
)
from .network import score_any
from .samples import Dataset, GENUINE

#: |FAR(theta*) - FRR(theta*)| is guaranteed below this under interpolation.
EER_TOL = 1e-9


@dataclass(frozen=True)
class ConfusionCounts:
    """Accept/reject counts at one threshold (genuine = positive class)."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _split_scores(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.size == 0:
        raise EmptyScores("no scores")
    if scores.shape != labels.shape:
        raise ValueError(f"{scores.size} scores vs {labels.size} labels")
    genuine = labels == GENUINE
    return scores[genuine], scores[~genuine]


def confusion_at(scores, labels, threshold: float) -> ConfusionCounts:
    """Count TP/FP/TN/FN with accept-as-genuine at score >= threshold."""
    g, f = _split_scores(scores, labels)
    tp = int(np.count_nonzero(g >= threshold))
    fp = int(np.count_nonzero(f >= threshold))
    return ConfusionCounts(tp=tp, fp=fp, tn=f.size - fp, fn=g.size - tp)


def far(c: ConfusionCounts) -> float:
    """False acceptance rate FP / (FP + TN)."""
    if c.fp + c.tn == 0:
        raise NoNegatives("no forged samples to compute FAR")
    return c.fp / (c.fp + c.tn)


def frr(c: ConfusionCounts) -> float:
    """False rejection rate FN / (FN + TP)."""
    if c.fn + c.tp == 0:
        raise NoPositives("no genuine samples to compute FRR")
    return c.fn / (c.fn + c.tp)


@dataclass(frozen=True)
class RocCurve:
    """(threshold, FAR, FRR) triples at strictly increasing thresholds.

    FAR is non-increasing and FRR non-decreasing along the curve; the first
    row is the -inf sentinel (1, 0) and the last the +inf sentinel (0, 1).
    """

    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray

    def __len__(self) -> int:
        return self.thresholds.size


def roc(scores, labels) -> RocCurve:
    """Sweep every distinct score (plus sentinels) as a threshold."""
    g, f = _split_scores(scores, labels)
    if g.size == 0 or f.size == 0:
        raise SingleClassScores("need both genuine and forged scores")
    g.sort()
    f.sort()
    thresholds = np.concatenate(
        [[-np.inf], np.unique(np.concatenate([g, f])), [np.inf]]
    )
    # accepted = count(score >= t); searchsorted('left') counts strictly below
    fp = f.size - np.searchsorted(f, thresholds, side="left")
    fn = np.searchsorted(g, thresholds, side="left")
    return RocCurve(thresholds=thresholds, far=fp / f.size, frr=fn / g.size)


def eer(curve: RocCurve) -> tuple[float, float]:
    """(EER, threshold) at the FAR/FRR crossing, linearly interpolated.

    The difference FAR - FRR starts at 1, ends at -1, and never increases,
    so the crossing segment always exists; when it falls between two curve
    points the rate is interpolated and the threshold clamped to the largest
    finite one if the segment touches the +inf sentinel.
    """
    diff = curve.far - curve.frr
    i = int(np.argmax(diff <= 0.0))
    if diff[i] == 0.0:
        return float((curve.far[i] + curve.frr[i]) / 2.0), float(curve.thresholds[i])
    t = diff[i - 1] / (diff[i - 1] - diff[i])
    far_t = curve.far[i - 1] + t * (curve.far[i] - curve.far[i - 1])
    frr_t = curve.frr[i - 1] + t * (curve.frr[i] - curve.frr[i - 1])
    lo, hi = curve.thresholds[i - 1], curve.thresholds[i]
    theta = lo if np.isinf(hi) else lo + t * (hi - lo)
    return float((far_t + frr_t) / 2.0), float(theta)


@dataclass(frozen=True)
class EvalReport:
    roc: RocCurve
    eer: float
    eer_threshold: float
    counts: ConfusionCounts    # confusion at the EER operating point


def evaluate(model, ds: Dataset) -> EvalReport:
    """Score a dataset with a network or ensemble and report its ROC/EER."""
    s = score_any(model, ds.vectors)
    curve = roc(s, ds.labels)
    rate, theta = eer(curve)
    return EvalReport(
        roc=curve,
        eer=rate,
        eer_threshold=theta,
        counts=confusion_at(s, ds.labels, theta),
    )


@dataclass(frozen=True)
class SpeedupRecord:
    """Single-worker vs n-worker wall clock for one stage."""

    stage: str
    t_single: float
    t_n: float
    n: int
    s: float


def speedup(t_single: float, t_n: float, n: int, stage: str = "") -> SpeedupRecord:
    """S = T(1) / T(n)."""
    if t_single <= 0 or t_n <= 0:
        raise NonPositiveTime(f"times must be positive, got {t_single} and {t_n}")
    if n < 1:
        raise ValueError(f"worker count must be >= 1, got {n}")
    return SpeedupRecord(stage=stage, t_single=t_single, t_n=t_n, n=n, s=t_single / t_n)


def write_roc(curve: RocCurve, path) -> None:
    """Plot-ready `threshold,far,frr` text table."""
    lines = ["threshold,far,frr"]
    for t, fa, fr in zip(curve.thresholds, curve.far, curve.frr):
        lines.append(f"{float(t)!r},{float(fa)!r},{float(fr)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

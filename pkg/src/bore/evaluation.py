"""Ranking metrics and the unsupervised baselines."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import InputError


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


@dataclass(frozen=True)
class MetricReport:
    auc: float
    auc_01: float
    precision_at_no: float
    n_o: int

    def to_dict(self) -> dict:
        return asdict(self)


def _prepare(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InputError("scores and labels must be 1-D and of equal length")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise InputError("both classes must be present to compute ROC metrics")
    if n_pos + n_neg != len(labels):
        raise InputError("labels must be 0/1")
    return scores, labels, n_pos, n_neg


def _roc_counts(scores, labels):
    """Cumulative (fp, tp) counts at the end of each tie group, highest score first."""
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    pos = (labels[order] == 1).astype(np.int64)
    last_of_group = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tp = np.r_[0, np.cumsum(pos)[last_of_group]]
    fp = np.r_[0, np.cumsum(1 - pos)[last_of_group]]
    return fp, tp


def roc_curve(scores, labels) -> RocCurve:
    """ROC points from (0, 0) to (1, 1), one point per distinct score.

    Tied scores move along a single straight segment.
    """
    scores, labels, n_pos, n_neg = _prepare(scores, labels)
    fp, tp = _roc_counts(scores, labels)
    return RocCurve(fp / n_neg, tp / n_pos)


def auc(scores, labels) -> float:
    scores, labels, n_pos, n_neg = _prepare(scores, labels)
    fp, tp = _roc_counts(scores, labels)
    # twice the trapezoid area in integer units, exact for any realistic n
    twice = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    return twice / (2.0 * n_pos * n_neg)


def partial_auc(scores, labels, fpr_max: float = 0.1) -> float:
    """Area under the ROC curve over fpr in [0, fpr_max], divided by fpr_max."""
    if not 0.0 < fpr_max <= 1.0:
        raise InputError("fpr_max must lie in (0, 1]")
    if fpr_max == 1.0:
        return auc(scores, labels)
    curve = roc_curve(scores, labels)
    fpr, tpr = curve.fpr, curve.tpr
    cut = int(np.searchsorted(fpr, fpr_max, side="right"))
    xs, ys = fpr[:cut], tpr[:cut]
    if xs[-1] < fpr_max:
        # fpr[cut] > fpr_max here, so the interpolation is well defined
        x0, x1, y0, y1 = fpr[cut - 1], fpr[cut], tpr[cut - 1], tpr[cut]
        y_cut = y0 + (y1 - y0) * (fpr_max - x0) / (x1 - x0)
        xs, ys = np.r_[xs, fpr_max], np.r_[ys, y_cut]
    area = float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1]) / 2.0))
    return area / fpr_max


def precision_at_n(scores, labels, n: int) -> float:
    """Share of outliers among the n highest scores; ties go to the lower index."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if not 1 <= n <= len(scores):
        raise InputError(f"n must lie in 1..{len(scores)}, got {n}")
    top = np.argsort(-scores, kind="stable")[:n]
    return float(np.sum(labels[top] == 1)) / n


def metric_report(scores, labels, fpr_max: float = 0.1) -> MetricReport:
    labels = np.asarray(labels)
    n_o = int(np.sum(labels == 1))
    return MetricReport(
        auc(scores, labels),
        partial_auc(scores, labels, fpr_max),
        precision_at_n(scores, labels, n_o) if n_o else 0.0,
        n_o,
    )


def baseline_mean_osf(rep) -> np.ndarray:
    """Row-wise mean of the (already min-max normalised) OSF columns."""
    cols = rep.osf_indices
    if not cols:
        raise InputError("representation has no OSF columns")
    return rep.matrix[:, cols].mean(axis=1)


def baseline_best_osf(rep_test, labels_test) -> tuple[int, MetricReport]:
    """OSF column with the best test AUC.

    Oracle baseline: it peeks at test labels and cannot be deployed.
    """
    cols = rep_test.osf_indices
    if not cols:
        raise InputError("representation has no OSF columns")
    best, best_report = None, None
    for j in cols:
        report = metric_report(rep_test.matrix[:, j], labels_test)
        if best_report is None or report.auc > best_report.auc:
            best, best_report = j, report
    return best, best_report

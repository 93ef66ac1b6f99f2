"""Window-level metrics: ranking, agreement, regression and BCI chance levels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np
from scipy.stats import rankdata



def _binary_pairs(scores, labels):
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1 or s.size == 0:
        raise ValueError("scores and labels must be equal-length 1-D sequences")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    return s, y.astype(bool)


def auroc(scores, labels) -> float:
    """Mann-Whitney AUROC with midranks: P(s+ > s-) + 0.5 P(s+ == s-)."""
    s, y = _binary_pairs(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC needs both classes")
    ranks = rankdata(s)  # midranks, exact halves
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def auprc(scores, labels) -> float:
    """Step-wise average precision: sum over thresholds of (R_k - R_{k-1}) * P_k."""
    s, y = _binary_pairs(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValueError("AUPRC needs at least one positive")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    tp = np.cumsum(y)
    # last index of each run of tied scores
    ends = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    tp = tp[ends]
    precision = tp / (ends + 1)
    recall_step = np.diff(np.r_[0, tp]) / n_pos
    return float(np.sum(recall_step * precision))


def confusion_matrix(pred, truth, n_classes: int) -> np.ndarray:
    p = np.asarray(pred, dtype=np.int64)
    t = np.asarray(truth, dtype=np.int64)
    if p.shape != t.shape:
        raise ValueError("pred and truth must have equal length")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm  # rows truth, columns prediction


def balanced_accuracy(pred, truth, n_classes: int, observed_only: bool = False) -> float:
    cm = confusion_matrix(pred, truth, n_classes)
    support = cm.sum(axis=1)
    if observed_only:
        keep = support > 0
        if not keep.any():
            raise ValueError("no classes observed in truth")
        return float(np.mean(np.diag(cm)[keep] / support[keep]))
    if (support == 0).any():
        missing = np.nonzero(support == 0)[0].tolist()
        raise ValueError(f"classes {missing} absent from truth; pass observed_only=True to skip them")
    return float(np.mean(np.diag(cm) / support))


def normalized_balanced_accuracy(ba: float, n_classes: int) -> float:
    """Affine map sending chance (1/C) to 0.5 and perfect to 1.0."""
    chance = 1.0 / n_classes
    return (ba - chance) / (1 - chance) * 0.5 + 0.5


@dataclass(frozen=True)
class ChanceThreshold:
    n: int
    n_classes: int
    alpha: float
    z: int
    min_ba: float
    normalized_min_ba: float
    p_value: float
    attainable: bool


def chance_threshold(n: int, n_classes: int, alpha: float = 0.05) -> ChanceThreshold:
    """Smallest accuracy z/n with P(X >= z) < alpha for X ~ Binomial(n, 1/C).

    When no z qualifies the threshold is reported as 1.0 with
    ``attainable=False``. Thresholds below chance are lifted to 1/C.
    """
    if n < 1 or n_classes < 2 or not 0 < alpha < 1:
        raise ValueError("need n >= 1, C >= 2 and 0 < alpha < 1")
    p = 1.0 / n_classes
    pmf = _binomial_pmf(n, p)

    def sf(z: int) -> float:
        return min(1.0, math.fsum(pmf[z:])) if z > 0 else 1.0

    # survival is non-increasing in z, so bisect for the first z below alpha
    lo, hi = 0, n + 1
    while lo < hi:
        mid = (lo + hi) // 2
        if sf(mid) < alpha:
            hi = mid
        else:
            lo = mid + 1
    if lo > n:
        return ChanceThreshold(n, n_classes, alpha, n + 1, 1.0, 1.0, sf(n), False)
    ba = max(lo / n, p)
    return ChanceThreshold(n, n_classes, alpha, lo, ba, normalized_balanced_accuracy(ba, n_classes), sf(lo), True)


def _binomial_pmf(n: int, p: float) -> list[float]:
    lp, lq, lgn = math.log(p), math.log1p(-p), math.lgamma(n + 1)
    return [math.exp(lgn - math.lgamma(i + 1) - math.lgamma(n - i + 1) + i * lp + (n - i) * lq) for i in range(n + 1)]


def cohen_kappa(pred: Sequence[Hashable], truth: Sequence[Hashable]) -> float:
    pred, truth = list(pred), list(truth)
    if len(pred) != len(truth) or not pred:
        raise ValueError("need equal-length non-empty sequences")
    labels = sorted(set(pred) | set(truth), key=repr)
    idx = {lab: i for i, lab in enumerate(labels)}
    cm = confusion_matrix([idx[v] for v in pred], [idx[v] for v in truth], len(labels))
    n = len(pred)
    po = np.trace(cm) / n
    pe = float(cm.sum(axis=0) @ cm.sum(axis=1)) / (n * n)
    if pe == 1.0:
        return 0.0
    return float((po - pe) / (1 - pe))


def per_class_f1(pred, truth, n_classes: int) -> np.ndarray:
    cm = confusion_matrix(pred, truth, n_classes)
    tp = np.diag(cm).astype(float)
    denom = cm.sum(axis=0) + cm.sum(axis=1)  # 2TP + FP + FN
    with np.errstate(divide="ignore", invalid="ignore"):
        f1 = np.where(denom > 0, 2 * tp / denom, 0.0)
    return f1


def macro_f1(pred, truth, n_classes: int) -> float:
    return float(np.mean(per_class_f1(pred, truth, n_classes)))


def mae(pred, truth) -> float:
    p = np.asarray(pred, dtype=float)
    t = np.asarray(truth, dtype=float)
    if p.shape != t.shape:
        raise ValueError("pred and truth must have equal length")
    return float(np.mean(np.abs(p - t)))


def pearson_r(pred, truth) -> float:
    p = np.asarray(pred, dtype=float)
    t = np.asarray(truth, dtype=float)
    if p.shape != t.shape or p.size < 2:
        raise ValueError("need equal-length inputs with at least 2 values")
    pc, tc = p - p.mean(), t - t.mean()
    den = math.sqrt(float(pc @ pc) * float(tc @ tc))
    if den == 0:
        raise ValueError("Pearson r undefined for constant input")
    return float(np.clip(float(pc @ tc) / den, -1.0, 1.0))

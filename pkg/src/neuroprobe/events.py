"""Event-level scoring of window probability tracks.

Predicted events are maximal runs of windows at or above a threshold. A true
event counts as detected when any predicted event overlaps it; a predicted
event overlapping no true event is a false alarm. Sweeping the threshold
gives a sensitivity vs false-alarms-per-hour curve whose area against
log10(FA/h) over [0.1, 100] is the headline seizure metric.
"""

from __future__ import annotations

import bisect
import csv
import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data import EventAnnotations, WindowScores

FA_MIN, FA_MAX = 0.1, 100.0
MAX_EXACT_THRESHOLDS = 512


@dataclass(frozen=True)
class PredictedEvents:
    record_id: str
    threshold: float
    events: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class SensitivityCurve:
    """Upper envelope of (FA/h, sensitivity) operating points, sorted by FA/h."""

    fa_per_hour: np.ndarray
    sensitivity: np.ndarray
    total_hours: float = float("nan")
    n_true_events: int = 0

    def __post_init__(self):
        fa = np.asarray(self.fa_per_hour, dtype=float)
        se = np.asarray(self.sensitivity, dtype=float)
        if fa.shape != se.shape or fa.ndim != 1:
            raise ValueError("curve arrays must be equal-length 1-D")
        object.__setattr__(self, "fa_per_hour", fa)
        object.__setattr__(self, "sensitivity", se)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fa_per_hour.tolist(), self.sensitivity.tolist()))

    def __call__(self, fa) -> np.ndarray:
        return evaluate_curve(self, fa)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["fa_per_hour", "sensitivity"])
            for f, s in self.points:
                w.writerow([repr(f), repr(s)])


def windows_to_events(scores: WindowScores | Sequence[float], threshold: float, window_seconds: float,
                      merge_gap_s: float = 0.0, record_id: str | None = None) -> PredictedEvents:
    if not 0 <= threshold <= 1:
        raise ValueError("threshold must lie in [0, 1]")
    if isinstance(scores, WindowScores):
        record_id = scores.record_id if record_id is None else record_id
        s = scores.scores
    else:
        s = np.asarray(scores, dtype=float)
    if s.ndim != 1:
        raise ValueError("event forming needs binary (1-D) window scores")
    on = np.r_[False, s >= threshold, False]
    edges = np.diff(on.astype(np.int8))
    starts = np.nonzero(edges == 1)[0]
    ends = np.nonzero(edges == -1)[0]
    merged: list[list[float]] = []
    for a, b in zip(starts, ends):
        on_s, off_s = a * window_seconds, b * window_seconds
        if merged and on_s - merged[-1][1] <= merge_gap_s:
            merged[-1][1] = off_s
        else:
            merged.append([on_s, off_s])
    return PredictedEvents(record_id or "", float(threshold), tuple((float(a), float(b)) for a, b in merged))


def _overlap_flags(pred: Sequence[tuple[float, float]], truth: Sequence[tuple[float, float]]):
    """Per-truth detected flags and per-prediction hit flags (half-open overlap)."""
    order = sorted(range(len(truth)), key=lambda i: truth[i])
    onsets = [truth[i][0] for i in order]
    reach = list(itertools.accumulate((truth[i][1] for i in order), max))
    detected = [False] * len(truth)
    hit = [False] * len(pred)
    for j, (pa, pb) in enumerate(pred):
        # candidates have onset < pb; walk back while some earlier offset may exceed pa
        pos = bisect.bisect_left(onsets, pb) - 1
        while pos >= 0 and reach[pos] > pa:
            i = order[pos]
            if truth[i][1] > pa:
                detected[i] = True
                hit[j] = True
            pos -= 1
    return detected, hit


@dataclass(frozen=True)
class EventScore:
    n_true: int
    n_detected: int
    n_false_alarms: int
    hours: float

    @property
    def sensitivity(self) -> float:
        return self.n_detected / self.n_true if self.n_true else float("nan")

    @property
    def fa_per_hour(self) -> float:
        return self.n_false_alarms / self.hours


def score_record(pred: PredictedEvents | Sequence[tuple[float, float]], truth: EventAnnotations) -> EventScore:
    if not truth.duration_s > 0:
        raise ValueError("record duration must be positive")
    p = pred.events if isinstance(pred, PredictedEvents) else tuple(pred)
    t = [(e.onset_s, e.offset_s) for e in truth.events]
    detected, hit = _overlap_flags(p, t)
    return EventScore(len(t), sum(detected), len(p) - sum(hit), truth.duration_s / 3600.0)


def any_overlap_score(pred, truth: EventAnnotations) -> tuple[float, float]:
    """(sensitivity, false alarms per hour); sensitivity is NaN without true events."""
    sc = score_record(pred, truth)
    return sc.sensitivity, sc.fa_per_hour


def default_thresholds(scores: Sequence[np.ndarray]) -> np.ndarray:
    """101 evenly spaced thresholds, plus every distinct score when there are fewer than 512."""
    grid = np.linspace(0.0, 1.0, 101)
    distinct = np.unique(np.concatenate([np.asarray(s, dtype=float).ravel() for s in scores])) if scores else []
    if len(distinct) < MAX_EXACT_THRESHOLDS:
        grid = np.union1d(grid, distinct)
    return grid[::-1]


def sweep_operating_points(scores: Mapping[str, np.ndarray], truth: Mapping[str, EventAnnotations],
                           window_seconds: float, thresholds=None, merge_gap_s: float = 0.0):
    """Pooled (threshold, sensitivity, FA/h) per threshold, descending thresholds."""
    rids = sorted(truth)
    n_true = sum(len(truth[r].events) for r in rids)
    if n_true == 0:
        raise ValueError("no true events across records")
    hours = sum(truth[r].duration_s for r in rids) / 3600.0
    if thresholds is None:
        thresholds = default_thresholds([scores[r] for r in rids])
    thresholds = np.sort(np.asarray(thresholds, dtype=float))[::-1]
    out = []
    for th in thresholds:
        det = fa = 0
        for r in rids:
            sc = score_record(windows_to_events(scores[r], th, window_seconds, merge_gap_s, r), truth[r])
            det += sc.n_detected
            fa += sc.n_false_alarms
        out.append((float(th), det / n_true, fa / hours))
    return out, hours, n_true


def envelope(fa: Sequence[float], sens: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Best sensitivity reachable at or below each achieved FA rate."""
    fa = np.asarray(fa, dtype=float)
    sens = np.asarray(sens, dtype=float)
    ufa = np.unique(fa)
    best = np.array([sens[fa == f].max() for f in ufa])
    return ufa, np.maximum.accumulate(best)


def sensitivity_fa_curve(scores: Mapping[str, np.ndarray], truth: Mapping[str, EventAnnotations],
                         window_seconds: float, thresholds=None, merge_gap_s: float = 0.0) -> SensitivityCurve:
    pts, hours, n_true = sweep_operating_points(scores, truth, window_seconds, thresholds, merge_gap_s)
    fa, se = envelope([p[2] for p in pts], [p[1] for p in pts])
    return SensitivityCurve(fa, se, hours, n_true)


def _knots(curve: SensitivityCurve):
    fa, se = curve.fa_per_hour, curve.sensitivity
    zero = se[fa == 0]
    s0 = float(zero.max()) if zero.size else 0.0
    pos = fa > 0
    return s0, np.log10(fa[pos]), se[pos]


def evaluate_curve(curve: SensitivityCurve, fa) -> np.ndarray:
    """Sensitivity at FA rates: linear in log10(FA/h) between operating points,
    held after the last one, and equal to the FA = 0 sensitivity before the first."""
    s0, x, y = _knots(curve)
    fa = np.atleast_1d(np.asarray(fa, dtype=float))
    out = np.full(fa.shape, s0)
    if x.size == 0:
        return out
    with np.errstate(divide="ignore"):
        lx = np.log10(fa)
    right = lx >= x[0]
    out[right] = np.interp(lx[right], x, y)
    return out


def event_sens_fa_auc(curve: SensitivityCurve, fa_min: float = FA_MIN, fa_max: float = FA_MAX) -> float:
    """Exact trapezoidal area under sensitivity vs log10(FA/h), divided by the number of decades."""
    lo, hi = math.log10(fa_min), math.log10(fa_max)
    s0, x, y = _knots(curve)
    if x.size == 0:
        return s0
    area = 0.0
    # constant s0 left of the first knot
    if x[0] > lo:
        area += s0 * (min(x[0], hi) - lo)
    # linear pieces between knots, clipped to [lo, hi]
    for i in range(x.size - 1):
        a, b = max(x[i], lo), min(x[i + 1], hi)
        if b > a:
            ya, yb = np.interp([a, b], x[i : i + 2], y[i : i + 2])
            area += 0.5 * (ya + yb) * (b - a)
    # held last value right of the last knot
    if x[-1] < hi:
        area += y[-1] * (hi - max(x[-1], lo))
    return float(area / (hi - lo))


def fa_grid(fa_min: float = 1e-2, fa_max: float = 1e3, per_decade: int = 20) -> np.ndarray:
    n = int(round((math.log10(fa_max) - math.log10(fa_min)) * per_decade)) + 1
    return np.logspace(math.log10(fa_min), math.log10(fa_max), n)


def fold_aggregate_curves(curves: Sequence[SensitivityCurve], mode: str = "mean", grid=None) -> SensitivityCurve:
    """Pointwise mean or median of fold curves on a shared log-spaced FA grid (plus FA = 0)."""
    if not curves:
        raise ValueError("need at least one curve")
    if mode not in ("mean", "median"):
        raise ValueError("mode must be 'mean' or 'median'")
    grid = fa_grid() if grid is None else np.asarray(grid, dtype=float)
    grid = np.r_[0.0, grid[grid > 0]]
    vals = np.vstack([evaluate_curve(c, grid) for c in curves])
    agg = vals.mean(axis=0) if mode == "mean" else np.median(vals, axis=0)
    hours = sum(c.total_hours for c in curves)
    n_true = sum(c.n_true_events for c in curves)
    return SensitivityCurve(grid, agg, hours, n_true)

"""Sleep macrostructure features from a hypnogram.

All durations are in hours. The sleep period runs from the first to the last
non-wake epoch. Features whose prerequisite is missing (no sleep, no REM, a
single bout, ...) are NaN ("undefined"), never zero.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import STAGES, Hypnogram

FEATURES = (
    "TST", "TimeW", "TimeN1", "TimeN2", "TimeN3", "TimeR",
    "RelN1", "RelN2", "RelN3", "RelR",
    "Awakenings", "SlStCh", "ChToR", "ChToN3",
    "TimeBetweenW", "TimeBetweenR", "TimeBetweenN3", "WBoutDur", "RBoutDur", "N3BoutDur",
    "WASO", "REMLatency",
    "RelAwakenings", "RelSlStCh", "RelChToR", "RelChToN3", "RelWakeTime",
    "RelOccN1", "RelOccN2", "RelOccN3", "RelOccR",
)
COUNT_FEATURES = frozenset({"Awakenings", "SlStCh", "ChToR", "ChToN3"})
UNDEFINED = float("nan")


@dataclass(frozen=True)
class HypnogramFeatures:
    record_id: str
    values: Mapping[str, float]

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def defined(self, name: str) -> bool:
        return not math.isnan(self.values[name])

    def as_row(self) -> list[str]:
        return [self.record_id] + ["NA" if math.isnan(self.values[f]) else repr(self.values[f]) for f in FEATURES]


def _runs(stages: Sequence[str]) -> list[tuple[str, int, int]]:
    """Maximal same-stage runs as (stage, start, stop) with stop exclusive."""
    runs = []
    start = 0
    for i in range(1, len(stages) + 1):
        if i == len(stages) or stages[i] != stages[start]:
            runs.append((stages[start], start, i))
            start = i
    return runs


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else UNDEFINED


def compute_features(h: Hypnogram) -> HypnogramFeatures:
    st = h.stages
    n = len(st)
    hrs = h.epoch_seconds / 3600.0
    counts = {s: 0 for s in STAGES}
    for s in st:
        counts[s] += 1
    v: dict[str, float] = {}

    sleep_epochs = n - counts["W"]
    v["TST"] = sleep_epochs * hrs
    for s, name in zip(STAGES, ("TimeW", "TimeN1", "TimeN2", "TimeN3", "TimeR")):
        v[name] = counts[s] * hrs
    tst = v["TST"]
    for s in ("N1", "N2", "N3", "R"):
        v["Rel" + s] = _ratio(counts[s], sleep_epochs)

    pairs = list(zip(st, st[1:]))
    v["Awakenings"] = sum(1 for a, b in pairs if b == "W" and a != "W")
    v["SlStCh"] = sum(1 for a, b in pairs if a != b)
    v["ChToR"] = sum(1 for a, b in pairs if b == "R" and a != "R")
    v["ChToN3"] = sum(1 for a, b in pairs if b == "N3" and a != "N3")

    runs = _runs(st)
    for s, tb, bd in (("W", "TimeBetweenW", "WBoutDur"), ("R", "TimeBetweenR", "RBoutDur"),
                      ("N3", "TimeBetweenN3", "N3BoutDur")):
        bouts = [(a, b) for stage, a, b in runs if stage == s]
        v[bd] = float(np.mean([b - a for a, b in bouts])) * hrs if bouts else UNDEFINED
        gaps = [nxt[0] - prev[1] for prev, nxt in zip(bouts, bouts[1:])]
        v[tb] = float(np.mean(gaps)) * hrs if gaps else UNDEFINED

    asleep = [i for i, s in enumerate(st) if s != "W"]
    if asleep:
        onset, offset = asleep[0], asleep[-1]
        v["WASO"] = sum(1 for s in st[onset : offset + 1] if s == "W") * hrs
        first_r = next((i for i, s in enumerate(st) if s == "R"), None)
        v["REMLatency"] = (first_r - onset) * hrs if first_r is not None else UNDEFINED
    else:
        onset = offset = None
        v["WASO"] = UNDEFINED
        v["REMLatency"] = UNDEFINED

    v["RelAwakenings"] = _ratio(v["Awakenings"], tst)
    v["RelSlStCh"] = _ratio(v["SlStCh"], tst)
    v["RelChToR"] = _ratio(v["ChToR"], tst)
    v["RelChToN3"] = _ratio(v["ChToN3"], tst)
    v["RelWakeTime"] = _ratio(v["WASO"], tst) if asleep else UNDEFINED

    for s in ("N1", "N2", "N3", "R"):
        idx = [i for i, x in enumerate(st) if x == s]
        if not idx:
            v["RelOcc" + s] = UNDEFINED
        elif offset == onset:
            v["RelOcc" + s] = 0.5
        else:
            v["RelOcc" + s] = float(np.mean([(i - onset) / (offset - onset) for i in idx]))

    return HypnogramFeatures(h.record_id, {f: v[f] for f in FEATURES})


def predict_hypnogram(probabilities, record_id: str = "", epoch_seconds: float = 30.0) -> Hypnogram:
    """Per-epoch argmax over (W, N1, N2, N3, R); ties go to the earlier stage."""
    P = np.asarray(probabilities, dtype=float)
    if P.ndim != 2 or P.shape[1] != len(STAGES):
        raise ValueError(f"expected an (n_epochs, {len(STAGES)}) probability matrix")
    if P.size and (P.min() < 0 or not np.allclose(P.sum(axis=1), 1.0, atol=1e-6, rtol=0)):
        raise ValueError("probability rows must be non-negative and sum to 1")
    return Hypnogram(record_id, tuple(STAGES[i] for i in np.argmax(P, axis=1)), epoch_seconds)


@dataclass(frozen=True)
class FeatureErrorSummary:
    mae: dict[str, float]
    normalized_mae: dict[str, float]
    n_used: dict[str, int]
    n_excluded: dict[str, int]


def feature_errors(pred: HypnogramFeatures, truth: HypnogramFeatures,
                   features: Iterable[str] = FEATURES) -> tuple[dict[str, float], list[str]]:
    """Absolute error per feature; features undefined on either side are returned as excluded."""
    errs, excluded = {}, []
    for f in features:
        if pred.defined(f) and truth.defined(f):
            errs[f] = abs(pred[f] - truth[f])
        else:
            excluded.append(f)
    if not errs:
        raise ValueError("no feature is defined on both sides")
    return errs, excluded


def aggregate_feature_errors(pairs: Sequence[tuple[HypnogramFeatures, HypnogramFeatures]],
                             features: Iterable[str] = FEATURES) -> FeatureErrorSummary:
    """Per-feature MAE over records, plus MAE divided by the truth-population standard deviation."""
    features = list(features)
    mae, nmae, used, excl = {}, {}, {}, {}
    for f in features:
        diffs, truths = [], []
        skipped = 0
        for p, t in pairs:
            if p.defined(f) and t.defined(f):
                diffs.append(abs(p[f] - t[f]))
                truths.append(t[f])
            else:
                skipped += 1
        used[f], excl[f] = len(diffs), skipped
        mae[f] = float(np.mean(diffs)) if diffs else UNDEFINED
        sd = float(np.std(truths)) if truths else 0.0
        nmae[f] = mae[f] / sd if sd > 0 else UNDEFINED
    if not any(used.values()):
        raise ValueError("no feature is comparable across the given records")
    return FeatureErrorSummary(mae, nmae, used, excl)


def write_features_csv(path, rows: Iterable[HypnogramFeatures]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["record_id", *FEATURES])
        for r in rows:
            w.writerow(r.as_row())

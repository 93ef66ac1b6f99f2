"""Slow, obviously-correct reference implementations used only by the tests.

Every function here is written from the definition and shares no code with
the package, so agreement between the two is meaningful.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb

import numpy as np


# ---------------------------------------------------------------- ranking metrics


def auroc_pairs(scores, labels) -> Fraction:
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = Fraction(0)
    for a in pos:
        for b in neg:
            wins += 1 if a > b else Fraction(1, 2) if a == b else 0
    return wins / (len(pos) * len(neg))


def auprc_steps(scores, labels) -> Fraction:
    """Sum of (recall_k - recall_{k-1}) * precision_k over distinct score thresholds."""
    P = sum(1 for y in labels if y == 1)
    area, prev_recall = Fraction(0), Fraction(0)
    for t in sorted(set(scores), reverse=True):
        tp = sum(1 for s, y in zip(scores, labels) if s >= t and y == 1)
        fp = sum(1 for s, y in zip(scores, labels) if s >= t and y == 0)
        recall = Fraction(tp, P)
        area += (recall - prev_recall) * Fraction(tp, tp + fp)
        prev_recall = recall
    return area


def confusion(pred, truth, C):
    cm = [[0] * C for _ in range(C)]
    for p, t in zip(pred, truth):
        cm[t][p] += 1
    return cm


def kappa_cm(pred, truth, C) -> Fraction:
    cm = confusion(pred, truth, C)
    n = len(pred)
    po = Fraction(sum(cm[i][i] for i in range(C)), n)
    pe = sum(Fraction(sum(cm[i]), n) * Fraction(sum(cm[r][i] for r in range(C)), n) for i in range(C))
    return Fraction(0) if pe == 1 else (po - pe) / (1 - pe)


def f1_cm(pred, truth, C) -> list[Fraction]:
    cm = confusion(pred, truth, C)
    out = []
    for k in range(C):
        tp = cm[k][k]
        fn = sum(cm[k]) - tp
        fp = sum(cm[r][k] for r in range(C)) - tp
        out.append(Fraction(2 * tp, 2 * tp + fp + fn) if tp + fp + fn else Fraction(0))
    return out


def balanced_accuracy_cm(pred, truth, C) -> Fraction:
    cm = confusion(pred, truth, C)
    return sum(Fraction(cm[k][k], sum(cm[k])) for k in range(C)) / C


def midranks(x):
    order = sorted(range(len(x)), key=lambda i: x[i])
    r = [0.0] * len(x)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and x[order[j + 1]] == x[order[i]]:
            j += 1
        for k in range(i, j + 1):
            r[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return r


def pearson(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    a, b = a - a.mean(), b - b.mean()
    return float(a @ b / np.sqrt((a @ a) * (b @ b)))


# ---------------------------------------------------------------- statistics


def binomial_tail(z, n, p: Fraction) -> Fraction:
    return sum(comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(z, n + 1))


def wilcoxon_enumerate(a, b):
    """(W+, upper, lower) by enumerating all 2^n sign flips of the nonzero differences."""
    d = [x - y for x, y in zip(a, b) if x != y]
    ranks = midranks([abs(v) for v in d])
    doubled = [round(2 * r) for r in ranks]
    obs = sum(r for r, v in zip(doubled, d) if v > 0)
    upper = lower = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        s = sum(r for r, on in zip(doubled, signs) if on)
        upper += s >= obs
        lower += s <= obs
    total = 2 ** len(d)
    return obs / 2, Fraction(upper, total), Fraction(lower, total)


# ---------------------------------------------------------------- events


def runs_to_events(scores, threshold, w):
    events, start = [], None
    for i, s in enumerate(list(scores) + [-1.0]):
        if s >= threshold and start is None:
            start = i
        elif s < threshold and start is not None:
            events.append((start * w, i * w))
            start = None
    return events


def overlap_brute(pred, truth):
    """(#truth detected, #pred false alarms) by checking every pair."""
    detected = sum(1 for ta, tb in truth if any(pa < tb and ta < pb for pa, pb in pred))
    fa = sum(1 for pa, pb in pred if not any(pa < tb and ta < pb for ta, tb in truth))
    return detected, fa


def sweep_brute(scores_by_rec, truth_by_rec, durations, w, thresholds):
    n_true = sum(len(t) for t in truth_by_rec.values())
    hours = sum(durations.values()) / 3600
    pts = []
    for th in thresholds:
        det = fa = 0
        for r in scores_by_rec:
            d, f = overlap_brute(runs_to_events(scores_by_rec[r], th, w), truth_by_rec[r])
            det += d
            fa += f
        pts.append((fa / hours, det / n_true))
    curve = {}
    for fa, _ in pts:
        curve[fa] = max(s for f, s in pts if f <= fa)
    fas = sorted(curve)
    return fas, [curve[f] for f in fas]


# ---------------------------------------------------------------- hypnogram


def hypnogram_oracle(stages, epoch_s=30.0) -> dict:
    """Every feature straight from its definition, using string scans."""
    h = epoch_s / 3600
    n = len(stages)
    out = {}
    sleep = [i for i, s in enumerate(stages) if s != "W"]
    n_sleep = len(sleep)
    out["TST"] = n_sleep * h
    for s in ("W", "N1", "N2", "N3", "R"):
        out["Time" + s] = stages.count(s) * h
    for s in ("N1", "N2", "N3", "R"):
        out["Rel" + s] = stages.count(s) / n_sleep if n_sleep else None
    trans = [(stages[i], stages[i + 1]) for i in range(n - 1) if stages[i] != stages[i + 1]]
    out["SlStCh"] = len(trans)
    out["Awakenings"] = sum(b == "W" for _, b in trans)
    out["ChToR"] = sum(b == "R" for _, b in trans)
    out["ChToN3"] = sum(b == "N3" for _, b in trans)
    for s, tb, bd in (("W", "TimeBetweenW", "WBoutDur"), ("R", "TimeBetweenR", "RBoutDur"),
                      ("N3", "TimeBetweenN3", "N3BoutDur")):
        bouts = []
        i = 0
        while i < n:
            if stages[i] == s:
                j = i
                while j < n and stages[j] == s:
                    j += 1
                bouts.append((i, j))
                i = j
            else:
                i += 1
        out[bd] = sum(b - a for a, b in bouts) / len(bouts) * h if bouts else None
        gaps = [bouts[k + 1][0] - bouts[k][1] for k in range(len(bouts) - 1)]
        out[tb] = sum(gaps) / len(gaps) * h if gaps else None
    if sleep:
        on, off = sleep[0], sleep[-1]
        out["WASO"] = stages[on : off + 1].count("W") * h
        out["REMLatency"] = (stages.index("R") - on) * h if "R" in stages else None
    else:
        out["WASO"] = out["REMLatency"] = None
    tst = out["TST"]
    for name in ("Awakenings", "SlStCh", "ChToR", "ChToN3"):
        out["Rel" + name] = out[name] / tst if tst else None
    out["RelWakeTime"] = out["WASO"] / tst if tst else None
    for s in ("N1", "N2", "N3", "R"):
        pos = [i for i, x in enumerate(stages) if x == s]
        if not pos:
            out["RelOcc" + s] = None
        elif sleep[0] == sleep[-1]:
            out["RelOcc" + s] = 0.5
        else:
            span = sleep[-1] - sleep[0]
            out["RelOcc" + s] = sum((i - sleep[0]) / span for i in pos) / len(pos)
    return out

"""Brain-age regression pipelines and brain-age-gap (BAG) group analysis."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

from . import metrics
from .probe import ALPHA_GRID, fit_ols, nested_cv_ridge, train_mean_baseline

HEALTHY, IMPAIRED = "healthy", "CI"
N_BOOTSTRAP = 1000


def pool_subject(epochs) -> np.ndarray:
    """Average epoch embeddings of one recording into a single vector."""
    E = np.asarray(epochs, dtype=float)
    if E.ndim != 2 or E.shape[0] == 0:
        raise ValueError("need at least one epoch embedding")
    return E.mean(axis=0)


def subject_level_pipeline(train_X: Sequence, train_y, test_X: Sequence, alpha_grid=ALPHA_GRID,
                           inner_k: int = 5, train_groups=None, seed: int = 0):
    """Pool each recording, fit ridge with nested CV, predict pooled test recordings.

    ``train_X``/``test_X`` are sequences of (n_epochs, d) matrices.
    Returns (predictions, chosen alpha).
    """
    Xtr = np.vstack([pool_subject(e) for e in train_X])
    Xte = np.vstack([pool_subject(e) for e in test_X])
    probe, alpha, _ = nested_cv_ridge(Xtr, train_y, train_groups, alpha_grid, inner_k, seed)
    return probe.predict(Xte), alpha


def epoch_level_pipeline(train_X: Sequence, train_y, test_X: Sequence, alpha_grid=ALPHA_GRID,
                         inner_k: int = 5, train_groups=None, seed: int = 0):
    """Fit ridge on individual epochs (each inheriting its subject's age), then
    average the epoch predictions of each test subject."""
    train_y = np.asarray(train_y, dtype=float)
    groups = np.arange(len(train_X)) if train_groups is None else np.asarray(train_groups)
    Xtr = np.vstack([np.asarray(e, dtype=float) for e in train_X])
    ytr = np.concatenate([np.full(len(e), y) for e, y in zip(train_X, train_y)])
    gtr = np.concatenate([np.full(len(e), g) for e, g in zip(train_X, groups)])
    probe, alpha, _ = nested_cv_ridge(Xtr, ytr, gtr, alpha_grid, inner_k, seed)
    preds = np.array([probe.predict(np.asarray(e, dtype=float)).mean() for e in test_X])
    return preds, alpha


def mae_improvement(model_mae: float, baseline_mae: float) -> tuple[float, float]:
    """(model - baseline, percent improvement). Negative delta means the model wins."""
    if not baseline_mae > 0:
        raise ValueError("baseline MAE must be positive")
    return model_mae - baseline_mae, (baseline_mae - model_mae) / baseline_mae * 100.0


def ridge_ols_delta(X_train, y_train, X_test, y_test, alpha: float) -> float:
    """Test MAE of OLS minus test MAE of ridge; positive when ridge does better."""
    from .probe import fit_ridge

    ridge = metrics.mae(fit_ridge(X_train, y_train, alpha).predict(X_test), y_test)
    ols = metrics.mae(fit_ols(X_train, y_train).predict(X_test), y_test)
    return ols - ridge


@dataclass(frozen=True)
class BagRecord:
    subject_id: str
    y: float
    y_hat: float
    group_tag: str = HEALTHY

    @property
    def bag(self) -> float:
        return self.y_hat - self.y


@dataclass(frozen=True)
class GroupSeparation:
    delta_bag: float
    delta_ci95: tuple[float, float]
    auroc: float
    auroc_ci95: tuple[float, float]
    n_pairs: int
    n_healthy: int
    n_impaired: int

    def to_json(self) -> dict:
        return asdict(self)


def _split_groups(records: Sequence[BagRecord]):
    h = np.array([r.bag for r in records if r.group_tag == HEALTHY])
    c = np.array([r.bag for r in records if r.group_tag == IMPAIRED])
    return h, c


def rank_auroc(impaired: np.ndarray, healthy: np.ndarray) -> float:
    """P(BAG_CI > BAG_H) + 0.5 P(tie)."""
    scores = np.r_[impaired, healthy]
    labels = np.r_[np.ones(len(impaired), int), np.zeros(len(healthy), int)]
    return metrics.auroc(scores, labels)


def bag_separation(records: Sequence[BagRecord], pairing: Sequence[tuple[str, str]],
                   n_boot: int = N_BOOTSTRAP, seed: int = 0, z: float = 1.959963984540054) -> GroupSeparation:
    """Mean BAG shift (CI minus healthy) with a normal interval on the independent-samples
    standard error, and rank AUROC with a matched-pair bootstrap percentile interval."""
    h, c = _split_groups(records)
    if h.size == 0 or c.size == 0:
        raise ValueError("both healthy and CI groups must be non-empty")
    delta = float(c.mean() - h.mean())
    var_c = c.var(ddof=1) / c.size if c.size > 1 else 0.0
    var_h = h.var(ddof=1) / h.size if h.size > 1 else 0.0
    se = math.sqrt(var_c + var_h)
    auc = rank_auroc(c, h)

    if not pairing:
        raise ValueError("matched-pair bootstrap needs a non-empty pairing")
    bag = {r.subject_id: r.bag for r in records}
    group = {r.subject_id: r.group_tag for r in records}
    for hid, cid in pairing:
        if group.get(hid) != HEALTHY or group.get(cid) != IMPAIRED:
            raise ValueError(f"pair ({hid}, {cid}) must be (healthy, CI) subjects present in records")
    ph = np.array([bag[a] for a, _ in pairing])
    pc = np.array([bag[b] for _, b in pairing])
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.integers(0, len(pairing), size=(n_boot, len(pairing)))
    boots = np.array([rank_auroc(pc[i], ph[i]) for i in idx])
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return GroupSeparation(delta, (delta - z * se, delta + z * se), auc, (float(lo), float(hi)),
                           len(pairing), int(h.size), int(c.size))


def age_match_pairs(healthy_ages: Mapping[str, float], impaired_ages: Mapping[str, float],
                    caliper: float = 2.0) -> list[tuple[str, str]]:
    """Greedy nearest-age matching without replacement inside a caliper (years).

    CI subjects are matched in order of id; each takes the closest unused
    healthy control (ties to the smaller id).
    """
    free = dict(healthy_ages)
    pairs = []
    for cid in sorted(impaired_ages):
        age = impaired_ages[cid]
        best = min(free.items(), key=lambda kv: (abs(kv[1] - age), kv[0]), default=None)
        if best is not None and abs(best[1] - age) <= caliper:
            pairs.append((best[0], cid))
            del free[best[0]]
    return pairs


def healthy_reference_protocol(train_X: Sequence, train_y, train_ids: Sequence[str], train_groups: Sequence[str],
                               holdout_X: Sequence, holdout_y, holdout_ids: Sequence[str],
                               holdout_groups: Sequence[str], alpha_grid=ALPHA_GRID, inner_k: int = 5,
                               seed: int = 0, pipeline=subject_level_pipeline) -> list[BagRecord]:
    """Fit the age model on healthy subjects only, then compute BAG on a disjoint holdout."""
    leak = set(train_ids) & set(holdout_ids)
    if leak:
        raise ValueError(f"subjects in both train and holdout: {sorted(leak)}")
    if any(g != HEALTHY for g in train_groups):
        raise ValueError("the reference model must be trained on healthy subjects only")
    if IMPAIRED not in set(holdout_groups) or HEALTHY not in set(holdout_groups):
        raise ValueError("holdout must contain both healthy and CI subjects for a group comparison")
    preds, _ = pipeline(train_X, train_y, holdout_X, alpha_grid, inner_k, np.asarray(train_ids), seed)
    return [BagRecord(s, float(y), float(p), g) for s, y, p, g in zip(holdout_ids, holdout_y, preds, holdout_groups)]


def regression_summary(pred, truth, train_y) -> dict[str, float]:
    """MAE, Pearson r, train-mean baseline MAE and the two signed improvement forms."""
    pred, truth = np.asarray(pred, float), np.asarray(truth, float)
    base = metrics.mae(train_mean_baseline(train_y).predict(truth), truth)
    m = metrics.mae(pred, truth)
    out = {"mae": m, "baseline_mae": base}
    try:
        out["pearson_r"] = metrics.pearson_r(pred, truth)
    except ValueError:
        out["pearson_r"] = float("nan")
    if base > 0:
        out["mae_delta"], out["mae_improvement_pct"] = mae_improvement(m, base)
    return out


def write_bag_csv(path, records: Sequence[BagRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subject_id", "y", "y_hat", "bag", "group"])
        for r in records:
            w.writerow([r.subject_id, repr(r.y), repr(r.y_hat), repr(r.bag), r.group_tag])


def read_bag_csv(path) -> list[BagRecord]:
    with open(path, newline="") as fh:
        return [BagRecord(row["subject_id"], float(row["y"]), float(row["y_hat"]), row["group"])
                for row in csv.DictReader(fh)]

"""Declarative task runs: folds, probes, metrics and the resulting report."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import __version__, brain_age, metrics
from .data import STAGES, Bundle, EventAnnotations, epochize_events, load_bundle, stack_windows
from .events import event_sens_fa_auc, fold_aggregate_curves, sensitivity_fa_curve
from .hypnogram import FEATURES, aggregate_feature_errors, compute_features, predict_hypnogram
from .probe import ProbeConfig, fit_logistic, fit_standardizer, grid_search_logistic, nested_cv_ridge
from .splits import Fold, FoldPlan, loso, patient_kfold, stratified_kfold_by_age

log = logging.getLogger(__name__)

TASK_KINDS = (
    "seizure_detection", "sleep_staging", "sleep_event", "recording_diagnosis",
    "brain_age", "bag_separation", "bci_classification",
)
NEEDS_EVENTS = {"seizure_detection", "sleep_event"}
NEEDS_HYPNOGRAMS = {"sleep_staging"}

DEFAULT_METRICS = {
    "seizure_detection": ("auroc", "auprc", "event_sens_fa_auc"),
    "sleep_staging": ("kappa", "macro_f1", "f1_per_stage", "hypnogram_mae"),
    "sleep_event": ("auprc", "auroc", "prevalence"),
    "recording_diagnosis": ("auroc", "balanced_accuracy"),
    "brain_age": ("mae", "pearson_r", "baseline_mae", "mae_delta", "mae_improvement_pct", "ols_delta"),
    "bag_separation": ("healthy_mae",),
    "bci_classification": ("balanced_accuracy", "normalized_balanced_accuracy", "chance_min_ba", "significant"),
}
EVENT_METRICS = {"event_sens_fa_auc"}


@dataclass(frozen=True)
class DatasetEntry:
    dataset: str
    model: str
    path: str


@dataclass(frozen=True)
class SplitConfig:
    scheme: str = "kfold"  # kfold | stratified_age | loso
    k: int = 5
    seed: int = 0
    bin_edges: tuple[float, ...] = ()


@dataclass(frozen=True)
class TaskConfig:
    task_kind: str
    datasets: tuple[DatasetEntry, ...]
    split: SplitConfig = SplitConfig()
    probe: ProbeConfig = ProbeConfig()
    metrics: tuple[str, ...] = ()
    aggregation: str = "mean"
    reg_C: float = 1.0
    min_duration_s: float = 0.0
    event_type: str | None = None
    merge_gap_s: float = 0.0
    positive_group: str = "CI"
    match_caliper: float = 2.0
    n_boot: int = 1000
    epoch_level: bool = False
    hypnogram_features: tuple[str, ...] = FEATURES
    context_tag: str | None = None

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise ValueError(f"unknown task_kind {self.task_kind!r}")
        if not self.datasets:
            raise ValueError("config lists no datasets")
        if self.aggregation not in ("mean", "median"):
            raise ValueError("aggregation must be mean or median")
        mets = self.metrics or DEFAULT_METRICS[self.task_kind]
        bad = set(mets) - set(DEFAULT_METRICS[self.task_kind]) - {"alpha", "reg_C", "epoch_mae", "epoch_delta_mae"}
        if bad:
            raise ValueError(f"metrics {sorted(bad)} are not available for {self.task_kind}")
        object.__setattr__(self, "metrics", tuple(mets))

    @classmethod
    def from_json(cls, doc: Mapping, base: Path | None = None) -> "TaskConfig":
        doc = dict(doc)
        base = Path(base) if base else Path(".")
        entries = []
        for e in doc.pop("datasets"):
            p = Path(e["path"])
            entries.append(DatasetEntry(e["dataset"], e.get("model", "model"), str(p if p.is_absolute() else base / p)))
        split = doc.pop("split", {})
        if "bin_edges" in split:
            split = {**split, "bin_edges": tuple(split["bin_edges"])}
        probe = doc.pop("probe", {})
        for key in ("c_grid", "alpha_grid"):
            if key in probe:
                probe[key] = tuple(probe[key])
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields {sorted(unknown)}")
        for key in ("metrics", "hypnogram_features"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(datasets=tuple(entries), split=SplitConfig(**split), probe=ProbeConfig(**probe), **doc)

    def to_json(self) -> dict:
        d = asdict(self)
        d["datasets"] = [asdict(e) for e in self.datasets]
        return d

    def config_hash(self) -> str:
        canon = json.dumps(_jsonable(self.to_json()), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def load_config(path) -> TaskConfig:
    p = Path(path)
    return TaskConfig.from_json(json.loads(p.read_text()), p.parent)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# ---------------------------------------------------------------- report


def summarize(values: Sequence[float | None]) -> dict:
    """Per-fold values with mean and population std over the finite ones."""
    vals = [None if v is None or not math.isfinite(v) else float(v) for v in values]
    ok = [v for v in vals if v is not None]
    return {
        "folds": vals,
        "mean": float(np.mean(ok)) if ok else None,
        "std": float(np.std(ok)) if ok else None,
        "n_missing": len(vals) - len(ok),
    }


@dataclass
class MetricReport:
    task_kind: str
    results: dict = field(default_factory=dict)  # dataset -> model -> metric -> summary
    audit: dict = field(default_factory=dict)  # dataset -> model -> per-fold records
    curves: dict = field(default_factory=dict)  # dataset -> model -> mode -> points
    extras: dict = field(default_factory=dict)  # dataset -> model -> task-specific tables
    provenance: dict = field(default_factory=dict)

    def body(self) -> dict:
        prov = {k: v for k, v in self.provenance.items() if k != "timestamp"}
        return _jsonable({"task_kind": self.task_kind, "results": self.results, "audit": self.audit,
                          "curves": self.curves, "extras": self.extras, "provenance": prov})

    def body_json(self) -> str:
        return json.dumps(self.body(), indent=2, sort_keys=True)

    def to_json(self) -> dict:
        d = self.body()
        d["provenance"] = _jsonable(self.provenance)
        return d

    @classmethod
    def from_json(cls, doc: Mapping) -> "MetricReport":
        return cls(doc["task_kind"], doc.get("results", {}), doc.get("audit", {}), doc.get("curves", {}),
                   doc.get("extras", {}), doc.get("provenance", {}))

    def metric_names(self) -> list[str]:
        names = set()
        for models in self.results.values():
            for mets in models.values():
                names.update(mets)
        return sorted(names)


# ---------------------------------------------------------------- helpers


def recording_level_pool(windows) -> np.ndarray:
    return brain_age.pool_subject(windows)


def make_plan(task: TaskConfig, bundle: Bundle) -> FoldPlan:
    sp = task.split
    validation = task.task_kind == "seizure_detection"
    if sp.scheme == "loso":
        return loso(bundle.subjects)
    if sp.scheme == "stratified_age":
        if not sp.bin_edges:
            raise ValueError("stratified_age split requires bin_edges")
        return stratified_kfold_by_age(bundle.subjects, sp.k, sp.bin_edges, sp.seed, validation)
    if sp.scheme == "kfold":
        return patient_kfold(bundle.subjects, sp.k, sp.seed, validation)
    raise ValueError(f"unknown split scheme {sp.scheme!r}")


def _check_bundle(task: TaskConfig, bundle: Bundle):
    problems = bundle.validate()
    if task.task_kind in NEEDS_EVENTS and bundle.events is None:
        problems.append(f"{task.task_kind} needs events.csv")
    if task.task_kind in NEEDS_HYPNOGRAMS and bundle.hypnograms is None:
        problems.append(f"{task.task_kind} needs hypnograms.csv")
    if task.task_kind in ("seizure_detection", "bci_classification") and bundle.labels is None:
        problems.append(f"{task.task_kind} needs labels.csv")
    if task.task_kind in ("brain_age", "bag_separation"):
        if any(bundle.subjects.age(s) is None for s in bundle.subjects):
            problems.append("brain-age tasks need an age for every subject")
    return problems


class BundleValidationError(ValueError):
    def __init__(self, problems):
        self.problems = [getattr(p, "message", str(p)) for p in problems]
        super().__init__("; ".join(self.problems))


def _filtered_events(task: TaskConfig, ann: EventAnnotations) -> EventAnnotations:
    evs = tuple(e for e in ann.events
                if (task.event_type is None or e.type_tag == task.event_type) and e.duration_s >= task.min_duration_s)
    return EventAnnotations(ann.record_id, ann.duration_s, evs)


def _window_labels(task: TaskConfig, bundle: Bundle, rid: str) -> np.ndarray:
    if task.task_kind == "sleep_staging":
        return bundle.hypnograms[rid].as_indices()
    if task.task_kind == "sleep_event":
        ws = bundle.embeddings.by_id()[rid].window_seconds
        ann = _filtered_events(task, bundle.events[rid])
        lab = epochize_events(ann, ws, task.min_duration_s).labels
        n = bundle.embeddings.by_id()[rid].n_windows
        return lab[:n]
    return bundle.labels[rid].labels


def _xy(task, bundle, rids):
    X, owner = stack_windows(bundle.embeddings, rids)
    y = np.concatenate([_window_labels(task, bundle, r) for r in rids]) if rids else np.zeros(0, int)
    return X.astype(float), y, owner


def _record_label(task: TaskConfig, bundle: Bundle, rid: str) -> int:
    sid = bundle.subjects.subject_of()[rid]
    return int(bundle.subjects.group(sid) == task.positive_group)


# ---------------------------------------------------------------- per-task fold runners


def _fold_seizure(task, bundle, fold: Fold):
    subj = bundle.subjects
    tr, va, te = subj.records_of(fold.train), subj.records_of(fold.validation), subj.records_of(fold.test)
    Xtr, ytr, _ = _xy(task, bundle, tr)
    Xva, yva, _ = _xy(task, bundle, va)
    Xte, yte, owner = _xy(task, bundle, te)
    std = fit_standardizer(np.vstack([Xtr, Xva]))
    cfg = ProbeConfig(**{**asdict(task.probe), "selection_metric": "auprc"})
    gs = grid_search_logistic((std.apply(Xtr), ytr), (std.apply(Xva), yva), cfg)
    p = gs.probe.predict_proba(std.apply(Xte))[:, -1]
    out: dict[str, Any] = {"reg_C": gs.reg_C}
    pos = (yte == gs.probe.classes[-1]).astype(int)
    out["auroc"] = _safe(metrics.auroc, p, pos)
    out["auprc"] = _safe(metrics.auprc, p, pos)
    scores = {r: p[owner == i] for i, r in enumerate(te)}
    truth = {r: _filtered_events(task, bundle.events[r]) for r in te}
    curve = None
    if sum(len(t.events) for t in truth.values()):
        ws = bundle.embeddings.by_id()[te[0]].window_seconds
        curve = sensitivity_fa_curve(scores, truth, ws, merge_gap_s=task.merge_gap_s)
        out["event_sens_fa_auc"] = event_sens_fa_auc(curve)
    else:
        out["event_sens_fa_auc"] = None
    by_type: dict[str, list[float]] = {}
    for i, r in enumerate(te):
        ws = bundle.embeddings.by_id()[r].window_seconds
        sr = scores[r]
        tags = np.array(["background"] * len(sr), dtype=object)
        for e in bundle.events[r].events:
            a = int(math.floor(e.onset_s / ws))
            b = min(int(math.ceil(e.offset_s / ws)), len(sr))
            tags[a:b] = e.type_tag
        for t in set(tags.tolist()):
            by_type.setdefault(t, []).extend(sr[tags == t].tolist())
    return out, {"curve": curve, "score_by_type": by_type}


def _safe(fn, *args):
    try:
        return fn(*args)
    except ValueError:
        return None


def _fold_sleep_staging(task, bundle, fold: Fold):
    subj = bundle.subjects
    tr, te = subj.records_of(fold.train | fold.validation), subj.records_of(fold.test)
    Xtr, ytr, _ = _xy(task, bundle, tr)
    Xte, yte, owner = _xy(task, bundle, te)
    std = fit_standardizer(Xtr)
    probe = fit_logistic(std.apply(Xtr), ytr, task.reg_C, False, task.probe.max_iter, task.probe.tol)
    P = np.zeros((len(yte), len(STAGES)))
    P[:, probe.classes] = probe.predict_proba(std.apply(Xte))
    pred = np.argmax(P, axis=1)
    out: dict[str, Any] = {
        "kappa": metrics.cohen_kappa(pred.tolist(), yte.tolist()),
        "macro_f1": metrics.macro_f1(pred, yte, len(STAGES)),
    }
    for s, f1 in zip(STAGES, metrics.per_class_f1(pred, yte, len(STAGES))):
        out[f"f1_{s}"] = float(f1)
    pairs = []
    for i, r in enumerate(te):
        ph = predict_hypnogram(P[owner == i], r, bundle.hypnograms[r].epoch_seconds)
        pairs.append((compute_features(ph), compute_features(bundle.hypnograms[r])))
    summ = aggregate_feature_errors(pairs, task.hypnogram_features)
    for f in task.hypnogram_features:
        out[f"hyp_mae_{f}"] = summ.mae[f]
    return out, {}


def _fold_binary_windows(task, bundle, fold: Fold):
    subj = bundle.subjects
    tr, te = subj.records_of(fold.train | fold.validation), subj.records_of(fold.test)
    Xtr, ytr, _ = _xy(task, bundle, tr)
    Xte, yte, _ = _xy(task, bundle, te)
    std = fit_standardizer(Xtr)
    probe = fit_logistic(std.apply(Xtr), ytr, task.reg_C, True, task.probe.max_iter, task.probe.tol)
    p = probe.predict_proba(std.apply(Xte))[:, -1]
    pos = (yte == probe.classes[-1]).astype(int)
    return {"auprc": _safe(metrics.auprc, p, pos), "auroc": _safe(metrics.auroc, p, pos),
            "prevalence": float(pos.mean()) if pos.size else None}, {}


def _fold_diagnosis(task, bundle, fold: Fold):
    subj = bundle.subjects
    recs = bundle.embeddings.by_id()
    tr, te = subj.records_of(fold.train | fold.validation), subj.records_of(fold.test)
    Xtr = np.vstack([recording_level_pool(recs[r].matrix) for r in tr])
    Xte = np.vstack([recording_level_pool(recs[r].matrix) for r in te])
    ytr = np.array([_record_label(task, bundle, r) for r in tr])
    yte = np.array([_record_label(task, bundle, r) for r in te])
    std = fit_standardizer(Xtr)
    probe = fit_logistic(std.apply(Xtr), ytr, task.reg_C, True, task.probe.max_iter, task.probe.tol)
    p = probe.predict_proba(std.apply(Xte))[:, -1]
    pred = (p >= 0.5).astype(int)
    return {"auroc": _safe(metrics.auroc, p, yte),
            "balanced_accuracy": _safe(metrics.balanced_accuracy, pred, yte, 2)}, {}


def _pooled_subjects(bundle, rids):
    recs = bundle.embeddings.by_id()
    owner = bundle.subjects.subject_of()
    X = np.vstack([recording_level_pool(recs[r].matrix) for r in rids])
    y = np.array([bundle.subjects.age(owner[r]) for r in rids], dtype=float)
    g = np.array([owner[r] for r in rids])
    return X, y, g


def _inner_k(task, groups):
    return max(2, min(task.probe.inner_k, len(set(groups.tolist()))))


def _fold_brain_age(task, bundle, fold: Fold):
    subj = bundle.subjects
    tr, te = subj.records_of(fold.train | fold.validation), subj.records_of(fold.test)
    Xtr, ytr, gtr = _pooled_subjects(bundle, tr)
    Xte, yte, _ = _pooled_subjects(bundle, te)
    std = fit_standardizer(Xtr)
    probe, alpha, _ = nested_cv_ridge(std.apply(Xtr), ytr, gtr, task.probe.alpha_grid, _inner_k(task, gtr),
                                      task.split.seed)
    pred = probe.predict(std.apply(Xte))
    out = brain_age.regression_summary(pred, yte, ytr)
    out["alpha"] = alpha
    out["ols_delta"] = brain_age.ridge_ols_delta(std.apply(Xtr), ytr, std.apply(Xte), yte, alpha)
    if task.epoch_level:
        recs = bundle.embeddings.by_id()
        ep_pred, _ = brain_age.epoch_level_pipeline(
            [std.apply(recs[r].matrix) for r in tr], ytr, [std.apply(recs[r].matrix) for r in te],
            task.probe.alpha_grid, _inner_k(task, gtr), gtr, task.split.seed)
        out["epoch_mae"] = metrics.mae(ep_pred, yte)
        out["epoch_delta_mae"] = out["epoch_mae"] - out["mae"]
    return out, {"predictions": list(zip(te, yte.tolist(), pred.tolist()))}


def _fold_bag(task, bundle, fold: Fold):
    subj = bundle.subjects
    owner = subj.subject_of()
    tr = [r for r in subj.records_of(fold.train | fold.validation) if subj.group(owner[r]) == brain_age.HEALTHY]
    te = subj.records_of(fold.test)
    Xtr, ytr, gtr = _pooled_subjects(bundle, tr)
    Xte, yte, gte = _pooled_subjects(bundle, te)
    std = fit_standardizer(Xtr)
    probe, _, _ = nested_cv_ridge(std.apply(Xtr), ytr, gtr, task.probe.alpha_grid, _inner_k(task, gtr),
                                  task.split.seed)
    pred = probe.predict(std.apply(Xte))
    groups = [subj.group(s) or brain_age.HEALTHY for s in gte]
    healthy = np.array([g == brain_age.HEALTHY for g in groups])
    out = {"healthy_mae": metrics.mae(pred[healthy], yte[healthy]) if healthy.any() else None}
    bags = [brain_age.BagRecord(r, float(y), float(p), g) for r, y, p, g in zip(te, yte, pred, groups)]
    return out, {"bag": bags}


def _fold_bci(task, bundle, fold: Fold):
    subj = bundle.subjects
    tr, te = subj.records_of(fold.train | fold.validation), subj.records_of(fold.test)
    Xtr, ytr, _ = _xy(task, bundle, tr)
    Xte, yte, _ = _xy(task, bundle, te)
    n_classes = int(max(ytr.max(), yte.max())) + 1
    std = fit_standardizer(Xtr)
    probe = fit_logistic(std.apply(Xtr), ytr, task.reg_C, n_classes == 2, task.probe.max_iter, task.probe.tol)
    pred = probe.predict(std.apply(Xte))
    ba = metrics.balanced_accuracy(pred, yte, n_classes, observed_only=True)
    thr = metrics.chance_threshold(len(yte), n_classes, 0.05)
    nba = metrics.normalized_balanced_accuracy(ba, n_classes)
    return {"balanced_accuracy": ba, "normalized_balanced_accuracy": nba,
            "chance_min_ba": thr.normalized_min_ba, "significant": float(nba > thr.normalized_min_ba)}, {}


FOLD_RUNNERS: dict[str, Callable] = {
    "seizure_detection": _fold_seizure,
    "sleep_staging": _fold_sleep_staging,
    "sleep_event": _fold_binary_windows,
    "recording_diagnosis": _fold_diagnosis,
    "brain_age": _fold_brain_age,
    "bag_separation": _fold_bag,
    "bci_classification": _fold_bci,
}


# ---------------------------------------------------------------- orchestration


def _run_entry(task: TaskConfig, entry: DatasetEntry):
    bundle = load_bundle(entry.path)
    problems = _check_bundle(task, bundle)
    if problems:
        raise BundleValidationError(problems)
    plan = make_plan(task, bundle)
    runner = FOLD_RUNNERS[task.task_kind]
    fold_metrics, fold_extras, audit = [], [], []
    for i, fold in enumerate(plan.folds):
        rec = {"fold": i, "n_train": len(fold.train), "n_validation": len(fold.validation),
               "n_test": len(fold.test), "train_test_overlap": sorted(fold.train & fold.test),
               "validation_test_overlap": sorted(fold.validation & fold.test), "status": "ok"}
        try:
            m, extra = runner(task, bundle, fold)
        except Exception as exc:  # fold failures are recorded, the run continues
            log.warning("%s/%s fold %d failed: %s", entry.dataset, entry.model, i, exc)
            rec["status"] = "failed"
            rec["error"] = f"{type(exc).__name__}: {exc}"
            m, extra = {}, {}
        audit.append(rec)
        fold_metrics.append(m)
        fold_extras.append(extra)
    names = list(task.metrics)
    if task.task_kind == "sleep_staging":
        names = [n for n in names if n not in ("f1_per_stage", "hypnogram_mae")]
        if "f1_per_stage" in task.metrics:
            names += [f"f1_{s}" for s in STAGES]
        if "hypnogram_mae" in task.metrics:
            names += [f"hyp_mae_{f}" for f in task.hypnogram_features]
    results = {n: summarize([fm.get(n) for fm in fold_metrics]) for n in names}
    for extra_name in ("reg_C", "alpha"):
        if any(extra_name in fm for fm in fold_metrics):
            results[extra_name] = summarize([fm.get(extra_name) for fm in fold_metrics])
    curves, extras = {}, {"plan": plan.to_json()}
    if task.context_tag:
        extras["context_tag"] = task.context_tag
    if task.task_kind == "seizure_detection":
        fold_curves = [e["curve"] for e in fold_extras if e.get("curve") is not None]
        if fold_curves:
            for mode in ("mean", "median"):
                agg = fold_aggregate_curves(fold_curves, mode)
                curves[mode] = agg.points
                extras[f"event_sens_fa_auc_{mode}_curve"] = event_sens_fa_auc(agg)
            curves["folds"] = [c.points for c in fold_curves]
        by_type: dict[str, list[float]] = {}
        for e in fold_extras:
            for t, v in e.get("score_by_type", {}).items():
                by_type.setdefault(t, []).extend(v)
        extras["score_by_type"] = {t: {"n": len(v), "mean": float(np.mean(v)), "median": float(np.median(v))}
                                   for t, v in sorted(by_type.items())}
    if task.task_kind == "brain_age":
        extras["predictions"] = [row for e in fold_extras for row in e.get("predictions", [])]
    if task.task_kind == "bag_separation":
        bags = [b for e in fold_extras for b in e.get("bag", [])]
        extras["bag"] = [asdict(b) | {"bag": b.bag} for b in bags]
        ages_h = {b.subject_id: b.y for b in bags if b.group_tag == brain_age.HEALTHY}
        ages_c = {b.subject_id: b.y for b in bags if b.group_tag == brain_age.IMPAIRED}
        pairing = brain_age.age_match_pairs(ages_h, ages_c, task.match_caliper)
        extras["pairing"] = pairing
        try:
            sep = brain_age.bag_separation(bags, pairing, task.n_boot, task.split.seed)
            extras["separation"] = sep.to_json()
        except ValueError as exc:
            extras["separation"] = {"error": str(exc)}
    return results, audit, curves, extras


def run_task(task: TaskConfig, threads: int = 1) -> MetricReport:
    """Evaluate every (dataset, model) entry; deterministic given the config and seeds."""
    report = MetricReport(task.task_kind)
    entries = list(task.datasets)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            outputs = list(ex.map(lambda e: _run_entry(task, e), entries))
    else:
        outputs = [_run_entry(task, e) for e in entries]
    order = sorted(range(len(entries)), key=lambda i: (entries[i].dataset, entries[i].model))
    for i in order:
        e = entries[i]
        results, audit, curves, extras = outputs[i]
        report.results.setdefault(e.dataset, {})[e.model] = results
        report.audit.setdefault(e.dataset, {})[e.model] = audit
        if curves:
            report.curves.setdefault(e.dataset, {})[e.model] = curves
        report.extras.setdefault(e.dataset, {})[e.model] = extras
    report.provenance = {
        "config_hash": task.config_hash(),
        "seeds": {"split": task.split.seed},
        "toolkit_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    return report

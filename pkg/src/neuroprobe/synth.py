"""Synthetic bundles with controllable class separation, for desk-scale runs."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .data import (
    STAGES, EmbeddingRecord, EmbeddingSet, Event, EventAnnotations, Hypnogram, SubjectIndex, SubjectInfo,
    WindowLabelTrack, save_embedding_set, save_subjects, write_events_csv, write_hypnograms_csv, write_labels_csv,
)

# sticky stage transitions: rows from, columns to (W, N1, N2, N3, R)
_STAGE_TRANSITIONS = np.array([
    [0.85, 0.13, 0.02, 0.00, 0.00],
    [0.06, 0.60, 0.30, 0.00, 0.04],
    [0.03, 0.03, 0.82, 0.08, 0.04],
    [0.02, 0.00, 0.10, 0.88, 0.00],
    [0.04, 0.03, 0.05, 0.00, 0.88],
])


@dataclass(frozen=True)
class SynthSpec:
    dataset_id: str = "synthetic"
    n_subjects: int = 6
    records_per_subject: int = 1
    windows_per_record: int = 120
    dim: int = 8
    window_seconds: float = 10.0
    separation: float = 3.0
    label_source: str = "events"  # events | stages | random
    n_classes: int = 2
    events_per_record: int = 2
    event_free_records: int = 0  # extra records per subject that carry no events
    event_windows: tuple[int, int] = (2, 6)
    event_type: str = "seizure"
    ci_fraction: float = 0.0
    age_range: tuple[float, float] = (20.0, 80.0)
    age_signal: float = 0.0
    ci_age_offset: float = 0.0
    noise: float = 1.0
    shuffle_labels: bool = False
    seed: int = 0

    @classmethod
    def from_json(cls, doc: dict) -> "SynthSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown synth fields {sorted(unknown)}")
        kw = dict(doc)
        for key in ("event_windows", "age_range"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)

    def __post_init__(self):
        if self.label_source not in ("events", "stages", "random"):
            raise ValueError("label_source must be events, stages or random")
        if self.label_source == "stages" and self.n_classes != len(STAGES):
            object.__setattr__(self, "n_classes", len(STAGES))
        if self.label_source == "events" and self.n_classes != 2:
            raise ValueError("event labels are binary")
        if self.event_free_records < 0:
            raise ValueError("event_free_records must be non-negative")
        if self.n_subjects < 1 or self.records_per_subject < 1 or self.windows_per_record < 1 or self.dim < 1:
            raise ValueError("sizes must be positive")


def _place_events(rng, n_windows, count, lo, hi):
    """Non-overlapping event runs as (start, stop) window indices."""
    taken = np.zeros(n_windows, bool)
    runs = []
    for _ in range(count):
        for _attempt in range(20):
            length = int(rng.integers(lo, hi + 1))
            if length >= n_windows:
                break
            start = int(rng.integers(0, n_windows - length))
            # keep one free window on each side so runs stay separate
            a, b = max(0, start - 1), min(n_windows, start + length + 1)
            if not taken[a:b].any():
                taken[start : start + length] = True
                runs.append((start, start + length))
                break
    return sorted(runs)


def _hypnogram(rng, n):
    st = [0]
    for _ in range(n - 1):
        st.append(int(rng.choice(5, p=_STAGE_TRANSITIONS[st[-1]])))
    return np.array(st)


def generate_bundle(spec: SynthSpec):
    """Build the in-memory bundle: embeddings, subjects, labels, events, hypnograms."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    C = spec.n_classes
    # class means on random orthogonal directions
    basis, _ = np.linalg.qr(rng.normal(size=(spec.dim, max(spec.dim, C + 1))))
    centers = spec.separation * basis[:, :C].T if spec.dim >= C else spec.separation * rng.normal(size=(C, spec.dim))
    age_dir = basis[:, C % spec.dim]

    n_ci = int(round(spec.ci_fraction * spec.n_subjects))
    sids = [f"s{i:03d}" for i in range(spec.n_subjects)]
    ci = set(sids[i] for i in rng.permutation(spec.n_subjects)[:n_ci])
    lo, hi = spec.age_range
    ages = {s: float(np.round(rng.uniform(lo, hi), 2)) for s in sids}
    mid, half = (lo + hi) / 2, max((hi - lo) / 2, 1e-9)

    records, labels, events, hyps, subj = [], [], [], [], {}
    w = spec.window_seconds
    for s in sids:
        rids = []
        apparent = ages[s] + (spec.ci_age_offset if s in ci else 0.0)
        age_shift = spec.age_signal * (apparent - mid) / half
        for r in range(spec.records_per_subject + spec.event_free_records):
            rid = f"{s}_r{r}"
            rids.append(rid)
            n = spec.windows_per_record
            stages = _hypnogram(rng, n)
            evs = []
            if spec.label_source == "events":
                count = spec.events_per_record if r < spec.records_per_subject else 0
                runs = _place_events(rng, n, count, *spec.event_windows)
                lab = np.zeros(n, dtype=np.int64)
                for a, b in runs:
                    lab[a:b] = 1
                    evs.append(Event(a * w, b * w, spec.event_type))
            elif spec.label_source == "stages":
                lab = stages.copy()
            else:
                lab = rng.integers(0, C, size=n)
            emb_lab = lab
            if spec.shuffle_labels:
                lab = rng.permutation(lab)
            X = centers[emb_lab] + spec.noise * rng.normal(size=(n, spec.dim)) + age_shift * age_dir
            records.append(EmbeddingRecord(rid, s, w, X.astype(np.float32)))
            labels.append(WindowLabelTrack(rid, lab))
            events.append(EventAnnotations(rid, n * w, tuple(evs)))
            hyps.append(Hypnogram(rid, tuple(STAGES[i] for i in stages), w))
        subj[s] = SubjectInfo(tuple(rids), ages[s], "CI" if s in ci else "healthy")
    return EmbeddingSet(spec.dataset_id, tuple(records)), SubjectIndex(subj), labels, events, hyps


def generate_synthetic_bundle(spec: SynthSpec, out_dir) -> Path:
    """Write a complete bundle directory; identical spec gives identical bytes."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    es, subjects, labels, events, hyps = generate_bundle(spec)
    save_embedding_set(es, out, {e.record_id: e.duration_s for e in events})
    save_subjects(subjects, out / "subjects.json")
    write_labels_csv(out / "labels.csv", labels)
    write_events_csv(out / "events.csv", events)
    write_hypnograms_csv(out / "hypnograms.csv", hyps)
    (out / "synth.json").write_text(json.dumps(asdict(spec), indent=2, sort_keys=True) + "\n")
    return out

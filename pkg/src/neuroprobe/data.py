"""Domain types and on-disk formats for embedding bundles.

A bundle directory looks like::

    bundle/
      manifest.json        # dataset id + one entry per record
      records/<id>.natl    # binary embedding matrices
      subjects.json        # subject -> records (+ optional age, group)
      labels.csv           # record_id, window_index, label
      events.csv           # record_id, onset_s, offset_s, type
      hypnograms.csv       # record_id, epoch_index, stage

Only ``manifest.json`` and the record files are required.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

MAGIC = b"NATL"
FORMAT_VERSION = 1
# magic, version u32, n_windows u64, d u32, window_seconds f64
_HEADER = struct.Struct("<4sIQId")

STAGES = ("W", "N1", "N2", "N3", "R")
STAGE_INDEX = {s: i for i, s in enumerate(STAGES)}

# Default minimal event durations in seconds (AASM-derived task thresholds).
MIN_DURATION_S = {"microarousal": 3.0, "apnea": 10.0, "hypopnea": 10.0, "limb_movement": 0.5}


class BundleError(ValueError):
    """Base class for malformed on-disk data."""


class MalformedHeaderError(BundleError):
    pass


class DimensionMismatchError(BundleError):
    pass


class NonFiniteError(BundleError):
    pass


@dataclass(frozen=True)
class EmbeddingRecord:
    record_id: str
    subject_id: str
    window_seconds: float
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype="<f4")
        if m.ndim != 2:
            raise DimensionMismatchError(f"{self.record_id}: matrix must be 2-D, got shape {m.shape}")
        if not self.window_seconds > 0:
            raise BundleError(f"{self.record_id}: window_seconds must be positive")
        if not np.isfinite(m).all():
            raise NonFiniteError(f"{self.record_id}: matrix contains non-finite values")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_windows(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class EmbeddingSet:
    dataset_id: str
    records: tuple[EmbeddingRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        ids = [r.record_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise BundleError(f"{self.dataset_id}: duplicate record ids")
        dims = {r.dim for r in self.records}
        if len(dims) > 1:
            raise DimensionMismatchError(f"{self.dataset_id}: records disagree on embedding dimension {sorted(dims)}")
        if dims and min(dims) < 1:
            raise DimensionMismatchError(f"{self.dataset_id}: embedding dimension must be >= 1")

    @property
    def dim(self) -> int | None:
        return self.records[0].dim if self.records else None

    def by_id(self) -> dict[str, EmbeddingRecord]:
        return {r.record_id: r for r in self.records}


@dataclass(frozen=True)
class WindowLabelTrack:
    record_id: str
    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64)
        if lab.ndim != 1 or (lab.size and lab.min() < 0):
            raise BundleError(f"{self.record_id}: labels must be a 1-D sequence of non-negative class indices")
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class WindowScores:
    """Per-window probabilities: a vector (binary) or row-stochastic matrix."""

    record_id: str
    scores: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float)
        if s.ndim == 1:
            if s.size and (s.min() < 0 or s.max() > 1 or not np.isfinite(s).all()):
                raise ValueError(f"{self.record_id}: binary scores must lie in [0, 1]")
        elif s.ndim == 2:
            if not np.allclose(s.sum(axis=1), 1.0, atol=1e-6, rtol=0) or (s.size and s.min() < 0):
                raise ValueError(f"{self.record_id}: multiclass score rows must sum to 1")
        else:
            raise ValueError(f"{self.record_id}: scores must be 1-D or 2-D")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)


@dataclass(frozen=True)
class Event:
    onset_s: float
    offset_s: float
    type_tag: str = "event"

    @property
    def duration_s(self) -> float:
        return self.offset_s - self.onset_s


@dataclass(frozen=True)
class EventAnnotations:
    record_id: str
    duration_s: float
    events: tuple[Event, ...] = ()
    vocabulary: frozenset[str] | None = None

    def __post_init__(self):
        evs = tuple(e if isinstance(e, Event) else Event(*e) for e in self.events)
        evs = tuple(sorted(evs, key=lambda e: (e.onset_s, e.offset_s)))
        if not self.duration_s > 0:
            raise ValueError(f"{self.record_id}: duration_s must be positive")
        for e in evs:
            if not (0 <= e.onset_s < e.offset_s <= self.duration_s):
                raise ValueError(f"{self.record_id}: event [{e.onset_s}, {e.offset_s}) outside [0, {self.duration_s}]")
            if self.vocabulary is not None and e.type_tag not in self.vocabulary:
                raise ValueError(f"{self.record_id}: undeclared event type {e.type_tag!r}")
        object.__setattr__(self, "events", evs)


@dataclass(frozen=True)
class Hypnogram:
    record_id: str
    stages: tuple[str, ...]
    epoch_seconds: float = 30.0

    def __post_init__(self):
        st = tuple(self.stages)
        if not st:
            raise ValueError(f"{self.record_id}: empty hypnogram")
        bad = set(st) - set(STAGES)
        if bad:
            raise ValueError(f"{self.record_id}: unknown stage symbols {sorted(bad)}")
        if not self.epoch_seconds > 0:
            raise ValueError(f"{self.record_id}: epoch_seconds must be positive")
        object.__setattr__(self, "stages", st)

    def __len__(self):
        return len(self.stages)

    def as_indices(self) -> np.ndarray:
        return np.array([STAGE_INDEX[s] for s in self.stages], dtype=np.int64)


@dataclass(frozen=True)
class SubjectInfo:
    records: tuple[str, ...]
    age: float | None = None
    group_tag: str | None = None


@dataclass(frozen=True)
class SubjectIndex:
    subjects: Mapping[str, SubjectInfo]

    def __post_init__(self):
        subs = {}
        seen: dict[str, str] = {}
        for sid in sorted(self.subjects):
            info = self.subjects[sid]
            if not isinstance(info, SubjectInfo):
                info = SubjectInfo(**info) if isinstance(info, Mapping) else SubjectInfo(tuple(info))
            info = SubjectInfo(tuple(info.records), info.age, info.group_tag)
            if info.age is not None and not (math.isfinite(info.age) and info.age >= 0):
                raise ValueError(f"subject {sid}: age must be finite and >= 0")
            for rid in info.records:
                if rid in seen:
                    raise ValueError(f"record {rid} listed under subjects {seen[rid]} and {sid}")
                seen[rid] = sid
            subs[sid] = info
        object.__setattr__(self, "subjects", subs)

    @classmethod
    def from_records(cls, record_subjects: Mapping[str, str], ages=None, groups=None) -> "SubjectIndex":
        recs: dict[str, list[str]] = defaultdict(list)
        for rid, sid in record_subjects.items():
            recs[sid].append(rid)
        ages = ages or {}
        groups = groups or {}
        return cls({s: SubjectInfo(tuple(r), ages.get(s), groups.get(s)) for s, r in recs.items()})

    def __len__(self):
        return len(self.subjects)

    def __iter__(self):
        return iter(self.subjects)

    @property
    def ids(self) -> list[str]:
        return sorted(self.subjects)

    def subject_of(self) -> dict[str, str]:
        return {rid: sid for sid, info in self.subjects.items() for rid in info.records}

    def records_of(self, subject_ids: Iterable[str]) -> list[str]:
        return [rid for sid in sorted(subject_ids) for rid in self.subjects[sid].records]

    def age(self, sid: str) -> float | None:
        return self.subjects[sid].age

    def group(self, sid: str) -> str | None:
        return self.subjects[sid].group_tag

    def to_json(self) -> dict:
        out = {}
        for sid, info in self.subjects.items():
            entry: dict = {"records": list(info.records)}
            if info.age is not None:
                entry["age"] = info.age
            if info.group_tag is not None:
                entry["group"] = info.group_tag
            out[sid] = entry
        return {"subjects": out}

    @classmethod
    def from_json(cls, doc: Mapping) -> "SubjectIndex":
        subs = doc["subjects"]
        return cls({sid: SubjectInfo(tuple(e["records"]), e.get("age"), e.get("group")) for sid, e in subs.items()})


# ---------------------------------------------------------------- binary records


def write_record(path: Path | str, matrix: np.ndarray, window_seconds: float) -> None:
    m = np.ascontiguousarray(matrix, dtype="<f4")
    if m.ndim != 2:
        raise DimensionMismatchError("matrix must be 2-D")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, m.shape[0], m.shape[1], float(window_seconds)))
        fh.write(m.tobytes(order="C"))


def read_record(path: Path | str) -> tuple[np.ndarray, float]:
    """Return ``(matrix, window_seconds)`` from one record file."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise MalformedHeaderError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, n, d, window_seconds = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise MalformedHeaderError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise MalformedHeaderError(f"{path}: unsupported format version {version}")
    expected = _HEADER.size + 4 * n * d
    if len(raw) != expected:
        raise MalformedHeaderError(f"{path}: payload is {len(raw) - _HEADER.size} bytes, header implies {4 * n * d}")
    m = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(n, d)
    if not np.isfinite(m).all():
        raise NonFiniteError(f"{path}: non-finite values in payload")
    return m, window_seconds


def save_embedding_set(es: EmbeddingSet, path: Path | str, durations: Mapping[str, float] | None = None) -> None:
    root = Path(path)
    (root / "records").mkdir(parents=True, exist_ok=True)
    entries = []
    for rec in es.records:
        rel = f"records/{rec.record_id}.natl"
        write_record(root / rel, rec.matrix, rec.window_seconds)
        entry = {"record_id": rec.record_id, "subject_id": rec.subject_id, "file": rel}
        if durations and rec.record_id in durations:
            entry["duration_s"] = durations[rec.record_id]
        entries.append(entry)
    doc = {"dataset_id": es.dataset_id, "format_version": FORMAT_VERSION, "records": entries}
    (root / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_manifest(path: Path | str) -> dict:
    root = Path(path)
    mpath = root / "manifest.json" if root.is_dir() else root
    try:
        doc = json.loads(mpath.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedHeaderError(f"{mpath}: cannot read manifest ({exc})") from exc
    if not isinstance(doc, dict) or "records" not in doc:
        raise MalformedHeaderError(f"{mpath}: manifest lacks a 'records' list")
    return doc


def load_embedding_set(path: Path | str) -> EmbeddingSet:
    root = Path(path)
    base = root if root.is_dir() else root.parent
    doc = load_manifest(root)
    records = []
    dim = None
    for entry in doc["records"]:
        m, ws = read_record(base / entry["file"])
        if dim is not None and m.shape[1] != dim:
            raise DimensionMismatchError(
                f"record {entry['record_id']} has d={m.shape[1]}, earlier records have d={dim}"
            )
        dim = m.shape[1]
        records.append(EmbeddingRecord(entry["record_id"], entry["subject_id"], ws, m))
    return EmbeddingSet(doc.get("dataset_id", base.name), tuple(records))


def record_durations(path: Path | str, es: EmbeddingSet | None = None) -> dict[str, float]:
    """Record durations from the manifest, falling back to n_windows * window_seconds."""
    doc = load_manifest(path)
    es = es or load_embedding_set(path)
    recs = es.by_id()
    out = {}
    for entry in doc["records"]:
        rid = entry["record_id"]
        out[rid] = float(entry.get("duration_s", recs[rid].n_windows * recs[rid].window_seconds))
    return out


# ---------------------------------------------------------------- CSV tables


def write_labels_csv(path, tracks: Iterable[WindowLabelTrack]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["record_id", "window_index", "label"])
        for t in tracks:
            for i, lab in enumerate(t.labels):
                w.writerow([t.record_id, i, int(lab)])


def read_labels_csv(path) -> dict[str, WindowLabelTrack]:
    rows: dict[str, dict[int, int]] = defaultdict(dict)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows[row["record_id"]][int(row["window_index"])] = int(row["label"])
    out = {}
    for rid, d in rows.items():
        n = max(d) + 1
        if len(d) != n:
            raise BundleError(f"labels for {rid} have gaps in window_index")
        out[rid] = WindowLabelTrack(rid, np.array([d[i] for i in range(n)]))
    return out


def write_events_csv(path, annotations: Iterable[EventAnnotations]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["record_id", "onset_s", "offset_s", "type"])
        for ann in annotations:
            for e in ann.events:
                w.writerow([ann.record_id, repr(float(e.onset_s)), repr(float(e.offset_s)), e.type_tag])


def read_events_csv(path, durations: Mapping[str, float]) -> dict[str, EventAnnotations]:
    """Events per record; records in ``durations`` without events get an empty list."""
    evs: dict[str, list[Event]] = defaultdict(list)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            evs[row["record_id"]].append(Event(float(row["onset_s"]), float(row["offset_s"]), row["type"]))
    missing = set(evs) - set(durations)
    if missing:
        raise BundleError(f"events reference unknown records {sorted(missing)}")
    return {rid: EventAnnotations(rid, durations[rid], tuple(evs.get(rid, ()))) for rid in durations}


def write_hypnograms_csv(path, hypnograms: Iterable[Hypnogram]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["record_id", "epoch_index", "stage"])
        for h in hypnograms:
            for i, s in enumerate(h.stages):
                w.writerow([h.record_id, i, s])


def read_hypnograms_csv(path, epoch_seconds: float = 30.0) -> dict[str, Hypnogram]:
    rows: dict[str, dict[int, str]] = defaultdict(dict)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows[row["record_id"]][int(row["epoch_index"])] = row["stage"]
    out = {}
    for rid, d in rows.items():
        n = max(d) + 1
        if len(d) != n:
            raise BundleError(f"hypnogram for {rid} has gaps in epoch_index")
        out[rid] = Hypnogram(rid, tuple(d[i] for i in range(n)), epoch_seconds)
    return out


def load_subjects(path) -> SubjectIndex:
    return SubjectIndex.from_json(json.loads(Path(path).read_text()))


def save_subjects(subjects: SubjectIndex, path) -> None:
    Path(path).write_text(json.dumps(subjects.to_json(), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- label derivation


def epochize_events(
    events: EventAnnotations, window_seconds: float, min_duration_s: float = 0.0
) -> WindowLabelTrack:
    """Binary window labels: window i is positive iff a long-enough event overlaps [i*w, (i+1)*w).

    The trailing partial window is dropped. Intervals are half-open, so an event
    ending exactly at a window start does not mark that window.
    """
    if not window_seconds > 0:
        raise ValueError("window_seconds must be positive")
    if min_duration_s < 0:
        raise ValueError("min_duration_s must be non-negative")
    n = math.floor(events.duration_s / window_seconds)
    labels = np.zeros(n, dtype=np.int64)
    for e in events.events:
        if e.duration_s < min_duration_s:
            continue
        first = math.floor(e.onset_s / window_seconds)
        last = min(math.ceil(e.offset_s / window_seconds) - 1, n - 1)
        if first <= last:
            labels[first : last + 1] = 1
    return WindowLabelTrack(events.record_id, labels)


# ---------------------------------------------------------------- bundle checks


@dataclass(frozen=True)
class Violation:
    kind: str
    record_id: str | None
    message: str


def validate_bundle(
    embeddings: EmbeddingSet,
    subjects: SubjectIndex,
    labels: Mapping[str, WindowLabelTrack] | None = None,
    events: Mapping[str, EventAnnotations] | None = None,
    hypnograms: Mapping[str, Hypnogram] | None = None,
) -> list[Violation]:
    """Cross-check ids, lengths and subject coverage. An empty list means valid."""
    out: list[Violation] = []
    recs = embeddings.by_id()
    owner = subjects.subject_of()

    for rid, rec in recs.items():
        if rid not in owner:
            out.append(Violation("orphan_record", rid, f"record {rid} is not listed in the subject index"))
        elif owner[rid] != rec.subject_id:
            out.append(
                Violation("subject_mismatch", rid, f"manifest says subject {rec.subject_id}, index says {owner[rid]}")
            )
    for rid in sorted(set(owner) - set(recs)):
        out.append(Violation("missing_embedding", rid, f"subject index lists {rid} but no embedding record exists"))

    def check_lengths(kind, table, length_of):
        for rid in sorted(table):
            if rid not in recs:
                out.append(Violation(f"unknown_{kind}_record", rid, f"{kind} given for unknown record {rid}"))
                continue
            n = length_of(table[rid])
            if n != recs[rid].n_windows:
                out.append(
                    Violation(
                        f"{kind}_length_mismatch", rid, f"{kind} has {n} entries, embeddings have {recs[rid].n_windows}"
                    )
                )

    if labels is not None:
        check_lengths("label", labels, len)
        observed = set()
        for t in labels.values():
            observed.update(np.unique(t.labels).tolist())
        if labels and len(observed) < 2:
            out.append(Violation("single_class", None, f"only classes {sorted(observed)} observed across labels"))
    if hypnograms is not None:
        check_lengths("hypnogram", hypnograms, len)
    if events is not None:
        for rid in sorted(events):
            if rid not in recs:
                out.append(Violation("unknown_event_record", rid, f"events given for unknown record {rid}"))
                continue
            rec = recs[rid]
            n = math.floor(events[rid].duration_s / rec.window_seconds)
            if n != rec.n_windows:
                out.append(
                    Violation(
                        "duration_mismatch",
                        rid,
                        f"annotation duration implies {n} windows, embeddings have {rec.n_windows}",
                    )
                )
    for sid, info in subjects.subjects.items():
        if not info.records:
            out.append(Violation("empty_subject", None, f"subject {sid} has no records"))
    return out


@dataclass
class Bundle:
    """Everything a task run reads from one bundle directory."""

    path: Path
    embeddings: EmbeddingSet
    subjects: SubjectIndex
    durations: dict[str, float]
    labels: dict[str, WindowLabelTrack] | None = None
    events: dict[str, EventAnnotations] | None = None
    hypnograms: dict[str, Hypnogram] | None = None

    def validate(self) -> list[Violation]:
        return validate_bundle(self.embeddings, self.subjects, self.labels, self.events, self.hypnograms)


def load_bundle(path: Path | str) -> Bundle:
    root = Path(path)
    es = load_embedding_set(root)
    durations = record_durations(root, es)
    if (root / "subjects.json").exists():
        subjects = load_subjects(root / "subjects.json")
    else:
        subjects = SubjectIndex.from_records({r.record_id: r.subject_id for r in es.records})
    labels = read_labels_csv(root / "labels.csv") if (root / "labels.csv").exists() else None
    events = read_events_csv(root / "events.csv", durations) if (root / "events.csv").exists() else None
    hyp = None
    if (root / "hypnograms.csv").exists():
        ws = es.records[0].window_seconds if es.records else 30.0
        hyp = read_hypnograms_csv(root / "hypnograms.csv", ws)
    return Bundle(root, es, subjects, durations, labels, events, hyp)


def stack_windows(es: EmbeddingSet, record_ids: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate window matrices; also return the record index of each row."""
    recs = es.by_id()
    mats = [recs[r].matrix for r in record_ids]
    if not mats:
        return np.zeros((0, es.dim or 0), dtype=np.float32), np.zeros(0, dtype=np.int64)
    owner = np.concatenate([np.full(m.shape[0], i, dtype=np.int64) for i, m in enumerate(mats)])
    return np.concatenate(mats, axis=0), owner

import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from neuroprobe import data
from neuroprobe.synth import SynthSpec, generate_bundle, generate_synthetic_bundle


def _set(*mats, ws=10.0):
    recs = tuple(data.EmbeddingRecord(f"r{i}", f"s{i}", ws, m.astype(np.float32)) for i, m in enumerate(mats))
    return data.EmbeddingSet("ds", recs)


def test_zero_record_round_trip(tmp_path):
    data.save_embedding_set(_set(np.zeros((4, 3))), tmp_path)
    es = data.load_embedding_set(tmp_path)
    assert len(es.records) == 1
    assert es.records[0].matrix.shape == (4, 3)
    assert not es.records[0].matrix.any()


def test_random_record_bit_identical(tmp_path):
    m = np.random.default_rng(0).normal(size=(100, 16)).astype(np.float32)
    data.write_record(tmp_path / "a.natl", m, 30.0)
    back, ws = data.read_record(tmp_path / "a.natl")
    assert ws == 30.0
    assert back.tobytes() == m.tobytes()


@settings(max_examples=30, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(1, 12), st.integers(1, 6)),
              elements=st.floats(-1e6, 1e6, width=32)))
def test_round_trip_property(tmp_path_factory, m):
    path = tmp_path_factory.mktemp("rt")
    data.save_embedding_set(_set(m), path)
    assert data.load_embedding_set(path).records[0].matrix.tobytes() == m.tobytes()


def test_header_layout(tmp_path):
    data.write_record(tmp_path / "a.natl", np.ones((2, 3), np.float32), 10.0)
    raw = (tmp_path / "a.natl").read_bytes()
    magic, version, n, d, w = struct.unpack_from("<4sIQId", raw)
    assert (magic, n, d, w) == (b"NATL", 2, 3, 10.0)
    assert len(raw) == struct.calcsize("<4sIQId") + 2 * 3 * 4


def test_bad_magic_and_truncation(tmp_path):
    p = tmp_path / "a.natl"
    data.write_record(p, np.ones((2, 3), np.float32), 10.0)
    raw = p.read_bytes()
    p.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(data.MalformedHeaderError):
        data.read_record(p)
    p.write_bytes(raw[:-4])
    with pytest.raises(data.BundleError):
        data.read_record(p)


def test_dimension_mismatch_rejected():
    with pytest.raises(data.DimensionMismatchError):
        _set(np.zeros((3, 8)), np.zeros((3, 16)))


def test_non_finite_rejected():
    with pytest.raises(data.NonFiniteError):
        _set(np.array([[1.0, np.nan]]))


def _ann(duration, *evs):
    return data.EventAnnotations("r", duration, tuple(data.Event(a, b, "x") for a, b in evs))


def test_epochize_no_events():
    assert not data.epochize_events(_ann(300), 30).labels.any()


def test_epochize_half_open_interval():
    # [35, 50) lies inside window 1 = [30, 60); window 2 = [60, 90) is untouched
    lab = data.epochize_events(_ann(300, (35, 50)), 30, 3).labels
    assert lab.tolist() == [0, 1, 0, 0, 0, 0, 0, 0, 0, 0]


def test_epochize_event_ending_on_boundary():
    lab = data.epochize_events(_ann(120, (30, 60)), 30).labels
    assert lab.tolist() == [0, 1, 0, 0]


def test_epochize_short_event_dropped():
    assert not data.epochize_events(_ann(300, (40, 42)), 30, data.MIN_DURATION_S["microarousal"]).labels.any()


@settings(max_examples=100, deadline=None)
@given(st.floats(1, 5000), st.floats(0.5, 60),
       st.lists(st.tuples(st.floats(0, 5000), st.floats(0.01, 200)), max_size=8),
       st.floats(0, 20), st.floats(0, 20))
def test_epochize_length_and_monotonicity(duration, w, raw, m1, m2):
    evs = [(a, min(a + d, duration)) for a, d in raw if a < duration and a + d <= duration and d > 0]
    ann = _ann(duration, *evs)
    lo, hi = sorted((m1, m2))
    a = data.epochize_events(ann, w, lo).labels
    b = data.epochize_events(ann, w, hi).labels
    assert len(a) == math.floor(duration / w)
    assert np.all(b <= a)


def _bundle(**kw):
    es, subj, labels, events, hyps = generate_bundle(SynthSpec(**kw))
    return es, subj, {t.record_id: t for t in labels}, {e.record_id: e for e in events}, {h.record_id: h for h in hyps}


def test_consistent_bundle_is_valid():
    assert data.validate_bundle(*_bundle()) == []


def test_long_label_track_flagged():
    es, subj, labels, events, hyps = _bundle()
    rid = sorted(labels)[0]
    labels[rid] = data.WindowLabelTrack(rid, np.r_[labels[rid].labels, 0])
    v = data.validate_bundle(es, subj, labels, events, hyps)
    assert [x.kind for x in v] == ["label_length_mismatch"]


def test_orphan_record_flagged():
    es, subj, labels, events, hyps = _bundle()
    rid = es.records[0].record_id
    sid = es.records[0].subject_id
    kept = {s: i for s, i in subj.subjects.items() if s != sid}
    v = data.validate_bundle(es, data.SubjectIndex(kept), labels, events, hyps)
    assert [x.kind for x in v] == ["orphan_record"]
    assert v[0].record_id == rid


def test_bundle_directory_round_trip(tmp_path):
    spec = SynthSpec(n_subjects=3, records_per_subject=2, windows_per_record=20)
    generate_synthetic_bundle(spec, tmp_path)
    b = data.load_bundle(tmp_path)
    assert b.validate() == []
    es, subj, labels, events, hyps = _bundle(n_subjects=3, records_per_subject=2, windows_per_record=20)
    for r in es.records:
        assert b.embeddings.by_id()[r.record_id].matrix.tobytes() == r.matrix.tobytes()
        assert np.array_equal(b.labels[r.record_id].labels, labels[r.record_id].labels)
        assert b.events[r.record_id] == events[r.record_id]
        assert b.hypnograms[r.record_id].stages == hyps[r.record_id].stages
    assert b.subjects.to_json() == subj.to_json()


def test_synthetic_bundle_bytes_are_reproducible(tmp_path):
    spec = SynthSpec(seed=4)
    a, b = generate_synthetic_bundle(spec, tmp_path / "a"), generate_synthetic_bundle(spec, tmp_path / "b")
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_stack_windows_owner_index():
    es = _set(np.zeros((2, 3)), np.ones((3, 3)))
    X, owner = data.stack_windows(es, ["r1", "r0"])
    assert X.shape == (5, 3)
    assert owner.tolist() == [0, 0, 0, 1, 1]
    assert X[:3].all() and not X[3:].any()

"""Patient-disjoint fold plans.

Shuffles use numpy's PCG64 bit generator (``numpy.random.Generator(PCG64(seed))``)
applied to the lexicographically sorted subject ids, so a plan is a pure
function of the subject ids, the parameters and the seed.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import SubjectIndex, Violation


@dataclass(frozen=True)
class Fold:
    train: frozenset[str]
    validation: frozenset[str]
    test: frozenset[str]


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[Fold, ...]
    scheme: str
    seed: int = 0

    def __len__(self):
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)

    def to_json(self) -> dict:
        return {
            "scheme": self.scheme,
            "seed": self.seed,
            "folds": [
                {"train": sorted(f.train), "validation": sorted(f.validation), "test": sorted(f.test)}
                for f in self.folds
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, doc: Mapping) -> "FoldPlan":
        folds = tuple(
            Fold(frozenset(f["train"]), frozenset(f.get("validation", ())), frozenset(f["test"])) for f in doc["folds"]
        )
        return cls(folds, doc["scheme"], int(doc.get("seed", 0)))


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & (2**64 - 1)))


def _ids(subjects: SubjectIndex | Iterable[str]) -> list[str]:
    if isinstance(subjects, SubjectIndex):
        return subjects.ids
    return sorted(set(subjects))


def _folds_from_groups(groups: Sequence[Sequence[str]], everyone: Sequence[str], validation: bool) -> tuple[Fold, ...]:
    k = len(groups)
    everyone = frozenset(everyone)
    folds = []
    for i, g in enumerate(groups):
        test = frozenset(g)
        val = frozenset(groups[(i + 1) % k]) if validation else frozenset()
        folds.append(Fold(everyone - test - val, val, test))
    return tuple(folds)


def _deal(order: Sequence[str], k: int) -> list[list[str]]:
    groups: list[list[str]] = [[] for _ in range(k)]
    for j, sid in enumerate(order):
        groups[j % k].append(sid)
    return groups


def patient_kfold(subjects, k: int, seed: int = 0, validation: bool = False) -> FoldPlan:
    """Shuffle subjects and deal them round-robin into ``k`` test groups.

    With ``validation=True`` fold i validates on the test group of fold i+1
    and trains on the remaining k-2 groups.
    """
    ids = _ids(subjects)
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(ids) < k:
        raise ValueError(f"{len(ids)} subjects cannot fill {k} folds")
    if validation and k < 3:
        raise ValueError("a rotating validation fold needs k >= 3")
    order = [ids[i] for i in _rng(seed).permutation(len(ids))]
    return FoldPlan(_folds_from_groups(_deal(order, k), ids, validation), "kfold", seed)


def age_bins(ages: Mapping[str, float], bin_edges: Sequence[float]) -> dict[str, int]:
    """Bin index per subject; bins are [e_i, e_{i+1}) with the last bin closed."""
    edges = list(bin_edges)
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("bin_edges must hold at least two strictly ascending values")
    out = {}
    for sid, age in ages.items():
        if age is None:
            raise ValueError(f"subject {sid} has no age")
        if not edges[0] <= age <= edges[-1]:
            raise ValueError(f"subject {sid} age {age} outside bin edges [{edges[0]}, {edges[-1]}]")
        out[sid] = min(bisect_right(edges, age) - 1, len(edges) - 2)
    return out


def stratified_kfold_by_age(
    subjects: SubjectIndex, k: int, bin_edges: Sequence[float], seed: int = 0, validation: bool = False
) -> FoldPlan:
    ids = subjects.ids
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(ids) < k:
        raise ValueError(f"{len(ids)} subjects cannot fill {k} folds")
    bins = age_bins({s: subjects.age(s) for s in ids}, bin_edges)
    rng = _rng(seed)
    # Concatenate per-bin shuffles, then deal round-robin: each bin's subjects
    # spread over consecutive folds, so per-bin counts differ by at most one.
    order: list[str] = []
    for b in sorted(set(bins.values())):
        members = [s for s in ids if bins[s] == b]
        order.extend(members[i] for i in rng.permutation(len(members)))
    return FoldPlan(_folds_from_groups(_deal(order, k), ids, validation), "stratified_age_kfold", seed)


def loso(subjects) -> FoldPlan:
    ids = _ids(subjects)
    if len(ids) < 2:
        raise ValueError("leave-one-subject-out needs at least 2 subjects")
    everyone = frozenset(ids)
    folds = tuple(Fold(everyone - {s}, frozenset(), frozenset({s})) for s in ids)
    return FoldPlan(folds, "loso", 0)


def group_multivisit(subjects: SubjectIndex) -> SubjectIndex:
    """Identity on a valid index: plans are built over subjects, so all of a
    subject's recordings always travel together. Construction already rejects
    a record listed under two subjects."""
    return SubjectIndex(subjects.subjects)


def check_plan(plan: FoldPlan, subjects=None, require_partition: bool | None = None) -> list[Violation]:
    """Disjointness and coverage checks; empty list means the plan is sound."""
    out = []
    for i, f in enumerate(plan.folds):
        for a, b, name in ((f.train, f.test, "train/test"), (f.validation, f.test, "validation/test"),
                           (f.train, f.validation, "train/validation")):
            both = a & b
            if both:
                out.append(Violation("leakage", None, f"fold {i}: {name} share subjects {sorted(both)}"))
    if require_partition is None:
        require_partition = plan.scheme in ("kfold", "stratified_age_kfold", "loso")
    if require_partition:
        seen: dict[str, int] = {}
        for i, f in enumerate(plan.folds):
            for s in f.test:
                if s in seen:
                    out.append(Violation("duplicate_test", None, f"subject {s} tested in folds {seen[s]} and {i}"))
                seen[s] = i
        if subjects is not None:
            missing = set(_ids(subjects)) - set(seen)
            if missing:
                out.append(Violation("untested", None, f"subjects never tested: {sorted(missing)}"))
    return out


def check_record_assignment(sides: Mapping[str, str], subjects: SubjectIndex) -> list[Violation]:
    """Flag subjects whose records were assigned to different sides (train/validation/test)."""
    owner = subjects.subject_of()
    by_subject: dict[str, set[str]] = {}
    for rid, side in sides.items():
        by_subject.setdefault(owner[rid], set()).add(side)
    return [
        Violation("split_subject", None, f"subject {s} has records on sides {sorted(v)}")
        for s, v in sorted(by_subject.items())
        if len(v) > 1
    ]


def record_sides(fold: Fold, subjects: SubjectIndex) -> dict[str, str]:
    sides = {}
    for name, group in (("train", fold.train), ("validation", fold.validation), ("test", fold.test)):
        for rid in subjects.records_of(group):
            sides[rid] = name
    return sides

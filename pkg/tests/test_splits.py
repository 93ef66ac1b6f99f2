import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuroprobe import splits
from neuroprobe.data import SubjectIndex, SubjectInfo


def _index(n, records=1, ages=None):
    return SubjectIndex({f"s{i:02d}": SubjectInfo(tuple(f"s{i:02d}_r{r}" for r in range(records)),
                                                  None if ages is None else ages[i], "healthy")
                         for i in range(n)})


def test_ten_subjects_five_folds():
    plan = splits.patient_kfold(_index(10), 5, seed=1)
    assert [len(f.test) for f in plan.folds] == [2] * 5
    assert splits.check_plan(plan, _index(10)) == []


def test_k_equals_n_matches_loso():
    idx = _index(6)
    kf = {f.test for f in splits.patient_kfold(idx, 6, seed=3).folds}
    lo = {f.test for f in splits.loso(idx).folds}
    assert kf == lo


def test_seed_determinism():
    idx = _index(12)
    assert splits.patient_kfold(idx, 4, 7).dumps() == splits.patient_kfold(idx, 4, 7).dumps()
    assert splits.patient_kfold(idx, 4, 7).dumps() != splits.patient_kfold(idx, 4, 8).dumps()


def test_validation_fold_rotates():
    plan = splits.patient_kfold(_index(9), 3, seed=0, validation=True)
    for i, f in enumerate(plan.folds):
        assert f.validation == plan.folds[(i + 1) % 3].test
        assert not (f.train & f.validation) and not (f.train & f.test)
    with pytest.raises(ValueError):
        splits.patient_kfold(_index(9), 2, validation=True)


def test_too_few_subjects():
    with pytest.raises(ValueError):
        splits.patient_kfold(_index(3), 4)
    with pytest.raises(ValueError):
        splits.loso(_index(1))


def test_loso_three_subjects():
    plan = splits.loso(_index(3))
    assert sorted(len(f.test) for f in plan.folds) == [1, 1, 1]
    assert len({f.test for f in plan.folds}) == 3


def test_stratified_two_bins():
    ages = [25.0] * 10 + [65.0] * 10
    idx = _index(20, ages=ages)
    plan = splits.stratified_kfold_by_age(idx, 5, [20, 50, 80], seed=2)
    for f in plan.folds:
        young = sum(1 for s in f.test if idx.age(s) < 50)
        assert (young, len(f.test) - young) == (2, 2)


def test_stratified_single_bin_matches_kfold():
    idx = _index(11, ages=[30.0] * 11)
    a = splits.stratified_kfold_by_age(idx, 4, [0, 100], seed=9)
    b = splits.patient_kfold(idx, 4, seed=9)
    assert [f.test for f in a.folds] == [f.test for f in b.folds]


def test_stratified_age_outside_edges():
    with pytest.raises(ValueError):
        splits.stratified_kfold_by_age(_index(4, ages=[10.0, 30, 40, 50]), 2, [20, 60])


def test_multi_record_subjects_stay_together():
    idx = _index(6, records=2)
    plan = splits.patient_kfold(idx, 3, seed=0)
    for f in plan.folds:
        sides = splits.record_sides(f, idx)
        for sid in idx.ids:
            r0, r1 = idx.subjects[sid].records
            assert sides[r0] == sides[r1]
        assert splits.check_record_assignment(sides, idx) == []


def test_adversarial_co_assignment_flagged():
    idx = _index(3, records=2)
    sides = {"s00_r0": "train", "s00_r1": "test", "s01_r0": "train", "s01_r1": "train",
             "s02_r0": "test", "s02_r1": "test"}
    assert len(splits.check_record_assignment(sides, idx)) == 1


def test_singleton_grouping_is_identity():
    idx = _index(4)
    assert splits.group_multivisit(idx).to_json() == idx.to_json()


def test_overlapping_plan_flagged():
    a, b, c = (frozenset({x}) for x in "abc")
    bad = splits.FoldPlan((splits.Fold(a | b, frozenset(), b | c),), "manual", 0)
    assert splits.check_plan(bad)


def test_plan_json_round_trip():
    plan = splits.patient_kfold(_index(7), 3, seed=5, validation=True)
    assert splits.FoldPlan.from_json(plan.to_json()).dumps() == plan.dumps()


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 30), st.integers(0, 2**32), st.booleans(), st.data())
def test_every_plan_partitions_subjects(n, seed, validation, draw):
    k = draw.draw(st.integers(3 if validation else 2, n))
    idx = _index(n)
    plan = splits.patient_kfold(idx, k, seed, validation)
    tests = [f.test for f in plan.folds]
    assert frozenset().union(*tests) == frozenset(idx.ids)
    assert sum(map(len, tests)) == n
    for f in plan.folds:
        assert not (f.test & f.train) and not (f.test & f.validation)
        assert f.train | f.validation | f.test == frozenset(idx.ids)

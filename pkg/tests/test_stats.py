import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

import oracles
from neuroprobe import stats


def test_binomial_survival_matches_scipy():
    for n in (1, 7, 18, 40, 200):
        for p in (3 / 23, 1 / 7, 0.5, 0.9):
            for z in range(n + 2):
                assert math.isclose(stats.binomial_survival(z, n, p), sps.binom.sf(z - 1, n, p), rel_tol=1e-9,
                                    abs_tol=1e-300)


def test_format_p():
    assert stats.format_p(4e-4) == "<1e-3"
    assert stats.format_p(0.0517) == "0.052"
    assert stats.format_p(1.0) == "1.000"


def _table(rows):
    return {m: dict(enumerate(v)) for m, v in rows.items()}


def test_top3_counts_wins():
    table = _table({"a": [5, 5, 5], "b": [4, 4, 1], "c": [3, 1, 4], "d": [1, 3, 3], "e": [0, 0, 0]})
    res = {r.model_id: r for r in stats.top3_win_test(table)}
    assert res["a"].wins == 3 and res["e"].wins == 0
    assert res["e"].p_value == 1.0
    assert res["a"].p_value == pytest.approx(0.6**3)


def test_top3_tie_methods():
    table = _table({"a": [1.0], "b": [1.0], "c": [1.0], "d": [1.0], "e": [0.0]})
    lo = {r.model_id: r.wins for r in stats.top3_win_test(table, tie_method="min")}
    hi = {r.model_id: r.wins for r in stats.top3_win_test(table, tie_method="max")}
    assert lo == {"a": 1, "b": 1, "c": 1, "d": 1, "e": 0}
    assert hi == {"a": 0, "b": 0, "c": 0, "d": 0, "e": 0}


def test_top3_lower_is_better_and_missing():
    table = {"a": {0: 1.0, 1: 2.0}, "b": {0: 2.0, 1: None}, "c": {0: 3.0, 1: 1.0}, "d": {0: 4.0, 1: 0.0}}
    res = {r.model_id: r for r in stats.top3_win_test(table, higher_is_better=False)}
    assert res["a"].n_datasets == 1 and res["a"].wins == 1 and res["d"].wins == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(4, 30))
def test_win_p_non_increasing_in_wins(n, k):
    ps = [stats.win_test_pvalue(w, n, k) for w in range(n + 1)]
    assert ps[0] == 1.0
    assert all(b <= a for a, b in zip(ps, ps[1:]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.integers(-50, 50), min_size=4, max_size=4), min_size=5, max_size=8))
def test_win_counts_rank_invariant(cols):
    table = {f"m{i}": dict(enumerate(row)) for i, row in enumerate(cols)}
    warped = {m: {d: v ** 3 + 7.0 * v for d, v in row.items()} for m, row in table.items()}
    assert [r.wins for r in stats.top3_win_test(table)] == [r.wins for r in stats.top3_win_test(warped)]


def test_spearman_examples():
    assert stats.spearman_rho([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0
    assert stats.spearman_rho([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0
    a, b = [1, 2, 2, 3, 5, 4], [2, 1, 3, 4, 6, 5]
    assert math.isclose(stats.spearman_rho(a, b), oracles.pearson(oracles.midranks(a), oracles.midranks(b)))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.integers(-9, 9), st.integers(-9, 9)), min_size=3, max_size=20))
def test_spearman_symmetry_and_transform(pairs):
    a = np.array([p[0] for p in pairs], float)
    b = np.array([p[1] for p in pairs], float)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return
    rho = stats.spearman_rho(a, b)
    assert rho == stats.spearman_rho(b, a)
    assert math.isclose(stats.spearman_rho(np.exp(a), b ** 3), rho, abs_tol=1e-12)


def test_wilcoxon_constant_shift():
    a = np.array([3.0, 1.0, 4.0, 1.5, 5.0, 9.0])
    res = stats.wilcoxon_signed_rank(a + 2.0, a, "greater")
    assert res.p_value == 1 / 64 and res.method == "exact"


def test_wilcoxon_all_zero():
    with pytest.raises(ValueError, match="zero"):
        stats.wilcoxon_signed_rank([1, 2, 3], [1, 2, 3])


def test_wilcoxon_n10_matches_enumeration():
    rng = np.random.default_rng(10)
    a, b = rng.normal(size=10), rng.normal(size=10)
    _, up, lo = oracles.wilcoxon_enumerate(a.tolist(), b.tolist())
    assert stats.wilcoxon_signed_rank(a, b, "greater").p_value == float(up)
    assert stats.wilcoxon_signed_rank(a, b, "less").p_value == float(lo)


def test_wilcoxon_matches_scipy_exact_without_ties():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = rng.normal(size=15), rng.normal(size=15)
        ours = stats.wilcoxon_signed_rank(a, b).p_value
        theirs = sps.wilcoxon(a, b, method="exact").pvalue
        assert math.isclose(ours, theirs, rel_tol=1e-9)


def test_wilcoxon_normal_branch_matches_scipy():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=40), rng.normal(size=40) + 0.3
    ours = stats.wilcoxon_signed_rank(a, b)
    theirs = sps.wilcoxon(a, b, method="approx", correction=False)
    assert ours.method == "normal"
    assert math.isclose(ours.p_value, theirs.pvalue, rel_tol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-6, 6).filter(bool), min_size=1, max_size=12), st.sampled_from([0.5, 2.0, 3.7]))
def test_wilcoxon_scale_invariance(diffs, scale):
    d = np.array(diffs, float)
    base = stats.wilcoxon_signed_rank(d, np.zeros_like(d)).p_value
    assert stats.wilcoxon_signed_rank(d * scale, np.zeros_like(d)).p_value == base

"""Exact nonparametric statistics for cross-dataset comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import norm, rankdata
from scipy.stats import t as student_t

EXACT_WILCOXON_MAX_N = 25


def binomial_survival(z: int, n: int, p: float) -> float:
    """P(X >= z) for X ~ Binomial(n, p), by direct summation of the pmf."""
    if z <= 0:
        return 1.0
    if z > n:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    lp, lq = math.log(p), math.log1p(-p)
    lgn = math.lgamma(n + 1)
    terms = [
        math.exp(lgn - math.lgamma(i + 1) - math.lgamma(n - i + 1) + i * lp + (n - i) * lq) for i in range(z, n + 1)
    ]
    return min(1.0, math.fsum(terms))


def format_p(p: float) -> str:
    """Three-decimal display used in the published tables."""
    return "<1e-3" if p < 1e-3 else f"{p:.3f}"


@dataclass(frozen=True)
class WinTestResult:
    model_id: str
    wins: int
    n_datasets: int
    k_models: int
    p0: float
    p_value: float
    ties: int = 0

    @property
    def display_p(self) -> str:
        return format_p(self.p_value)


def win_test_pvalue(wins: int, n_datasets: int, k_models: int, top: int = 3) -> float:
    return binomial_survival(wins, n_datasets, top / k_models)


def top3_win_test(
    table: Mapping[str, Mapping[str, float | None]],
    k: int | None = None,
    higher_is_better: bool = True,
    tie_method: str = "min",
    top: int = 3,
) -> list[WinTestResult]:
    """One-sided exact binomial test of top-``top`` finishes per model.

    ``table`` maps model -> dataset -> score. Datasets where any model lacks a
    finite score are dropped. With ``tie_method="min"`` tied models share the
    better rank; ``"max"`` gives them the worse one.
    """
    models = sorted(table)
    if not models:
        raise ValueError("empty performance table")
    k = len(models) if k is None else k
    if k <= top:
        raise ValueError(f"top-{top} test is degenerate with k={k} models")
    if tie_method not in ("min", "max"):
        raise ValueError("tie_method must be 'min' or 'max'")
    datasets = sorted({d for m in models for d in table[m]})

    def value(m, d):
        v = table[m].get(d)
        return None if v is None or not math.isfinite(v) else float(v)

    complete = [d for d in datasets if all(value(m, d) is not None for m in models)]
    wins = dict.fromkeys(models, 0)
    ties = dict.fromkeys(models, 0)
    for d in complete:
        vals = np.array([value(m, d) for m in models])
        ranks = rankdata(-vals if higher_is_better else vals, method=tie_method)
        for m, r, v in zip(models, ranks, vals):
            if r <= top:
                wins[m] += 1
                if np.count_nonzero(vals == v) > 1:
                    ties[m] += 1
    n = len(complete)
    return [
        WinTestResult(m, wins[m], n, k, top / k, binomial_survival(wins[m], n, top / k), ties[m]) for m in models
    ]


def spearman_rho(a: Sequence[float], b: Sequence[float]) -> float:
    """Pearson correlation of midrank vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length rankings with at least 2 entries")
    ra, rb = rankdata(a), rankdata(b)
    ra -= ra.mean()
    rb -= rb.mean()
    den = math.sqrt(float(ra @ ra) * float(rb @ rb))
    if den == 0:
        raise ValueError("Spearman rho undefined for a constant ranking")
    return float(np.clip(float(ra @ rb) / den, -1.0, 1.0))


def spearman_test(a, b) -> tuple[float, float]:
    """rho and a two-sided p-value from the t approximation with n-2 df."""
    rho = spearman_rho(a, b)
    n = len(a)
    if n < 3:
        return rho, float("nan")
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1 - rho * rho))
    return rho, float(2 * student_t.sf(abs(t), n - 2))


def _signed_rank_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """counts[s] = number of sign assignments whose positive doubled-rank sum is s."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks.astype(int):
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # sum of ranks of positive differences
    p_value: float
    n: int
    method: str


def wilcoxon_signed_rank(paired_a, paired_b, alternative: str = "two-sided") -> WilcoxonResult:
    """Signed-rank test on d = a - b; ``greater`` tests whether a tends to exceed b.

    Exact null distribution for up to 25 nonzero differences (midranks on ties),
    normal approximation with tie-corrected variance above that.
    """
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError("alternative must be two-sided, greater or less")
    d = np.asarray(paired_a, dtype=float) - np.asarray(paired_b, dtype=float)
    d = d[d != 0]
    n = d.size
    if n == 0:
        raise ValueError("all differences are zero")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= EXACT_WILCOXON_MAX_N:
        doubled = np.rint(2 * ranks).astype(int)
        counts = _signed_rank_counts(doubled)
        total = sum(counts)
        obs = int(round(2 * w_plus))
        upper = sum(counts[obs:]) / total
        lower = sum(counts[: obs + 1]) / total
        method = "exact"
    else:
        _, tie_counts = np.unique(np.abs(d), return_counts=True)
        mean = n * (n + 1) / 4
        var = n * (n + 1) * (2 * n + 1) / 24 - float(np.sum(tie_counts**3 - tie_counts)) / 48
        z = (w_plus - mean) / math.sqrt(var)
        upper, lower = float(norm.sf(z)), float(norm.cdf(z))
        method = "normal"
    if alternative == "greater":
        p = upper
    elif alternative == "less":
        p = lower
    else:
        p = min(1.0, 2 * min(upper, lower))
    return WilcoxonResult(w_plus, float(p), n, method)

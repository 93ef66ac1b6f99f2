"""Tables and plot-ready files from a :class:`MetricReport`."""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .harness import MetricReport
from .stats import spearman_rho

MISSING = "x"


def _fmt(v) -> str:
    return MISSING if v is None else repr(float(v))


def _slug(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", s)


def heatmap_rows(report: MetricReport, metric: str) -> tuple[list[str], list[list[str]]]:
    datasets = sorted(report.results)
    models = sorted({m for d in datasets for m in report.results[d]})
    header = ["model"] + [f"{d}_{stat}" for d in datasets for stat in ("mean", "std")]
    rows = []
    for m in models:
        row = [m]
        for d in datasets:
            summ = report.results[d].get(m, {}).get(metric)
            row += [_fmt(summ["mean"]), _fmt(summ["std"])] if summ else [MISSING, MISSING]
        rows.append(row)
    return header, rows


def dumbbell_rows(report: MetricReport, metric_a: str, metric_b: str):
    """Per dataset: each model's rank under two metrics (1 = best) and Spearman rho between them."""
    rows, rhos = [], []
    for d in sorted(report.results):
        models = [m for m in sorted(report.results[d])
                  if all(report.results[d][m].get(k, {}).get("mean") is not None for k in (metric_a, metric_b))]
        if not models:
            continue
        a = np.array([report.results[d][m][metric_a]["mean"] for m in models])
        b = np.array([report.results[d][m][metric_b]["mean"] for m in models])
        ra, rb = rankdata(-a, method="min"), rankdata(-b, method="min")
        for m, va, vb, xa, xb in zip(models, a, b, ra, rb):
            rows.append([d, m, repr(float(va)), repr(float(vb)), int(xa), int(xb)])
        try:
            rho = spearman_rho(a, b) if len(models) >= 2 else None
        except ValueError:
            rho = None
        rhos.append([d, len(models), _fmt(rho)])
    return rows, rhos


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def emit_report(report: MetricReport, out_dir, formats: Sequence[str] = ("csv", "json"),
                dumbbell: tuple[str, str] | None = None) -> list[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    written: list[Path] = []
    if "json" in formats:
        p = out / "report.json"
        p.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
        written.append(p)
    if "csv" not in formats:
        return written
    metrics = report.metric_names()
    if not metrics:
        p = out / "heatmap.csv"
        header, _ = heatmap_rows(report, "")
        _write_csv(p, header, [])
        written.append(p)
    for metric in metrics:
        p = out / f"heatmap_{_slug(metric)}.csv"
        _write_csv(p, *heatmap_rows(report, metric))
        written.append(p)
    for d, models in sorted(report.curves.items()):
        for m, modes in sorted(models.items()):
            for mode, pts in sorted(modes.items()):
                if mode == "folds":
                    continue
                p = out / f"curve_{_slug(d)}_{_slug(m)}_{mode}.csv"
                _write_csv(p, ["fa_per_hour", "sensitivity"], [[repr(float(f)), repr(float(s))] for f, s in pts])
                written.append(p)
    if dumbbell is None and {"auroc", "event_sens_fa_auc"} <= set(metrics):
        dumbbell = ("auroc", "event_sens_fa_auc")
    if dumbbell:
        a, b = dumbbell
        rows, rhos = dumbbell_rows(report, a, b)
        p = out / "dumbbell.csv"
        _write_csv(p, ["dataset", "model", a, b, f"rank_{a}", f"rank_{b}"], rows)
        q = out / "dumbbell_rho.csv"
        _write_csv(q, ["dataset", "n_models", "spearman_rho"], rhos)
        written += [p, q]
    return written

"""Command-line entry point: ``neuroprobe <subcommand> ...``.

Exit codes: 0 success, 2 validation failure, 1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import brain_age, data, events, hypnogram, stats
from .harness import BundleValidationError, MetricReport, TaskConfig, load_config, run_task
from .report import emit_report
from .splits import check_plan, loso, patient_kfold, stratified_kfold_by_age
from .synth import SynthSpec, generate_synthetic_bundle

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


class ValidationFailed(Exception):
    pass


def _out_path(args, default: str) -> Path:
    return Path(args.out) if args.out else Path(default)


def cmd_validate(args):
    bundle = data.load_bundle(args.bundle)
    problems = bundle.validate()
    for v in problems:
        print(f"{v.kind}\t{v.record_id or '-'}\t{v.message}")
    if problems:
        raise ValidationFailed(f"{len(problems)} problem(s)")
    print(f"ok: {len(bundle.embeddings.records)} records, {len(bundle.subjects)} subjects")


def cmd_synth(args):
    doc = json.loads(Path(args.config).read_text()) if args.config else {}
    if args.seed is not None:
        doc["seed"] = args.seed
    spec = SynthSpec.from_json(doc)
    out = generate_synthetic_bundle(spec, _out_path(args, "synthetic_bundle"))
    print(out)


def cmd_split(args):
    subjects = data.load_bundle(args.bundle).subjects
    seed = args.seed or 0
    if args.scheme == "loso":
        plan = loso(subjects)
    elif args.scheme == "stratified_age":
        plan = stratified_kfold_by_age(subjects, args.k, [float(x) for x in args.bin_edges.split(",")], seed)
    else:
        plan = patient_kfold(subjects, args.k, seed, validation=args.validation)
    problems = check_plan(plan, subjects)
    if problems:
        raise ValidationFailed("; ".join(p.message for p in problems))
    text = plan.dumps() + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_run(args):
    task = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        task = replace(task, split=replace(task.split, seed=args.seed))
    report = run_task(task, threads=args.threads)
    formats = [args.format] if args.format else ["csv", "json"]
    for p in emit_report(report, _out_path(args, "report"), formats):
        print(p)


def _read_scores_csv(path):
    rows = defaultdict(dict)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows[row["record_id"]][int(row["window_index"])] = float(row["score"])
    return {r: np.array([d[i] for i in range(max(d) + 1)]) for r, d in rows.items()}


def cmd_score_events(args):
    scores = _read_scores_csv(args.scores)
    durations = {r: len(s) * args.window_seconds for r, s in scores.items()}
    truth = data.read_events_csv(args.events, durations)
    curve = events.sensitivity_fa_curve(scores, truth, args.window_seconds, merge_gap_s=args.merge_gap)
    auc = events.event_sens_fa_auc(curve)
    out = _out_path(args, "curve.csv")
    if args.format == "json":
        out.write_text(json.dumps({"event_sens_fa_auc": auc, "points": curve.points}, indent=2) + "\n")
    else:
        curve.to_csv(out)
    print(f"event_sens_fa_auc\t{auc!r}")


def cmd_hypnogram_features(args):
    hyps = data.read_hypnograms_csv(args.hypnograms, args.epoch_seconds)
    feats = [hypnogram.compute_features(hyps[r]) for r in sorted(hyps)]
    out = _out_path(args, "hypnogram_features.csv")
    if args.format == "json":
        doc = {f.record_id: {k: (None if not f.defined(k) else v) for k, v in f.values.items()} for f in feats}
        out.write_text(json.dumps(doc, indent=2) + "\n")
    else:
        hypnogram.write_features_csv(out, feats)
    print(out)


def cmd_brain_age(args):
    doc = {
        "task_kind": "brain_age",
        "datasets": [{"dataset": Path(args.bundle).name, "model": args.model, "path": str(Path(args.bundle).resolve())}],
        "split": {"scheme": "stratified_age" if args.bin_edges else "kfold", "k": args.k, "seed": args.seed or 0,
                  **({"bin_edges": [float(x) for x in args.bin_edges.split(",")]} if args.bin_edges else {})},
        "epoch_level": args.epoch_level,
    }
    if args.epoch_level:
        doc["metrics"] = ["mae", "pearson_r", "baseline_mae", "mae_delta", "mae_improvement_pct", "ols_delta",
                          "epoch_mae", "epoch_delta_mae"]
    report = run_task(TaskConfig.from_json(doc), threads=args.threads)
    for p in emit_report(report, _out_path(args, "brain_age"), [args.format] if args.format else ["csv", "json"]):
        print(p)


def cmd_bag(args):
    recs = brain_age.read_bag_csv(args.bag)
    if args.pairing:
        with open(args.pairing, newline="") as fh:
            pairing = [(r["healthy_id"], r["ci_id"]) for r in csv.DictReader(fh)]
    else:
        pairing = brain_age.age_match_pairs(
            {r.subject_id: r.y for r in recs if r.group_tag == brain_age.HEALTHY},
            {r.subject_id: r.y for r in recs if r.group_tag == brain_age.IMPAIRED},
            args.caliper,
        )
    sep = brain_age.bag_separation(recs, pairing, args.n_boot, args.seed or 0)
    text = json.dumps(sep.to_json(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)


def cmd_wintest(args):
    table = defaultdict(dict)
    family = {}
    with open(args.table, newline="") as fh:
        for row in csv.DictReader(fh):
            v = row["value"].strip()
            table[row["model"]][row["dataset"]] = float(v) if v not in ("", "NA", "x") else None
            if row.get("family"):
                family[row["model"]] = row["family"]
    results = stats.top3_win_test(table, args.k, not args.lower_is_better, args.ties)
    results.sort(key=lambda r: (-r.wins, r.model_id))
    if args.format == "json":
        text = json.dumps([{**r.__dict__, "display_p": r.display_p} for r in results], indent=2) + "\n"
    else:
        lines = ["model,family,wins,p"] + [
            f"{r.model_id},{family.get(r.model_id, '')},{r.wins}/{r.n_datasets},{r.display_p}" for r in results
        ]
        text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)


def cmd_report(args):
    report = MetricReport.from_json(json.loads(Path(args.report).read_text()))
    formats = [args.format] if args.format else ["csv", "json"]
    for p in emit_report(report, _out_path(args, "report"), formats):
        print(p)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config")
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="neuroprobe", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a bundle directory")
    p.add_argument("bundle")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic bundle (--config holds SynthSpec JSON)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", parents=[common], help="build a fold plan for a bundle")
    p.add_argument("bundle")
    p.add_argument("--scheme", choices=("kfold", "stratified_age", "loso"), default="kfold")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--bin-edges")
    p.add_argument("--validation", action="store_true")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("run", parents=[common], help="run a task config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score-events", parents=[common], help="sensitivity vs FA/h curve for window scores")
    p.add_argument("--scores", required=True, help="CSV: record_id, window_index, score")
    p.add_argument("--events", required=True, help="CSV: record_id, onset_s, offset_s, type")
    p.add_argument("--window-seconds", type=float, default=10.0)
    p.add_argument("--merge-gap", type=float, default=0.0)
    p.set_defaults(func=cmd_score_events)

    p = sub.add_parser("hypnogram-features", parents=[common], help="macrostructure features per record")
    p.add_argument("hypnograms")
    p.add_argument("--epoch-seconds", type=float, default=30.0)
    p.set_defaults(func=cmd_hypnogram_features)

    p = sub.add_parser("brain-age", parents=[common], help="ridge brain-age evaluation of a bundle")
    p.add_argument("bundle")
    p.add_argument("--model", default="model")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--bin-edges")
    p.add_argument("--epoch-level", action="store_true")
    p.set_defaults(func=cmd_brain_age)

    p = sub.add_parser("bag", parents=[common], help="BAG group separation from a BAG table")
    p.add_argument("bag", help="CSV: subject_id, y, y_hat, bag, group")
    p.add_argument("--pairing", help="CSV: healthy_id, ci_id (default: greedy age matching)")
    p.add_argument("--caliper", type=float, default=2.0)
    p.add_argument("--n-boot", type=int, default=1000)
    p.set_defaults(func=cmd_bag)

    p = sub.add_parser("wintest", parents=[common], help="binomial top-3 win test")
    p.add_argument("table", help="CSV: model, dataset, value[, family]")
    p.add_argument("--k", type=int)
    p.add_argument("--lower-is-better", action="store_true")
    p.add_argument("--ties", choices=("min", "max"), default="min")
    p.set_defaults(func=cmd_wintest)

    p = sub.add_parser("report", parents=[common], help="re-emit tables from a report.json")
    p.add_argument("report")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ValidationFailed, BundleValidationError, data.BundleError) as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

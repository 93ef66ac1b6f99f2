"""Recompute exact top-3 win-test p-values from a table of win counts.

Input CSV columns: model, family, wins, n_datasets, k.  Without an input file the
script prints a small built-in example with 7 datasets and pools of 23 and 11 models.
"""

import argparse
import csv
import sys

from neuroprobe.stats import format_p, win_test_pvalue

EXAMPLE = [
    ("model_a", "eeg", 6, 7, 23), ("model_b", "eeg", 5, 7, 23), ("model_c", "supervised", 3, 7, 23),
    ("model_d", "ts", 2, 7, 23), ("model_e", "ts", 1, 7, 23), ("model_f", "eeg", 0, 7, 23),
    ("model_a", "eeg", 6, 7, 11), ("model_g", "eeg", 2, 7, 11), ("model_h", "eeg", 1, 7, 11),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("counts", nargs="?", help="CSV: model, family, wins, n_datasets, k")
    ap.add_argument("--alpha", type=float, default=0.05)
    args = ap.parse_args(argv)
    if args.counts:
        with open(args.counts, newline="") as fh:
            rows = [(r["model"], r["family"], int(r["wins"]), int(r["n_datasets"]), int(r["k"]))
                    for r in csv.DictReader(fh)]
    else:
        rows = EXAMPLE
    out = csv.writer(sys.stdout)
    out.writerow(["model", "family", "k", "wins", "p", "p_display", "significant"])
    for model, family, wins, n, k in rows:
        p = win_test_pvalue(wins, n, k)
        out.writerow([model, family, k, f"{wins}/{n}", f"{p:.6g}", format_p(p), p < args.alpha])


if __name__ == "__main__":
    main()

"""Orientation-count study: calibration error versus N_eff on synthetic devices.

Each study simulates one random device recorded RUNS times with N=37 poses,
calibrates every recording, and recalibrates truncated copies.  Errors are
measured against the mean of the full-length results.

    python scripts/run_n_sweep.py --studies 4 --runs 5 --out sweep.csv
"""

import argparse
import csv
import sys

import numpy as np

from imucal import synth
from imucal.evaluation import SUBSETS, truncation_sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--studies", type=int, default=4)
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--n-values", default="9,10,12,15,20,25,30,37")
    ap.add_argument("--out", help="long-format CSV of per-study means")
    args = ap.parse_args(argv)
    n_values = [int(v) for v in args.n_values.split(",")]

    rows = []
    for study in range(args.studies):
        truth = synth.random_truth(np.random.default_rng(100 + study))
        seqs = [synth.make_protocol_sequence(37, truth, seed=1000 * study + i) for i in range(args.runs)]
        agg = truncation_sweep(seqs, n_values).aggregate()
        for n in n_values:
            for name, unit in SUBSETS:
                rows.append((study, n, name, agg[n][name], unit))
        ratio = {s: agg[12][s] / agg[37][s] for s in ("gyro_scale", "gyro_misalignment")}
        print(f"study {study}: N12/N37 gyro scale {ratio['gyro_scale']:.2f}, "
              f"gyro misalignment {ratio['gyro_misalignment']:.2f}")

    print(f"\n{'N_eff':>5} " + " ".join(f"{name:>19}" for name, _ in SUBSETS))
    for n in n_values:
        means = [np.mean([r[3] for r in rows if r[1] == n and r[2] == name]) for name, _ in SUBSETS]
        print(f"{n:>5} " + " ".join(f"{m:>19.5f}" for m in means))
    print("units: " + ", ".join(f"{name} [{unit}]" for name, unit in SUBSETS))

    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["study", "n_eff", "subset", "mean_error", "unit"])
            w.writerows((s, n, name, f"{v:.9g}", u) for s, n, name, v, u in rows)


if __name__ == "__main__":
    sys.exit(main())

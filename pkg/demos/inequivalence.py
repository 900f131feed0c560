"""Contraction of the cq family Phi(alpha, sqrt(1 - alpha^2)) normalized by alpha^2.

The kappa_min column stays at 1, kappa_max grows like 1/alpha^2 and the BKM
column grows only logarithmically. Writes an (alpha, value) data file per
kernel into the --out directory.
"""
import argparse
import csv
from pathlib import Path

from qdiv.certificates import inequivalence_scan
from qdiv.funcs import KAPPA_BKM, KAPPA_MAX, KAPPA_MIN

ALPHAS = [0.02, 0.05, 0.1, 0.2, 0.4, 0.8]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budget", default="tiny")
    ap.add_argument("--out", type=Path, default=None, help="directory for CSV data files")
    args = ap.parse_args()

    cols = {}
    for name, kappa in (("min", KAPPA_MIN), ("bkm", KAPPA_BKM), ("max", KAPPA_MAX)):
        cols[name] = [r["normalized"] for r in inequivalence_scan(kappa, ALPHAS, budget=args.budget)]
    print(f"{'alpha':>6} {'min':>10} {'bkm':>10} {'max':>12}")
    for i, a in enumerate(ALPHAS):
        print(f"{a:6.2f} {cols['min'][i]:10.6f} {cols['bkm'][i]:10.5f} {cols['max'][i]:12.3f}")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        for name, vals in cols.items():
            with open(args.out / f"inequivalence_{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["alpha", "normalized"])
                w.writerows(zip(ALPHAS, vals))


if __name__ == "__main__":
    main()

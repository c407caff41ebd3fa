"""Tabulate the VBC terms over a grid of visibility and Werner parameter.

Prints CSV with one row per (visibility, werner_p) and marks where the
exact value exceeds the classical bound.

    python scripts/noise_sweep.py --steps 11
"""

import argparse
import csv
import sys

import numpy as np

from vbcswitch import NoiseModel, compute_behavior, evaluate_vbc
from vbcswitch.inequality import CLASSICAL_BOUND


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=11)
    ap.add_argument("--vmin", type=float, default=0.5)
    ap.add_argument("--pmin", type=float, default=0.5)
    args = ap.parse_args(argv)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["visibility", "werner_p", "term1", "term2", "term3", "total", "violates"])
    for v in np.linspace(args.vmin, 1.0, args.steps):
        for p in np.linspace(args.pmin, 1.0, args.steps):
            rep = evaluate_vbc(compute_behavior(NoiseModel(float(v), float(p))))
            w.writerow([f"{v:.4f}", f"{p:.4f}", f"{rep.term1:.6f}", f"{rep.term2:.6f}",
                        f"{rep.term3:.6f}", f"{rep.total:.6f}", int(rep.total > CLASSICAL_BOUND)])


if __name__ == "__main__":
    main()

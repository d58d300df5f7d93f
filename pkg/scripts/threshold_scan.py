"""Threshold value as a function of microcluster size k for several
failure probabilities; reports the optimum and the smallest positive k."""
import argparse
import csv
import sys

from clusterft.optical import ThresholdParams, min_k_positive, optimize_k, threshold_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta-th", type=float, default=1e-3)
    ap.add_argument("--pf", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--k-max", type=int, default=120)
    args = ap.parse_args()
    tp = ThresholdParams(args.eta_th)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["p_f", "k", "threshold_value"])
    for p_f in args.pf:
        for k, value in threshold_table(tp, p_f, args.k_max):
            w.writerow([p_f, k, value])
        k_best, best = optimize_k(tp, p_f, args.k_max)
        print(f"# p_f={p_f}: smallest positive k={min_k_positive(tp, p_f)}, best k={k_best} value={best:.4g}", file=sys.stderr)


if __name__ == "__main__":
    main()

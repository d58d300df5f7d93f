"""Median output distance of noisy cluster runs versus noise strength, for
each schedule, on a fixed small circuit."""
import argparse
import csv
import sys

from clusterft.compiler import Circuit, Gate
from clusterft.noise import NoiseModel
from clusterft.pipeline import RunConfig, run_end_to_end

CIRCUITS = {
    "rotations": Circuit(1, (Gate(0, "HZ", (0,), (0.7,)), Gate(1, "HZ", (0,), (0.4,)), Gate(2, "HZ", (0,), (-1.2,)))),
    "bridge": Circuit(
        2,
        (
            Gate(0, "HH_CZ", (0, 1)),
            Gate(1, "HZ", (0,), (0.9,)),
            Gate(1, "HZ", (1,), (-0.4,)),
            Gate(2, "HZ", (0,), (0.3,)),
            Gate(2, "HZ", (1,), (1.7,)),
        ),
    ),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--circuit", choices=sorted(CIRCUITS), default="rotations")
    ap.add_argument("--eta", type=float, nargs="+", default=[0.1, 0.05, 0.02, 0.01, 0.005])
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--env-qubits", type=int, default=1)
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["schedule", "eta", "median", "q10", "q90", "locality_ok"])
    for schedule in ("one_buffered", "two_at_a_time", "dangling"):
        for eta in args.eta:
            cfg = RunConfig(schedule=schedule, seeds=tuple(range(args.seeds)))
            r = run_end_to_end(CIRCUITS[args.circuit], NoiseModel(eta, args.env_qubits), cfg)
            w.writerow([schedule, eta, r.median, r.quantiles["q10"], r.quantiles["q90"], r.locality_ok])


if __name__ == "__main__":
    main()

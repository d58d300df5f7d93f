"""Command-line entry point: ``python -m clusterft <subcommand>``.

Exit codes: 0 success, 1 a check or validation failed, 2 usage error.
Output goes to stdout unless --out is given; a relative --out path is
placed under $CLUSTERFT_OUT_DIR when that variable is set.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import blocks, optical, unitary_extension
from .compiler import SCHEDULES, Circuit, CompileError, random_canonical_circuit
from .error_strength import DeltaOptions, Partition, delta
from .linalg import InvalidInput, expm_hermitian, haar_unitary, random_hermitian_unit
from .noise import NoiseModel
from .pipeline import RunConfig, compile_for, run_end_to_end

OUT_DIR_ENV = "CLUSTERFT_OUT_DIR"


def _floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x]


def _ints(text: str) -> list:
    return [int(x) for x in text.split(",") if x]


def _load_circuit(args) -> Circuit:
    if args.circuit:
        return Circuit.from_json(Path(args.circuit).read_text())
    return random_canonical_circuit(args.random_qubits, args.random_nodes, args.seed)


# ---------------------------------------------------------------- subcommands


def cmd_verify_identities(args):
    angles = np.linspace(-np.pi, np.pi, args.angles)
    rows = blocks.identity_report(angles)
    return rows, all(r["pass"] for r in rows)


def cmd_extend(args):
    rows = []
    rng = np.random.default_rng(args.seed)
    for i in range(args.instances):
        dim = args.dim or int(rng.integers(4, 17))
        sub = args.sub_dim or int(rng.integers(1, dim + 1))
        u, ut, v, s = unitary_extension.random_instance(dim, sub, rng)
        for kind in args.kind:
            cert = unitary_extension.extend_first(u, ut, v, s) if kind == "first" else unitary_extension.extend_second(u, v, s)
            rows.append(
                {
                    "instance": i,
                    "kind": kind,
                    "dim": dim,
                    "sub_dim": sub,
                    "restriction_residual": cert.restriction_residual,
                    "bound_lhs": cert.bound_lhs,
                    "bound_rhs": cert.bound_rhs,
                    "holds": cert.holds,
                }
            )
    return rows, all(r["holds"] for r in rows)


def cmd_delta(args):
    part = Partition(args.q_dim, args.e_dim)
    opts = DeltaOptions(starts=args.starts, seed=args.seed)
    if args.u and args.v:
        u, v = np.load(args.u), np.load(args.v)
        cases = [(u, v, None)]
    else:
        rng = np.random.default_rng(args.seed)
        cases = []
        for _ in range(args.instances):
            u = haar_unitary(part.q_dim, rng)
            w = haar_unitary(part.e_dim, rng)
            h = random_hermitian_unit(part.dim, rng)
            v = expm_hermitian(h, 2 * np.arcsin(args.eta / 2)) @ np.kron(u, w)
            cases.append((u, v, args.eta))
    rows = []
    for i, (u, v, eta) in enumerate(cases):
        r = delta(u, v, part, opts)
        rows.append({"instance": i, "upper_bound": r.upper_bound, "converged": r.converged, "eta": eta})
    # a constructed instance has delta <= eta (witness W)
    ok = all(r["eta"] is None or r["upper_bound"] <= r["eta"] + 1e-6 for r in rows)
    return rows, ok


def cmd_plan(args):
    c, g, sched = compile_for(_load_circuit(args), args.schedule)
    doc = {
        "canonical": json.loads(c.to_json()),
        "cluster": json.loads(g.to_json()),
        "schedule": json.loads(sched.to_json()),
    }
    return doc, True


def cmd_simulate(args):
    model = NoiseModel(args.eta, args.env_qubits, args.noise_mode if args.eta > 0 else "off")
    cfg = RunConfig(
        schedule=args.schedule,
        shots=args.shots,
        seeds=tuple(range(args.seed, args.seed + args.seeds)),
        frame_flip_prob=args.frame_flip,
        p_f=args.pf,
        k=args.k,
    )
    report = run_end_to_end(_load_circuit(args), model, cfg)
    doc = json.loads(report.to_json())
    if args.format == "csv":
        return [{"seed": s, "distance": d} for s, d in zip(cfg.seeds, report.distances)], report.locality_ok
    return doc, report.locality_ok



def cmd_growth(args):
    rows = []
    for p_f in args.pf:
        for k in args.k:
            for levels in args.levels:
                params = optical.GrowthParams(k, p_f, args.trials, args.seed)
                est = optical.monte_carlo_growth(params, levels)
                rows.append(
                    {
                        "p_f": p_f,
                        "k": k,
                        "levels": levels,
                        "p_hat": est.p_hat,
                        "ci_lo": est.ci95[0],
                        "ci_hi": est.ci95[1],
                        "closed_form": optical.adjoin_success_prob(k, p_f, levels),
                    }
                )
    return rows, True


def cmd_threshold(args):
    tp = optical.ThresholdParams(args.eta_th, args.c1, args.c2)
    table = optical.threshold_table(tp, args.pf, args.k_max)
    k_best, best = optical.optimize_k(tp, args.pf, args.k_max)
    rows = [{"k": k, "threshold_value": v, "argmax": False} for k, v in table]
    rows.append({"k": k_best, "threshold_value": best, "argmax": True})
    return rows, best > 0


# ---------------------------------------------------------------- plumbing


def build_parser() -> argparse.ArgumentParser:
    def global_flags(parser, default):
        # the same flags are accepted before or after the subcommand; only
        # the top-level copies carry defaults
        parser.add_argument("--seed", type=int, default=default(0))
        parser.add_argument("--out", default=default(None), help="output path (stdout if omitted)")
        parser.add_argument("--format", choices=("json", "csv"), default=default(None))

    p = argparse.ArgumentParser(prog="clusterft")
    global_flags(p, lambda d: d)
    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, lambda d: argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("verify-identities", parents=[common], help="block and circuit identity residuals")
    s.add_argument("--angles", type=int, default=20)
    s.set_defaults(func=cmd_verify_identities)

    s = sub.add_parser("extend", parents=[common], help="unitary extension bounds on random instances")
    s.add_argument("--instances", type=int, default=100)
    s.add_argument("--dim", type=int, default=0, help="ambient dim (random 4-16 if 0)")
    s.add_argument("--sub-dim", type=int, default=0, help="subspace dim (random if 0)")
    s.add_argument("--kind", type=lambda t: t.split(","), default=["first", "second"])
    s.set_defaults(func=cmd_extend)

    s = sub.add_parser("delta", parents=[common], help="error strength upper bounds")
    s.add_argument("--q-dim", type=int, default=2)
    s.add_argument("--e-dim", type=int, default=2)
    s.add_argument("--u", help=".npy file with U on Q")
    s.add_argument("--v", help=".npy file with V on Q⊗E")
    s.add_argument("--eta", type=float, default=0.1, help="strength of random test instances")
    s.add_argument("--instances", type=int, default=5)
    s.add_argument("--starts", type=int, default=8)
    s.set_defaults(func=cmd_delta)

    def circuit_args(s):
        s.add_argument("--circuit", help="circuit JSON file (random circuit if omitted)")
        s.add_argument("--random-qubits", type=int, default=2)
        s.add_argument("--random-nodes", type=int, default=6)
        s.add_argument("--schedule", choices=sorted(SCHEDULES), default="one_buffered")

    s = sub.add_parser("plan", parents=[common], help="compile a circuit to a cluster and schedule")
    circuit_args(s)
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("simulate", parents=[common], help="noisy end-to-end run")
    circuit_args(s)
    s.add_argument("--eta", type=float, default=0.0)
    s.add_argument("--env-qubits", type=int, default=1)
    s.add_argument("--noise-mode", choices=("random", "off"), default="random")
    s.add_argument("--shots", type=int, default=0)
    s.add_argument("--seeds", type=int, default=10, help="number of noise seeds starting at --seed")
    s.add_argument("--frame-flip", type=float, default=0.0)
    s.add_argument("--pf", type=float, default=0.0)
    s.add_argument("--k", type=int, default=2)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("growth", parents=[common], help="Monte-Carlo microcluster adjoin rates")
    s.add_argument("--pf", type=_floats, default=[0.5])
    s.add_argument("--k", type=_ints, default=[4])
    s.add_argument("--levels", type=_ints, default=[1])
    s.add_argument("--trials", type=int, default=100_000)
    s.set_defaults(func=cmd_growth, default_format="csv")

    s = sub.add_parser("threshold", parents=[common], help="optical threshold over k")
    s.add_argument("--eta-th", type=float, default=1e-3)
    s.add_argument("--pf", type=float, default=0.5)
    s.add_argument("--c1", type=float, default=50.0)
    s.add_argument("--c2", type=float, default=5.0)
    s.add_argument("--k-max", type=int, default=60)
    s.set_defaults(func=cmd_threshold, default_format="csv")
    return p


def _render(payload, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2, default=float) + "\n"
    rows = payload if isinstance(payload, list) else [payload]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()) if rows else [], lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _out_path(out: str) -> Path:
    path = Path(out)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    if args.format is None:
        args.format = getattr(args, "default_format", "json")
    try:
        payload, ok = args.func(args)
    except (InvalidInput, CompileError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = _render(payload, args.format)
    if args.out:
        _out_path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

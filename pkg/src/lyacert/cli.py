"""Command-line interface.

Exit codes for `certify`: 0 certified stable, 2 unstable, 3 inconclusive,
1 error.  All other commands exit 0 on success, 1 on error.  The
LYACERT_SEED environment variable overrides the problem seed.
"""

import argparse
import dataclasses
import os
import sys

import numpy as np

from .certify import (
    VERDICT_INCONCLUSIVE,
    VERDICT_STABLE,
    VERDICT_UNSTABLE,
    canonical_json,
    emit_decay_csv,
    parse_problem,
    run_gallery,
    wonham_certify,
)
from .detect import ObservedPair, detectability_report, final_observability_constant
from .exceptions import LyacertError
from .lyapunov import lyap_apply, lyap_solve_direct, lyap_solve_integral, rkhs_factor
from .linalg import NormInterval, induced_norm, nuclear_norm
from .semigroup import SemigroupProbe, lemma_AS_suite

VERDICT_EXIT = {VERDICT_STABLE: 0, VERDICT_UNSTABLE: 2, VERDICT_INCONCLUSIVE: 3}


def _load_problem(path):
    with open(path) as fh:
        spec = parse_problem(fh.read(), location=path)
    env_seed = os.environ.get("LYACERT_SEED")
    if env_seed is not None:
        spec = dataclasses.replace(spec, seed=int(env_seed))
    return spec


def _emit(payload, out):
    text = canonical_json(payload)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _problem_matrices(spec):
    C = spec.C
    if C is None:
        C = rkhs_factor(spec.Q)
        if C.shape[0] == 0:
            C = np.zeros((1, spec.n))
    return spec.A, C


def cmd_certify(args):
    if args.batch:
        return _certify_batch(args.batch, args.out, args.workers)
    if not args.input:
        print("error: --input or --batch is required", file=sys.stderr)
        return 1
    spec = _load_problem(args.input)
    cert = wonham_certify(spec)
    _emit(cert.to_dict(), args.out)
    return VERDICT_EXIT[cert.verdict]


def _certify_one(paths):
    in_path, out_path = paths
    try:
        cert = wonham_certify(_load_problem(in_path))
    except LyacertError as exc:
        return in_path, None, str(exc)
    with open(out_path, "w") as fh:
        fh.write(canonical_json(cert.to_dict()) + "\n")
    return in_path, cert.verdict, None


def _certify_batch(in_dir, out_dir, workers):
    """Map the pipeline over every problem file in a directory; workers are
    independent processes, nothing is shared beyond the output directory."""
    import concurrent.futures
    import glob

    out_dir = out_dir or in_dir
    os.makedirs(out_dir, exist_ok=True)
    jobs = []
    for in_path in sorted(glob.glob(os.path.join(in_dir, "*.json"))):
        name = os.path.basename(in_path)
        if name.endswith(".certificate.json"):
            continue
        stem = name[: -len(".problem.json")] if name.endswith(".problem.json") \
            else name[: -len(".json")]
        jobs.append((in_path, os.path.join(out_dir, f"{stem}.certificate.json")))
    if not jobs:
        print("error: no problem files found", file=sys.stderr)
        return 1
    failed = 0
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        for in_path, verdict, err in pool.map(_certify_one, jobs):
            if err is not None:
                failed += 1
                print(f"error: {in_path}: {err}", file=sys.stderr)
            else:
                print(f"{in_path}: {verdict}")
    return 1 if failed else 0


def cmd_solve(args):
    spec = _load_problem(args.input)
    A, C = _problem_matrices(spec)
    Q = C.T @ C
    solver = lyap_solve_direct if args.method == "direct" else lyap_solve_integral
    P = solver(A, Q)
    residual = float(np.linalg.norm(lyap_apply(A, P) + Q))
    _emit({"method": args.method, "P": P.tolist(), "residual": residual}, args.out)
    return 0


def cmd_detect(args):
    spec = _load_problem(args.input)
    A, C = _problem_matrices(spec)
    report = detectability_report(ObservedPair(A=A, C=C), t0=spec.t0)
    _emit(report.to_dict(), args.out)
    return 0


def cmd_observe(args):
    spec = _load_problem(args.input)
    A, C = _problem_matrices(spec)
    eps = final_observability_constant(ObservedPair(A=A, C=C), args.t0)
    _emit(
        {"t0": args.t0, "eps_star": eps, "finally_observable": eps > 1e-10},
        args.out,
    )
    return 0


def cmd_probe(args):
    spec = _load_problem(args.input)
    emit_decay_csv(spec, horizon=args.horizon, steps=args.steps, out=args.csv)
    return 0


def cmd_norms(args):
    spec = _load_problem(args.input)
    ind = induced_norm(spec.A, args.p, args.p)
    if isinstance(ind, NormInterval):
        induced = {"lower": ind.lower, "upper": ind.upper}
    else:
        induced = ind
    _emit(
        {"p": args.p, "induced": induced, "nuclear": nuclear_norm(spec.A)},
        args.out,
    )
    return 0


def cmd_gallery(args):
    records = run_gallery(args.out)
    print(canonical_json(records))
    return 0


def cmd_audit_lemmas(args):
    rng = np.random.default_rng(args.seed)
    worst = {}
    for _ in range(args.n):
        n = int(rng.integers(2, 7))
        A = rng.standard_normal((n, n)) / np.sqrt(n)
        probe = SemigroupProbe(A=A)
        for t in (0.1, 1.0, 10.0):
            report = lemma_AS_suite(probe, t=t, h=1e-4)
            for key, val in report.residuals.items():
                worst[key] = max(worst.get(key, 0.0), val)
    block_keys = ["AS_eq_T_minus_I", "AS_commute", "cesaro_identity", "cesaro_commute"]
    ok = all(worst[k] <= 1e-8 for k in block_keys) and worst["dS_dt"] <= 1e-5
    print(canonical_json({"n": args.n, "seed": args.seed, "max_residuals": worst,
                          "pass": ok}))
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lyacert",
        description="Lyapunov stability certification for matrix semigroups",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="run the Wonham certification pipeline")
    p.add_argument("--input")
    p.add_argument("--out")
    p.add_argument("--batch", metavar="DIR",
                   help="certify every problem file in DIR (parallel workers)")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("solve", help="solve A'P + PA = -Q")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=["direct", "integral"], default="direct")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("detect", help="detectability report for (C, A)")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("observe", help="final-observability constant at t0")
    p.add_argument("--input", required=True)
    p.add_argument("--t0", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_observe)

    p = sub.add_parser("probe", help="sample decay observables to CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--csv", required=True)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("norms", help="induced and nuclear norms of A")
    p.add_argument("--input", required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("gallery", help="write the fixture gallery")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gallery)

    p = sub.add_parser("audit-lemmas", help="integrated-semigroup identity audit")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_audit_lemmas)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LyacertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``stochalm {generate,solve,bench,verify}``."""

import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import checks
from .bench import ExperimentConfig, generate_dataset, load_dataset, run_benchmark, save_dataset
from .distributed import Graph, make_graph, run_decentralized, run_federated
from .engine import run
from .reference import solve_reference
from .schedules import make_schedule


def _config(args):
    over = {"seed": args.seed, "trials": args.trials}
    for key in ("scenario", "T"):
        over[key] = getattr(args, key, None)
    if args.config:
        return ExperimentConfig.load(args.config, **over)
    return ExperimentConfig(**{k: v for k, v in over.items() if v is not None})


def cmd_generate(args):
    cfg = _config(args)
    problem, x_true = generate_dataset(cfg)
    ref = solve_reference(problem)
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, f"{cfg.scenario}_dataset.json")
    save_dataset(problem, ref, x_true, path)
    print(f"wrote {path} (F* = {ref.F_star:.10g}, residual {ref.residual:.2e})")
    return 0


def cmd_solve(args):
    problem, ref, _ = load_dataset(args.problem)
    seed = 0 if args.seed is None else args.seed
    if args.mode == "decentralized":
        G = Graph.load(args.graph) if args.graph else make_graph({"kind": "ring"}, problem.n)
        trace, ledger = run_decentralized(problem, G, seed, args.T, tol=args.tol)
    else:
        sched = make_schedule(args.schedule, problem.n, seed=seed)
        if args.mode == "federated":
            trace, ledger = run_federated(problem, sched, args.T, tol=args.tol)
        else:
            trace, ledger = run(problem, sched, args.T, tol=args.tol), None

    err = trace.errors(ref.x_star)
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("t", "j", "error", "f_star", "messages"))
        for t in range(trace.T + 1):
            j = "" if t == 0 else int(trace.j[t - 1])
            fs = "" if np.isnan(trace.f_star[t]) else repr(float(trace.f_star[t]))
            w.writerow((t, j, repr(float(err[t])), fs, int(trace.messages[t])))
    finally:
        if out is not sys.stdout:
            out.close()
    if ledger is not None and args.ledger:
        with open(args.ledger, "w", encoding="utf-8", newline="") as fh:
            ledger.write_csv(fh)
    return 0


def cmd_bench(args):
    cfg = _config(args)
    res = run_benchmark(cfg, out_dir=args.out_dir, workers=args.workers, gnuplot=args.gnuplot)
    for label in res.labels():
        curve = res.mean_curve(label)
        if curve is not None:
            print(f"{label:>16s}  final mean error {curve[-1]:.3e}")
    for msg in res.failures:
        print(f"FAILED: {msg}", file=sys.stderr)
    return 1 if res.failures else 0


def cmd_verify(args):
    seed = 0 if args.seed is None else args.seed
    results = checks.run_all(seed=seed, quick=not args.full)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="stochalm", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--out-dir", default="out")

    p = sub.add_parser("generate", help="draw a scenario dataset and its reference solution")
    common(p)
    p.add_argument("--config")
    p.add_argument("--scenario")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="run StochaLM on a dataset file and print a trace CSV")
    common(p)
    p.add_argument("problem", help="dataset file written by `generate`")
    p.add_argument("--T", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--mode", choices=("central", "federated", "decentralized"), default="central")
    p.add_argument("--schedule", default="uniform",
                   choices=("uniform", "cyclic", "essentially_cyclic"))
    p.add_argument("--graph", help="graph file for --mode decentralized (ring if omitted)")
    p.add_argument("--out", help="trace CSV path (stdout if omitted)")
    p.add_argument("--ledger", help="communication ledger CSV path")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="Monte Carlo comparison for one scenario")
    common(p)
    p.add_argument("--config")
    p.add_argument("--scenario")
    p.add_argument("--T", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--gnuplot", action="store_true", help="also write a gnuplot data file")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="run the invariant suites")
    common(p)
    p.add_argument("--full", action="store_true", help="full-size suites (slow)")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

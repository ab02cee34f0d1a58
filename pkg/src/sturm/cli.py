"""Command-line interface.

Exit codes: 0 success, 1 invalid input value, 2 usage error, 3 malformed or
unreadable file, 4 infeasible cross-validation plan, 5 numerical failure.
Errors are reported as a single stderr line ``sturm: error[<code>]: <msg>``.
"""
import argparse
import csv
import io as _io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .harness import (CvPlan, FoldError, SynthSpec, benchmark_iterations,
                      generate_synthetic, run_nested_cv)
from .solver import SturmConfig, decision_values, fit_sturm

EXIT_VALUE, EXIT_USAGE, EXIT_FORMAT, EXIT_PLAN, EXIT_NUMERIC = 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, f"{self.prog}: {message}")


def parse_dims(text):
    try:
        dims = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        dims = ()
    if len(dims) != 3 or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"dims must look like 10x10x10, got {text!r}")
    return dims


def _atomic_text(path, text):
    io._atomic_write(path, text.encode())


def cmd_synth(args):
    spec = SynthSpec(args.dims, args.m, args.rank, args.density, args.noise, args.seed)
    dataset, w_true = generate_synthetic(spec)
    io.write_dataset(dataset, *io.dataset_paths(args.out))
    io.write_tensors(args.out + ".truth.strm", w_true)
    print(f"wrote {dataset.n_samples} samples to {args.out}.strm", file=sys.stderr)


def cmd_fit(args):
    dataset = io.read_dataset(*io.dataset_paths(args.data))
    config = SturmConfig(
        tau=args.tau, gamma=args.gamma, rho=args.rho, alpha=args.alpha,
        max_iters=args.max_iters, primal_tol=args.tol,
        record_trace=args.trace is not None,
    )
    result = fit_sturm(dataset, None, config)
    io.write_tensors(args.out, result.W)
    if args.trace:
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "objective", "resid_A", "resid_B"])
        for k, (obj, (ra, rb)) in enumerate(
                zip(result.objective_trace, result.primal_residuals), start=1):
            writer.writerow([k, repr(obj), repr(ra), repr(rb)])
        _atomic_text(args.trace, buf.getvalue())
    print(
        f"iterations={result.iterations_run} converged={str(result.converged).lower()} "
        f"sparsity={np.mean(result.W == 0):.4f} seconds={result.wall_time:.3f}",
        file=sys.stderr,
    )


def cmd_predict(args):
    model = io.read_tensors(args.model)
    if model.shape[0] != 1:
        raise CliError(EXIT_FORMAT, f"{args.model}: expected one tensor, found {model.shape[0]}")
    tensor_path, labels_path = io.dataset_paths(args.data)
    samples = io.read_tensors(tensor_path)
    if samples.shape[1:] != model.shape[1:]:
        raise CliError(
            EXIT_VALUE,
            f"model dims {model.shape[1:]} do not match data dims {samples.shape[1:]}",
        )
    preds = np.where(decision_values(model[0], samples) >= 0, 1, -1)
    io._atomic_write(args.out, io.encode_labels(preds))
    if labels_path.exists():
        labels = io.read_labels(labels_path)
        if labels.size != preds.size:
            raise CliError(EXIT_FORMAT, f"{labels_path}: {labels.size} labels for {preds.size} tensors")
        print(f"accuracy={np.mean(preds == labels):.4f}", file=sys.stderr)


def cmd_cv(args):
    dataset = io.read_dataset(*io.dataset_paths(args.data))
    plan_data = {}
    if args.plan:
        try:
            plan_data = json.loads(Path(args.plan).read_text())
        except json.JSONDecodeError as exc:
            raise CliError(EXIT_FORMAT, f"{args.plan}: invalid JSON: {exc}") from exc
    try:
        plan = CvPlan.from_dict(plan_data)
    except (TypeError, ValueError) as exc:
        raise CliError(EXIT_PLAN, f"invalid plan: {exc}") from exc
    report = run_nested_cv(dataset, plan, seed=args.seed, n_jobs=args.n_jobs)
    _atomic_text(args.out, json.dumps(report.to_dict(), indent=2) + "\n")
    print(f"accuracy={report.summary()['accuracy_percent']}%", file=sys.stderr)


def cmd_bench(args):
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["dims", "m", "iter", "seconds"])
    for dims in args.dims:
        times = benchmark_iterations(dims, args.m, args.iters, seed=args.seed)
        label = "x".join(map(str, dims))
        for k, t in enumerate(times, start=1):
            writer.writerow([label, args.m, k, f"{t:.6e}"])
        steady = times[1:] or times
        print(f"{label}: mean per-iteration {np.mean(steady):.6e}s "
              "(first iteration excluded)", file=sys.stderr)


def build_parser():
    parser = _Parser(prog="sturm", description="Sparse tubal-regularized multilinear regression.",
                     epilog=__doc__.split("\n\n", 1)[1],
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--dims", type=parse_dims, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit a coefficient tensor")
    p.add_argument("--data", required=True, help="dataset prefix")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--out", required=True, help="model STRM file")
    p.add_argument("--trace", default=None, help="CSV: iter,objective,resid_A,resid_B")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict +1/-1 labels")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="dataset prefix")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", help="nested cross-validation")
    p.add_argument("--data", required=True, help="dataset prefix")
    p.add_argument("--plan", default=None, help="JSON plan; absent keys use defaults")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("bench", help="per-iteration timing table")
    p.add_argument("--dims", type=parse_dims, action="append", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return parser


def _exit_code(exc):
    if isinstance(exc, CliError):
        return exc.code
    if isinstance(exc, (io.FormatError, OSError, UnicodeDecodeError)):
        return EXIT_FORMAT
    if isinstance(exc, FoldError):
        return EXIT_PLAN
    if isinstance(exc, (FloatingPointError, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    return EXIT_VALUE


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
        args.func(args)
    except (CliError, ValueError, OSError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        code = _exit_code(exc)
        message = " ".join(str(exc).split())
        print(f"sturm: error[{code}]: {message}", file=sys.stderr)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())

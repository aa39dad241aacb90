"""Command-line entry point: ``fastfood <command> [options]``.

Commands
--------
transform     feature rows for an input table
approx-error  mean |k_hat - k| against the number of basis functions
bench         per-vector time and parameter memory, Fastfood versus dense
regress       ridge regression with a chosen kernel approximation
diag          sampler goodness-of-fit report

Every output starts with a ``#`` line holding the full configuration as
JSON. Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical
failure.
"""

import argparse
import contextlib
import json
import sys
import time


from .exceptions import DataError, NumericalError
from .hadamard import next_power_of_two

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class UsageError(Exception):
    pass


def _int_list(text: str) -> list:
    try:
        values = [int(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("values must be positive integers")
    return values


def _target(text: str):
    return int(text) if text.lstrip("+-").isdigit() else text


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--method", default="fastfood",
                        choices=["fastfood", "rks", "rks-hashed", "nystrom", "exact"])
    common.add_argument("--kernel", default="rbf", choices=["rbf", "matern"])
    common.add_argument("--sigma", type=float, default=1.0, help="kernel bandwidth (default 1.0)")
    common.add_argument("--matern-t", type=int, default=1, help="Matern order t (default 1)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", default="-", help="output path, '-' for stdout")
    common.add_argument("--threads", type=int, default=None, help="cap on BLAS threads")

    parser = argparse.ArgumentParser(prog="fastfood", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", parents=[common], help="write feature rows for an input table")
    p.add_argument("--input", required=True)
    p.add_argument("--target-col", type=_target, default=None,
                   help="column to drop before featurizing (name or index)")
    p.add_argument("--n", type=int, default=1024, help="projections; 2n features (n for nystrom)")

    p = sub.add_parser("approx-error", parents=[common], help="kernel approximation error curve")
    p.add_argument("--n", type=_int_list, default=[512, 1024, 2048, 4096])
    p.add_argument("--reps", type=int, default=10, help="independent maps per n")
    p.add_argument("--points", type=int, default=4000)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--dim", type=int, default=10)

    p = sub.add_parser("bench", parents=[common], help="timing and memory, fastfood versus rks")
    p.add_argument("--d", type=_int_list, default=[1024, 4096])
    p.add_argument("--n", type=_int_list, default=[16384, 32768])
    p.add_argument("--reps", type=int, default=100)

    p = sub.add_parser("regress", parents=[common], help="ridge regression benchmark")
    p.add_argument("--input", default=None, help="data table; synthetic data when omitted")
    p.add_argument("--target-col", type=_target, default=-1)
    p.add_argument("--n", type=int, default=2048)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    p.add_argument("--synth-m", type=int, default=2000)
    p.add_argument("--synth-d", type=int, default=10)
    p.add_argument("--synth-sigma", type=float, default=0.5)
    p.add_argument("--synth-noise", type=float, default=0.2)
    p.add_argument("--test-fraction", type=float, default=0.2)

    p = sub.add_parser("diag", parents=[common], help="sampler diagnostics")
    p.add_argument("--reps", type=int, default=100_000, help="draws per check")
    return parser


def _spec(args):
    from .kernels import RBF, Matern

    if args.sigma <= 0:
        raise UsageError("--sigma must be positive")
    if args.kernel == "matern":
        if args.matern_t < 1:
            raise UsageError("--matern-t must be >= 1")
        return Matern(args.sigma, args.matern_t)
    return RBF(args.sigma)


def _config_line(args) -> str:
    config = {k: v for k, v in sorted(vars(args).items())}
    return "# " + json.dumps(config, sort_keys=True)


def _feature_map(method, X, n, spec, seed):
    from .learn import build_feature_map

    if method == "exact":
        raise UsageError("the exact kernel has no finite feature map; use regress")
    if n < 1:
        raise UsageError("--n must be positive")
    return build_feature_map(method, X, n, spec, seed)


def cmd_transform(args, out):
    from .learn import load_table, read_matrix

    spec = _spec(args)
    if args.target_col is None:
        data = read_matrix(args.input)[0]
    else:
        data = load_table(args.input, args.target_col).X
    fmap = _feature_map(args.method, data, args.n, spec, args.seed)
    F = fmap.features(data)
    out.write(_config_line(args) + "\n")
    for row in F:
        out.write(",".join("%.17g" % v for v in row) + "\n")


def cmd_approx_error(args, out):
    from .experiments import approx_error_curve

    if args.method not in ("fastfood", "rks", "rks-hashed"):
        raise UsageError("approx-error supports --method fastfood, rks or rks-hashed")
    if args.kernel != "rbf":
        raise UsageError("approx-error uses the RBF kernel")
    if args.reps < 2 or args.pairs < 2 or args.points < 2:
        raise UsageError("--reps, --pairs and --points must be >= 2")
    points = approx_error_curve(args.method, args.n, args.points, args.dim, args.sigma,
                                args.pairs, args.reps, args.seed)
    out.write(_config_line(args) + "\n")
    d_pad = next_power_of_two(args.dim)
    for n in args.n:
        if args.method == "fastfood" and n % d_pad:
            out.write(f"# note: n={n} is not a multiple of {d_pad}; last block truncated\n")
    out.write("n,mean_abs_error,std,se,reps\n")
    for p in points:
        out.write(f"{p.n},{p.mean_abs_error:.10g},{p.std:.10g},{p.se:.10g},{p.reps}\n")


def cmd_bench(args, out):
    from .experiments import bench
    from .hadamard import is_power_of_two

    if args.reps < 1:
        raise UsageError("--reps must be positive")
    if not all(is_power_of_two(v) for v in args.d + args.n):
        raise UsageError("bench needs powers of two for --d and --n")
    out.write(_config_line(args) + "\n")
    out.write("d,n,t_ff,t_rks,speedup,mem_ff,mem_rks\n")
    for d in args.d:
        for n in args.n:
            row = bench(d, n, reps=args.reps, seed=args.seed)
            out.write(f"{row.d},{row.n},{row.t_ff:.6e},{row.t_rks:.6e},{row.speedup:.2f},"
                      f"{row.mem_ff},{row.mem_rks}\n")
            out.flush()


def cmd_regress(args, out):
    from .learn import fit_evaluate, load_table, synth_gp_data, train_test_split

    spec = _spec(args)
    if args.lam < 0:
        raise UsageError("--lambda must be nonnegative")
    if args.n < 1:
        raise UsageError("--n must be positive")
    if args.input is None:
        data = synth_gp_data(args.synth_m, args.synth_d, args.synth_sigma, args.synth_noise, args.seed)
    else:
        data = load_table(args.input, args.target_col)
    train, test = train_test_split(data, args.test_fraction, args.seed)
    t0 = time.perf_counter()
    result = fit_evaluate(train, test, args.method, args.n, spec, args.lam, args.seed)
    result["wall_time"] = time.perf_counter() - t0
    result.update(seed=args.seed, m_train=train.m, m_test=test.m, d=train.d)
    out.write(_config_line(args) + "\n")
    for key in ("method", "n_features", "m_train", "m_test", "d", "seed",
                "train_rmse", "test_rmse", "wall_time"):
        out.write(f"{key}={result[key]}\n")
    out.write("summary=" + json.dumps(result, sort_keys=True) + "\n")


def cmd_diag(args, out):
    from .experiments import sampler_diagnostics

    if args.reps < 100:
        raise UsageError("--reps must be at least 100")
    rows = sampler_diagnostics(args.seed, args.reps)
    out.write(_config_line(args) + "\n")
    out.write("check,statistic,threshold,result\n")
    for r in rows:
        out.write(f"{r.check},{r.statistic:.6g},{r.threshold:.6g},{'pass' if r.passed else 'fail'}\n")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_NUMERICAL


COMMANDS = {
    "transform": cmd_transform,
    "approx-error": cmd_approx_error,
    "bench": cmd_bench,
    "regress": cmd_regress,
    "diag": cmd_diag,
}


@contextlib.contextmanager
def _open_output(path):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    from threadpoolctl import threadpool_limits

    limits = threadpool_limits(args.threads) if args.threads else contextlib.nullcontext()
    try:
        with limits, _open_output(args.output) as out:
            code = COMMANDS[args.command](args, out)
        return EXIT_OK if code is None else code
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main_entry():  # pragma: no cover
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()

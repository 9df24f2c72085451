"""Command line interface.

Exit codes: 0 success, 1 invalid input (including usage errors), 2 numeric
failure.
"""

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np
from sklearn.exceptions import ConvergenceWarning

from ..exceptions import InvalidArgumentError, NumericFailure
from ..l21base import BaselineOptions, solve_l21
from ..mansolve import SolverOptions, multi_start_solve
from ..matmodel import make_instance, make_rng, read_matrix_csv, write_matrix_csv
from ..penalty import (ObjectiveParams, finite_diff_grad, grad_exact_penalty, grad_objective,
                       grad_smoothed_penalty, objective, exact_penalty, smoothed_penalty)
from ..reduction import DEFAULT_RANK_TOL, factor_output, reduce_problem
from ..verify import recovery_report, spark
from .config import load_config, parse_int_list
from .plot import emit_plot
from .sweep import read_records, read_summary, summarize, sweep, write_summary

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _out_dir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _report(X_hat, truth_path):
    if truth_path:
        rep = recovery_report(X_hat, read_matrix_csv(truth_path))
        print(f"rel_error={rep.rel_error:.6e} support_match={str(rep.support_match).lower()}")


def cmd_generate(args):
    inst = make_instance(args.M, args.N, args.K, args.s, args.seed)
    out = _out_dir(args.out_dir)
    for name, mat in (("A", inst.A), ("X", inst.X_true), ("Y", inst.Y)):
        write_matrix_csv(out / f"{name}.csv", mat)
    print(f"wrote {out / 'A.csv'}, {out / 'X.csv'}, {out / 'Y.csv'}")


def cmd_reduce(args):
    V, U, r = factor_output(read_matrix_csv(args.Y), args.rank_tol)
    out = _out_dir(args.out_dir)
    write_matrix_csv(out / "V.csv", V)
    write_matrix_csv(out / "U.csv", U)
    print(f"r={r}")


def cmd_solve(args):
    A = read_matrix_csv(args.A)
    params = ObjectiveParams(lam=args.lam, delta=args.delta)
    opts = SolverOptions(max_iter=args.max_iter, grad_rel_tol=args.tol,
                         n_starts=args.n_starts, seed=args.seed)
    if args.Y:
        Y = read_matrix_csv(args.Y)
        if not np.any(Y):
            write_matrix_csv(args.out, np.zeros((A.shape[1], Y.shape[1])))
            print("Y is zero: X = 0")
            return
        rp = reduce_problem(A, Y, args.rank_tol, balance=args.balance)
        res = multi_start_solve(rp.A, rp.V, params, opts)
        X_hat = rp.lift(res.Z_hat)
    else:
        V = read_matrix_csv(args.V)
        res = multi_start_solve(A, V, params, opts)
        X_hat = res.Z_hat
        if args.U:
            X_hat = X_hat @ read_matrix_csv(args.U)
    write_matrix_csv(args.out, X_hat)
    print(f"objective={res.objective:.10g} exact_penalty={res.exact_penalty:.10g} "
          f"iterations={res.iterations} restarts={res.restarts_used} "
          f"termination={res.termination.value}")
    _report(X_hat, args.X_true)


def cmd_baseline(args):
    A = read_matrix_csv(args.A)
    Y = read_matrix_csv(args.Y)
    opts = BaselineOptions(max_iter=args.max_iter)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        if args.reduce and np.any(Y):
            rp = reduce_problem(A, Y, args.rank_tol)
            W, info = solve_l21(rp.A, rp.V, opts, return_info=True)
            X_hat = rp.lift(W)
        else:
            X_hat, info = solve_l21(A, Y, opts, return_info=True)
    write_matrix_csv(args.out, X_hat)
    print(f"iterations={info.iterations} converged={str(info.converged).lower()} "
          f"residual={info.residual:.3e}")
    _report(X_hat, args.X_true)


_OVERRIDES = ("M_full", "N", "K", "s", "trials", "delta", "lam", "grad_rel_tol", "max_iter",
              "n_starts", "seed", "success_tol")


def cmd_sweep(args):
    overrides = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None}
    if args.k_grid is not None:
        overrides["k_grid"] = parse_int_list(args.k_grid)
    if args.methods is not None:
        overrides["methods"] = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    config = load_config(args.config, quick=args.quick, **overrides)
    out = _out_dir(args.out_dir)
    total = len(config.k_grid) * config.trials * len(config.methods)

    def progress(rec):
        if args.verbose:
            print(f"k={rec.k} trial={rec.trial} {rec.method} rel_error={rec.rel_error:.2e} "
                  f"({rec.wall_ms} ms)", file=sys.stderr, flush=True)

    records = sweep(config, out / "records.csv", workers=args.workers, progress=progress)
    rows = summarize(records, config.success_tol)
    write_summary(out / "summary.csv", rows)
    emit_plot(rows, records, out / "errors.svg")
    print(f"{len(records)}/{total} records -> {out / 'records.csv'}")
    for r in rows:
        print(f"k={r.k:3d} {r.method:8s} median={r.median_rel_error:.3e} "
              f"success={r.success_fraction:.3f}")


def cmd_summarize(args):
    records = read_records(args.records)
    rows = summarize(records, args.success_tol)
    write_summary(args.out, rows)
    for r in rows:
        print(f"k={r.k:3d} {r.method:8s} median={r.median_rel_error:.3e} "
              f"success={r.success_fraction:.3f} n={r.n_trials}")


def cmd_plot(args):
    records = read_records(args.records)
    rows = read_summary(args.summary) if args.summary else summarize(records, args.success_tol)
    emit_plot(rows, records, args.out)
    print(f"wrote {args.out}")


def _rel_dev(g, fd):
    denom = max(np.linalg.norm(fd), np.linalg.norm(g), 1e-12)
    return float(np.linalg.norm(g - fd) / denom)


def check_grad(n, r, delta, samples, seed=0, lam=9.0):
    """Largest relative deviation between closed-form and finite-difference gradients."""
    if r > n:
        raise InvalidArgumentError(f"need r <= n, got r={r}, n={n}")
    rng = make_rng(seed)
    params = ObjectiveParams(lam=lam, delta=delta)
    worst = 0.0
    for _ in range(samples):
        Z = rng.standard_normal((n, r))
        A = rng.standard_normal((max(r, n // 2), n))
        V = rng.standard_normal((A.shape[0], r))
        worst = max(
            worst,
            _rel_dev(grad_exact_penalty(Z), finite_diff_grad(exact_penalty, Z)),
            _rel_dev(grad_smoothed_penalty(Z, delta),
                     finite_diff_grad(lambda M: smoothed_penalty(M, delta), Z)),
            _rel_dev(grad_objective(Z, A, V, params),
                     finite_diff_grad(lambda M: objective(M, A, V, params), Z)),
        )
    return worst


def cmd_check_grad(args):
    worst = check_grad(args.n, args.r, args.delta, args.samples, args.seed)
    print(f"max relative deviation: {worst:.3e}")
    if not worst < 1e-5:
        raise NumericFailure(f"gradient deviation {worst:.3e} exceeds 1e-5")


def cmd_spark(args):
    print(spark(read_matrix_csv(args.A), max_columns=args.max_columns))


def build_parser():
    p = _Parser(prog="jointspar", description="Joint sparse recovery toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a random instance (A.csv, X.csv, Y.csv)")
    g.add_argument("--M", type=int, default=80)
    g.add_argument("--N", type=int, default=300)
    g.add_argument("--K", type=int, default=70)
    g.add_argument("--s", type=int, default=30)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", default=".")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("reduce", help="factor Y into V.csv and U.csv")
    r.add_argument("--Y", required=True)
    r.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    r.add_argument("--out-dir", default=".")
    r.set_defaults(func=cmd_reduce)

    s = sub.add_parser("solve", help="manifold solve of A X = Y (or A W = V)")
    s.add_argument("--A", required=True)
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--Y")
    src.add_argument("--V")
    s.add_argument("--U", help="with --V: lift the solution by this right factor")
    s.add_argument("--out", required=True)
    s.add_argument("--lam", "--lambda", dest="lam", type=float, default=9.0)
    s.add_argument("--delta", type=float, default=1e-3)
    s.add_argument("--n-starts", type=int, default=5)
    s.add_argument("--max-iter", type=int, default=1000)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    s.add_argument("--no-balance", dest="balance", action="store_false",
                   help="use V = left singular vectors times singular values as is")
    s.add_argument("--X-true", help="report the error against this matrix")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("baseline", help="l2,1 minimization of A X = Y")
    b.add_argument("--A", required=True)
    b.add_argument("--Y", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--reduce", action="store_true")
    b.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    b.add_argument("--max-iter", type=int, default=5000)
    b.add_argument("--X-true")
    b.set_defaults(func=cmd_baseline)

    w = sub.add_parser("sweep", help="measurement-count experiment")
    w.add_argument("--config", default="default",
                   help="'default', 'quick', or a JSON / key = value file")
    w.add_argument("--quick", action="store_true")
    w.add_argument("--out-dir", default="sweep_out")
    w.add_argument("--workers", type=int)
    w.add_argument("--verbose", "-v", action="store_true")
    w.add_argument("--k-grid", help="'38,40,42' or inclusive range '38:80:2'")
    w.add_argument("--methods", help="comma-separated subset of manifold,l21")
    w.add_argument("--M-full", dest="M_full", type=int)
    for name, kind in (("N", int), ("K", int), ("s", int), ("trials", int), ("delta", float),
                       ("grad-rel-tol", float), ("max-iter", int), ("n-starts", int),
                       ("seed", int), ("success-tol", float)):
        w.add_argument(f"--{name}", dest=name.replace("-", "_"), type=kind)
    w.add_argument("--lam", "--lambda", dest="lam", type=float)
    w.set_defaults(func=cmd_sweep)

    m = sub.add_parser("summarize", help="per-(k, method) medians from a records CSV")
    m.add_argument("--records", required=True)
    m.add_argument("--out", required=True)
    m.add_argument("--success-tol", type=float, default=1e-3)
    m.set_defaults(func=cmd_summarize)

    pl = sub.add_parser("plot", help="SVG of errors against k")
    pl.add_argument("--records", required=True)
    pl.add_argument("--summary")
    pl.add_argument("--out", required=True)
    pl.add_argument("--success-tol", type=float, default=1e-3)
    pl.set_defaults(func=cmd_plot)

    c = sub.add_parser("check-grad", help="finite-difference audit of the gradients")
    c.add_argument("--n", type=int, default=12)
    c.add_argument("--r", type=int, default=3)
    c.add_argument("--delta", type=float, default=1e-3)
    c.add_argument("--samples", type=int, default=20)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check_grad)

    k = sub.add_parser("spark", help="exhaustive spark of a small matrix")
    k.add_argument("A", help="matrix CSV")
    k.add_argument("--max-columns", type=int, default=24)
    k.set_defaults(func=cmd_spark)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (NumericFailure, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidArgumentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

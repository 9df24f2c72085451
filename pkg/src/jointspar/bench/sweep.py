"""Measurement sweep: per-cell trials, a resumable CSV sink and summaries."""

import csv
import json
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.exceptions import ConvergenceWarning

from ..exceptions import InvalidArgumentError, NumericFailure
from ..l21base import solve_l21
from ..mansolve import SolverOptions, multi_start_solve
from ..matmodel import derive_seed, make_instance
from ..penalty import ObjectiveParams
from ..reduction import reduce_problem
from ..verify import recovery_report
from .config import METHODS

RECORD_FIELDS = ("k", "trial", "method", "rel_error", "support_match",
                 "iterations", "restarts", "wall_ms", "seed")
SUMMARY_FIELDS = ("k", "method", "median_rel_error", "success_fraction", "n_trials")
WORKERS_ENV = "JOINTSPAR_WORKERS"


@dataclass(frozen=True)
class SweepRecord:
    """Outcome of one (k, trial, method) cell.

    ``iterations == -1`` marks a solver failure (``rel_error`` is then 1).
    ``seed`` is the trial seed that generates the instance; the solver seed is
    ``derive_seed(seed, k, method_index)``.
    """

    k: int
    trial: int
    method: str
    rel_error: float
    support_match: bool
    iterations: int
    restarts: int
    wall_ms: int
    seed: int

    @property
    def cell(self):
        return (self.k, self.trial, self.method)


@dataclass(frozen=True)
class SummaryRow:
    k: int
    method: str
    median_rel_error: float
    success_fraction: float
    n_trials: int


def trial_seed(config, trial):
    return derive_seed(config.seed, trial)


def trial_instance(config, trial):
    """Full-size instance of a trial; every ``k`` uses a row prefix of its matrix."""
    return make_instance(config.M_full, config.N, config.K, config.s, trial_seed(config, trial))


def _solve_manifold(config, A, Y, seed):
    rp = reduce_problem(A, Y, balance=config.balance)
    opts = SolverOptions(
        max_iter=config.max_iter,
        grad_rel_tol=config.grad_rel_tol,
        n_starts=config.n_starts,
        seed=seed,
        delta_schedule=config.delta_schedule,
        init_scale=config.init_scale,
    )
    res = multi_start_solve(rp.A, rp.V, ObjectiveParams(config.lam, config.delta), opts)
    return rp.lift(res.Z_hat), res.iterations, res.restarts_used


def _solve_l21(config, A, Y, seed):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        W, info = solve_l21(A, Y, return_info=True)
    return W, info.iterations, 1


_SOLVERS = {"manifold": _solve_manifold, "l21": _solve_l21}


def run_cell(config, k, trial, method, instance=None):
    """Run one method on the ``k``-row problem of one trial."""
    if k not in config.k_grid:
        raise InvalidArgumentError(f"k={k} is not in the configured grid")
    if method not in METHODS:
        raise InvalidArgumentError(f"unknown method {method!r}")
    inst = instance if instance is not None else trial_instance(config, trial)
    A = inst.A[:k]
    Y = A @ inst.X_true
    seed = derive_seed(inst.seed, k, METHODS.index(method))
    start = time.perf_counter()
    try:
        X_hat, iterations, restarts = _SOLVERS[method](config, A, Y, seed)
        rep = recovery_report(X_hat, inst.X_true, config.success_tol, config.support_tol)
        rel, match = rep.rel_error, rep.support_match
    except (NumericFailure, np.linalg.LinAlgError):
        rel, match, iterations, restarts = 1.0, False, -1, 0
    wall_ms = int(round(1000 * (time.perf_counter() - start)))
    return SweepRecord(k, trial, method, rel, match, iterations, restarts, wall_ms, inst.seed)


def run_trial(config, k, trial_index, methods=None):
    """Records for every requested method on the ``k``-row problem of a trial."""
    inst = trial_instance(config, trial_index)
    return [run_cell(config, k, trial_index, m, inst) for m in (methods or config.methods)]


def cells(config):
    """All (k, trial, method) cells in canonical order."""
    return [(k, t, m) for k in config.k_grid for t in range(config.trials) for m in config.methods]


def _canonical_key(config):
    order = {cell: i for i, cell in enumerate(cells(config))}
    return lambda rec: order[rec.cell]


def format_record(rec):
    return [
        str(rec.k), str(rec.trial), rec.method, repr(float(rec.rel_error)),
        "true" if rec.support_match else "false", str(rec.iterations),
        str(rec.restarts), str(rec.wall_ms), str(rec.seed),
    ]


def _parse_bool(text):
    if text not in ("true", "false"):
        raise ValueError(f"expected true/false, got {text!r}")
    return text == "true"


def read_records(path):
    """Parse a records CSV written by :func:`sweep`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if tuple(header) != RECORD_FIELDS:
            raise InvalidArgumentError(f"{path}: unexpected header {header}")
        out = []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            try:
                k, trial, method, rel, match, it, rs, ms, seed = row
                out.append(SweepRecord(int(k), int(trial), method, float(rel), _parse_bool(match),
                                       int(it), int(rs), int(ms), int(seed)))
            except ValueError as exc:
                raise InvalidArgumentError(f"{path}:{lineno}: bad record ({exc})") from None
    return out


def write_records(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for rec in records:
            w.writerow(format_record(rec))


def worker_count(default=None):
    """Worker cap from ``JOINTSPAR_WORKERS``, else ``default`` or the CPU count."""
    raw = os.environ.get(WORKERS_ENV)
    if raw is not None and raw.strip():
        try:
            n = int(raw)
        except ValueError:
            raise InvalidArgumentError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        if n < 1:
            raise InvalidArgumentError(f"{WORKERS_ENV} must be >= 1, got {n}")
        return n
    return default or os.cpu_count() or 1


def _marker_path(out_path):
    return Path(str(out_path) + ".incomplete")


def _run_cell_args(args):
    return run_cell(*args)


def sweep(config, out_path, workers=None, progress=None):
    """Run every missing cell of ``config`` and write the records CSV.

    Records are appended to ``out_path`` as they complete, so an interrupted
    run leaves a usable partial file next to a ``.incomplete`` marker holding
    the configuration. Calling again with the same configuration runs only the
    missing cells. On completion the file is rewritten in canonical
    (k, trial, method) order, which makes it independent of scheduling.

    Parameters
    ----------
    config : SweepConfig
    out_path : path-like
    workers : int, optional
        Process count; ``JOINTSPAR_WORKERS`` caps it.
    progress : callable, optional
        Called with each new record.

    Returns
    -------
    list of SweepRecord in canonical order.
    """
    out_path = Path(out_path)
    marker = _marker_path(out_path)
    cfg_text = json.dumps(config.to_dict(), sort_keys=True)
    wanted = set(cells(config))

    done = []
    if out_path.exists():
        if marker.exists() and marker.read_text() != cfg_text:
            raise InvalidArgumentError(
                f"{out_path} belongs to a sweep with a different configuration"
            )
        done = read_records(out_path)
        foreign = [r.cell for r in done if r.cell not in wanted]
        if foreign:
            raise InvalidArgumentError(
                f"{out_path} holds cells outside this configuration, e.g. {foreign[0]}"
            )
    have = {r.cell for r in done}
    todo = [c for c in cells(config) if c not in have]

    if todo:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        marker.write_text(cfg_text)
        if not done:
            write_records(out_path, [])
        cap = worker_count()
        n_workers = max(1, min(workers or cap, cap, len(todo)))
        with open(out_path, "a", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")

            def sink(rec):
                writer.writerow(format_record(rec))
                fh.flush()
                done.append(rec)
                if progress is not None:
                    progress(rec)

            if n_workers == 1:
                # group by trial so the instance is generated once per (k, trial)
                cache = {}
                for k, t, m in todo:
                    if t not in cache:
                        cache = {t: trial_instance(config, t)}
                    sink(run_cell(config, k, t, m, cache[t]))
            else:
                with ProcessPoolExecutor(max_workers=n_workers) as pool:
                    args = [(config, k, t, m) for k, t, m in todo]
                    for rec in pool.map(_run_cell_args, args, chunksize=1):
                        sink(rec)

    records = sorted(done, key=_canonical_key(config))
    write_records(out_path, records)
    if marker.exists():
        marker.unlink()
    return records


def _median(values):
    return float(np.median(np.asarray(values, dtype=np.float64)))


def summarize(records, success_tol=1e-3):
    """Median error and success fraction per (k, method), sorted by k then method."""
    if not records:
        raise InvalidArgumentError("no records to summarize")
    groups = {}
    for rec in records:
        groups.setdefault((rec.k, rec.method), []).append(rec.rel_error)
    rows = []
    for (k, method), errs in sorted(groups.items()):
        ok = sum(e < success_tol for e in errs)
        rows.append(SummaryRow(k, method, _median(errs), ok / len(errs), len(errs)))
    return rows


def write_summary(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for r in rows:
            w.writerow([r.k, r.method, repr(r.median_rel_error), repr(r.success_fraction), r.n_trials])


def read_summary(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != SUMMARY_FIELDS:
            raise InvalidArgumentError(f"{path}: unexpected header {header}")
        try:
            return [SummaryRow(int(k), m, float(med), float(frac), int(n))
                    for k, m, med, frac, n in (row for row in reader if row)]
        except ValueError as exc:
            raise InvalidArgumentError(f"{path}: bad summary row ({exc})") from None


def threshold_k(rows, method, tol=1e-3):
    """Smallest k whose median error for ``method`` is below ``tol`` (None if never)."""
    ks = [r.k for r in rows if r.method == method and r.median_rel_error < tol]
    return min(ks) if ks else None


def medians_by_k(rows, method):
    return {r.k: r.median_rel_error for r in rows if r.method == method}

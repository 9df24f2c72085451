"""Conjugate-gradient minimization over full-column-rank N x r matrices.

The set of full-column-rank matrices is open in R^{N x r}, so iterates move by
plain addition under the Euclidean metric; a rank guard rejects any trial
point whose ``sigma_min / sigma_max`` falls to ``rank_guard`` or below.
"""

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import as_matrix, check_positive
from .exceptions import InvalidArgumentError, NumericFailure, RankDeficiencyError
from .matmodel import derive_seed, make_rng
from .penalty import SmoothedObjective


class Termination(str, enum.Enum):
    GRAD_TOL = "grad_tol"
    MAX_ITER = "max_iter"
    LINE_SEARCH_STALL = "line_search_stall"
    RANK_GUARD = "rank_guard_tripped"


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for :func:`cg_minimize` and :func:`multi_start_solve`.

    ``delta_schedule`` lists Huber widths solved in sequence before the target
    width of the objective (each stage warm-starts the next); widths not larger
    than the target are skipped. ``init_scale`` sets the Frobenius norm of a
    random start to ``init_scale * ||V||_F / ||A||_2``; ``None`` keeps unit
    variance entries.
    """

    max_iter: int = 1000
    grad_rel_tol: float = 1e-8
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: str = "bb"
    max_backtracks: int = 50
    n_starts: int = 5
    rank_guard: float = 1e-10
    seed: int = 0
    delta_schedule: tuple = (1e-1, 1e-2)
    init_scale: float | None = 1e-3
    stop_on_certificate: bool = True
    certificate_tol: float = 1e-3

    def __post_init__(self):
        if int(self.max_iter) < 1:
            raise InvalidArgumentError("max_iter must be >= 1")
        if int(self.n_starts) < 1:
            raise InvalidArgumentError("n_starts must be >= 1")
        if int(self.max_backtracks) < 1:
            raise InvalidArgumentError("max_backtracks must be >= 1")
        for name in ("grad_rel_tol", "armijo_c", "rank_guard", "certificate_tol"):
            check_positive(getattr(self, name), name)
        if not 0.0 < self.backtrack_factor < 1.0:
            raise InvalidArgumentError("backtrack_factor must lie in (0, 1)")
        if self.initial_step not in ("bb", "fixed"):
            raise InvalidArgumentError("initial_step must be 'bb' or 'fixed'")
        if self.init_scale is not None:
            check_positive(self.init_scale, "init_scale")
        object.__setattr__(self, "delta_schedule", tuple(float(d) for d in self.delta_schedule))
        for d in self.delta_schedule:
            check_positive(d, "delta_schedule entry")


@dataclass
class SolveResult:
    Z_hat: np.ndarray
    objective_trace: list
    grad_norm_trace: list
    iterations: int
    restarts_used: int
    termination: Termination
    exact_penalty: float = math.nan
    objective: float = math.nan
    start_index: int = 0
    n_evals: int = 0
    starts: list = field(default_factory=list)

    @property
    def certified(self):
        """True when the exact penalty is within tolerance of its floor ``r``."""
        return self.exact_penalty <= self.Z_hat.shape[1] + 1e-3


class LineSearchStall(Exception):
    """No step satisfied the Armijo condition and the rank guard."""

    def __init__(self, reason=Termination.LINE_SEARCH_STALL):
        super().__init__(reason.value)
        self.reason = reason


def armijo_linesearch(f, Z, direction, grad, opts=None, f0=None, step0=1.0):
    """Backtracking line search with the Armijo sufficient-decrease test.

    Tries ``t = step0 * beta**k`` for ``k = 0, 1, ...`` and accepts the first
    ``t`` with ``f(Z + t d) <= f(Z) + c t <grad, d>``. ``f`` may return ``inf``
    for points that fail the rank guard; those are rejected like any other.

    Returns
    -------
    step, Z_next, f_next

    Raises
    ------
    LineSearchStall
        After ``opts.max_backtracks`` rejections, or as soon as the trial step
        no longer changes ``Z`` in floating point.
    """
    opts = opts or SolverOptions()
    slope = float(np.sum(grad * direction))
    if not slope < 0:
        raise InvalidArgumentError(f"not a descent direction: <grad, d> = {slope:.3e}")
    if f0 is None:
        f0 = f(Z)
    dnorm = float(np.linalg.norm(direction))
    znorm = float(np.linalg.norm(Z))
    t = float(step0)
    all_guarded = True
    for _ in range(opts.max_backtracks):
        if t * dnorm <= np.finfo(np.float64).eps * znorm:
            break
        Z_next = Z + t * direction
        f_next = f(Z_next)
        if np.isnan(f_next):
            raise NumericFailure(f"objective is NaN at trial step {t:.3e}")
        if f_next <= f0 + opts.armijo_c * t * slope:
            return t, Z_next, f_next
        all_guarded = all_guarded and np.isinf(f_next)
        t *= opts.backtrack_factor
    else:
        if all_guarded:
            raise LineSearchStall(Termination.RANK_GUARD)
    raise LineSearchStall(Termination.LINE_SEARCH_STALL)


def _check_inputs(A, V, Z0=None):
    A = as_matrix(A, "A")
    V = as_matrix(V, "V")
    if A.shape[0] != V.shape[0]:
        raise InvalidArgumentError(f"A has {A.shape[0]} rows but V has {V.shape[0]}")
    if Z0 is not None:
        Z0 = as_matrix(Z0, "Z0")
        if Z0.shape != (A.shape[1], V.shape[1]):
            raise InvalidArgumentError(
                f"Z0 must have shape {(A.shape[1], V.shape[1])}, got {Z0.shape}"
            )
    return A, V, Z0


def cg_minimize(A, V, params, Z0, opts=None):
    """Polak-Ribiere+ conjugate gradient on the smoothed objective.

    Stops when ``||grad|| <= grad_rel_tol * ||grad(Z0)||``, after ``max_iter``
    iterations, or when the line search stalls. With ``initial_step="bb"`` the
    first trial step minimizes a quadratic model along the search direction:
    exact curvature for the fidelity term plus a secant estimate of the
    penalty curvature from the previous step.
    """
    opts = opts or SolverOptions()
    A, V, Z = _check_inputs(A, V, Z0)
    obj = SmoothedObjective(A, V, params, rank_guard=opts.rank_guard)
    f = obj.value(Z)
    if np.isinf(f):
        s = np.linalg.svd(Z, compute_uv=False)
        raise RankDeficiencyError(s[-1] / s[0] if s[0] > 0 else 0.0, opts.rank_guard,
                                  "Z0 is not of full column rank")
    if not np.isfinite(f):
        raise NumericFailure("objective is not finite at Z0")
    g, gp = obj.gradient()
    gnorm = g0norm = float(np.linalg.norm(g))
    f_trace, g_trace = [f], [gnorm]
    lam = obj.lam

    termination = Termination.MAX_ITER
    it = 0
    if g0norm == 0.0:
        termination = Termination.GRAD_TOL
    else:
        d = -g
        kappa = 0.0
        for it in range(1, opts.max_iter + 1):
            slope = float(np.sum(g * d))
            if slope >= 0:
                d = -g
                slope = -gnorm * gnorm
            if opts.initial_step == "bb":
                Ad = A @ d
                curv = lam * float(np.sum(Ad * Ad)) + kappa * float(np.sum(d * d))
                step0 = min(max(-slope / curv, 1e-10), 1e4) if curv > 0 else 1.0
            else:
                step0 = 1.0
            try:
                t, Z_next, f_next = armijo_linesearch(obj, Z, d, g, opts, f0=f, step0=step0)
            except LineSearchStall as stall:
                termination = stall.reason
                it -= 1
                break
            g_next, gp_next = obj.gradient()
            s = Z_next - Z
            ss = float(np.sum(s * s))
            kappa = max(float(np.sum(s * (gp_next - gp))) / ss, 0.0) if ss > 0 else 0.0
            beta = max(0.0, float(np.sum(g_next * (g_next - g))) / (gnorm * gnorm))
            d = -g_next + beta * d
            Z, f, g, gp = Z_next, f_next, g_next, gp_next
            gnorm = float(np.linalg.norm(g))
            f_trace.append(f)
            g_trace.append(gnorm)
            if not np.isfinite(gnorm):
                raise NumericFailure(f"gradient is not finite at iteration {it}")
            if gnorm <= opts.grad_rel_tol * g0norm:
                termination = Termination.GRAD_TOL
                break

    obj.value(Z)
    return SolveResult(
        Z_hat=Z,
        objective_trace=f_trace,
        grad_norm_trace=g_trace,
        iterations=it,
        restarts_used=1,
        termination=termination,
        exact_penalty=obj.exact_penalty(),
        objective=f,
        n_evals=obj.n_evals,
    )


def continuation_minimize(A, V, params, Z0, opts=None):
    """Run :func:`cg_minimize` through ``opts.delta_schedule`` down to ``params.delta``.

    Traces are concatenated. Shrinking delta lowers the objective at a fixed
    point, so the joined trace stays non-increasing.
    """
    opts = opts or SolverOptions()
    deltas = [d for d in opts.delta_schedule if d > params.delta] + [params.delta]
    Z = Z0
    f_trace, g_trace = [], []
    iterations = n_evals = 0
    for delta in deltas:
        res = cg_minimize(A, V, replace(params, delta=delta), Z, opts)
        f_trace.extend(res.objective_trace)
        g_trace.extend(res.grad_norm_trace)
        iterations += res.iterations
        n_evals += res.n_evals
        Z = res.Z_hat
    res.objective_trace = f_trace
    res.grad_norm_trace = g_trace
    res.iterations = iterations
    res.n_evals = n_evals
    return res


def random_start(A, V, rng, init_scale=1e-3):
    """Gaussian N x r starting point, scaled relative to ``||V||_F / ||A||_2``."""
    N, r = A.shape[1], V.shape[1]
    G = make_rng(rng).standard_normal((N, r))
    if init_scale is None:
        return G
    target = init_scale * np.linalg.norm(V) / np.linalg.norm(A, 2)
    return G * (target / np.linalg.norm(G))


def multi_start_solve(A, V, params, opts=None, Z_init=None):
    """Best of ``opts.n_starts`` continuation runs from random starts.

    Start ``i`` draws its matrix from ``derive_seed(opts.seed, i)``. When
    ``Z_init`` is given it replaces the first random start. With
    ``stop_on_certificate`` the loop ends early once a run's exact penalty is
    within ``certificate_tol`` of ``r``, the smallest value the penalty can
    take (reached only by r-row-sparse matrices).

    The winner is chosen by (final objective, start index), so the outcome does
    not depend on the order in which starts are evaluated.
    """
    opts = opts or SolverOptions()
    A, V, Z_init = _check_inputs(A, V, Z_init)
    r = V.shape[1]
    best = None
    starts = []
    failures = []
    for i in range(opts.n_starts):
        if i == 0 and Z_init is not None:
            Z0 = Z_init
        else:
            Z0 = random_start(A, V, derive_seed(opts.seed, i), opts.init_scale)
        try:
            res = continuation_minimize(A, V, params, Z0, opts)
        except (NumericFailure, RankDeficiencyError) as exc:
            failures.append({"start": i, "error": repr(exc)})
            starts.append({"start": i, "failed": True})
            continue
        res.start_index = i
        summary = {
            "start": i,
            "objective": res.objective,
            "exact_penalty": res.exact_penalty,
            "iterations": res.iterations,
            "termination": res.termination.value,
        }
        starts.append(summary)
        if best is None or (res.objective, i) < (best.objective, best.start_index):
            best = res
        if opts.stop_on_certificate and res.exact_penalty <= r + opts.certificate_tol:
            break
    if best is None:
        raise NumericFailure("every start failed", diagnostics=failures)
    best.restarts_used = len(starts)
    best.starts = starts
    return best

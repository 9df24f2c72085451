"""Convex l2,1 baseline: ``min ||Z||_{2,1}`` subject to ``A Z = Y``.

The solver is ADMM on the split ``Z = W``::

    Z <- projection of (W - L) onto {Z : A Z = Y}
    W <- row_shrink(Z + L, 1 / rho)
    L <- L + Z - W

The projection uses a thin SVD of ``A`` computed once. ``rho`` is rebalanced
whenever the primal and dual residuals drift more than a factor ``10`` apart,
which plays the role of a continuation in the shrinkage threshold ``1/rho``.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from sklearn.exceptions import ConvergenceWarning

from ._validation import as_matrix, check_positive, check_same_rows
from .exceptions import InvalidArgumentError, NumericFailure
from .matmodel import row_norms


@dataclass(frozen=True)
class BaselineOptions:
    """Options for :func:`solve_l21`.

    ``rel_tol`` bounds the relative primal and dual ADMM residuals and
    ``residual_tol`` bounds ``||A W - Y||_F / ||Y||_F`` for the returned ``W``.
    With ``adapt_rho`` the penalty is rebalanced every ``adapt_every``
    iterations, at most ``max_rho_changes`` times, so that late iterations run
    with a fixed ``rho`` (and hence with the usual ADMM convergence guarantee).
    """

    rho: float = 1.0
    max_iter: int = 5000
    rel_tol: float = 1e-10
    residual_tol: float = 1e-8
    adapt_rho: bool = True
    adapt_every: int = 10
    max_rho_changes: int = 20

    def __post_init__(self):
        check_positive(self.rho, "rho")
        check_positive(self.rel_tol, "rel_tol")
        check_positive(self.residual_tol, "residual_tol")
        if int(self.max_iter) < 1:
            raise InvalidArgumentError("max_iter must be >= 1")
        if int(self.adapt_every) < 1 or int(self.max_rho_changes) < 0:
            raise InvalidArgumentError("adapt_every must be >= 1 and max_rho_changes >= 0")


@dataclass
class L21Info:
    iterations: int
    converged: bool
    residual: float
    rho: float
    stage_residuals: list


def row_shrink(X, t):
    """Proximal map of ``t * ||.||_{2,1}``: scale each row by ``max(0, 1 - t/||row||)``."""
    X = as_matrix(X, "X", allow_empty=True)
    check_positive(t, "t", allow_zero=True)
    n = row_norms(X)
    scale = np.maximum(0.0, 1.0 - t / np.where(n > 0, n, 1.0))
    scale[n == 0] = 1.0
    return X * scale[:, None]


class _AffineProjector:
    """Orthogonal projection onto ``{Z : A Z = Y}`` (least-squares set if inconsistent)."""

    def __init__(self, A, Y):
        P, s, Qt = np.linalg.svd(A, full_matrices=False)
        keep = s > max(A.shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
        self.Q = Qt[keep].T
        self.Z0 = self.Q @ ((P[:, keep].T @ Y) / s[keep, None])

    def __call__(self, M):
        return M - self.Q @ (self.Q.T @ M) + self.Z0


def solve_l21(A, Y, opts=None, return_info=False):
    """Approximate ``argmin ||Z||_{2,1}`` subject to ``A Z = Y``.

    Parameters
    ----------
    A : array_like, shape (M, N)
    Y : array_like, shape (M, K)
    opts : BaselineOptions, optional
    return_info : bool
        Also return an :class:`L21Info` with iteration count and residuals.

    Returns
    -------
    W : ndarray, shape (N, K)
        The shrinkage iterate, which is exactly row sparse. A
        ``ConvergenceWarning`` is issued if the tolerances were not met within
        ``max_iter`` iterations; ``W`` is still returned.
    """
    opts = opts or BaselineOptions()
    A = as_matrix(A, "A")
    Y = as_matrix(Y, "Y")
    check_same_rows(A, Y)
    N, K = A.shape[1], Y.shape[1]
    ynorm = float(np.linalg.norm(Y))
    if ynorm == 0.0:
        W = np.zeros((N, K))
        info = L21Info(0, True, 0.0, opts.rho, [0.0])
        return (W, info) if return_info else W

    proj = _AffineProjector(A, Y)
    rho = float(opts.rho)
    W = proj.Z0.copy()
    L = np.zeros_like(W)
    stage_residuals = []
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        Z = proj(W - L)
        W_old = W
        W = row_shrink(Z + L, 1.0 / rho)
        L += Z - W
        r_pri = float(np.linalg.norm(Z - W))
        r_dual = rho * float(np.linalg.norm(W - W_old))
        scale = max(float(np.linalg.norm(Z)), float(np.linalg.norm(W)))
        if not np.isfinite(r_pri):
            raise NumericFailure(f"non-finite iterate at ADMM step {it}")
        if r_pri <= opts.rel_tol * scale and r_dual <= opts.rel_tol * rho * float(np.linalg.norm(L)):
            residual = float(np.linalg.norm(A @ W - Y)) / ynorm
            if residual <= opts.residual_tol:
                converged = True
                break
        if (opts.adapt_rho and it % opts.adapt_every == 0
                and len(stage_residuals) < opts.max_rho_changes):
            factor = 0.0
            if r_pri > 10.0 * r_dual:
                factor = 2.0
            elif r_dual > 10.0 * r_pri:
                factor = 0.5
            if factor:
                stage_residuals.append(float(np.linalg.norm(A @ W - Y)) / ynorm)
                rho *= factor
                L /= factor
    residual = float(np.linalg.norm(A @ W - Y)) / ynorm
    stage_residuals.append(residual)
    if not converged:
        warnings.warn(
            f"l2,1 ADMM stopped after {it} iterations with relative residual {residual:.2e}",
            ConvergenceWarning,
            stacklevel=2,
        )
    if return_info:
        return W, L21Info(it, converged, residual, rho, stage_residuals)
    return W


def solve_l21_reduced(A, V, opts=None, return_info=False):
    """:func:`solve_l21` on a reduced right-hand side ``V``; lifting is left to the caller."""
    return solve_l21(A, V, opts, return_info=return_info)


def basis_pursuit(A, y):
    """``argmin ||x||_1`` subject to ``A x = y`` by linear programming.

    Splits ``x = u - v`` with ``u, v >= 0`` and calls the HiGHS solver. Serves as
    an independent check of :func:`solve_l21` on single-column problems.
    """
    A = as_matrix(A, "A")
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != A.shape[0]:
        raise InvalidArgumentError(f"A has {A.shape[0]} rows but y has {y.shape[0]}")
    N = A.shape[1]
    res = linprog(
        np.ones(2 * N),
        A_eq=np.hstack([A, -A]),
        b_eq=y,
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise NumericFailure(f"basis pursuit LP failed: {res.message}")
    return res.x[:N] - res.x[N:]

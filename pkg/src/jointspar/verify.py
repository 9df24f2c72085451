"""Exhaustive ground truth for small instances.

Spark, the uniqueness bound on row sparsity, a brute-force minimum-support
solver, a rank-preservation check and recovery reports.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix, check_positive, check_same_rows
from .exceptions import InvalidArgumentError, SizeLimitError
from .matmodel import DEFAULT_SUPPORT_TOL, relative_row_support
from .reduction import estimate_rank

MAX_SPARK_COLUMNS = 24
MAX_BRUTE_FORCE_SPARSITY = 6
DEPENDENCE_TOL = 1e-10
_CHUNK = 20000


def _combination_chunks(n, j, chunk=_CHUNK):
    it = itertools.combinations(range(n), j)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


def _has_dependent_subset(A, j, tol):
    for idx in _combination_chunks(A.shape[1], j):
        sv = np.linalg.svd(A[:, idx].transpose(1, 0, 2), compute_uv=False)
        if np.any(sv[:, -1] <= tol * sv[:, 0]):
            return True
    return False


def spark(A, max_columns=MAX_SPARK_COLUMNS, tol=DEPENDENCE_TOL):
    """Smallest number of linearly dependent columns of ``A``.

    A column subset counts as dependent when its smallest singular value is at
    most ``tol`` times its largest. Returns ``N + 1`` if all columns are
    independent.

    Since every superset of a dependent set is dependent, the existence of a
    dependent ``j``-subset is monotone in ``j`` and a bisection over ``j``
    needs only a few exhaustive passes, starting with ``j = rank(A)``.

    Raises
    ------
    SizeLimitError
        If ``A`` has more than ``max_columns`` columns.
    """
    A = as_matrix(A, "A")
    M, N = A.shape
    if N > max_columns:
        raise SizeLimitError(
            f"exhaustive spark is limited to {max_columns} columns (got {N}); "
            "for Gaussian matrices spark = M + 1 with probability one"
        )
    if np.any(~A.any(axis=0)):
        return 1
    r = estimate_rank(np.linalg.svd(A, compute_uv=False), tol)
    if r == N:
        return N + 1
    # no dependent 1-subset; every (r+1)-subset is dependent. The generic case
    # (all r-subsets independent) is settled by a single pass at j = r.
    if not _has_dependent_subset(A, r, tol):
        return r + 1
    lo, hi = 1, r
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _has_dependent_subset(A, mid, tol):
            hi = mid
        else:
            lo = mid
    return hi


def max_recoverable_sparsity(spark_value, r):
    """``floor((spark - 1 + r) / 2)``, the largest ``s`` allowed by ``s <= (spark - 1 + r)/2``.

    At ``s`` equal to this value with ``spark - 1 + r`` even, uniqueness can
    fail; :func:`max_unique_sparsity` gives the sharp value.
    """
    spark_value, r = int(spark_value), int(r)
    if spark_value < 2 or r < 1:
        raise InvalidArgumentError("need spark >= 2 and r >= 1")
    return (spark_value - 1 + r) // 2


def max_unique_sparsity(spark_value, r):
    """Largest ``s`` with ``2 s < spark - 1 + r``.

    Every ``X`` with at most this many non-zero rows and rank ``>= r`` is the
    unique such solution of ``A X = Y``.
    """
    spark_value, r = int(spark_value), int(r)
    if spark_value < 2 or r < 1:
        raise InvalidArgumentError("need spark >= 2 and r >= 1")
    return (spark_value - 2 + r) // 2


@dataclass(frozen=True)
class BruteForceResult:
    """Minimum-support fit found by :func:`brute_force_l0`.

    ``unique`` is False when several supports of the minimal size fit, in
    which case ``candidates`` lists all of them and ``W``/``support`` belong
    to the lexicographically smallest.
    """

    W: np.ndarray
    support: tuple
    unique: bool
    candidates: tuple
    residual: float


def _fitting_supports(A, V, j, thresh):
    hits = []
    for idx in _combination_chunks(A.shape[1], j):
        B = A[:, idx].transpose(1, 0, 2)  # (n, M, j)
        Q, _ = np.linalg.qr(B)
        R = V[None] - Q @ (Q.transpose(0, 2, 1) @ V[None])
        res = np.sqrt(np.einsum("nij,nij->n", R, R))
        for row in idx[res <= thresh]:
            hits.append(tuple(int(i) for i in row))
    return hits


def brute_force_l0(A, V, s_max, fit_tol=1e-10, max_columns=MAX_SPARK_COLUMNS,
                   max_sparsity=MAX_BRUTE_FORCE_SPARSITY):
    """Sparsest row support on which ``A W = V`` can be solved.

    Supports are enumerated by increasing size; a support fits when the
    least-squares residual is at most ``fit_tol * ||V||_F``. At the first size
    with a fit, all fitting supports are collected and the lexicographically
    smallest is reported, so the answer does not depend on enumeration order.

    Returns
    -------
    BruteForceResult or None
        None if no support of size ``<= s_max`` fits.
    """
    A = as_matrix(A, "A")
    V = as_matrix(V, "V")
    check_same_rows(A, V)
    check_positive(fit_tol, "fit_tol")
    M, N = A.shape
    s_max = int(s_max)
    if N > max_columns or s_max > max_sparsity:
        raise SizeLimitError(
            f"brute force is limited to N <= {max_columns} and s_max <= {max_sparsity}"
            f" (got N={N}, s_max={s_max})"
        )
    vnorm = float(np.linalg.norm(V))
    if vnorm == 0.0:
        return BruteForceResult(np.zeros((N, V.shape[1])), (), True, ((),), 0.0)
    for j in range(1, min(s_max, N) + 1):
        hits = _fitting_supports(A, V, j, fit_tol * vnorm)
        if not hits:
            continue
        hits.sort()
        support = hits[0]
        cols = list(support)
        sol, *_ = np.linalg.lstsq(A[:, cols], V, rcond=None)
        W = np.zeros((N, V.shape[1]))
        W[cols] = sol
        residual = float(np.linalg.norm(A @ W - V)) / vnorm
        return BruteForceResult(W, support, len(hits) == 1, tuple(hits), residual)
    return None


def rank_preservation_check(A, X, tol=1e-8):
    """True iff ``rank(X) == rank(A @ X)`` at relative tolerance ``tol``."""
    A = as_matrix(A, "A")
    X = as_matrix(X, "X")
    if A.shape[1] != X.shape[0]:
        raise InvalidArgumentError(f"A is {A.shape} but X is {X.shape}")
    rx = estimate_rank(np.linalg.svd(X, compute_uv=False), tol)
    ry = estimate_rank(np.linalg.svd(A @ X, compute_uv=False), tol)
    return rx == ry


@dataclass(frozen=True)
class RecoveryReport:
    rel_error: float
    support_match: bool
    success: bool


def recovery_report(X_hat, X_true, success_tol=1e-3, support_tol=DEFAULT_SUPPORT_TOL):
    """Relative Frobenius error, support agreement and success flag.

    Supports are compared with :func:`relative_row_support` at ``support_tol``.
    """
    X_hat = as_matrix(X_hat, "X_hat")
    X_true = as_matrix(X_true, "X_true")
    if X_hat.shape != X_true.shape:
        raise InvalidArgumentError(f"shape mismatch: {X_hat.shape} vs {X_true.shape}")
    ref = float(np.linalg.norm(X_true))
    if ref == 0.0:
        raise InvalidArgumentError("X_true is zero; relative error is undefined")
    rel = float(np.linalg.norm(X_hat - X_true)) / ref
    match = relative_row_support(X_hat, support_tol) == relative_row_support(X_true, support_tol)
    return RecoveryReport(rel_error=rel, support_match=match, success=rel < success_tol)

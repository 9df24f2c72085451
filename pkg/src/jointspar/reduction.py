"""Rank reduction of the output matrix.

``Y`` (M x K) with numerical rank ``r`` is factored as ``Y = V @ U`` where
``U`` (r x K) has orthonormal rows and ``V`` (M x r) has full column rank.
A row-sparse ``W`` solving ``A @ W = V`` lifts back to ``X = W @ U``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import svds

from ._validation import as_matrix, check_positive, check_same_rows
from .exceptions import DegenerateRankError, InvalidArgumentError

DEFAULT_RANK_TOL = 1e-8


@dataclass(frozen=True)
class SvdFactors:
    """Compact SVD ``left @ diag(singular_values) @ right``.

    ``rank == 0`` marks the empty factorization of an all-zero input.
    """

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    @property
    def rank(self):
        return int(self.singular_values.size)

    @property
    def is_empty(self):
        return self.rank == 0

    def reassemble(self):
        return (self.left * self.singular_values) @ self.right


@dataclass(frozen=True)
class ReducedProblem:
    """Full-column-rank reformulation ``A @ W = V`` with ``Y = V @ diag(scale) @ U``.

    ``scale`` is all ones unless the problem was built with ``balance=True``,
    in which case ``V`` has equal column norms and :meth:`lift` folds the
    per-column scale back in. Both versions share the column space of ``Y``
    and hence the same row-sparse solutions.
    """

    A: np.ndarray
    V: np.ndarray
    U: np.ndarray
    rank: int
    scale: np.ndarray = None

    def lift(self, W):
        if self.scale is not None:
            W = as_matrix(W, "W") * self.scale
        return lift_solution(W, self.U)


def _fix_signs(left, right):
    # make the largest-magnitude entry of each left vector non-negative
    idx = np.argmax(np.abs(left), axis=0)
    signs = np.sign(left[idx, np.arange(left.shape[1])])
    signs[signs == 0] = 1.0
    return left * signs, right * signs[:, None]


def estimate_rank(singular_values, rank_tol=DEFAULT_RANK_TOL):
    """Count singular values above ``rank_tol * sigma_1`` (0 if sigma_1 is 0)."""
    sv = np.asarray(singular_values, dtype=np.float64).ravel()
    check_positive(rank_tol, "rank_tol", allow_zero=True)
    if sv.size == 0 or sv[0] <= 0:
        return 0
    return int(np.count_nonzero(sv > rank_tol * sv[0]))


def compact_svd(Y, rank_tol=DEFAULT_RANK_TOL, max_rank=None):
    """Compact SVD of ``Y`` truncated at ``rank_tol`` relative to sigma_1.

    Parameters
    ----------
    Y : array_like, shape (m, n)
    rank_tol : float
        Singular values ``<= rank_tol * sigma_1`` are dropped. With 0, only
        values at machine-zero level (``eps * max(m, n) * sigma_1``) go.
    max_rank : int, optional
        Compute only the leading ``max_rank`` triplets (useful when a sparsity
        estimate is known and small relative to ``min(m, n)``).

    Returns
    -------
    SvdFactors
        Empty (rank 0) when ``Y`` is identically zero.
    """
    Y = as_matrix(Y, "Y")
    check_positive(rank_tol, "rank_tol", allow_zero=True)
    m, n = Y.shape
    if not np.any(Y):
        return SvdFactors(np.zeros((m, 0)), np.zeros(0), np.zeros((0, n)))

    if max_rank is not None and 0 < int(max_rank) < min(m, n) - 1:
        k = int(max_rank)
        left, sv, right = svds(Y, k=k, random_state=0)
        order = np.argsort(sv)[::-1]
        left, sv, right = left[:, order], sv[order], right[order]
    else:
        left, sv, right = np.linalg.svd(Y, full_matrices=False)

    guard = np.finfo(np.float64).eps * max(m, n) * sv[0]
    keep = (sv > rank_tol * sv[0]) & (sv > guard)
    r = int(np.count_nonzero(keep))
    left, right = _fix_signs(left[:, :r], right[:r])
    return SvdFactors(left, sv[:r].copy(), right)


def factor_output(Y, rank_tol=DEFAULT_RANK_TOL, max_rank=None):
    """Return ``(V, U, r)`` with ``V @ U`` the rank-r truncation of ``Y``.

    Raises
    ------
    DegenerateRankError
        If ``Y`` has numerical rank 0.
    """
    f = compact_svd(Y, rank_tol, max_rank=max_rank)
    if f.is_empty:
        raise DegenerateRankError("output matrix Y is zero; the only solution is X = 0")
    return f.left * f.singular_values, f.right, f.rank


def lift_solution(W, U):
    """Map a reduced solution back: ``X = W @ U``."""
    W = as_matrix(W, "W")
    U = as_matrix(U, "U")
    if W.shape[1] != U.shape[0]:
        raise InvalidArgumentError(
            f"inner dimensions disagree: W is {W.shape}, U is {U.shape}"
        )
    return W @ U


def reduce_problem(A, Y, rank_tol=DEFAULT_RANK_TOL, max_rank=None, balance=False):
    """Bundle ``A`` with the factorization of ``Y`` into a ReducedProblem.

    With ``balance=True`` the reduced right-hand side is the left singular
    basis scaled by the RMS singular value, so every column of ``V`` carries
    the same weight. The penalty only sees ``range(W)``, and an ill-conditioned
    ``Y`` otherwise makes the reduced objective stiff.
    """
    A = as_matrix(A, "A")
    Y = as_matrix(Y, "Y")
    check_same_rows(A, Y)
    V, U, r = factor_output(Y, rank_tol, max_rank=max_rank)
    if not balance:
        return ReducedProblem(A=A, V=V, U=U, rank=r)
    sv = np.linalg.norm(V, axis=0)
    c = np.linalg.norm(sv) / np.sqrt(r)
    return ReducedProblem(A=A, V=V * (c / sv), U=U, rank=r, scale=sv / c)

"""scikit-learn style wrappers.

A joint sparse recovery problem ``A X = Y`` is a multi-output linear model:
rows of ``A`` are samples, columns are features and ``Y`` holds one target
per column. Fitted estimators expose ``coef_`` with shape
``(n_targets, n_features)``, i.e. ``X.T``, like other multi-task models.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .l21base import BaselineOptions, solve_l21
from .mansolve import SolverOptions, multi_start_solve
from .matmodel import DEFAULT_SUPPORT_TOL, relative_row_support
from .penalty import ObjectiveParams
from .reduction import DEFAULT_RANK_TOL, compact_svd, reduce_problem


def _check_problem(A, Y):
    A, Y = check_X_y(A, Y, multi_output=True, y_numeric=True, dtype=np.float64)
    return A, (Y[:, None] if Y.ndim == 1 else Y), Y.ndim == 1


class OutputFactorizer(TransformerMixin, BaseEstimator):
    """Orthonormal row basis of an output matrix.

    ``fit(Y)`` keeps the right singular vectors of ``Y`` above ``rank_tol``
    (relative to the largest singular value) as ``components_``.
    ``transform`` projects onto that basis and ``inverse_transform`` maps back.

    Parameters
    ----------
    rank_tol : float, default=1e-8
    max_rank : int or None
        Compute at most this many leading singular triplets.
    """

    def __init__(self, rank_tol=DEFAULT_RANK_TOL, max_rank=None):
        self.rank_tol = rank_tol
        self.max_rank = max_rank

    def fit(self, Y, y=None):
        Y = check_array(Y, dtype=np.float64)
        f = compact_svd(Y, self.rank_tol, max_rank=self.max_rank)
        self.components_ = f.right
        self.singular_values_ = f.singular_values
        self.rank_ = f.rank
        self.n_features_in_ = Y.shape[1]
        return self

    def transform(self, Y):
        check_is_fitted(self, "components_")
        Y = check_array(Y, dtype=np.float64)
        return Y @ self.components_.T

    def inverse_transform(self, W):
        check_is_fitted(self, "components_")
        W = check_array(W, dtype=np.float64)
        return W @ self.components_


class _JointSparseBase(RegressorMixin, BaseEstimator):
    def predict(self, A):
        check_is_fitted(self, "coef_")
        A = check_array(A, dtype=np.float64)
        out = A @ self.coef_.T
        return out.ravel() if self._single_target else out

    def _finish(self, X):
        self.coef_ = X.T.copy()
        self.row_support_ = np.array(relative_row_support(X, self.support_tol), dtype=np.intp)
        return self


class ManifoldJointSparse(_JointSparseBase):
    """Row-sparse solution of ``A X = Y`` via the orthogonal-factor penalty.

    ``Y`` is reduced to a full-column-rank right-hand side ``V`` of rank ``r``,
    the smoothed penalty plus ``lam/2 ||A W - V||^2`` is minimized over
    full-rank ``N x r`` matrices ``W`` from several random starts, and the best
    ``W`` is lifted back to ``X``.

    Parameters
    ----------
    lam : float, default=9.0
        Weight of the data-fit term.
    delta : float, default=1e-3
        Huber width of the smoothed penalty.
    rank_tol : float, default=1e-8
    balance : bool, default=True
        Equalize the column norms of ``V`` before solving. This helps when
        ``Y`` is badly conditioned and leaves the set of row-sparse solutions
        unchanged.
    n_starts, max_iter, grad_rel_tol, delta_schedule, init_scale :
        Forwarded to :class:`SolverOptions`.
    support_tol : float, default=1e-8
        Relative threshold used for ``row_support_``.
    random_state : int, default=0

    Attributes
    ----------
    coef_ : ndarray of shape (n_targets, n_features)
    row_support_ : ndarray of int
    rank_ : int
    n_iter_ : int
    exact_penalty_ : float
        Equals ``rank_`` exactly when the solution has ``rank_`` non-zero rows.
    result_ : SolveResult
    """

    def __init__(self, lam=9.0, delta=1e-3, rank_tol=DEFAULT_RANK_TOL, balance=True,
                 n_starts=5, max_iter=1000, grad_rel_tol=1e-8, delta_schedule=(1e-1, 1e-2),
                 init_scale=1e-3, support_tol=DEFAULT_SUPPORT_TOL, random_state=0):
        self.lam = lam
        self.delta = delta
        self.rank_tol = rank_tol
        self.balance = balance
        self.n_starts = n_starts
        self.max_iter = max_iter
        self.grad_rel_tol = grad_rel_tol
        self.delta_schedule = delta_schedule
        self.init_scale = init_scale
        self.support_tol = support_tol
        self.random_state = random_state

    def solver_options(self):
        return SolverOptions(
            max_iter=self.max_iter,
            grad_rel_tol=self.grad_rel_tol,
            n_starts=self.n_starts,
            seed=self.random_state,
            delta_schedule=self.delta_schedule,
            init_scale=self.init_scale,
        )

    def fit(self, A, Y):
        A, Y, self._single_target = _check_problem(A, Y)
        self.n_features_in_ = A.shape[1]
        params = ObjectiveParams(lam=self.lam, delta=self.delta)
        opts = self.solver_options()
        if not np.any(Y):
            self.rank_, self.n_iter_, self.exact_penalty_, self.result_ = 0, 0, 0.0, None
            return self._finish(np.zeros((A.shape[1], Y.shape[1])))
        rp = reduce_problem(A, Y, self.rank_tol, balance=self.balance)
        res = multi_start_solve(rp.A, rp.V, params, opts)
        self.rank_ = rp.rank
        self.n_iter_ = res.iterations
        self.exact_penalty_ = res.exact_penalty
        self.result_ = res
        return self._finish(rp.lift(res.Z_hat))


class L21JointSparse(_JointSparseBase):
    """Minimum l2,1-norm solution of ``A X = Y`` (convex baseline).

    Parameters
    ----------
    reduce : bool, default=False
        Solve on the reduced right-hand side ``V`` and lift, instead of on ``Y``.
    rho, max_iter, rel_tol, residual_tol :
        Forwarded to :class:`BaselineOptions`.
    rank_tol : float, default=1e-8
        Only used when ``reduce`` is True.
    support_tol : float, default=1e-8

    Attributes
    ----------
    coef_ : ndarray of shape (n_targets, n_features)
    row_support_ : ndarray of int
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, reduce=False, rho=1.0, max_iter=5000, rel_tol=1e-10,
                 residual_tol=1e-8, rank_tol=DEFAULT_RANK_TOL, support_tol=DEFAULT_SUPPORT_TOL):
        self.reduce = reduce
        self.rho = rho
        self.max_iter = max_iter
        self.rel_tol = rel_tol
        self.residual_tol = residual_tol
        self.rank_tol = rank_tol
        self.support_tol = support_tol

    def fit(self, A, Y):
        A, Y, self._single_target = _check_problem(A, Y)
        self.n_features_in_ = A.shape[1]
        opts = BaselineOptions(rho=self.rho, max_iter=self.max_iter, rel_tol=self.rel_tol,
                               residual_tol=self.residual_tol)
        if self.reduce and np.any(Y):
            rp = reduce_problem(A, Y, self.rank_tol)
            W, info = solve_l21(rp.A, rp.V, opts, return_info=True)
            X = rp.lift(W)
        else:
            X, info = solve_l21(A, Y, opts, return_info=True)
        self.n_iter_ = info.iterations
        self.converged_ = info.converged
        return self._finish(X)

"""Orthogonal-factor row penalties, their Huber smoothing, and gradients.

For a full-column-rank ``Z`` (N x r) with compact SVD ``Z = U diag(lam) V``
the orthogonal factor is ``Q = U @ V``. The exact penalty is the l2,1 norm
of ``Q``; the smoothed one replaces each row norm ``x`` by
``huber(x, delta) + delta / 2``. Both depend on ``range(Z)`` only, so they are
invariant under ``Z -> c Z R`` for ``c != 0`` and orthogonal ``R``.

Gradients are closed form::

    grad = (I - U U^T) @ D @ U @ diag(1 / lam) @ V

with ``D`` the diagonal row weights from :func:`diag_weights`.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix, check_positive
from .exceptions import InvalidArgumentError, RankDeficiencyError
from .matmodel import row_norms

RANK_GUARD = 1e-10


def _unit_row_norms(U):
    # rows of an orthonormal-column factor have entries in [-1, 1], so the
    # plain sum of squares cannot overflow
    return np.sqrt(np.einsum("ij,ij->i", U, U))


@dataclass(frozen=True)
class ObjectiveParams:
    """Fidelity weight ``lam`` and Huber width ``delta``, both > 0."""

    lam: float = 9.0
    delta: float = 1e-3

    def __post_init__(self):
        check_positive(self.lam, "lam")
        check_positive(self.delta, "delta")


def _svd_checked(Z, rank_guard=RANK_GUARD):
    U, lam, V = np.linalg.svd(Z, full_matrices=False)
    ratio = lam[-1] / lam[0] if lam[0] > 0 else 0.0
    if not ratio > rank_guard:
        raise RankDeficiencyError(ratio, rank_guard)
    return U, lam, V


def orthogonal_factor(Z):
    """``Z (Z^T Z)^{-1/2}``, computed from the compact SVD of ``Z``.

    Raises
    ------
    RankDeficiencyError
        If ``sigma_min / sigma_max <= 1e-10``.
    """
    U, _, V = _svd_checked(as_matrix(Z, "Z"))
    return U @ V


def exact_penalty(Z):
    """l2,1 norm of the orthogonal factor of ``Z``."""
    U, _, _ = _svd_checked(as_matrix(Z, "Z"))
    # rows of U @ V have the same norms as rows of U
    return float(_unit_row_norms(U).sum())


def huber(x, delta):
    """Huber function: ``x - delta/2`` for ``x >= delta``, else ``x**2 / (2 delta)``.

    Accepts scalars or arrays of non-negative values.
    """
    check_positive(delta, "delta")
    xa = np.asarray(x, dtype=np.float64)
    if np.any(xa < 0) or not np.all(np.isfinite(xa)):
        raise InvalidArgumentError("huber expects finite non-negative arguments")
    out = np.where(xa >= delta, xa - 0.5 * delta, xa * xa / (2.0 * delta))
    return float(out) if out.ndim == 0 else out


def _smoothed_from_norms(norms, delta):
    h = np.where(norms >= delta, norms - 0.5 * delta, norms * norms / (2.0 * delta))
    return float(h.sum() + 0.5 * delta * norms.size)


def smoothed_penalty(Z, delta):
    """Sum over rows of ``huber(||q_n||, delta) + delta/2`` for ``Q`` the orthogonal factor."""
    check_positive(delta, "delta")
    U, _, _ = _svd_checked(as_matrix(Z, "Z"))
    return _smoothed_from_norms(_unit_row_norms(U), delta)


def _check_fidelity_shapes(Z, A, V):
    if A.shape[1] != Z.shape[0] or A.shape[0] != V.shape[0] or Z.shape[1] != V.shape[1]:
        raise InvalidArgumentError(
            f"shape mismatch: A {A.shape}, Z {Z.shape}, V {V.shape}"
        )


def objective(Z, A, V, params):
    """Smoothed penalty plus ``(lam / 2) * ||A Z - V||_F^2``."""
    Z, A, V = as_matrix(Z, "Z"), as_matrix(A, "A"), as_matrix(V, "V")
    _check_fidelity_shapes(Z, A, V)
    R = A @ Z - V
    return smoothed_penalty(Z, params.delta) + 0.5 * params.lam * float(np.sum(R * R))


def diag_weights(Q, mode="exact", delta=None, zero_rows="zero"):
    """Diagonal row weights used by the penalty gradients.

    Parameters
    ----------
    Q : array_like, shape (N, r)
    mode : {"exact", "huber"}
        ``exact`` gives ``1 / ||q_n||``; ``huber`` gives
        ``huber'(||q_n||) / ||q_n|| = min(1 / ||q_n||, 1 / delta)``.
    delta : float
        Required for ``mode="huber"``.
    zero_rows : {"zero", "limit"}
        Weight assigned to rows of norm 0. ``"zero"`` (default) uses 0;
        ``"limit"`` uses the continuous extension ``1 / delta`` in huber mode.
        The choice never changes a gradient, because those rows are zero.

    Returns
    -------
    ndarray, shape (N,)
    """
    norms = row_norms(as_matrix(Q, "Q", allow_empty=True))
    nz = norms > 0
    safe = np.where(nz, norms, 1.0)
    if mode == "exact":
        w = np.where(nz, 1.0 / safe, 0.0)
    elif mode == "huber":
        delta = check_positive(delta if delta is not None else np.nan, "delta")
        w = np.where(norms >= delta, 1.0 / safe, 1.0 / delta)
        if zero_rows == "zero":
            w = np.where(nz, w, 0.0)
        elif zero_rows != "limit":
            raise InvalidArgumentError(f"unknown zero_rows option {zero_rows!r}")
    else:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    return w


def _penalty_grad_from_svd(U, lam, V, weights):
    DU = U * weights[:, None]
    P = DU - U @ (U.T @ DU)
    return (P / lam) @ V


def grad_fidelity(Z, A, V):
    """``A^T (A Z - V)``: gradient of ``0.5 * ||A Z - V||_F^2``."""
    Z, A, V = as_matrix(Z, "Z"), as_matrix(A, "A"), as_matrix(V, "V")
    _check_fidelity_shapes(Z, A, V)
    return A.T @ (A @ Z - V)


def grad_exact_penalty(Z):
    """Euclidean gradient of :func:`exact_penalty` (rows of Q at 0 get weight 0)."""
    U, lam, V = _svd_checked(as_matrix(Z, "Z"))
    return _penalty_grad_from_svd(U, lam, V, diag_weights(U, "exact"))


def grad_smoothed_penalty(Z, delta):
    """Euclidean gradient of :func:`smoothed_penalty`."""
    U, lam, V = _svd_checked(as_matrix(Z, "Z"))
    return _penalty_grad_from_svd(U, lam, V, diag_weights(U, "huber", delta))


def grad_objective(Z, A, V, params):
    """Gradient of :func:`objective`."""
    return grad_smoothed_penalty(Z, params.delta) + params.lam * grad_fidelity(Z, A, V)


def finite_diff_grad(f, Z, h=None):
    """Central-difference gradient of a scalar function of a matrix.

    ``h`` defaults to ``1e-6 * max(1, ||Z||_F)``. Exceptions raised by ``f``
    inside the stencil propagate.
    """
    Z = as_matrix(Z, "Z")
    if h is None:
        h = 1e-6 * max(1.0, float(np.linalg.norm(Z)))
    check_positive(h, "h")
    G = np.empty_like(Z)
    E = np.zeros_like(Z)
    for idx in np.ndindex(Z.shape):
        E[idx] = h
        G[idx] = (f(Z + E) - f(Z - E)) / (2.0 * h)
        E[idx] = 0.0
    return G


class SmoothedObjective:
    """Value/gradient evaluator that reuses one SVD per point.

    ``value(Z)`` returns ``inf`` when ``Z`` trips the rank guard so a line
    search simply rejects such trial points. ``gradient()`` is for the last
    point passed to ``value``.
    """

    def __init__(self, A, V, params, rank_guard=RANK_GUARD):
        self.A = A
        self.V = V
        self.lam = float(params.lam)
        self.delta = float(params.delta)
        self.rank_guard = rank_guard
        self.n_evals = 0
        self.guard_trips = 0
        self._cache = None

    def value(self, Z):
        self.n_evals += 1
        U, lam, V = np.linalg.svd(Z, full_matrices=False)
        if not (lam[0] > 0 and lam[-1] / lam[0] > self.rank_guard):
            self.guard_trips += 1
            self._cache = None
            return np.inf
        norms = _unit_row_norms(U)
        R = self.A @ Z - self.V
        self._cache = (U, lam, V, norms, R)
        return _smoothed_from_norms(norms, self.delta) + 0.5 * self.lam * float(np.sum(R * R))

    __call__ = value

    def gradient(self):
        U, lam, V, norms, R = self._cache
        nz = norms > 0
        safe = np.where(nz, norms, 1.0)
        w = np.where(norms >= self.delta, 1.0 / safe, np.where(nz, 1.0 / self.delta, 0.0))
        gp = _penalty_grad_from_svd(U, lam, V, w)
        return gp + self.lam * (self.A.T @ R), gp

    def exact_penalty(self):
        return float(self._cache[3].sum())

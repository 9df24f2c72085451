"""Dense matrix primitives, seeded generators and row norms.

Matrices are plain 2-D ``float64`` numpy arrays indexed ``(row, col)`` from 0.

Random numbers come from numpy's ``PCG64`` bit generator seeded through
``SeedSequence``; normal variates use ``Generator.standard_normal`` (ziggurat).
Both are portable across platforms, so a seed pins every matrix bit-for-bit.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix, check_positive
from .exceptions import InvalidArgumentError

DEFAULT_SUPPORT_TOL = 1e-8


def make_rng(seed):
    """Return a ``numpy.random.Generator`` (PCG64) for an unsigned integer seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    seed = int(seed)
    if seed < 0:
        raise InvalidArgumentError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def derive_seed(seed, *keys):
    """Child seed that is a pure function of ``seed`` and the integer ``keys``.

    Used to give independent streams to trials, starts and methods without
    sharing generator state.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def gaussian_matrix(rows, cols, rng):
    """Matrix with i.i.d. standard normal entries (not scaled by 1/sqrt(rows))."""
    rows, cols = int(rows), int(cols)
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"dimensions must be >= 1, got ({rows}, {cols})")
    return make_rng(rng).standard_normal((rows, cols))


def random_row_sparse(N, K, s, rng):
    """N x K matrix with exactly ``s`` non-zero rows.

    The support is drawn uniformly without replacement and its rows are filled
    with standard normal entries. A row that happens to be exactly zero is
    redrawn.
    """
    N, K, s = int(N), int(K), int(s)
    if N < 1 or K < 1:
        raise InvalidArgumentError(f"dimensions must be >= 1, got ({N}, {K})")
    if not 1 <= s <= N:
        raise InvalidArgumentError(f"sparsity must satisfy 1 <= s <= N={N}, got {s}")
    rng = make_rng(rng)
    support = np.sort(rng.choice(N, size=s, replace=False))
    rows = rng.standard_normal((s, K))
    for i in range(s):
        while not np.any(rows[i]):
            rows[i] = rng.standard_normal(K)
    X = np.zeros((N, K))
    X[support] = rows
    return X


def row_norms(X):
    """Euclidean norm of each row, scaled by the row maximum to avoid under/overflow."""
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        return np.zeros(X.shape[0])
    m = np.abs(X).max(axis=1)
    safe = np.where(m > 0, m, 1.0)
    S = X / safe[:, None]
    return m * np.sqrt(np.einsum("ij,ij->i", S, S))


def l21_norm(X):
    """Sum of the Euclidean norms of the rows of ``X``."""
    return float(row_norms(as_matrix(X, allow_empty=True)).sum())


def l0_rows(X, tol=0.0):
    """Number of rows whose Euclidean norm exceeds ``tol``."""
    check_positive(tol, "tol", allow_zero=True)
    return int(np.count_nonzero(row_norms(as_matrix(X, allow_empty=True)) > tol))


def row_support(X, tol=0.0):
    """Sorted tuple of 0-based row indices with norm greater than ``tol``."""
    check_positive(tol, "tol", allow_zero=True)
    return tuple(int(i) for i in np.flatnonzero(row_norms(as_matrix(X, allow_empty=True)) > tol))


def relative_row_support(X, rel_tol=DEFAULT_SUPPORT_TOL):
    """Row support with the threshold taken relative to the largest row norm."""
    norms = row_norms(as_matrix(X, allow_empty=True))
    if norms.size == 0 or norms.max() == 0:
        return ()
    return tuple(int(i) for i in np.flatnonzero(norms > rel_tol * norms.max()))


@dataclass(frozen=True)
class ProblemInstance:
    """A generated joint sparse recovery problem ``Y = A @ X_true``."""

    A: np.ndarray
    X_true: np.ndarray
    Y: np.ndarray
    s: int
    seed: int

    @property
    def shape(self):
        M, N = self.A.shape
        return M, N, self.X_true.shape[1]


def make_instance(M, N, K, s, seed):
    """Draw ``A`` (M x N Gaussian) then ``X_true`` (s-row sparse) from one seed."""
    rng = make_rng(seed)
    A = gaussian_matrix(M, N, rng)
    X = random_row_sparse(N, K, s, rng)
    return ProblemInstance(A=A, X_true=X, Y=A @ X, s=int(s), seed=int(seed))


def read_matrix_csv(path):
    """Read a headerless comma-separated matrix (one line per row)."""
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: not a numeric CSV matrix ({exc})") from None
    return as_matrix(data, name=str(path))


def write_matrix_csv(path, X):
    """Write ``X`` with 17 significant digits so it round-trips exactly."""
    X = as_matrix(X, allow_empty=True)
    np.savetxt(path, X, delimiter=",", fmt="%.17g")

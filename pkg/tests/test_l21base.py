import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.exceptions import ConvergenceWarning

from jointspar.exceptions import InvalidArgumentError
from jointspar.l21base import BaselineOptions, basis_pursuit, row_shrink, solve_l21, solve_l21_reduced
from jointspar.matmodel import l21_norm, make_instance, make_rng, row_support
from jointspar.reduction import reduce_problem


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestRowShrink:
    def test_example(self):
        assert np.allclose(row_shrink([[3.0, 4.0]], 2.5), [[1.5, 2.0]])

    def test_small_rows_vanish(self):
        out = row_shrink([[3.0, 4.0], [0.3, 0.4], [0.0, 0.0]], 5.0)
        assert np.array_equal(out, np.zeros((3, 2)))

    def test_zero_threshold_is_identity(self):
        X = make_rng(0).standard_normal((5, 3))
        assert np.array_equal(row_shrink(X, 0.0), X)

    def test_negative_threshold(self):
        with pytest.raises(InvalidArgumentError):
            row_shrink(np.ones((2, 2)), -1.0)

    @given(st.integers(0, 2**31), st.floats(0.0, 3.0))
    def test_row_directions_preserved(self, seed, t):
        X = make_rng(seed).standard_normal((6, 3))
        out = row_shrink(X, t)
        n_in, n_out = np.linalg.norm(X, axis=1), np.linalg.norm(out, axis=1)
        assert np.allclose(n_out, np.maximum(n_in - t, 0.0), atol=1e-12)
        keep = n_out > 0
        assert np.allclose(out[keep] / n_out[keep, None], X[keep] / n_in[keep, None])

    @pytest.mark.parametrize("seed", range(4))
    def test_grid_search_optimality(self, seed):
        rng = make_rng(seed)
        X = rng.uniform(-1.5, 1.5, (2, 2))
        t = 0.6

        def prox_obj(Z):
            return 0.5 * np.sum((Z - X) ** 2) + t * l21_norm(Z)

        best = prox_obj(row_shrink(X, t))
        grid = np.linspace(-1.5, 1.5, 31)
        # the objective is separable over rows, so search each row on a 2D grid
        for i in range(2):
            for a, b in itertools.product(grid, grid):
                Z = row_shrink(X, t)
                Z[i] = (a, b)
                assert prox_obj(Z) >= best - 1e-12


class TestSolve:
    @pytest.mark.parametrize("seed", range(3))
    def test_recovers_well_conditioned(self, seed):
        inst = make_instance(60, 100, 10, 5, seed)
        W, info = solve_l21(inst.A, inst.Y, return_info=True)
        assert info.converged and rel(W, inst.X_true) < 1e-4
        assert np.linalg.norm(inst.A @ W - inst.Y) <= 1e-8 * np.linalg.norm(inst.Y)

    def test_zero_rhs(self):
        W, info = solve_l21(np.ones((3, 5)), np.zeros((3, 2)), return_info=True)
        assert np.array_equal(W, np.zeros((5, 2))) and info.converged

    @pytest.mark.parametrize("seed", range(3))
    def test_single_column_matches_lp(self, seed):
        rng = make_rng(seed)
        A = rng.standard_normal((20, 40))
        x = np.zeros(40)
        x[rng.choice(40, 4, replace=False)] = rng.standard_normal(4)
        y = A @ x
        w = solve_l21(A, y[:, None]).ravel()
        assert np.abs(w - basis_pursuit(A, y)).max() < 1e-6

    def test_single_column_beyond_recovery(self):
        # the two solvers must agree on the minimizer even when it is not x
        rng = make_rng(7)
        A = rng.standard_normal((10, 30))
        y = A @ rng.standard_normal(30)
        w = solve_l21(A, y[:, None], BaselineOptions(max_iter=20000)).ravel()
        lp = basis_pursuit(A, y)
        assert abs(np.abs(w).sum() - np.abs(lp).sum()) < 1e-6 * np.abs(lp).sum()
        assert np.abs(w - lp).max() < 1e-6

    def test_deterministic(self):
        inst = make_instance(30, 60, 4, 10, 1)
        assert np.array_equal(solve_l21(inst.A, inst.Y), solve_l21(inst.A, inst.Y))

    def test_non_convergence_warns_and_returns(self):
        inst = make_instance(30, 60, 4, 10, 2)
        with pytest.warns(ConvergenceWarning):
            W, info = solve_l21(inst.A, inst.Y, BaselineOptions(max_iter=3), return_info=True)
        assert not info.converged and info.iterations == 3 and W.shape == (60, 4)

    @pytest.mark.parametrize("seed", range(6))
    def test_stage_residuals_non_increasing(self, seed):
        inst = make_instance(40, 100, 10, 20, seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            _, info = solve_l21(inst.A, inst.Y, return_info=True)
        assert np.all(np.diff(info.stage_residuals) <= 0)

    def test_rho_changes_capped(self):
        rng = make_rng(7)
        A = rng.standard_normal((10, 30))
        y = A @ rng.standard_normal(30)
        opts = BaselineOptions(max_iter=20000, max_rho_changes=5)
        w, info = solve_l21(A, y[:, None], opts, return_info=True)
        assert info.converged and len(info.stage_residuals) <= 6
        assert np.abs(w.ravel() - basis_pursuit(A, y)).max() < 1e-6

    def test_fixed_rho(self):
        inst = make_instance(60, 100, 10, 5, 4)
        W, info = solve_l21(inst.A, inst.Y, BaselineOptions(adapt_rho=False), return_info=True)
        assert info.rho == 1.0 and rel(W, inst.X_true) < 1e-4

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            solve_l21(np.ones((3, 5)), np.ones((4, 2)))

    @pytest.mark.parametrize("kw", [dict(rho=0.0), dict(max_iter=0), dict(rel_tol=-1.0),
                                    dict(residual_tol=0.0), dict(adapt_every=0),
                                    dict(max_rho_changes=-1)])
    def test_bad_options(self, kw):
        with pytest.raises(InvalidArgumentError):
            BaselineOptions(**kw)


class TestReduced:
    @pytest.mark.parametrize("seed", range(3))
    def test_support_consistency(self, seed):
        inst = make_instance(50, 100, 12, 6, seed)
        rp = reduce_problem(inst.A, inst.Y)
        lifted = rp.lift(solve_l21_reduced(rp.A, rp.V))
        full = solve_l21(inst.A, inst.Y)
        assert row_support(lifted, 1e-6) == row_support(full, 1e-6) == row_support(inst.X_true, 1e-6)

    def test_rank_one_is_l1(self):
        rng = make_rng(5)
        A = rng.standard_normal((20, 40))
        x = np.zeros(40)
        x[[2, 9, 30]] = (1.0, -2.0, 0.5)
        X = np.outer(x, rng.standard_normal(6))
        rp = reduce_problem(A, A @ X)
        assert rp.rank == 1
        w = solve_l21_reduced(rp.A, rp.V).ravel()
        assert np.abs(w - basis_pursuit(rp.A, rp.V.ravel())).max() < 1e-6
        assert rel(rp.lift(w[:, None]), X) < 1e-6

    def test_deterministic(self):
        inst = make_instance(30, 60, 5, 8, 3)
        rp = reduce_problem(inst.A, inst.Y)
        assert np.array_equal(solve_l21_reduced(rp.A, rp.V), solve_l21_reduced(rp.A, rp.V))


@pytest.mark.parametrize("r", [1, 2])
def test_rank_blind_failure(r):
    # col 0 = 0.3 (col 1 + col 2), so x = e0 - 0.3 e1 - 0.3 e2 is a kernel vector with
    # ||x_I||_1 = 1 > 0.6 = ||x_{I^c}||_1 for I = {0, 3}: the null space property fails
    rng = make_rng(2024)
    A = rng.standard_normal((20, 40))
    A[:, 0] = 0.3 * (A[:, 1] + A[:, 2])
    C = rng.standard_normal((2, 2))
    if r == 1:
        C = np.outer(C[0], C[1])
    X = np.zeros((40, 2))
    X[[0, 3]] = C
    assert np.linalg.matrix_rank(X) == r
    W = solve_l21(A, A @ X)
    assert rel(W, X) > 0.1
    assert l21_norm(W) < l21_norm(X)

import numpy as np
import pytest

from jointspar import mansolve
from jointspar.exceptions import InvalidArgumentError, NumericFailure, RankDeficiencyError
from jointspar.mansolve import (LineSearchStall, SolverOptions, Termination, armijo_linesearch,
                                cg_minimize, continuation_minimize, multi_start_solve, random_start)
from jointspar.matmodel import derive_seed, make_instance, make_rng, row_support
from jointspar.penalty import ObjectiveParams, SmoothedObjective, finite_diff_grad, smoothed_penalty
from jointspar.reduction import reduce_problem
from jointspar.verify import brute_force_l0, recovery_report

PARAMS = ObjectiveParams()


def guarded(f, tol=1e-10):
    """Wrap ``f`` so rank-deficient points evaluate to inf."""
    def g(Z):
        s = np.linalg.svd(Z, compute_uv=False)
        return np.inf if s[-1] <= tol * s[0] else f(Z)
    return g


def small_problem(seed, M=6, N=10, r=2):
    rng = make_rng(seed)
    return rng.standard_normal((M, N)), rng.standard_normal((M, r)), rng.standard_normal((N, r))


class TestOptions:
    def test_defaults(self):
        o = SolverOptions()
        assert (o.max_iter, o.grad_rel_tol, o.armijo_c, o.backtrack_factor) == (1000, 1e-8, 1e-4, 0.5)
        assert (o.n_starts, o.rank_guard, o.initial_step) == (5, 1e-10, "bb")

    @pytest.mark.parametrize("kw", [dict(max_iter=0), dict(n_starts=0), dict(grad_rel_tol=0.0),
                                    dict(armijo_c=-1.0), dict(backtrack_factor=1.0),
                                    dict(initial_step="newton"), dict(rank_guard=0.0),
                                    dict(delta_schedule=(0.1, -1.0)), dict(init_scale=0.0)])
    def test_rejects(self, kw):
        with pytest.raises(InvalidArgumentError):
            SolverOptions(**kw)


class TestArmijo:
    def test_quadratic_full_step(self):
        G = make_rng(0).standard_normal((4, 2))
        t, Z1, f1 = armijo_linesearch(lambda Z: 0.5 * np.sum(Z * Z), G, -G, G,
                                      SolverOptions(armijo_c=0.5))
        assert t == 1.0 and np.allclose(Z1, 0.0) and f1 == 0.0

    def test_linear_accepts_first_step(self):
        C = make_rng(1).standard_normal((3, 2))
        Z = make_rng(2).standard_normal((3, 2))
        t, Z1, _ = armijo_linesearch(lambda M: float(np.sum(C * M)), Z, -C, C, step0=7.0)
        assert t == 7.0 and np.allclose(Z1, Z - 7.0 * C)

    def test_backtracks_past_singular_point(self):
        Z = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        d = np.array([[0.0, 0.0], [0.0, -1.0], [0.0, 0.0]])
        T = Z + d  # singular
        f = guarded(lambda M: 0.5 * np.sum((M - T) ** 2))
        t, Z1, f1 = armijo_linesearch(f, Z, d, Z - T)
        assert t == 0.5
        assert np.linalg.matrix_rank(Z1) == 2 and np.isfinite(f1)

    def test_stall_when_guard_always_trips(self):
        Z = np.eye(3)[:, :2]
        f = lambda M: 0.0 if np.array_equal(M, Z) else np.inf  # noqa: E731
        with pytest.raises(LineSearchStall) as info:
            armijo_linesearch(f, Z, -Z, Z)
        assert info.value.reason is Termination.RANK_GUARD

    def test_at_most_max_backtracks_evaluations(self):
        calls = []

        def f(M):
            calls.append(1)
            return 1.0

        with pytest.raises(LineSearchStall) as info:
            armijo_linesearch(f, np.ones((2, 1)), -np.ones((2, 1)), np.ones((2, 1)), f0=0.0)
        assert len(calls) <= 50
        assert info.value.reason is Termination.LINE_SEARCH_STALL

    def test_ascent_direction_rejected(self):
        G = np.ones((2, 1))
        with pytest.raises(InvalidArgumentError):
            armijo_linesearch(lambda M: 0.0, G, G, G)

    def test_nan_objective(self):
        G = np.ones((2, 1))
        with pytest.raises(NumericFailure):
            armijo_linesearch(lambda M: np.nan, G, -G, G, f0=1.0)


class TestCG:
    def test_truth_start(self):
        inst = make_instance(20, 40, 4, 4, 3)
        rp = reduce_problem(inst.A, inst.Y)
        W_true = inst.X_true @ rp.U.T
        res = cg_minimize(rp.A, rp.V, ObjectiveParams(delta=1e-6), W_true)
        assert res.iterations <= 10
        assert np.linalg.norm(res.Z_hat - W_true) / np.linalg.norm(W_true) < 1e-8
        assert set(row_support(res.Z_hat, 1e-8)) == set(row_support(W_true, 1e-8))

    @pytest.mark.parametrize("seed", range(50))
    def test_monotone_and_bounded(self, seed):
        A, V, Z0 = small_problem(seed)
        opts = SolverOptions(max_iter=60)
        res = cg_minimize(A, V, ObjectiveParams(delta=1e-2), Z0, opts)
        tr = np.array(res.objective_trace)
        assert np.all(np.diff(tr) <= 0)
        assert res.iterations <= 60 and len(tr) == res.iterations + 1
        assert len(res.grad_norm_trace) == len(tr)
        s = np.linalg.svd(res.Z_hat, compute_uv=False)
        assert s[-1] / s[0] > opts.rank_guard

    def test_grad_tol_termination(self):
        A, V, Z0 = small_problem(5)
        res = cg_minimize(A, V, ObjectiveParams(delta=0.1), Z0, SolverOptions(grad_rel_tol=1e-3))
        assert res.termination is Termination.GRAD_TOL
        assert res.grad_norm_trace[-1] <= 1e-3 * res.grad_norm_trace[0]

    def test_max_iter_termination(self):
        A, V, Z0 = small_problem(6)
        res = cg_minimize(A, V, PARAMS, Z0, SolverOptions(max_iter=3))
        assert res.termination is Termination.MAX_ITER and res.iterations == 3

    def test_fixed_initial_step(self):
        A, V, Z0 = small_problem(7)
        res = cg_minimize(A, V, PARAMS, Z0, SolverOptions(initial_step="fixed", max_iter=30))
        assert np.all(np.diff(res.objective_trace) <= 0)

    def test_deterministic(self):
        A, V, Z0 = small_problem(8)
        a = cg_minimize(A, V, PARAMS, Z0)
        b = cg_minimize(A, V, PARAMS, Z0)
        assert a.objective_trace == b.objective_trace and np.array_equal(a.Z_hat, b.Z_hat)

    def test_rank_deficient_start(self):
        A, V, _ = small_problem(9)
        with pytest.raises(RankDeficiencyError):
            cg_minimize(A, V, PARAMS, np.ones((10, 2)))

    def test_shape_errors(self):
        A, V, Z0 = small_problem(10)
        with pytest.raises(InvalidArgumentError):
            cg_minimize(A, V, PARAMS, Z0[:5])
        with pytest.raises(InvalidArgumentError):
            cg_minimize(A, V[:4], PARAMS, Z0)

    def test_non_finite_data(self):
        A, V, Z0 = small_problem(11)
        V[0, 0] = np.inf
        with pytest.raises((NumericFailure, InvalidArgumentError)):
            cg_minimize(A, V, PARAMS, Z0)

    def test_finite_difference_shim(self, monkeypatch):
        A, V, Z0 = small_problem(12, M=5, N=8, r=2)
        params = ObjectiveParams(delta=1e-2)
        opts = SolverOptions(max_iter=10)

        real = mansolve.armijo_linesearch

        def record_steps():
            steps = []

            def spy(*args, **kwargs):
                out = real(*args, **kwargs)
                steps.append(out[0])
                return out

            monkeypatch.setattr(mansolve, "armijo_linesearch", spy)
            return steps

        analytic = record_steps()
        ref = cg_minimize(A, V, params, Z0, opts)

        class FDObjective(SmoothedObjective):
            def value(self, Z):
                self._Z = Z
                return super().value(Z)

            __call__ = value

            def gradient(self):
                Z = self._Z
                gp = finite_diff_grad(lambda M: smoothed_penalty(M, self.delta), Z, h=1e-7)
                return gp + self.lam * (self.A.T @ (self.A @ Z - self.V)), gp

        monkeypatch.setattr(mansolve, "SmoothedObjective", FDObjective)
        numeric = record_steps()
        shim = cg_minimize(A, V, params, Z0, opts)
        assert ref.iterations == shim.iterations == 10
        assert len(analytic) == len(numeric) == 10
        assert np.allclose(numeric, analytic, rtol=1e-4, atol=0)


def tiny(seed, balance=True):
    inst = make_instance(12, 20, 3, 3, seed)
    return inst, reduce_problem(inst.A, inst.Y, balance=balance)


class TestContinuation:
    def test_single_stage_equals_cg(self):
        A, V, Z0 = small_problem(13)
        opts = SolverOptions(delta_schedule=(), max_iter=40)
        a = continuation_minimize(A, V, PARAMS, Z0, opts)
        b = cg_minimize(A, V, PARAMS, Z0, opts)
        assert a.objective_trace == b.objective_trace

    def test_stages_concatenate(self):
        A, V, Z0 = small_problem(14)
        opts = SolverOptions(delta_schedule=(0.1, 0.01), max_iter=20)
        res = continuation_minimize(A, V, PARAMS, Z0, opts)
        tr = np.array(res.objective_trace)
        assert np.all(np.diff(tr) <= 0)
        assert res.iterations <= 60 and len(tr) == res.iterations + 3

    def test_stages_below_target_skipped(self):
        A, V, Z0 = small_problem(15)
        a = continuation_minimize(A, V, ObjectiveParams(delta=0.5), Z0,
                                  SolverOptions(delta_schedule=(0.1, 0.01)))
        b = cg_minimize(A, V, ObjectiveParams(delta=0.5), Z0)
        assert a.objective_trace == b.objective_trace


class TestMultiStart:
    def test_random_start_scale(self):
        A, V, _ = small_problem(16)
        Z = random_start(A, V, 3, 1e-3)
        assert np.linalg.norm(Z) == pytest.approx(1e-3 * np.linalg.norm(V) / np.linalg.norm(A, 2))
        assert np.array_equal(Z, random_start(A, V, 3, 1e-3))
        G = random_start(A, V, 3, None)
        assert np.allclose(Z / np.linalg.norm(Z), G / np.linalg.norm(G))

    def test_one_start_equals_single_run(self):
        _, rp = tiny(1)
        opts = SolverOptions(n_starts=1, seed=11)
        ms = multi_start_solve(rp.A, rp.V, PARAMS, opts)
        Z0 = random_start(rp.A, rp.V, derive_seed(11, 0), opts.init_scale)
        single = continuation_minimize(rp.A, rp.V, PARAMS, Z0, opts)
        assert ms.objective_trace == single.objective_trace
        assert np.array_equal(ms.Z_hat, single.Z_hat) and ms.restarts_used == 1

    def test_one_start_equals_cg_without_schedule(self):
        _, rp = tiny(2)
        opts = SolverOptions(n_starts=1, seed=4, delta_schedule=())
        ms = multi_start_solve(rp.A, rp.V, PARAMS, opts)
        Z0 = random_start(rp.A, rp.V, derive_seed(4, 0), opts.init_scale)
        assert ms.objective_trace == cg_minimize(rp.A, rp.V, PARAMS, Z0, opts).objective_trace

    def test_rescues_stalled_start(self):
        inst, rp = tiny(1, balance=False)
        opts = SolverOptions(n_starts=4, seed=1)
        res = multi_start_solve(rp.A, rp.V, PARAMS, opts)
        penalties = [s["exact_penalty"] for s in res.starts]
        assert all(p > 3 + 1e-3 for p in penalties[:3])
        assert res.start_index == 3 and res.restarts_used == 4 and res.certified
        assert recovery_report(rp.lift(res.Z_hat), inst.X_true).rel_error < 1e-3

    def test_winner_is_argmin(self):
        _, rp = tiny(6, balance=False)
        opts = SolverOptions(n_starts=4, seed=6, stop_on_certificate=False)
        res = multi_start_solve(rp.A, rp.V, PARAMS, opts)
        objs = [s["objective"] for s in res.starts]
        assert res.restarts_used == 4
        assert res.objective == min(objs) and res.start_index == int(np.argmin(objs))

    def test_certificate_stops_early(self):
        _, rp = tiny(0)
        res = multi_start_solve(rp.A, rp.V, PARAMS, SolverOptions(n_starts=5, seed=0))
        assert res.restarts_used == 1 and res.certified
        assert res.exact_penalty == pytest.approx(3.0, abs=1e-3)

    def test_deterministic(self):
        _, rp = tiny(3)
        a = multi_start_solve(rp.A, rp.V, PARAMS, SolverOptions(seed=9))
        b = multi_start_solve(rp.A, rp.V, PARAMS, SolverOptions(seed=9))
        assert a.objective_trace == b.objective_trace and np.array_equal(a.Z_hat, b.Z_hat)

    def test_init_used_first(self):
        inst, rp = tiny(4)
        W = inst.X_true @ rp.U.T / rp.scale
        res = multi_start_solve(rp.A, rp.V, PARAMS, SolverOptions(n_starts=3), Z_init=W)
        assert res.start_index == 0 and res.restarts_used == 1

    def test_all_starts_fail(self, monkeypatch):
        A, V, _ = small_problem(17)

        def boom(*args, **kwargs):
            raise NumericFailure("synthetic")

        monkeypatch.setattr(mansolve, "continuation_minimize", boom)
        with pytest.raises(NumericFailure) as info:
            multi_start_solve(A, V, PARAMS, SolverOptions(n_starts=3))
        assert [d["start"] for d in info.value.diagnostics] == [0, 1, 2]

    def test_partial_failure_tolerated(self, monkeypatch):
        A, V, _ = small_problem(18)
        real = mansolve.continuation_minimize
        calls = []

        def flaky(*args, **kwargs):
            calls.append(1)
            if len(calls) == 1:
                raise NumericFailure("synthetic")
            return real(*args, **kwargs)

        monkeypatch.setattr(mansolve, "continuation_minimize", flaky)
        res = multi_start_solve(A, V, PARAMS, SolverOptions(n_starts=2, max_iter=30))
        assert res.start_index == 1 and res.starts[0] == {"start": 0, "failed": True}


@pytest.mark.parametrize("seed", range(5))
def test_tiny_instance_recovery(seed):
    inst, rp = tiny(seed)
    res = multi_start_solve(rp.A, rp.V, PARAMS, SolverOptions(seed=seed))
    X_hat = rp.lift(res.Z_hat)
    assert recovery_report(X_hat, inst.X_true).rel_error < 1e-3
    oracle = brute_force_l0(rp.A, rp.V, 3)
    assert oracle is not None and oracle.unique
    assert set(row_support(X_hat, 1e-6)) == set(oracle.support)

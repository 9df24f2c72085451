"""Joint sparse recovery through rank reduction and an orthogonal-factor penalty.

``A X = Y`` with ``X`` row sparse is reduced to ``A W = V`` with ``V`` of full
column rank ``r``; ``W`` is found by minimizing a Huber-smoothed l2,1 norm of
its orthogonal factor plus a data-fit term, and lifted back to ``X``.
"""

from .estimators import L21JointSparse, ManifoldJointSparse, OutputFactorizer
from .exceptions import (DegenerateRankError, InvalidArgumentError, NumericFailure,
                         RankDeficiencyError, SizeLimitError)
from .l21base import BaselineOptions, basis_pursuit, row_shrink, solve_l21, solve_l21_reduced
from .mansolve import (SolverOptions, SolveResult, Termination, armijo_linesearch, cg_minimize,
                       multi_start_solve)
from .matmodel import (ProblemInstance, gaussian_matrix, l0_rows, l21_norm, make_instance,
                       make_rng, random_row_sparse, row_support)
from .penalty import (ObjectiveParams, diag_weights, exact_penalty, finite_diff_grad,
                      grad_exact_penalty, grad_fidelity, grad_objective, grad_smoothed_penalty,
                      huber, objective, orthogonal_factor, smoothed_penalty)
from .reduction import (ReducedProblem, SvdFactors, compact_svd, estimate_rank, factor_output,
                        lift_solution, reduce_problem)
from .verify import (RecoveryReport, brute_force_l0, max_recoverable_sparsity,
                     max_unique_sparsity, rank_preservation_check, recovery_report, spark)

__version__ = "0.1.0"

__all__ = [
    "BaselineOptions",
    "DegenerateRankError",
    "InvalidArgumentError",
    "L21JointSparse",
    "ManifoldJointSparse",
    "NumericFailure",
    "ObjectiveParams",
    "OutputFactorizer",
    "ProblemInstance",
    "RankDeficiencyError",
    "RecoveryReport",
    "ReducedProblem",
    "SizeLimitError",
    "SolveResult",
    "SolverOptions",
    "SvdFactors",
    "Termination",
    "armijo_linesearch",
    "basis_pursuit",
    "brute_force_l0",
    "cg_minimize",
    "compact_svd",
    "diag_weights",
    "estimate_rank",
    "exact_penalty",
    "factor_output",
    "finite_diff_grad",
    "gaussian_matrix",
    "grad_exact_penalty",
    "grad_fidelity",
    "grad_objective",
    "grad_smoothed_penalty",
    "huber",
    "l0_rows",
    "l21_norm",
    "lift_solution",
    "make_instance",
    "make_rng",
    "max_recoverable_sparsity",
    "max_unique_sparsity",
    "multi_start_solve",
    "objective",
    "orthogonal_factor",
    "random_row_sparse",
    "rank_preservation_check",
    "recovery_report",
    "reduce_problem",
    "row_shrink",
    "row_support",
    "smoothed_penalty",
    "solve_l21",
    "solve_l21_reduced",
    "spark",
]

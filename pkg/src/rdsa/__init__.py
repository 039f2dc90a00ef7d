"""Deterministic-perturbation random-directions stochastic approximation.

First- and second-order zeroth-order optimisers driven by cyclic perturbation
sequences (semi-lexicographic and permutation), random-perturbation
baselines, benchmark objectives and an experiment harness.
"""

from .estimators import RDSANewtonOptimizer, RDSAOptimizer
from .exceptions import (
    AccumulationOverflowError,
    DomainError,
    NumericalError,
    OutOfRangeError,
    RDSAError,
    UnsupportedDiagnosticError,
)
from .gradients import (
    GradientEstimate,
    grad_kw_dp,
    grad_lex_dp,
    grad_perm_dp,
    grad_rdsa_random,
    grad_spsa,
)
from .harness import (
    ExperimentConfig,
    RunResult,
    emit_results,
    parameter_error,
    parse_results,
    rate_diagnostics,
    run_experiment,
)
from .hessians import (
    HessianEstimate,
    hess_baseline,
    hess_lex_dp,
    hess_perm_dp,
    hess_perm_two_dp,
    kappa,
    mm_matrix,
)
from .objectives import (
    FourthOrder,
    MeasurementOracle,
    NoiseModel,
    Quadratic,
    Rastrigin,
    eval_fourth_order,
    eval_quadratic,
    eval_rastrigin,
    make_objective,
    noisy_measure,
    quadratic_optimum,
)
from .optimize import (
    ALGORITHMS,
    BoxProjection,
    OptimizationResult,
    Schedules,
    UpsilonParams,
    newton_direction,
    project_box,
    run_algorithm,
    run_first_order,
    run_second_order,
    upsilon_project,
)
from .perturb import (
    LexSequence,
    PermSequence,
    RandomDirectionDist,
    lex_gram,
    lex_moment,
    lex_row,
    perm_gram,
    perm_row,
    sample_direction,
)

__version__ = "0.1.0"

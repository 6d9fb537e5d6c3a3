"""Randomized Polyak-step feasibility with adaptive (sub)gradient solvers."""

from .core import (
    AffineConstraints,
    Ball,
    Box,
    CallableConstraints,
    ConstrainedProblem,
    ConstraintFamily,
    NonnegativeSlice,
    ObjectiveOracle,
    Product,
    RandomSource,
    WholeSpace,
    project,
    uniform_index,
)
from .feasibility import FeasibilityConfig, feasibility_pass, polyak_step
from .schedules import (
    Binomial,
    Constant,
    DecayDiagnostics,
    LogGrowth,
    Poisson,
    PowerGrowth,
    UniformInt,
    expected_decay,
    sum_decay_bound,
)
from .solvers import (
    DowsSolverConfig,
    GradSolverConfig,
    select_tau,
    solve_dows_family,
    solve_gradient_feasibility,
)
from .baselines import PrimalDualConfig, solve_primal_dual
from .problems import build_svm, generate_qcqp, qcqp_problem
from .estimators import RandomizedFeasibilitySVC

__version__ = "0.1.0"

"""Extremal first eigenvalues of Schrodinger-type operators on finite spaces.

Maximize lambda_1(L + V) over nonnegative potentials V with ||V||_p <= A on
a finite measured space with a weighted-graph Dirichlet form, and certify
the extremal pair.
"""

__version__ = "0.1.0"

from .core_form import (
    DirichletFormSpec,
    MeasuredSpace,
    a_form,
    build_grid2d,
    build_interval_fd,
    build_path,
    clamp_unit,
    edge_energy,
    lp_norm,
)
from .eigensolver import EigenOptions, EigenPair, lambda1, rayleigh
from .extremal_p1 import (
    CoincidenceSet,
    ObstacleProblemInput,
    P1Options,
    coincidence_set,
    complementarity_check,
    minimize_t,
    solve_obstacle,
    solve_p1,
    t_value,
    variational_inequality_residual,
)
from .extremal_pgt1 import (
    ExtremalResult,
    LpBudget,
    SolveOptions,
    check_linf_bounds,
    extremal_potential,
    j_gradient,
    j_value,
    minimize_j,
    solve_p_gt_1,
    solve_p_inf,
)
from .oracle import SampleConfig, brute_force_sup, fd_gradient, grid_enumerate_sup, sample_ball

__all__ = [
    "__version__",
    "MeasuredSpace",
    "DirichletFormSpec",
    "a_form",
    "edge_energy",
    "lp_norm",
    "clamp_unit",
    "build_path",
    "build_grid2d",
    "build_interval_fd",
    "EigenOptions",
    "EigenPair",
    "rayleigh",
    "lambda1",
    "LpBudget",
    "SolveOptions",
    "ExtremalResult",
    "j_value",
    "j_gradient",
    "extremal_potential",
    "minimize_j",
    "solve_p_gt_1",
    "check_linf_bounds",
    "solve_p_inf",
    "P1Options",
    "CoincidenceSet",
    "ObstacleProblemInput",
    "t_value",
    "minimize_t",
    "variational_inequality_residual",
    "coincidence_set",
    "complementarity_check",
    "solve_p1",
    "solve_obstacle",
    "SampleConfig",
    "sample_ball",
    "brute_force_sup",
    "fd_gradient",
    "grid_enumerate_sup",
]

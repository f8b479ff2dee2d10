"""Finite-difference solvers for k-Hessian equations on the unit cube."""
from .algebra import c_const, eigenvalues_sym, is_k_admissible, s_k, s_k_gradient
from .elliptic import (LinearOperator, LinearSolveParams, assemble_divergence_form,
                       assemble_laplacian, assemble_nondivergence_form, linear_solve,
                       solve_poisson)
from .errors import (ConfigError, GridError, InvalidOrder, IterationError, KHessianError,
                     LinearSolveError, SolverBreakdown)
from .grid import (Grid, MeshFunction, build_grid, discrete_hessian, discrete_laplacian,
                   hessian_field, laplacian_field, restrict)
from .iterations import (IterationConfig, SolveReport, degenerate_ma_solve, fixed_point_solve,
                         initial_guess, linearized_cofactor_solve, newton_solve,
                         nonlinear_gs_solve, partial_gs_solve, residual, solve)
from .problems import Problem, make_problem, max_error

__version__ = "0.1.0"

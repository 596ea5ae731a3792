"""Euler-Maruyama simulation and Gronwall bounds for stochastic fractional
neutral integro-differential equations."""

__version__ = "0.1.0"

from .errors import (ConfigError, ConvergenceError, DomainError, EvaluationError,
                     MismatchError, NonFiniteStateError, NumericOverflowError,
                     SfnideError, ShapeError)
from .specialfn import beta, gamma, log_gamma, mittag_leffler
from .quadrature import JacobiRule, build_jacobi_rule, integrate, moment_table
from .model import (AssumptionWarning, FractionalOrders, Grid, ProblemSpec, example1,
                    linear_test)
from .brownian import BrownianPath, coarsen, sample_path
from .solver import em_solve, em_solve_batch
from .harness import convergence_study, coupled_error, fit_rate, run_study
from .gronwall import (GronwallProblem, SeriesPolicy, gronwall_bound,
                       gronwall_bound_constant_g, gronwall_series)

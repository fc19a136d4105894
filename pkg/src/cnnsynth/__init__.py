"""Scale a baseline CNN down to a class-proportional parameter budget."""

from .budget import BudgetResult, BudgetSpec, ClassScope, compute_budget, ideal_gamma, rewrite_classifier
from .factorspace import count_solution_space, divisors, enumerate_window, factor_set
from .ir import Network, flop_count, param_count_micro, param_count_network, validate
from .solver import (
    BottleneckPolicy,
    ScalePlan,
    SolveRequest,
    SynthesisOptions,
    apply_plan,
    check_bottleneck,
    make_plan,
    solve_bruteforce,
    solve_dp,
    synthesize,
)

__version__ = "0.1.0"

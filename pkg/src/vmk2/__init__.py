"""Solvers and benchmarks for the uniform 2-dimensional vector multiple
knapsack problem: pack item subsets into m bins of unit capacity in both
weight dimensions, maximizing the total profit of distinct packed items."""

from .model import (
    Configuration,
    EMPTY_CONFIG,
    FEAS_TOL,
    InfeasibleInput,
    Item,
    LP_TOL,
    ParseError,
    ProfitReport,
    SearchBudgetExceeded,
    SolveReport,
    UnknownItem,
    ValidationError,
    Vmk2Error,
    Vmk2Instance,
    Vmk2Solution,
    check_solution,
    dedup_solution,
    instance_digest,
    load_instance,
    load_solution,
    save_instance,
    save_solution,
)
from .pricing import PricedColumn, price_approx, price_exact
from .clp import (
    FractionalSolution,
    IterationBudget,
    sample_T,
    sample_configuration,
    solve_clp,
)
from .mk import (
    MkInstance,
    MkItem,
    MkSolution,
    associate,
    first_fit_2d,
    solve_mk_exact,
    solve_mk_heuristic,
    split_configuration,
)
from .solvers import (
    HybridParams,
    McKInstance,
    eps_nice_wrap,
    is_eps_nice,
    reduce_to_mck,
    solve_exact,
    solve_hybrid,
    solve_mck_exact,
    solve_reduction,
    solve_sampling_baseline,
    solve_via_mck,
)
from .bench import (
    ExperimentResult,
    GeneratorSpec,
    generate,
    run_concentration,
    run_marginal_curve,
    run_ratio_bench,
)

__version__ = "0.1.0"

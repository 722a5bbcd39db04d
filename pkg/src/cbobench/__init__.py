"""Constrained Bayesian optimization benchmark suite.

Seventeen constrained test problems, six optimizer variants (GP and
bucketed-PPD surrogates crossed with penalty, CEI, and CEI+ constraint
handling), and the statistics stack to compare them: feasibility
ratios, rank tests, fixed-budget reports, and Pareto fronts.
"""

__version__ = "0.1.0"

from .errors import (
    EmptyFeasibleSetError,
    GPNumericalError,
    InferenceError,
    OutOfBoundsError,
    ProtocolViolationError,
)
from .problems import (
    ERRATA_MODES,
    PROBLEM_IDS,
    EvalResult,
    ProblemSpec,
    catalog,
    evaluate,
    evaluate_many,
    reference_feasible_point,
    snap_discrete,
    spec,
)
from .sampling import (
    candidate_pool,
    derive_seed,
    latin_hypercube,
    quasirandom,
    scale_to_bounds,
    stream,
    uniform,
)
from .acquisition import (
    Incumbent,
    PenaltyState,
    cei,
    cei_plus,
    expected_improvement_bucketed,
    expected_improvement_gaussian,
    incumbent_update,
    penalty_transform,
    prob_feasible_bucketed,
    prob_feasible_gaussian,
    update_rho,
)
from .engine import (
    METHOD_IDS,
    MethodConfig,
    TrialTrace,
    method_registry,
    run_trial,
    trace_from_csv,
)
from .harness import (
    ExperimentConfig,
    ResultStore,
    parse_config_file,
    resolve_config,
    run_experiment,
)
from .stats import (
    BudgetReport,
    RankReport,
    ResultMatrix,
    TrialOutcome,
    critical_difference_ranking,
    feasibility_ratio,
    fixed_iteration_report,
    fixed_runtime_report,
    friedman_test,
    holm_adjust,
    pareto_rank,
    result_matrix_from_traces,
    wilcoxon_signed_rank,
)

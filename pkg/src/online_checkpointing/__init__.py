"""Online checkpointing under the maximum-distance discrepancy measure."""
from .algorithms import (
    LINEAR_ALPHA,
    PHI,
    AlgorithmSpec,
    binary_alpha,
    binary_deletions,
    doubling_cyclic,
    make_binary,
    make_doubling,
    make_linear,
    make_simple,
    odd_part,
)
from .bounds import BoundSet, bounds_for
from .core import (
    ActiveSet,
    CyclicAlgorithm,
    CyclicityError,
    DiscrepancyReport,
    Schedule,
    ScheduleError,
    deletions_to_pattern,
    discrepancy_at,
    evolve,
    from_json,
    integerize,
    pattern_to_deletions,
    perf_cyclic,
    perf_full,
    perf_incremental,
    to_json,
    unroll,
)
from .lp import (
    LpProblem,
    OptimizationResult,
    SolverError,
    build_lp,
    gamma_upper_bound,
    optimize_gamma,
    optimize_lambda,
    solve_feasibility,
)
from .search import (
    PatternCandidate,
    SearchReport,
    enumerate_patterns,
    exhaustive_search,
    local_search,
    optimize_positions_for,
)

__version__ = "0.1.0"

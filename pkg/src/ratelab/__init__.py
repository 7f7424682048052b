"""ratelab: first-order convex solvers with empirical rate certification.

The package runs six first-order methods (gradient descent, stochastic
coordinate descent, and their proximal variants, each with fixed steps or
backtracking) while recording complete per-iteration traces, then audits
those traces: does the optimality gap decay fast enough that k * Delta_k
vanishes, do the recorded steps replay their acceptance conditions, do the
iterates respect their distance bounds? A scalar monomial family with
known closed-form decay pins the rate fits to exact targets.

Hot loops are compiled with numba when available; set RATELAB_BACKEND to
"numpy" to run the identical source interpreted (bit-for-bit equal output,
just slower), or "numba" to require compilation.
"""

__version__ = "0.1.0"

from ._backend import ACTIVE_BACKEND, resolve_backend
from .problems import (
    INFINITE,
    ProblemInstance,
    QuadraticStructure,
    Regularizer,
    ScalarRegularizer,
    SmoothOracle,
    make_box,
    make_l1,
    make_power,
    make_quadratic,
    objective_value,
    prox,
)
from .solvers import (
    FixedStep,
    LineSearchRule,
    SamplingDistribution,
    SolverAbort,
    StepRule,
    Trace,
    cd_stochastic,
    find_step,
    gd_fixed,
    gd_linesearch,
    proxcd_stochastic,
    proxgrad_fixed,
    proxgrad_linesearch,
    sample_index,
    snapshot_grid,
)
from .diagnostics import (
    BoundReport,
    DistanceReport,
    GapDecayReport,
    GapSequence,
    PowerLawFit,
    RateReport,
    ReplayReport,
    StationarityReport,
    check_cd_step_decrease,
    check_descent_margin,
    check_distance_recursion,
    check_gap_decay,
    check_iterate_bound,
    check_prox_stationarity,
    distance_to_solution,
    fit_power_law,
    rate_report,
    replay_step_conditions,
    weighted_squared_distance,
)
from .monomial import (
    FlowResult,
    GradientFlowExperiment,
    MonomialExperiment,
    min_even_degree,
    predicted_exponent,
    predicted_gap_constant,
    run_gradient_flow,
    run_monomial,
)
from .traceio import (
    ParsedTrace,
    emit_snapshots,
    emit_trace,
    parse_snapshots,
    parse_trace,
)

__all__ = [
    "ACTIVE_BACKEND",
    "BoundReport",
    "DistanceReport",
    "FixedStep",
    "FlowResult",
    "GapDecayReport",
    "GapSequence",
    "GradientFlowExperiment",
    "INFINITE",
    "LineSearchRule",
    "MonomialExperiment",
    "ParsedTrace",
    "PowerLawFit",
    "ProblemInstance",
    "QuadraticStructure",
    "RateReport",
    "Regularizer",
    "ReplayReport",
    "SamplingDistribution",
    "ScalarRegularizer",
    "SmoothOracle",
    "SolverAbort",
    "StationarityReport",
    "StepRule",
    "Trace",
    "cd_stochastic",
    "check_cd_step_decrease",
    "check_descent_margin",
    "check_distance_recursion",
    "check_gap_decay",
    "check_iterate_bound",
    "check_prox_stationarity",
    "distance_to_solution",
    "emit_snapshots",
    "emit_trace",
    "find_step",
    "fit_power_law",
    "gd_fixed",
    "gd_linesearch",
    "make_box",
    "make_l1",
    "make_power",
    "make_quadratic",
    "min_even_degree",
    "objective_value",
    "parse_snapshots",
    "parse_trace",
    "predicted_exponent",
    "predicted_gap_constant",
    "prox",
    "proxcd_stochastic",
    "proxgrad_fixed",
    "proxgrad_linesearch",
    "rate_report",
    "replay_step_conditions",
    "resolve_backend",
    "run_gradient_flow",
    "run_monomial",
    "sample_index",
    "snapshot_grid",
    "weighted_squared_distance",
    "__version__",
]

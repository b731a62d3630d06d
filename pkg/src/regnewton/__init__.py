"""Gradient-regularized Newton methods, baselines, and a benchmark harness."""

from .baselines import BaselineConfig, cubic_subproblem, run_cubic_newton, run_first_order
from .errors import (
    AdaptiveSearchStall,
    ConfigError,
    DimensionMismatch,
    InitializationFailure,
    InnerSolveFailure,
    NotPositiveDefinite,
    NumericalBreakdown,
    TraceSchemaError,
)
from .metric import Metric
from .newton import H0Search, SolverConfig, init_h0, run_fixed, run_super_universal
from .problems import (
    FdReport,
    ProblemInstance,
    SmoothOracle,
    box_part,
    estimate_holder,
    fd_check,
    l1_part,
    make_abs_cubic_1d,
    make_box_quadratic,
    make_l1_quadratic,
    make_polytope,
    make_quadratic,
    make_softmax,
    make_worst,
    rng_for,
)
from .subproblem import (
    CompositePart,
    StepResult,
    acceptance_check,
    implicit_subgradient,
    step_composite,
    step_unconstrained,
)
from .trace import TRACE_COLUMNS, Trace, TraceRecord, parse_trace_csv, validate_trace_file

__version__ = "0.1.0"

__all__ = [
    "AdaptiveSearchStall",
    "BaselineConfig",
    "CompositePart",
    "ConfigError",
    "DimensionMismatch",
    "FdReport",
    "H0Search",
    "InitializationFailure",
    "InnerSolveFailure",
    "Metric",
    "NotPositiveDefinite",
    "NumericalBreakdown",
    "ProblemInstance",
    "SmoothOracle",
    "SolverConfig",
    "StepResult",
    "TRACE_COLUMNS",
    "Trace",
    "TraceRecord",
    "TraceSchemaError",
    "acceptance_check",
    "box_part",
    "cubic_subproblem",
    "estimate_holder",
    "fd_check",
    "implicit_subgradient",
    "init_h0",
    "l1_part",
    "make_abs_cubic_1d",
    "make_box_quadratic",
    "make_l1_quadratic",
    "make_polytope",
    "make_quadratic",
    "make_softmax",
    "make_worst",
    "parse_trace_csv",
    "rng_for",
    "run_cubic_newton",
    "run_first_order",
    "run_fixed",
    "run_super_universal",
    "step_composite",
    "step_unconstrained",
    "validate_trace_file",
]

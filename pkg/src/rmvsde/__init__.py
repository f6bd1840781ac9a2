"""Simulation and control-optimization toolkit for one-dimensional reflected
mean-field SDEs under strict and relaxed controls."""

__version__ = "0.1.0"

from .controls import (
    ActionSet,
    FeedbackPolicy,
    OpenLoopPolicy,
    RelaxedControlPolicy,
    as_relaxed,
    chattering_approximation,
    uniform_grid,
    weak_gap,
)
from .cost import CostEstimate, CostSet, evaluate_relaxed, evaluate_strict
from .dynamics import (
    CoefficientSet,
    SimulationConfig,
    TrajectoryBundle,
    mean_field_moment_curve,
    simulate_relaxed,
    simulate_strict,
)
from .errors import (
    ConfigError,
    DomainViolation,
    EmptyMeasure,
    ExpressionSyntaxError,
    NumericalBlowup,
    ShapeError,
    ToolkitError,
    UnknownFunction,
    UnknownVariable,
    UnsupportedPolicyForm,
)
from .measure import EmpiricalMeasure, from_samples, second_moment, w2_distance
from .optimizer import SearchSpec, SearchTrace, TraceEntry, minimize_relaxed, strictify_best
from .roxin import SelectionResult, barycenter, check_roxin_sampled, select_strict
from .skorokhod import GridPath, ReflectedPath, reflect, stieltjes_against_k

__all__ = [
    "__version__",
    "ActionSet", "FeedbackPolicy", "OpenLoopPolicy", "RelaxedControlPolicy",
    "as_relaxed", "chattering_approximation", "uniform_grid", "weak_gap",
    "CostEstimate", "CostSet", "evaluate_relaxed", "evaluate_strict",
    "CoefficientSet", "SimulationConfig", "TrajectoryBundle",
    "mean_field_moment_curve", "simulate_relaxed", "simulate_strict",
    "ConfigError", "DomainViolation", "EmptyMeasure", "ExpressionSyntaxError",
    "NumericalBlowup", "ShapeError", "ToolkitError", "UnknownFunction",
    "UnknownVariable", "UnsupportedPolicyForm",
    "EmpiricalMeasure", "from_samples", "second_moment", "w2_distance",
    "SearchSpec", "SearchTrace", "TraceEntry", "minimize_relaxed", "strictify_best",
    "SelectionResult", "barycenter", "check_roxin_sampled", "select_strict",
    "GridPath", "ReflectedPath", "reflect", "stieltjes_against_k",
]

"""System Dynamics: stock-flow models and fixed-step integration."""

from .engine import (
    Annotation, ConvergenceResult, SDError, Trajectory, convergence_probe, initial_values, simulate,
)
from .expr import ExpressionError, parse_expr, unparse
from .model import (
    BOUNDARY, Aux, Flow, ModelFileError, SDModel, Stock, TimeSpec, check_model, dump, dumps, eval_order,
    load, loads,
)

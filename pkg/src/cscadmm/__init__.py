"""Frequency-domain ADMM for convolutional sparse coding and dictionary learning."""

__version__ = "0.1.0"

from .cdl import CDLConfig, cdl_iterate, d_update, g_update, solve_cdl
from .constrained import (
    ConstraintConfig,
    NuSolveReport,
    error_at_nu,
    solve_constrained,
    solve_nu_secant,
    z_update_constrained,
)
from .csc import (
    CoefficientState,
    IterationTrace,
    SolverConfig,
    TraceRecord,
    flop_model,
    objective_unconstrained,
    shrinkage,
    solve_unconstrained,
    x_update,
    z_update_direct,
    z_update_sherman_morrison,
)
from .estimators import ConstrainedConvSparseCoder, ConvDictionaryLearning, ConvSparseCoder
from .fourier import FilterBank

__all__ = [
    "CDLConfig",
    "CoefficientState",
    "ConstrainedConvSparseCoder",
    "ConstraintConfig",
    "ConvDictionaryLearning",
    "ConvSparseCoder",
    "FilterBank",
    "IterationTrace",
    "NuSolveReport",
    "SolverConfig",
    "TraceRecord",
    "cdl_iterate",
    "d_update",
    "error_at_nu",
    "flop_model",
    "g_update",
    "objective_unconstrained",
    "shrinkage",
    "solve_cdl",
    "solve_constrained",
    "solve_nu_secant",
    "solve_unconstrained",
    "x_update",
    "z_update_constrained",
    "z_update_direct",
    "z_update_sherman_morrison",
]

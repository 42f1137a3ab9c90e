"""
求解器模組
"""

from .estimators import (
    EngineFactory,
    EngineKind,
    EstimatorEngine,
    ExactEngine,
    SamplingEngine,
    est_alpha,
    est_beta,
    est_penalty,
)
from .gradient_ascent import (
    ProgressCallback,
    SolverReport,
    TerminationCause,
    estimate_rrho,
    solve,
)

__all__ = [
    'EngineFactory',
    'EngineKind',
    'EstimatorEngine',
    'ExactEngine',
    'SamplingEngine',
    'est_alpha',
    'est_beta',
    'est_penalty',
    'ProgressCallback',
    'SolverReport',
    'TerminationCause',
    'estimate_rrho',
    'solve',
]

"""
基礎類模組
提供領域型別、參數推導與例外類別
"""

from .domain import (
    WeightedPointSet,
    HolderPair,
    SolverParams,
    Coupling,
    ParamMode
)

from .params import holder_pair, derive_params

from .errors import (
    RrhoError,
    RhoOutOfRange,
    EpsOutOfRange,
    OverrideNonPositive,
    UnknownOverride,
    PaperModeOverride,
    EmptyInput,
    AllMassPruned,
    CouplingMarginalViolation,
    DenseTooLarge,
    AspectRatioViolated,
    WeightPromiseViolated,
    UnregisteredComponent,
    UnknownSuite,
    UnknownProfile,
    PointSetParseError,
    WeightSumError,
    DimensionMismatch,
    MaxItersExceeded,
    NonConvergence,
    NumericalUnderflow
)

__all__ = [
    'WeightedPointSet',
    'HolderPair',
    'SolverParams',
    'Coupling',
    'ParamMode',
    'holder_pair',
    'derive_params',
    'RrhoError',
    'RhoOutOfRange',
    'EpsOutOfRange',
    'OverrideNonPositive',
    'UnknownOverride',
    'PaperModeOverride',
    'EmptyInput',
    'AllMassPruned',
    'CouplingMarginalViolation',
    'DenseTooLarge',
    'AspectRatioViolated',
    'WeightPromiseViolated',
    'UnregisteredComponent',
    'UnknownSuite',
    'UnknownProfile',
    'PointSetParseError',
    'WeightSumError',
    'DimensionMismatch',
    'MaxItersExceeded',
    'NonConvergence',
    'NumericalUnderflow'
]

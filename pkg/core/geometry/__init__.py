"""
幾何前處理模組
提供剪枝、升維、半徑計算與隨機投影
"""

from .preprocess import (
    ProblemInstance,
    cross_distance_range,
    lift,
    prune_low_mass,
    prune_coupling,
    perturbation_bound_mu,
    perturbation_bound_nu,
    make_instance,
    preprocess
)

from .projection import (
    default_jl_dim,
    projection_matrix,
    jl_project
)

__all__ = [
    'ProblemInstance',
    'cross_distance_range',
    'lift',
    'prune_low_mass',
    'prune_coupling',
    'perturbation_bound_mu',
    'perturbation_bound_nu',
    'make_instance',
    'preprocess',
    'default_jl_dim',
    'projection_matrix',
    'jl_project'
]

"""
對偶目標模組
精確 (O(nm)) 的對偶目標、梯度、懲罰項與耦合恢復
"""

from .objective import (
    DualState,
    pair_gaps,
    primal_cost,
    dual_objective,
    penalty_exact,
    grad_alpha_exact,
    grad_beta_exact,
    gradient,
    hessian_laplacian,
    coupling_entry,
    coupling_from_dual,
    sandwich_bounds,
    linf_bound,
    gradient_mass,
    gradient_mass_bound
)

__all__ = [
    'DualState',
    'pair_gaps',
    'primal_cost',
    'dual_objective',
    'penalty_exact',
    'grad_alpha_exact',
    'grad_beta_exact',
    'gradient',
    'hessian_laplacian',
    'coupling_entry',
    'coupling_from_dual',
    'sandwich_bounds',
    'linf_bound',
    'gradient_mass',
    'gradient_mass_bound'
]

"""
對偶目標模組
以 O(nm) 直接計算對偶目標 g、偏導數、懲罰項、原始成本與由對偶恢復的耦合
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from config import get_settings

from ..base.domain import Coupling, HolderPair
from ..base.errors import DenseTooLarge
from ..geometry.preprocess import ProblemInstance


@dataclass
class DualState:
    """對偶變數 (α, β)，單位為 r^ρ"""
    alpha: np.ndarray
    beta: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        if not (np.all(np.isfinite(self.alpha)) and np.all(np.isfinite(self.beta))):
            raise ValueError("對偶變數必須為有限值")

    @classmethod
    def zeros(cls, n: int, m: int) -> 'DualState':
        return cls(np.zeros(n), np.zeros(m), 0)

    @classmethod
    def from_vector(cls, z: np.ndarray, n: int, iteration: int = 0) -> 'DualState':
        z = np.asarray(z, dtype=float)
        return cls(z[:n].copy(), z[n:].copy(), iteration)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta])

    def copy(self) -> 'DualState':
        return DualState(self.alpha.copy(), self.beta.copy(), self.iteration)


# ==========================================
# 成對項
# ==========================================
def _distances(inst: ProblemInstance, distances: Optional[np.ndarray]) -> np.ndarray:
    return inst.cross_distances() if distances is None else distances


def _ratio_power(gap: np.ndarray, dist: np.ndarray, num_pow: float, den_pow: float) -> np.ndarray:
    """
    (gap^+)^num_pow / dist^den_pow，0/0 視為 0

    距離為 0 而 gap > 0 時為 +inf。
    """
    pos = np.maximum(gap, 0.0)
    active = pos > 0
    out = np.zeros_like(pos)
    with np.errstate(divide='ignore'):
        out[active] = pos[active] ** num_pow / dist[active] ** den_pow
    return out


def pair_gaps(state: DualState) -> np.ndarray:
    """α_i − β_j 的 n×m 矩陣"""
    return state.alpha[:, None] - state.beta[None, :]


# ==========================================
# 原始成本
# ==========================================
def primal_cost(inst: ProblemInstance,
                gamma: Union[Coupling, np.ndarray],
                rho: float,
                tol: float = 1e-6,
                distances: Optional[np.ndarray] = None) -> float:
    """
    耦合的 ℓ_ρ 成本 (Σ μ_iν_j (γ_ij/(μ_iν_j)·‖x_i−y_j‖)^ρ)^(1/ρ)

    參數:
        inst: 問題實例
        gamma: 耦合
        rho: ρ
        tol: 邊際容差，超過時拋出 CouplingMarginalViolation

    返回:
        成本（單位 r）
    """
    coupling = gamma if isinstance(gamma, Coupling) else Coupling(gamma)
    coupling.check(inst.mu.masses, inst.nu.masses, tol)
    entries = np.maximum(coupling.entries, 0.0)
    dist = _distances(inst, distances)
    prod = np.outer(inst.mu.masses, inst.nu.masses)
    terms = prod ** (1.0 - rho) * entries ** rho * dist ** rho
    return float(terms.sum()) ** (1.0 / rho)


# ==========================================
# 對偶目標與梯度
# ==========================================
def penalty_exact(inst: ProblemInstance, state: DualState, hp: HolderPair,
                  distances: Optional[np.ndarray] = None) -> float:
    """懲罰項 C_s Σ μ_iν_j ((α_i−β_j)^+/‖x_i−y_j‖)^s"""
    dist = _distances(inst, distances)
    terms = _ratio_power(pair_gaps(state), dist, hp.s, hp.s)
    weighted = inst.mu.masses[:, None] * inst.nu.masses[None, :] * terms
    # 固定順序：先列內求和，再跨列求和
    return hp.c_s * float(weighted.sum(axis=1).sum())


def dual_objective(inst: ProblemInstance, state: DualState, hp: HolderPair,
                   distances: Optional[np.ndarray] = None) -> float:
    """g(α, β) = Σμα − Σνβ − 懲罰項"""
    linear = float(inst.mu.masses @ state.alpha - inst.nu.masses @ state.beta)
    return linear - penalty_exact(inst, state, hp, distances)


def grad_alpha_exact(inst: ProblemInstance, state: DualState, hp: HolderPair,
                     distances: Optional[np.ndarray] = None) -> np.ndarray:
    """
    η_i = sC_s Σ_j ν_j ((α_i−β_j)^+)^(s−1) / ‖x_i−y_j‖^s

    ∂g/∂α_i = μ_i(1 − η_i)
    """
    dist = _distances(inst, distances)
    terms = _ratio_power(pair_gaps(state), dist, hp.s - 1.0, hp.s)
    return hp.s_c_s * (terms @ inst.nu.masses)


def grad_beta_exact(inst: ProblemInstance, state: DualState, hp: HolderPair,
                    distances: Optional[np.ndarray] = None) -> np.ndarray:
    """
    ξ_j = sC_s Σ_i μ_i ((α_i−β_j)^+)^(s−1) / ‖x_i−y_j‖^s

    ∂g/∂β_j = −ν_j(1 − ξ_j)
    """
    dist = _distances(inst, distances)
    terms = _ratio_power(pair_gaps(state), dist, hp.s - 1.0, hp.s)
    return hp.s_c_s * (inst.mu.masses @ terms)


def gradient(inst: ProblemInstance, state: DualState, hp: HolderPair,
             distances: Optional[np.ndarray] = None) -> np.ndarray:
    """完整梯度 (∂g/∂α, ∂g/∂β)"""
    dist = _distances(inst, distances)
    eta = grad_alpha_exact(inst, state, hp, dist)
    xi = grad_beta_exact(inst, state, hp, dist)
    return np.concatenate([
        inst.mu.masses * (1.0 - eta),
        -inst.nu.masses * (1.0 - xi),
    ])


def hessian_laplacian(inst: ProblemInstance, state: DualState, hp: HolderPair,
                      distances: Optional[np.ndarray] = None) -> np.ndarray:
    """
    −∇²g，為二部圖的加權拉普拉斯矩陣

    權重 W_ij = s(s−1)C_s μ_iν_j ((α_i−β_j)^+)^(s−2) / ‖x_i−y_j‖^s，
    僅在 α_i > β_j 的對上非零。
    """
    dist = _distances(inst, distances)
    gaps = pair_gaps(state)
    active = gaps > 0
    w = np.zeros_like(gaps)
    with np.errstate(divide='ignore'):
        w[active] = gaps[active] ** (hp.s - 2.0) / dist[active] ** hp.s
    w *= hp.s * (hp.s - 1.0) * hp.c_s * np.outer(inst.mu.masses, inst.nu.masses)
    n, m = w.shape
    lap = np.zeros((n + m, n + m))
    lap[:n, :n] = np.diag(w.sum(axis=1))
    lap[n:, n:] = np.diag(w.sum(axis=0))
    lap[:n, n:] = -w
    lap[n:, :n] = -w.T
    return lap


# ==========================================
# 耦合恢復
# ==========================================
def coupling_entry(inst: ProblemInstance, state: DualState, hp: HolderPair,
                   i: int, j: int) -> float:
    """單一耦合項 γ_ij = sC_s μ_iν_j ((α_i−β_j)^+)^(s−1)/‖x_i−y_j‖^s"""
    gap = state.alpha[i] - state.beta[j]
    if gap <= 0:
        return 0.0
    dist = float(np.linalg.norm(inst.mu.points[i] - inst.nu.points[j]))
    if dist == 0:
        return float('inf')
    return hp.s_c_s * inst.mu.masses[i] * inst.nu.masses[j] * gap ** (hp.s - 1.0) / dist ** hp.s


def coupling_from_dual(inst: ProblemInstance, state: DualState, hp: HolderPair,
                       distances: Optional[np.ndarray] = None) -> Coupling:
    """
    由對偶變數恢復稠密耦合

    返回:
        Coupling（超過稠密上限時拋出 DenseTooLarge）
    """
    limit = get_settings().oracle.dense_limit
    if inst.n * inst.m > limit:
        raise DenseTooLarge(inst.n, inst.m, limit)
    dist = _distances(inst, distances)
    terms = _ratio_power(pair_gaps(state), dist, hp.s - 1.0, hp.s)
    return Coupling(hp.s_c_s * np.outer(inst.mu.masses, inst.nu.masses) * terms)


# ==========================================
# 界限
# ==========================================
def sandwich_bounds(emd: float, mu_masses: np.ndarray, nu_masses: np.ndarray,
                    rho: float) -> Tuple[float, float]:
    """
    EMD ≤ R_ρ ≤ sup(1/(μ_iν_j))^((ρ−1)/ρ)·EMD

    返回:
        (下界, 上界)
    """
    worst = 1.0 / (float(np.min(mu_masses)) * float(np.min(nu_masses)))
    return emd, worst ** ((rho - 1.0) / rho) * emd


def linf_bound(mu_masses: np.ndarray, nu_masses: np.ndarray, hp: HolderPair,
               r: float) -> float:
    """最佳對偶解（平移後）的 ℓ∞ 半徑 (4^(1/s)/2)·sup(1/(μν))^((ρ−1)/ρ)·r^ρ"""
    worst = 1.0 / (float(np.min(mu_masses)) * float(np.min(nu_masses)))
    return 0.5 * 4.0 ** (1.0 / hp.s) * worst ** ((hp.rho - 1.0) / hp.rho) * r ** hp.rho


def gradient_mass_bound(inst: ProblemInstance) -> float:
    """
    g ≥ 0 時 C_s Σ μ_iν_j ((α_i−β_j)^+)^(s−1)/‖x_i−y_j‖^s 的上界 4r/r_min

    r 取處理後的最大交叉距離。
    """
    if inst.min_distance <= 0:
        return float('inf')
    return 4.0 * inst.diameter / inst.min_distance


def gradient_mass(inst: ProblemInstance, state: DualState, hp: HolderPair,
                  distances: Optional[np.ndarray] = None) -> float:
    """C_s Σ μ_iν_j ((α_i−β_j)^+)^(s−1)/‖x_i−y_j‖^s = Σ μ_iη_i / s"""
    eta = grad_alpha_exact(inst, state, hp, distances)
    return float(inst.mu.masses @ eta) / hp.s

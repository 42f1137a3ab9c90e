"""
精確 R_ρ 求解器
小規模實例上的高精度對偶最大化（L-BFGS + 牛頓法），以及 2×2 實例的三分搜尋
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize, nnls

from config import get_settings
from utils.logger import get_logger, log_execution_time
from utils.math_utils import rho_root

from ..base.domain import Coupling, HolderPair
from ..base.errors import DenseTooLarge, NonConvergence
from ..dual.objective import (
    DualState,
    coupling_from_dual,
    dual_objective,
    gradient,
    hessian_laplacian,
    linf_bound,
    primal_cost,
)
from ..geometry.preprocess import ProblemInstance


class CertificateKind(Enum):
    """證明類型"""
    COUPLING = "coupling"
    FLOW = "flow"


@dataclass
class OracleResult:
    """
    oracle 結果

    certificate 為耦合（或流量）矩陣；dual 為對偶解（僅 exact_rrho，單位 r^ρ）。
    """
    value: float
    certificate: Coupling
    kind: CertificateKind
    solver_tol: float
    dual: Optional[DualState] = field(default=None, repr=False)
    marginal_residual: float = 0.0
    iterations: int = 0

    def verify(self, inst: ProblemInstance, tol: float = 1e-8) -> bool:
        """重新檢查證明的邊際"""
        self.marginal_residual = self.certificate.marginal_residual(
            inst.mu.masses, inst.nu.masses)
        return self.marginal_residual <= tol


def check_oracle_size(inst: ProblemInstance):
    """n·m 超過 oracle 上限時拋出 DenseTooLarge"""
    limit = get_settings().oracle.oracle_limit
    if inst.n * inst.m > limit:
        raise DenseTooLarge(inst.n, inst.m, limit)


def verified_result(result: OracleResult, inst: ProblemInstance, name: str) -> OracleResult:
    tol = get_settings().oracle.marginal_tolerance
    if not result.verify(inst, tol):
        get_logger().warning(
            f"{name} 證明的邊際殘差 {result.marginal_residual:.3e} 超過 {tol:.1e}")
    return result


# ==========================================
# 精確 R_ρ
# ==========================================
class _UnitProblem:
    """以 r = 1 為長度單位的對偶問題；零距離對以 +inf 遮蔽"""

    def __init__(self, inst: ProblemInstance, hp: HolderPair):
        self.inst = inst
        self.hp = hp
        dist = inst.cross_distances()
        self.scale = float(dist.max()) if dist.max() > 0 else 1.0
        self.zero_pairs = np.argwhere(dist <= 0)
        self.distances = np.where(dist > 0, dist / self.scale, np.inf)
        self.n = inst.n

    def state(self, z: np.ndarray) -> DualState:
        return DualState.from_vector(z, self.n)

    def value(self, z: np.ndarray) -> float:
        return dual_objective(self.inst, self.state(z), self.hp, self.distances)

    def grad(self, z: np.ndarray) -> np.ndarray:
        return gradient(self.inst, self.state(z), self.hp, self.distances)

    def negated(self, z: np.ndarray) -> Tuple[float, np.ndarray]:
        return -self.value(z), -self.grad(z)

    def warm_start(self) -> np.ndarray:
        """β = 0 且 η_i = 1 的 α"""
        s, nu = self.hp.s, self.inst.nu.masses
        inv = (nu[None, :] / self.distances ** s).sum(axis=1)
        alpha = np.zeros(self.n)
        active = inv > 0
        alpha[active] = (1.0 / (self.hp.s_c_s * inv[active])) ** (1.0 / (s - 1.0))
        return np.concatenate([alpha, np.zeros(self.inst.m)])


def _certificate_gap(problem: _UnitProblem, z: np.ndarray, bound: float) -> float:
    """‖∇g‖₁·2·(ℓ∞ 半徑)，為 g 與最大值之差的上界"""
    return float(np.abs(problem.grad(z)).sum()) * 2.0 * bound


def _relative_tol(tol: float, g: float) -> float:
    return tol * max(1.0, abs(g))


def _newton_refine(problem: _UnitProblem, z: np.ndarray, tol: float,
                   bound: float) -> Tuple[np.ndarray, float, int, bool]:
    """
    以拉普拉斯 Hessian 的牛頓步加 Armijo 回溯精修

    返回:
        (間隙最小的迭代點, 其間隙, 迭代次數, 是否因數值精度停滯)
    """
    oracle = get_settings().oracle
    best_z, best_gap = z, _certificate_gap(problem, z, bound)
    stalled = False
    it = 0
    for it in range(oracle.newton_max_iter):
        g0 = problem.value(z)
        grad = problem.grad(z)
        gap = float(np.abs(grad).sum()) * 2.0 * bound
        if gap < best_gap:
            best_z, best_gap = z, gap
        if gap <= _relative_tol(tol, g0):
            break
        lap = hessian_laplacian(problem.inst, problem.state(z), problem.hp, problem.distances)
        direction = np.linalg.lstsq(lap, grad, rcond=None)[0]
        slope = float(grad @ direction)
        if not np.isfinite(slope) or slope <= 0:
            direction, slope = grad, float(grad @ grad)

        t = 1.0
        while t > 1e-14:
            if problem.value(z + t * direction) >= g0 + oracle.armijo * t * slope:
                break
            t *= 0.5
        else:
            stalled = True
            break
        z = z + t * direction
    else:
        gap = _certificate_gap(problem, z, bound)
        if gap < best_gap:
            best_z, best_gap = z, gap
    return best_z, best_gap, it + 1, stalled


def _solve_unconstrained(problem: _UnitProblem, tol: float) -> Tuple[np.ndarray, float, int]:
    oracle = get_settings().oracle
    bound = linf_bound(problem.inst.mu.masses, problem.inst.nu.masses, problem.hp, 1.0)
    result = minimize(
        problem.negated, problem.warm_start(), jac=True, method='L-BFGS-B',
        options={'maxiter': oracle.lbfgs_max_iter, 'gtol': 1e-13, 'ftol': 1e-16},
    )
    z, gap, newton_iters, stalled = _newton_refine(problem, result.x, tol, bound)
    g = problem.value(z)
    iterations = int(result.nit) + newton_iters
    if gap <= _relative_tol(tol, g):
        return z, gap, iterations
    if gap <= _relative_tol(oracle.stall_tolerance, g):
        get_logger().warning(
            f"精確 R_ρ 在數值精度處{'停滯' if stalled else '達到迭代上限'}，"
            f"採用間隙最小的迭代點（間隙 {gap:.3e}）")
        return z, gap, iterations
    raise NonConvergence(
        f"精確 R_ρ 未收斂：對偶間隙估計 {gap:.3e} > {_relative_tol(tol, g):.1e}")


def _solve_constrained(problem: _UnitProblem, tol: float) -> Tuple[np.ndarray, float, int]:
    """存在零距離對時，以 α_i ≤ β_j 的硬約束求解"""
    oracle = get_settings().oracle
    n, size = problem.n, problem.n + problem.inst.m
    rows = np.zeros((len(problem.zero_pairs), size))
    for k, (i, j) in enumerate(problem.zero_pairs):
        rows[k, n + j] = 1.0
        rows[k, i] = -1.0
    constraint = {'type': 'ineq', 'fun': lambda z: rows @ z, 'jac': lambda z: rows}
    result = minimize(
        problem.negated, np.zeros(size), jac=True, method='SLSQP',
        constraints=[constraint],
        options={'maxiter': oracle.slsqp_max_iter, 'ftol': min(tol, 1e-14)},
    )
    if result.status == 9:
        raise NonConvergence(f"約束對偶求解超過迭代上限: {result.message}")
    if not result.success:
        get_logger().warning(f"約束對偶求解提前結束: {result.message}")
    return result.x, float('nan'), int(result.nit)


def _fill_zero_pairs(problem: _UnitProblem, entries: np.ndarray) -> np.ndarray:
    """以非負最小平方將剩餘邊際分配到零距離對上"""
    pairs = problem.zero_pairs
    if len(pairs) == 0:
        return entries
    inst = problem.inst
    n, m = inst.n, inst.m
    residual = np.concatenate([
        inst.mu.masses - entries.sum(axis=1),
        inst.nu.masses - entries.sum(axis=0),
    ])
    design = np.zeros((n + m, len(pairs)))
    for k, (i, j) in enumerate(pairs):
        design[i, k] = 1.0
        design[n + j, k] = 1.0
    mass, _ = nnls(design, residual)
    filled = entries.copy()
    filled[pairs[:, 0], pairs[:, 1]] += mass
    return filled


@log_execution_time()
def exact_rrho(inst: ProblemInstance, hp: HolderPair,
               tol: Optional[float] = None) -> OracleResult:
    """
    高精度計算 R_ρ(μ, ν)

    參數:
        inst: 實例（通常由 make_instance 建立，允許零距離）
        hp: Hölder 共軛
        tol: 對偶間隙容差（以 r^ρ 為單位），預設 OracleSettings.tolerance

    返回:
        OracleResult，value 為 R_ρ，certificate 為恢復的耦合
    """
    check_oracle_size(inst)
    if tol is None:
        tol = get_settings().oracle.tolerance
    problem = _UnitProblem(inst, hp)

    if len(problem.zero_pairs):
        z, gap, iterations = _solve_constrained(problem, tol)
    else:
        z, gap, iterations = _solve_unconstrained(problem, tol)

    state = problem.state(z)
    g_unit = problem.value(z)
    entries = coupling_from_dual(inst, state, hp, problem.distances).entries
    coupling = Coupling(_fill_zero_pairs(problem, entries))

    scale_rho = problem.scale ** hp.rho
    value = rho_root(g_unit, hp.rho) * problem.scale
    dual = DualState(state.alpha * scale_rho, state.beta * scale_rho)
    get_logger().debug(f"精確 R_ρ = {value:.12g}（{iterations} 次迭代，間隙 {gap:.2e}）")
    result = OracleResult(
        value=value,
        certificate=coupling,
        kind=CertificateKind.COUPLING,
        solver_tol=tol,
        dual=dual,
        iterations=iterations,
    )
    return verified_result(result, inst, "exact_rrho")


# ==========================================
# 2×2 三分搜尋
# ==========================================
def coupling_2x2(mu: np.ndarray, nu: np.ndarray, t: float) -> np.ndarray:
    """γ(t) = [[t, μ1−t], [ν1−t, μ2−ν1+t]]"""
    return np.array([[t, mu[0] - t], [nu[0] - t, mu[1] - nu[0] + t]])


def ternary_2x2(inst: ProblemInstance, hp: HolderPair, tol: float = 1e-10) -> float:
    """
    2×2 實例上以三分搜尋最小化 ℓ_ρ 成本

    返回:
        R_ρ
    """
    if inst.n != 2 or inst.m != 2:
        raise ValueError(f"ternary_2x2 需要 2×2 實例，收到 {inst.n}×{inst.m}")
    mu, nu = inst.mu.masses, inst.nu.masses
    dist = inst.cross_distances()
    prod = np.outer(mu, nu)

    def cost(t: float) -> float:
        gamma = np.maximum(coupling_2x2(mu, nu, t), 0.0)
        return float(np.sum(prod ** (1.0 - hp.rho) * (gamma * dist) ** hp.rho))

    lo = max(0.0, nu[0] - mu[1])
    hi = min(mu[0], nu[0])
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if cost(m1) <= cost(m2):
            hi = m2
        else:
            lo = m1
    t = 0.5 * (lo + hi)
    return primal_cost(inst, coupling_2x2(mu, nu, t), hp.rho, distances=dist)

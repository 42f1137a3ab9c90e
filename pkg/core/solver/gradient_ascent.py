"""
符號梯度上升求解器
α 優先的符號步更新、終止判定、懲罰項估計與 ρ 次方根輸出
"""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from config import get_settings
from utils.logger import get_logger
from utils.math_utils import rho_root

from ..base.domain import HolderPair, ParamMode, SolverParams, WeightedPointSet
from ..base.errors import MaxItersExceeded
from ..base.params import derive_params, holder_pair
from ..dual.objective import DualState
from ..geometry.preprocess import ProblemInstance, preprocess
from .estimators import EngineFactory, EngineKind, est_alpha, est_beta, est_penalty


# (迭代, Σμ|1−η̂|, Σν|ξ̂−1|, g 或 None)
ProgressCallback = Callable[[int, float, float, Optional[float]], None]


class TerminationCause(Enum):
    """終止原因"""
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"


@dataclass
class SolverReport:
    """求解報告"""
    estimate: float
    dual_value: float
    iterations: int
    termination: TerminationCause
    alpha_updates: int
    beta_updates: int
    params_echo: SolverParams
    r: float
    wall_time: float
    seed: int
    engine: EngineKind
    raw_dual_value: float = 0.0
    penalty: float = 0.0
    alpha_residual: float = 0.0
    beta_residual: float = 0.0
    g_violations: int = 0
    trajectory: List[Tuple[int, float, float]] = field(default_factory=list)
    state: Optional[DualState] = field(default=None, repr=False)

    @property
    def converged(self) -> bool:
        return self.termination is TerminationCause.CONVERGED

    def to_dict(self) -> Dict[str, Any]:
        """JSON 報告（欄位見 config/report_schema.json）"""
        return {
            'estimate': self.estimate,
            'dual_value': self.dual_value,
            'r': self.r,
            'rho': self.params_echo.rho,
            'eps': self.params_echo.eps,
            'iterations': self.iterations,
            'termination': self.termination.value,
            'alpha_updates': self.alpha_updates,
            'beta_updates': self.beta_updates,
            'seed': self.seed,
            'mode': self.params_echo.mode.value,
            'engine': self.engine.value,
            'wall_time_ms': self.wall_time * 1000.0,
            'params': self.params_echo.to_dict(),
        }


def solve(inst: ProblemInstance,
          hp: HolderPair,
          params: SolverParams,
          engine: Union[EngineKind, str] = EngineKind.EXACT,
          seed: int = 0,
          progress_callback: Optional[ProgressCallback] = None,
          record_trajectory: bool = False,
          raise_on_max_iters: bool = True,
          iteration_cap: Optional[int] = None) -> SolverReport:
    """
    執行梯度上升

    每次迭代估計 η̂、ξ̂；若 Σμ_i|1−η̂_i| ≥ ε₂ 則 α += λr^ρ·sign(1−η̂)，
    否則若 Σν_j|ξ̂_j−1| ≥ ε₂ 則 β += λr^ρ·sign(ξ̂−1)，否則終止並估計懲罰項。

    參數:
        inst: 前處理後的實例
        hp: Hölder 共軛
        params: 求解參數
        engine: exact 或 sampling
        seed: 隨機種子
        progress_callback: 每次迭代呼叫 (t, Σμ|1−η̂|, Σν|ξ̂−1|, g)
        record_trajectory: 是否記錄 (t, g, 懲罰項)（僅精確引擎）
        raise_on_max_iters: 超過迭代上限時是否拋出 MaxItersExceeded
        iteration_cap: 額外的迭代預算（不改變 params，報告仍回顯原參數）

    返回:
        SolverReport
    """
    logger = get_logger()
    solver_settings = get_settings().solver
    start = time.perf_counter()

    eng = EngineFactory.create(engine, inst, hp, params, seed)
    mu, nu = inst.mu.masses, inst.nu.masses
    r_rho = inst.r ** hp.rho
    step = params.lam * r_rho
    limit = params.max_iters if iteration_cap is None else min(params.max_iters, iteration_cap)
    g_floor = -solver_settings.g_invariant_tol * r_rho

    # α、β 以步數整數儲存
    alpha_steps = np.zeros(inst.n, dtype=np.int64)
    beta_steps = np.zeros(inst.m, dtype=np.int64)
    state = DualState.zeros(inst.n, inst.m)
    alpha_updates = beta_updates = violations = 0
    trajectory: List[Tuple[int, float, float]] = []
    a_res = b_res = float('nan')
    converged = False

    logger.debug(
        f"開始求解: n={inst.n}, m={inst.m}, ρ={hp.rho}, 引擎={eng.kind.value}, "
        f"λ={params.lam:.3e}, ε₂={params.eps2:.3e}, 上限={limit}"
    )

    iteration = 0
    for iteration in range(limit):
        state.iteration = iteration
        eng.iteration = iteration

        # paper 模式下 kde_eps 即 ε₁
        eta = est_alpha(inst, state, hp, params.kde_eps, params.tau, eng)
        xi = est_beta(inst, state, hp, params.kde_eps, params.tau, eng)
        a_res = float(mu @ np.abs(1.0 - eta))
        b_res = float(nu @ np.abs(xi - 1.0))

        g = eng.objective(state)
        if g is not None:
            if g < g_floor:
                violations += 1
                logger.warning(f"第 {iteration} 次迭代對偶目標為負: g={g:.6e}")
            if record_trajectory:
                linear = float(mu @ state.alpha - nu @ state.beta)
                trajectory.append((iteration, g, linear - g))
        if progress_callback is not None:
            progress_callback(iteration, a_res, b_res, g)
        if iteration % solver_settings.log_every == 0:
            logger.debug(f"迭代 {iteration}: Σμ|1−η̂|={a_res:.4e}, Σν|ξ̂−1|={b_res:.4e}")

        if a_res >= params.eps2:
            alpha_steps += np.sign(1.0 - eta).astype(np.int64)
            state.alpha = alpha_steps * step
            alpha_updates += 1
            continue
        if b_res >= params.eps2:
            beta_steps += np.sign(xi - 1.0).astype(np.int64)
            state.beta = beta_steps * step
            beta_updates += 1
            continue
        converged = True
        break

    iterations = iteration + 1 if limit > 0 else 0
    omega = est_penalty(inst, state, hp, params.kde_eps, params.eps * r_rho, eng)
    raw = float(mu @ state.alpha - nu @ state.beta) - omega
    estimate = rho_root(raw, hp.rho)

    report = SolverReport(
        estimate=estimate,
        dual_value=raw,
        iterations=iterations,
        termination=TerminationCause.CONVERGED if converged else TerminationCause.MAX_ITERS,
        alpha_updates=alpha_updates,
        beta_updates=beta_updates,
        params_echo=params,
        r=inst.r,
        wall_time=time.perf_counter() - start,
        seed=int(seed),
        engine=eng.kind,
        raw_dual_value=raw,
        penalty=omega,
        alpha_residual=a_res,
        beta_residual=b_res,
        g_violations=violations,
        trajectory=trajectory,
        state=state,
    )

    if not converged:
        logger.warning(f"超過最大迭代次數 {limit}，目前估計 {estimate:.6g}")
        if raise_on_max_iters:
            raise MaxItersExceeded(limit, report)
    else:
        logger.info(
            f"收斂: {iterations} 次迭代 (α {alpha_updates} / β {beta_updates})，"
            f"估計 R_ρ={estimate:.6g}"
        )
    return report


def estimate_rrho(mu: WeightedPointSet,
                  nu: WeightedPointSet,
                  rho: float,
                  eps: float,
                  mode: Union[ParamMode, str] = ParamMode.PRACTICAL,
                  engine: Union[EngineKind, str] = EngineKind.EXACT,
                  seed: int = 0,
                  overrides: Optional[Mapping[str, Any]] = None,
                  jl_dim: Optional[int] = None,
                  progress_callback: Optional[ProgressCallback] = None,
                  record_trajectory: bool = False,
                  raise_on_max_iters: bool = True,
                  iteration_cap: Optional[int] = None) -> Tuple[SolverReport, ProblemInstance]:
    """
    完整流程：推導參數 → 前處理 → （實用模式）依實際間距重新推導 → 求解

    返回:
        (SolverReport, 前處理後的實例)
    """
    hp = holder_pair(rho)
    mode = ParamMode(mode)
    initial = derive_params(rho, eps, mu.size, nu.size, mode, overrides)
    inst = preprocess(mu, nu, initial, jl_dim=jl_dim, seed=seed)

    if mode is ParamMode.PRACTICAL:
        params = derive_params(
            rho, eps, inst.n, inst.m, mode, overrides,
            sigma_actual=inst.sigma_actual,
            min_mass_product=inst.min_mass_product,
        )
    else:
        params = initial

    report = solve(inst, hp, params, engine, seed,
                   progress_callback=progress_callback,
                   record_trajectory=record_trajectory,
                   raise_on_max_iters=raise_on_max_iters,
                   iteration_cap=iteration_cap)
    return report, inst

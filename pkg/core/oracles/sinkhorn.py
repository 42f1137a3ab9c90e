"""
Sinkhorn 基準
Gibbs 核的交替矩陣縮放；η 相對距離尺度過小時改用對數域
"""

from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from config import get_settings
from utils.logger import get_logger, log_execution_time

from ..base.domain import Coupling
from ..base.errors import NumericalUnderflow
from ..geometry.preprocess import ProblemInstance
from .rrho import check_oracle_size

# 每 N 次迭代檢查一次邊際
_CHECK_EVERY = 10


def entropy(gamma: np.ndarray) -> float:
    """H(γ) = −Σ γ log γ（0 log 0 = 0）"""
    positive = gamma[gamma > 0]
    return float(-np.sum(positive * np.log(positive)))


def _plain(mu, nu, dist, eta, tol, max_iter) -> Tuple[np.ndarray, bool]:
    kernel = np.exp(-dist / eta)
    if np.any(kernel.sum(axis=1) == 0) or np.any(kernel.sum(axis=0) == 0):
        raise NumericalUnderflow(f"Gibbs 核下溢 (η={eta:.3g})，請改用對數域")
    u = np.ones_like(mu)
    v = np.ones_like(nu)
    for it in range(max_iter):
        v = nu / (kernel.T @ u)
        u = mu / (kernel @ v)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise NumericalUnderflow(f"Sinkhorn 縮放向量溢位 (η={eta:.3g})")
        if it % _CHECK_EVERY == 0:
            gamma = u[:, None] * kernel * v[None, :]
            if np.abs(gamma.sum(axis=0) - nu).sum() <= tol:
                return gamma, True
    return u[:, None] * kernel * v[None, :], False


def _log_domain(mu, nu, dist, eta, tol, max_iter) -> Tuple[np.ndarray, bool]:
    scaled = -dist / eta
    log_mu, log_nu = np.log(mu), np.log(nu)
    f = np.zeros_like(mu)
    g = np.zeros_like(nu)
    for it in range(max_iter):
        g = log_nu - logsumexp(scaled + f[:, None], axis=0)
        f = log_mu - logsumexp(scaled + g[None, :], axis=1)
        if it % _CHECK_EVERY == 0:
            gamma = np.exp(scaled + f[:, None] + g[None, :])
            if np.abs(gamma.sum(axis=0) - nu).sum() <= tol:
                return gamma, True
    return np.exp(scaled + f[:, None] + g[None, :]), False


@log_execution_time()
def sinkhorn(inst: ProblemInstance,
             eta: float,
             tol: Optional[float] = None,
             max_iter: Optional[int] = None,
             log_domain: Optional[bool] = None,
             return_coupling: bool = False) -> Union[float, Tuple[float, Coupling]]:
    """
    熵正則化運輸成本 ⟨γ, D⟩ − η·H(γ)

    參數:
        inst: 實例
        eta: 正則化強度 η > 0（長度單位）
        tol: 邊際違反容差（ℓ1）
        max_iter: 最大迭代次數
        log_domain: None 時於 η < 0.05·r 使用對數域
        return_coupling: 是否一併返回縮放後的耦合

    返回:
        目標值，或 (目標值, 耦合)
    """
    if eta <= 0:
        raise ValueError(f"η 必須 > 0，收到: {eta}")
    check_oracle_size(inst)
    oracle = get_settings().oracle
    tol = oracle.sinkhorn_tol if tol is None else tol
    max_iter = oracle.sinkhorn_max_iter if max_iter is None else max_iter
    if log_domain is None:
        log_domain = eta < oracle.sinkhorn_log_threshold * inst.r

    mu, nu = inst.mu.masses, inst.nu.masses
    dist = inst.cross_distances()
    solver = _log_domain if log_domain else _plain
    gamma, converged = solver(mu, nu, dist, eta, tol, max_iter)
    if not converged:
        get_logger().warning(f"Sinkhorn 在 {max_iter} 次迭代內未達容差 {tol:.1e}")

    value = float(np.sum(gamma * dist)) - eta * entropy(gamma)
    if return_coupling:
        return value, Coupling(gamma)
    return value

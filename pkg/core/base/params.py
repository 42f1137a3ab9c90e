"""
參數推導模組
由 (ρ, ε) 與實例大小推導步長、終止門檻與估計精度
"""

import math
from typing import Any, Mapping, Optional, Union

from config import get_settings

from .domain import HolderPair, ParamMode, SolverParams
from .errors import EmptyInput, EpsOutOfRange, RhoOutOfRange


def holder_pair(rho: float) -> HolderPair:
    """
    計算 ρ 的 Hölder 共軛

    參數:
        rho: ρ ∈ (1, 2]

    返回:
        HolderPair(rho, s = ρ/(ρ-1), C_s = (1/s)(1-1/s)^(s-1))
    """
    if not (1.0 < rho <= 2.0) or not math.isfinite(rho):
        raise RhoOutOfRange(rho)
    s = rho / (rho - 1.0)
    c_s = (1.0 / s) * (1.0 - 1.0 / s) ** (s - 1.0)
    return HolderPair(rho=float(rho), s=s, c_s=c_s)


def derive_params(rho: float,
                  eps: float,
                  n: int,
                  m: int,
                  mode: Union[ParamMode, str] = ParamMode.PRACTICAL,
                  overrides: Optional[Mapping[str, Any]] = None,
                  sigma_actual: Optional[float] = None,
                  min_mass_product: Optional[float] = None,
                  constants: Optional[Mapping[str, float]] = None,
                  delta: Optional[float] = None) -> SolverParams:
    """
    推導求解參數

    參數:
        rho: ρ ∈ (1, 2]
        eps: 目標加性精度 ε ∈ (0, 1/4]（以 r 為單位）
        n, m: 兩個點集的支撐大小
        mode: paper 或 practical
        overrides: 欄位覆寫（兩種模式皆可，lambda 以 r^ρ 的比例表示）
        sigma_actual: 前處理後實際的最小距離比例（practical 模式）
        min_mass_product: inf μ_i·ν_j（practical 模式，預設 1/(nm)）
        constants: c0..c4，預設取自 SolverSettings
        delta: 總失敗機率，預設取自 SolverSettings

    返回:
        SolverParams
    """
    if not (0.0 < eps <= 0.25):
        raise EpsOutOfRange(eps)
    if n < 1 or m < 1:
        raise EmptyInput(f"支撐大小必須 >= 1，收到 n={n}, m={m}")
    mode = ParamMode(mode)
    hp = holder_pair(rho)
    settings = get_settings()
    c = dict(settings.solver.constants())
    if constants:
        c.update(constants)
    if delta is None:
        delta = settings.solver.delta

    exponent = (rho - 1.0) / rho
    floor = eps ** rho
    sigma_mu = floor / n
    sigma_nu = floor

    if mode is ParamMode.PAPER:
        sigma = floor
        eps2 = c['c0'] * eps * (sigma_mu * sigma_nu / (m * n)) ** exponent
    else:
        sigma = floor if sigma_actual is None else float(sigma_actual)
        if min_mass_product is None:
            min_mass_product = 1.0 / (n * m)
        eps2 = c['c0'] * eps * float(min_mass_product) ** exponent

    eps1 = c['c1'] * eps2 / hp.s
    tau = c['c2'] * eps2
    lam = c['c3'] * eps2 * (sigma / hp.s) ** 2
    max_iters = math.ceil(c['c4'] / (lam * eps2))
    if mode is ParamMode.PRACTICAL:
        max_iters = min(max_iters, settings.solver.practical_max_iters)

    # paper 模式的 ε1 使每節點重複次數不可行，practical 模式改用 ε
    kde_eps = eps1 if mode is ParamMode.PAPER else eps

    params = SolverParams(
        eps=float(eps),
        sigma=float(sigma),
        sigma_mu=sigma_mu,
        sigma_nu=sigma_nu,
        eps1=eps1,
        eps2=eps2,
        tau=tau,
        lam=lam,
        delta=float(delta),
        max_iters=int(max_iters),
        mode=mode,
        rho=hp.rho,
        s=hp.s,
        kde_eps=kde_eps,
        eps0=settings.kde.eps0_factor * eps,
    )
    return params.with_overrides(overrides)

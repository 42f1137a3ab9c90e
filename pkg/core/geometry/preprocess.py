"""
前處理模組
低質量剪枝、升維以保證最小間距、半徑計算與可選的隨機投影
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from config import get_settings
from utils.logger import get_logger

from ..base.domain import Coupling, SolverParams, WeightedPointSet
from ..base.errors import AllMassPruned, DenseTooLarge, DimensionMismatch
from .projection import default_jl_dim, jl_project


# 分塊計算距離極值時每塊的列數
_CHUNK_ROWS = 1024


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """
    前處理後的問題實例

    r 為原始資料的最大交叉距離；sigma_actual 為最小交叉距離 / r；
    diameter 為處理後的最大交叉距離。
    """
    mu: WeightedPointSet
    nu: WeightedPointSet
    r: float
    sigma_actual: float
    diameter: float
    lifted: bool = False
    sigma: float = 0.0
    pruned_mass_mu: float = 0.0
    pruned_mass_nu: float = 0.0
    dim_reduced: bool = False
    keep_mu: Optional[np.ndarray] = field(default=None, repr=False)
    keep_nu: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.mu.size

    @property
    def m(self) -> int:
        return self.nu.size

    @property
    def dim(self) -> int:
        return self.mu.dim

    @property
    def min_distance(self) -> float:
        return self.sigma_actual * self.r

    @property
    def aspect_ratio(self) -> float:
        """Φ = 最大 / 最小交叉距離（有零距離時為無窮大）"""
        if self.min_distance <= 0:
            return float('inf')
        return self.diameter / self.min_distance

    @property
    def min_mass_product(self) -> float:
        return float(self.mu.masses.min() * self.nu.masses.min())

    def cross_distances(self, limit: Optional[int] = None) -> np.ndarray:
        """
        稠密交叉距離矩陣（僅限 oracle 規模）

        參數:
            limit: 元素數上限，預設 OracleSettings.dense_limit
        """
        if limit is None:
            limit = get_settings().oracle.dense_limit
        if self.n * self.m > limit:
            raise DenseTooLarge(self.n, self.m, limit)
        return cdist(self.mu.points, self.nu.points)

    def swapped(self) -> 'ProblemInstance':
        """交換 μ 與 ν 的角色"""
        return ProblemInstance(
            mu=self.nu, nu=self.mu, r=self.r, sigma_actual=self.sigma_actual,
            diameter=self.diameter, lifted=self.lifted, sigma=self.sigma,
            pruned_mass_mu=self.pruned_mass_nu, pruned_mass_nu=self.pruned_mass_mu,
            dim_reduced=self.dim_reduced, keep_mu=self.keep_nu, keep_nu=self.keep_mu,
        )


# ==========================================
# 距離工具
# ==========================================
def cross_distance_range(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """
    分塊計算最小與最大交叉距離，不保留完整矩陣

    返回:
        (最小距離, 最大距離)
    """
    lo, hi = np.inf, 0.0
    for start in range(0, x.shape[0], _CHUNK_ROWS):
        block = cdist(x[start:start + _CHUNK_ROWS], y)
        lo = min(lo, float(block.min()))
        hi = max(hi, float(block.max()))
    return lo, hi


def _check_dims(mu: WeightedPointSet, nu: WeightedPointSet):
    if mu.dim != nu.dim:
        raise DimensionMismatch(mu.dim, nu.dim, "μ 與 ν")


def _radius(raw_max: float) -> float:
    if raw_max > 0:
        return raw_max
    get_logger().warning("所有點重合 (r = 0)，改以 r = 1 作為長度單位")
    return 1.0


# ==========================================
# 升維與剪枝
# ==========================================
def lift(mu: WeightedPointSet, nu: WeightedPointSet,
         sigma: float, r: float) -> Tuple[WeightedPointSet, WeightedPointSet]:
    """
    增加一個座標：x 取 σr，y 取 0

    參數:
        mu, nu: 點集
        sigma: 間距比例 σ ∈ (0, 1)
        r: 不小於最大交叉距離的半徑

    返回:
        (升維後 μ, 升維後 ν)，交叉距離皆位於 [σr, r·sqrt(1+σ²)]
    """
    _check_dims(mu, nu)
    x = np.hstack([mu.points, np.full((mu.size, 1), sigma * r)])
    y = np.hstack([nu.points, np.zeros((nu.size, 1))])
    return mu.with_points(x), nu.with_points(y)


def prune_low_mass(w: WeightedPointSet, floor: float) -> Tuple[WeightedPointSet, float]:
    """
    移除質量低於 floor/k 的點並重新正規化

    參數:
        w: 點集（k 個點）
        floor: 門檻 ∈ [0, 1)

    返回:
        (剪枝後點集, 被移除的總質量 ζ)
    """
    keep, zeta = _prune_mask(w, floor)
    if keep.all():
        return w, 0.0
    return _apply_mask(w, keep), zeta


def _prune_mask(w: WeightedPointSet, floor: float) -> Tuple[np.ndarray, float]:
    if not 0.0 <= floor < 1.0:
        raise ValueError(f"剪枝門檻必須位於 [0, 1)，收到: {floor}")
    keep = w.masses >= floor / w.size
    if not keep.any():
        raise AllMassPruned(floor, w.size)
    return keep, float(w.masses[~keep].sum())


def _apply_mask(w: WeightedPointSet, keep: np.ndarray) -> WeightedPointSet:
    survivors = w.masses[keep]
    return WeightedPointSet(w.points[keep], survivors / survivors.sum())


def prune_coupling(masses: np.ndarray, keep: np.ndarray) -> Coupling:
    """
    原分佈與剪枝後分佈之間的顯式耦合

    存活點留在原位；被移除的點 i 依存活點質量比例分給 j：μ_i·μ_j/(1-ζ)。

    參數:
        masses: 原始質量（長度 k）
        keep: 存活遮罩

    返回:
        k × (存活數) 的耦合，列和為原質量、行和為剪枝後質量
    """
    masses = np.asarray(masses, dtype=float)
    keep = np.asarray(keep, dtype=bool)
    zeta = float(masses[~keep].sum())
    survivors = masses[keep]
    entries = np.zeros((masses.size, survivors.size))
    entries[np.flatnonzero(keep), np.arange(survivors.size)] = survivors
    entries[~keep] = np.outer(masses[~keep], survivors) / (1.0 - zeta)
    return Coupling(entries)


def perturbation_bound_mu(n: int, rho: float, sigma: float, sigma_mu: float) -> float:
    """R_ρ(μ, μ') / r 的上界 (n^(ρ-1)·σ/σ_μ^(ρ-1) + σ_μ)^(1/ρ)"""
    return (n ** (rho - 1.0) * sigma / sigma_mu ** (rho - 1.0) + sigma_mu) ** (1.0 / rho)


def perturbation_bound_nu(rho: float, sigma_nu: float) -> float:
    """R_ρ(ν, ν') / r 的上界 σ_ν^(1/ρ)"""
    return sigma_nu ** (1.0 / rho)


# ==========================================
# 實例建構
# ==========================================
def make_instance(mu: WeightedPointSet, nu: WeightedPointSet) -> ProblemInstance:
    """
    不經剪枝與升維，直接由原始點集建立實例（oracle 與測試用）

    允許零交叉距離，此時 sigma_actual = 0。
    """
    _check_dims(mu, nu)
    lo, hi = cross_distance_range(mu.points, nu.points)
    r = _radius(hi)
    return ProblemInstance(mu=mu, nu=nu, r=r, sigma_actual=lo / r, diameter=hi)


def preprocess(mu: WeightedPointSet,
               nu: WeightedPointSet,
               params: SolverParams,
               jl_dim: Optional[int] = None,
               seed: int = 0) -> ProblemInstance:
    """
    完整前處理：可選投影 → 計算 r → 剪枝 → 升維

    參數:
        mu, nu: 原始點集
        params: 提供 σ、σ_μ、σ_ν
        jl_dim: 投影目標維度（None 不投影，0 使用預設維度）
        seed: 投影種子

    返回:
        ProblemInstance，交叉距離位於 [σr, r·sqrt(1+σ²)]
    """
    _check_dims(mu, nu)
    logger = get_logger()

    dim_reduced = False
    if jl_dim is not None:
        target = jl_dim or default_jl_dim(mu.size, nu.size, params.eps, mu.dim)
        x, y, dim_reduced = jl_project(mu.points, nu.points, target, seed)
        if dim_reduced:
            mu, nu = mu.with_points(x), nu.with_points(y)
            logger.debug(f"隨機投影: 維度 {x.shape[1]}")

    _, raw_max = cross_distance_range(mu.points, nu.points)
    r = _radius(raw_max)

    keep_mu, zeta_mu = _prune_mask(mu, params.sigma_mu)
    keep_nu, zeta_nu = _prune_mask(nu, params.sigma_nu)
    mu_p = _apply_mask(mu, keep_mu) if not keep_mu.all() else mu
    nu_p = _apply_mask(nu, keep_nu) if not keep_nu.all() else nu
    if zeta_mu > 0 or zeta_nu > 0:
        logger.info(
            f"低質量剪枝: μ 移除 {int((~keep_mu).sum())} 點 (ζ={zeta_mu:.3g})，"
            f"ν 移除 {int((~keep_nu).sum())} 點 (ζ={zeta_nu:.3g})"
        )

    mu_l, nu_l = lift(mu_p, nu_p, params.sigma, r)
    lo, hi = cross_distance_range(mu_l.points, nu_l.points)

    return ProblemInstance(
        mu=mu_l,
        nu=nu_l,
        r=r,
        sigma_actual=min(1.0, lo / r),
        diameter=hi,
        lifted=True,
        sigma=params.sigma,
        pruned_mass_mu=zeta_mu,
        pruned_mass_nu=zeta_nu,
        dim_reduced=dim_reduced,
        keep_mu=keep_mu,
        keep_nu=keep_nu,
    )

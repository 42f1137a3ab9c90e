"""
核心資料型別模組
定義加權點集、Hölder 共軛對、求解參數與耦合矩陣
"""

from dataclasses import dataclass, asdict, fields, replace
from enum import Enum
from typing import Any, Dict, Mapping, Optional

import numpy as np

from .errors import (
    CouplingMarginalViolation,
    DimensionMismatch,
    EmptyInput,
    OverrideNonPositive,
    PaperModeOverride,
    UnknownOverride,
)


MASS_SUM_TOL = 1e-9


class ParamMode(Enum):
    """參數推導模式"""
    PAPER = "paper"
    PRACTICAL = "practical"


def _frozen_array(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if ndim == 2 and arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WeightedPointSet:
    """
    加權點集（離散機率分佈）

    points 為 (n, d) 陣列，masses 為長度 n 的正質量，總和為 1。
    """
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        points = _frozen_array(self.points, 2)
        masses = _frozen_array(self.masses, 1)
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'masses', masses)
        self.validate()

    def validate(self):
        """驗證點集不變量"""
        if self.masses.size == 0 or self.points.shape[0] == 0:
            raise EmptyInput("點集不可為空")
        if self.points.ndim != 2:
            raise DimensionMismatch(2, self.points.ndim, "points 陣列")
        if self.points.shape[0] != self.masses.shape[0]:
            raise DimensionMismatch(
                self.points.shape[0], self.masses.shape[0], "質量個數")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("點座標必須為有限值")
        if np.any(self.masses <= 0) or not np.all(np.isfinite(self.masses)):
            raise ValueError("所有質量必須為正的有限值")
        total = float(self.masses.sum())
        if abs(total - 1.0) > MASS_SUM_TOL:
            raise ValueError(f"質量總和必須為 1，實際為 {total:.12g}")

    @classmethod
    def from_arrays(cls, points, masses, normalize: bool = True) -> 'WeightedPointSet':
        """
        由原始陣列建立點集，移除零質量點並正規化

        參數:
            points: (n, d) 座標
            masses: 長度 n 的非負質量
            normalize: 是否將質量正規化為總和 1

        返回:
            WeightedPointSet
        """
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        w = np.array(masses, dtype=float).ravel()
        if pts.shape[0] != w.shape[0]:
            raise DimensionMismatch(pts.shape[0], w.shape[0], "質量個數")
        if np.any(w < 0):
            raise ValueError("質量不可為負")
        keep = w > 0
        pts, w = pts[keep], w[keep]
        if w.size == 0:
            raise EmptyInput("移除零質量點後點集為空")
        if normalize:
            w = w / w.sum()
        return cls(pts, w)

    @classmethod
    def uniform(cls, points) -> 'WeightedPointSet':
        """建立均勻質量的點集"""
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        n = pts.shape[0]
        return cls(pts, np.full(n, 1.0 / n))

    @property
    def size(self) -> int:
        return int(self.masses.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def with_points(self, points: np.ndarray) -> 'WeightedPointSet':
        """以新座標取代（質量不變）"""
        return WeightedPointSet(points, self.masses)


@dataclass(frozen=True)
class HolderPair:
    """ρ 與其 Hölder 共軛 s，以及常數 C_s"""
    rho: float
    s: float
    c_s: float

    @classmethod
    def from_conjugate(cls, s: float) -> 'HolderPair':
        """由共軛指數 s (s >= 2) 建立"""
        from .params import holder_pair
        if s < 2:
            raise ValueError(f"共軛指數 s 必須 >= 2，收到: {s}")
        return holder_pair(s / (s - 1.0))

    @property
    def s_c_s(self) -> float:
        """s·C_s = (1 - 1/s)^(s-1)"""
        return self.s * self.c_s


@dataclass(frozen=True)
class SolverParams:
    """
    求解參數組

    lam 為步長，以 r^ρ 的比例儲存；to_dict 輸出時鍵名為 lambda。
    """
    eps: float
    sigma: float
    sigma_mu: float
    sigma_nu: float
    eps1: float
    eps2: float
    tau: float
    lam: float
    delta: float
    max_iters: int
    mode: ParamMode
    rho: float
    s: float
    kde_eps: float
    eps0: float

    def __post_init__(self):
        self.validate()

    def validate(self):
        """驗證所有估計參數皆為正"""
        for name in ('eps', 'eps1', 'eps2', 'tau', 'lam', 'kde_eps', 'eps0'):
            value = getattr(self, name)
            if not (value > 0 and np.isfinite(value)):
                raise OverrideNonPositive(_public_name(name), value)
        if not 0 < self.delta < 1:
            raise OverrideNonPositive('delta', self.delta)
        if self.max_iters < 1:
            raise OverrideNonPositive('max_iters', self.max_iters)

    def with_overrides(self, overrides: Optional[Mapping[str, Any]]) -> 'SolverParams':
        """
        套用參數覆寫

        參數:
            overrides: 欄位名稱到新值的映射（可用 lambda 表示 lam），僅限 practical 模式

        返回:
            新的 SolverParams
        """
        if not overrides:
            return self
        if self.mode is ParamMode.PAPER:
            raise PaperModeOverride(sorted(str(k) for k in overrides))
        known = {f.name for f in fields(self)} - {'mode', 'rho', 's'}
        changes: Dict[str, Any] = {}
        for key, value in overrides.items():
            name = 'lam' if key == 'lambda' else key.replace('-', '_')
            if name not in known:
                raise UnknownOverride(key, sorted(_public_name(k) for k in known))
            if value is None:
                continue
            try:
                numeric = float(value)
            except (TypeError, ValueError):
                raise OverrideNonPositive(key, value) from None
            if not numeric > 0:
                raise OverrideNonPositive(key, value)
            changes[name] = int(numeric) if name == 'max_iters' else numeric
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        """輸出為報告用字典"""
        data = {_public_name(k): v for k, v in asdict(self).items()}
        data['mode'] = self.mode.value
        return data


def _public_name(name: str) -> str:
    return 'lambda' if name == 'lam' else name


@dataclass(frozen=True, eq=False)
class Coupling:
    """耦合矩陣（僅於 oracle 規模使用稠密形式）"""
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'entries', np.asarray(self.entries, dtype=float))

    @property
    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    def marginal_residual(self, mu_masses: np.ndarray, nu_masses: np.ndarray) -> float:
        """最大邊際殘差（含負值項）"""
        if self.entries.shape != (len(mu_masses), len(nu_masses)):
            raise DimensionMismatch(
                len(mu_masses) * len(nu_masses), self.entries.size, "耦合形狀")
        negative = float(max(0.0, -self.entries.min())) if self.entries.size else 0.0
        return max(
            float(np.max(np.abs(self.row_sums - mu_masses))),
            float(np.max(np.abs(self.col_sums - nu_masses))),
            negative,
        )

    def check(self, mu_masses: np.ndarray, nu_masses: np.ndarray, tol: float = 1e-8):
        """檢查邊際；超過容差時拋出 CouplingMarginalViolation"""
        residual = self.marginal_residual(mu_masses, nu_masses)
        if residual > tol:
            raise CouplingMarginalViolation(residual, tol)
        return residual

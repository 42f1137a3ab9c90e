"""
KDE 後端模組
定義核密度查詢介面，以及精確求和與分桶均勻取樣兩種實作
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional

import numpy as np

from config import get_settings
from utils.math_utils import median_repetitions
from utils.rng import StreamTag, stream

from ..base.errors import AspectRatioViolated, UnregisteredComponent
from .bucketing import bucketize_multipliers
from .kernel import SmoothKernel


class BackendKind(Enum):
    """KDE 後端類型"""
    EXACT = "exact"
    SAMPLING = "sampling"


class KdeBackend(ABC):
    """
    KDE 後端抽象基類

    預處理 (點, 非負乘數) 後，query(y) 估計 Σ_i m_i·K(x_i, y)。
    """

    def __init__(self, points: np.ndarray, multipliers: np.ndarray, kernel: SmoothKernel):
        self.points = np.asarray(points, dtype=float)
        self.multipliers = np.asarray(multipliers, dtype=float)
        if self.points.ndim == 1:
            self.points = self.points.reshape(len(self.multipliers), -1)
        self.kernel = kernel

    @property
    @abstractmethod
    def kind(self) -> BackendKind:
        pass

    @property
    def size(self) -> int:
        return int(self.multipliers.shape[0])

    @abstractmethod
    def query(self, y: np.ndarray) -> float:
        """估計 Σ m_i K(x_i, y)"""
        pass


class BackendFactory:
    """KDE 後端工廠類"""

    _registry: Dict[BackendKind, type] = {}

    @classmethod
    def register(cls, kind: BackendKind):
        """註冊後端類型"""
        def decorator(backend_class: type):
            cls._registry[kind] = backend_class
            return backend_class
        return decorator

    @classmethod
    def create(cls, kind, points, multipliers, kernel: SmoothKernel, **options) -> KdeBackend:
        """建立後端實例"""
        backend_class = cls._registry.get(BackendKind(kind))
        if backend_class is None:
            raise UnregisteredComponent(kind)
        return backend_class(points, multipliers, kernel, **options)

    @classmethod
    def get_available_types(cls) -> List[BackendKind]:
        return list(cls._registry.keys())


# ==========================================
# 精確後端
# ==========================================
@BackendFactory.register(BackendKind.EXACT)
class ExactKdeBackend(KdeBackend):
    """直接求和（ε = 0, δ = 0 的參考實作）"""

    def __init__(self, points, multipliers, kernel: SmoothKernel, **_options):
        super().__init__(points, multipliers, kernel)

    @property
    def kind(self) -> BackendKind:
        return BackendKind.EXACT

    def query(self, y: np.ndarray) -> float:
        if self.size == 0:
            return 0.0
        return float(self.multipliers @ self.kernel.evaluate(self.points, y))


# ==========================================
# 取樣後端
# ==========================================
@dataclass(frozen=True, eq=False)
class _BucketPlan:
    """單一桶的取樣計畫；indices 為 (重複數, 樣本數)，exhaustive 時為全部索引"""
    members: np.ndarray
    indices: np.ndarray
    exhaustive: bool


@BackendFactory.register(BackendKind.SAMPLING)
class SamplingKdeBackend(KdeBackend):
    """
    分桶均勻取樣後端

    乘數依 (1+ε) 幾何範圍分桶；每桶以 ceil(4·R_K/ε²) 個均勻樣本估計桶和，
    R_K 為距離承諾 [σr, Φσr] 下的核值比。取 ceil(9·ln(1/δ)) 次重複的中位數。
    取樣索引於建構時由種子固定，因此同一 y 的查詢結果是確定的。
    """

    def __init__(self, points, multipliers, kernel: SmoothKernel,
                 eps: float = 0.25,
                 delta: float = 0.1,
                 min_distance: Optional[float] = None,
                 aspect_ratio: Optional[float] = None,
                 seed: int = 0,
                 sample_count: Optional[int] = None,
                 **_options):
        super().__init__(points, multipliers, kernel)
        kde = get_settings().kde
        self.eps = float(eps)
        self.delta = float(delta)
        self.min_distance = min_distance
        self.aspect_ratio = aspect_ratio
        self.seed = int(seed)
        self._tolerance = kde.aspect_tolerance

        if sample_count is None:
            if min_distance is None or aspect_ratio is None:
                raise ValueError("未指定 sample_count 時必須提供距離承諾")
            sample_count = math.ceil(kde.sample_constant * self.spread_bound() / self.eps ** 2)
        self.sample_count = int(sample_count)
        self.median_repetitions = median_repetitions(self.delta, kde.median_constant)
        self._plans = self._draw_plans(stream(self.seed, StreamTag.BACKEND_BUILD))

    @property
    def kind(self) -> BackendKind:
        return BackendKind.SAMPLING

    def spread_bound(self) -> float:
        """R_K = (floor + (Φσr)^s) / (floor + (σr)^s)"""
        floor, s = self.kernel.floor, self.kernel.s
        low = self.min_distance
        high = self.aspect_ratio * low
        return (floor + high ** s) / (floor + low ** s)

    def _draw_plans(self, rng: np.random.Generator,
                    sample_count: Optional[int] = None,
                    repetitions: Optional[int] = None) -> List[_BucketPlan]:
        count = self.sample_count if sample_count is None else sample_count
        reps = self.median_repetitions if repetitions is None else repetitions
        if self.size == 0:
            return []
        plans = []
        for members in bucketize_multipliers(self.multipliers, self.eps).groups:
            if count >= members.size:
                plans.append(_BucketPlan(members, members, True))
            else:
                picks = rng.integers(0, members.size, size=(reps, count))
                plans.append(_BucketPlan(members, members[picks], False))
        return plans

    @property
    def is_exhaustive(self) -> bool:
        return all(p.exhaustive for p in self._plans)

    def _check_promise(self, dist: np.ndarray):
        if self.min_distance is None or self.aspect_ratio is None or dist.size == 0:
            return
        low = self.min_distance * (1.0 - self._tolerance)
        high = self.min_distance * self.aspect_ratio * (1.0 + self._tolerance)
        bad = (dist < low) | (dist > high)
        if np.any(bad):
            raise AspectRatioViolated(float(dist[bad][0]), low, high)

    def _estimate(self, plans: List[_BucketPlan], y: np.ndarray) -> float:
        y = np.asarray(y, dtype=float)
        exact_part = 0.0
        sampled = []
        for plan in plans:
            dist = np.linalg.norm(self.points[plan.indices] - y, axis=-1)
            self._check_promise(dist)
            values = self.multipliers[plan.indices] * self.kernel.from_distance(dist)
            if plan.exhaustive:
                exact_part += float(values.sum())
            else:
                sampled.append(plan.members.size * values.mean(axis=1))
        if not sampled:
            return exact_part
        per_rep = np.sum(sampled, axis=0)
        return exact_part + float(np.median(per_rep))

    def query(self, y: np.ndarray, eps: Optional[float] = None,
              delta: Optional[float] = None,
              rng: Optional[np.random.Generator] = None) -> float:
        """
        估計 Σ m_i K(x_i, y)

        參數:
            y: 查詢點
            eps, delta: 若提供則以新的精度重新取樣（需同時提供 rng 或使用建構種子）
            rng: 提供時改用新抽取的樣本，供統計檢驗使用

        返回:
            估計值
        """
        if self.size == 0:
            return 0.0
        if eps is None and delta is None and rng is None:
            return self._estimate(self._plans, y)
        kde = get_settings().kde
        count, reps = self.sample_count, self.median_repetitions
        if eps is not None:
            count = math.ceil(kde.sample_constant * self.spread_bound() / eps ** 2) \
                if self.min_distance is not None and self.aspect_ratio is not None \
                else math.ceil(self.sample_count * (self.eps / eps) ** 2)
        if delta is not None:
            reps = median_repetitions(delta, kde.median_constant)
        if rng is None:
            rng = stream(self.seed, StreamTag.BACKEND_BUILD, 1)
        return self._estimate(self._draw_plans(rng, count, reps), y)

"""
乘數分桶
將乘數依 (1+ε) 幾何範圍分組，使同桶內乘數相差不超過 (1+ε) 倍
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from utils.math_utils import geometric_bucket_count


@dataclass(frozen=True, eq=False)
class MultiplierBuckets:
    """分桶結果：每桶的索引與邊界"""
    groups: List[np.ndarray]
    edges: np.ndarray

    @property
    def count(self) -> int:
        return len(self.groups)

    def sizes(self) -> List[int]:
        return [int(g.size) for g in self.groups]


def bucketize_multipliers(multipliers, eps: float) -> MultiplierBuckets:
    """
    依 [m_min·(1+ε)^k, m_min·(1+ε)^(k+1)) 分桶，空桶不保留

    參數:
        multipliers: 正乘數
        eps: 幾何比例 ε > 0

    返回:
        MultiplierBuckets
    """
    values = np.asarray(multipliers, dtype=float)
    if values.size == 0:
        return MultiplierBuckets(groups=[], edges=np.zeros(1))
    if np.any(values <= 0):
        raise ValueError("乘數必須為正")
    low, high = float(values.min()), float(values.max())
    count = geometric_bucket_count(low, high, eps)
    edges = low * (1.0 + eps) ** np.arange(count + 1)
    # 最大值一律落在最後一桶
    labels = np.minimum(
        np.floor(np.log(values / low) / np.log1p(eps)).astype(int), count - 1)
    order = np.argsort(labels, kind='stable')
    splits = np.flatnonzero(np.diff(labels[order])) + 1
    groups = [g for g in np.split(order, splits) if g.size]
    return MultiplierBuckets(groups=groups, edges=edges)

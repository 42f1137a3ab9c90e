"""
隨機測試實例產生器
"""

from typing import Optional, Tuple

import numpy as np

from core.base.domain import WeightedPointSet


def random_masses(rng: np.random.Generator, size: int, uniform: bool = False) -> np.ndarray:
    """Dirichlet(1) 質量，或均勻質量"""
    if uniform:
        return np.full(size, 1.0 / size)
    masses = rng.dirichlet(np.ones(size))
    # 避免極小質量
    masses = np.maximum(masses, 1e-3)
    return masses / masses.sum()


def random_point_set(rng: np.random.Generator, size: int, dim: int,
                     points: Optional[np.ndarray] = None,
                     uniform: bool = False) -> WeightedPointSet:
    """
    [0, 1]^d 中的隨機加權點集

    參數:
        points: 給定時共用這些支撐點，只抽取質量
    """
    if points is None:
        points = rng.random((size, dim))
    return WeightedPointSet(np.asarray(points, dtype=float),
                            random_masses(rng, len(points), uniform))


def random_pair(rng: np.random.Generator, max_support: int, max_dim: int,
                uniform: bool = False) -> Tuple[WeightedPointSet, WeightedPointSet]:
    """支撐大小 1..max_support、維度 1..max_dim 的隨機 (μ, ν)"""
    n = int(rng.integers(1, max_support + 1))
    m = int(rng.integers(1, max_support + 1))
    dim = int(rng.integers(1, max_dim + 1))
    return (random_point_set(rng, n, dim, uniform=uniform),
            random_point_set(rng, m, dim, uniform=uniform))

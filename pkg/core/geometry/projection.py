"""
隨機投影模組
以共用的高斯矩陣做 Johnson-Lindenstrauss 降維
"""

import math
from typing import Tuple

import numpy as np

from utils.rng import StreamTag, stream


def default_jl_dim(n: int, m: int, eps: float, dim: int) -> int:
    """
    預設目標維度 min(d, ceil(8·ln(n+m)/ε²))

    參數:
        n, m: 支撐大小
        eps: 精度 ε
        dim: 原始維度
    """
    k = math.ceil(8.0 * math.log(n + m) / eps ** 2)
    return max(1, min(dim, k))


def projection_matrix(dim: int, target_dim: int, seed: int) -> np.ndarray:
    """(d, k) 高斯矩陣，元素 ~ N(0, 1/k)"""
    rng = stream(seed, StreamTag.PROJECTION)
    return rng.standard_normal((dim, target_dim)) / math.sqrt(target_dim)


def jl_project(x_points: np.ndarray,
               y_points: np.ndarray,
               target_dim: int,
               seed: int = 0) -> Tuple[np.ndarray, np.ndarray, bool]:
    """
    對兩組點套用同一個隨機投影

    參數:
        x_points: (n, d)
        y_points: (m, d)
        target_dim: 目標維度 k >= 1
        seed: 隨機種子

    返回:
        (投影後 x, 投影後 y, 是否實際投影)；d <= k 時原樣返回
    """
    if target_dim < 1:
        raise ValueError(f"目標維度必須 >= 1，收到: {target_dim}")
    x = np.atleast_2d(np.asarray(x_points, dtype=float))
    y = np.atleast_2d(np.asarray(y_points, dtype=float))
    dim = x.shape[1]
    if dim <= target_dim:
        return x.copy(), y.copy(), False
    matrix = projection_matrix(dim, target_dim, seed)
    return x @ matrix, y @ matrix, True

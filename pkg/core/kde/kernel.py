"""
平滑核模組
K(x, y) = 1 / (floor + ‖x − y‖^s)，floor = ε0·(σr)^s
"""

from dataclasses import dataclass

import numpy as np

from ..geometry.preprocess import ProblemInstance


@dataclass(frozen=True)
class SmoothKernel:
    """帶下限的反冪次核（Student-t 型）"""
    s: float
    floor: float = 0.0

    def __post_init__(self):
        if self.s < 1:
            raise ValueError(f"核冪次必須 >= 1，收到: {self.s}")
        if self.floor < 0:
            raise ValueError(f"核下限不可為負，收到: {self.floor}")

    @classmethod
    def for_instance(cls, inst: ProblemInstance, s: float, eps0: float) -> 'SmoothKernel':
        """以實例的最小交叉距離 σr 建立核"""
        return cls(s=s, floor=eps0 * inst.min_distance ** s)

    def from_distance(self, dist) -> np.ndarray:
        return 1.0 / (self.floor + np.asarray(dist, dtype=float) ** self.s)

    def evaluate(self, points: np.ndarray, y: np.ndarray) -> np.ndarray:
        """對每個點 x_i 計算 K(x_i, y)"""
        dist = np.linalg.norm(np.asarray(points, dtype=float) - np.asarray(y, dtype=float), axis=-1)
        return self.from_distance(dist)

    def value_at_distance(self, dist: float) -> float:
        return float(self.from_distance(dist))


def kernel_eval(k: SmoothKernel, x, y) -> float:
    """單點核值 K(x, y)"""
    dist = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    return k.value_at_distance(dist)

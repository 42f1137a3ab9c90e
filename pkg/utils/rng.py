"""
計數器式隨機數流
每個 (種子, 迭代, 標籤, 查詢索引, ...) 組合對應一條獨立的 Philox 流，結果與排程無關
"""

from enum import IntEnum
from typing import Iterable

import numpy as np


class StreamTag(IntEnum):
    """隨機流用途標籤"""
    EST_ALPHA = 1
    EST_BETA = 2
    EST_PENALTY = 3
    BACKEND_BUILD = 4
    PROJECTION = 5
    VALIDATION = 6


def _entropy(seed: int, counters: Iterable[int]) -> list:
    words = [int(seed)] + [int(c) for c in counters]
    if any(w < 0 for w in words):
        raise ValueError(f"隨機流鍵值必須為非負整數: {words}")
    return words


def stream(seed: int, *counters: int) -> np.random.Generator:
    """
    建立計數器鍵控的隨機數產生器

    參數:
        seed: 主種子
        *counters: 迭代、標籤、查詢索引等非負整數

    返回:
        np.random.Generator（Philox 位元產生器）
    """
    seq = np.random.SeedSequence(_entropy(seed, counters))
    return np.random.Generator(np.random.Philox(seq))


def spawn_seed(seed: int, *counters: int) -> int:
    """由鍵值衍生一個 63 位元整數種子（供巢狀結構使用）"""
    seq = np.random.SeedSequence(_entropy(seed, counters))
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))

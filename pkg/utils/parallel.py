"""
執行緒平行工具
以固定順序收集結果，輸出與執行緒數無關
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from config import get_settings

T = TypeVar('T')
R = TypeVar('R')


def resolve_workers(max_workers: Optional[int] = None) -> int:
    """取得執行緒上限（RRHO_THREADS 已反映在 PerformanceSettings）"""
    if max_workers is None:
        max_workers = get_settings().performance.max_workers
    return max(1, int(max_workers))


def ordered_map(func: Callable[[T], R],
                items: Sequence[T],
                max_workers: Optional[int] = None,
                threshold: Optional[int] = None) -> List[R]:
    """
    依輸入順序平行計算 func(item)

    參數:
        func: 純函數（使用自帶的隨機流）
        items: 輸入序列
        max_workers: 執行緒數上限
        threshold: 項目數低於此值時序列執行

    返回:
        與 items 對齊的結果列表
    """
    workers = resolve_workers(max_workers)
    if threshold is None:
        threshold = get_settings().performance.parallel_threshold
    if workers == 1 or len(items) < threshold:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))

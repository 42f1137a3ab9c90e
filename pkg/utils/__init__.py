"""
工具模組
提供日誌管理、隨機流、平行對映與數學小工具
（file_io 依賴 core 型別，請直接 from utils.file_io import）
"""

from .logger import (
    setup_logger,
    get_logger,
    log_execution_time
)

from .math_utils import (
    rho_root,
    geometric_bucket_count,
    median_repetitions
)

from .rng import StreamTag, stream, spawn_seed

__all__ = [
    'setup_logger',
    'get_logger',
    'log_execution_time',
    'rho_root',
    'geometric_bucket_count',
    'median_repetitions',
    'StreamTag',
    'stream',
    'spawn_seed'
]

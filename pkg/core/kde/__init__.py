"""
核密度估計模組
平滑核與可互換的 KDE 後端（精確求和、分桶取樣）
"""

from .kernel import SmoothKernel, kernel_eval
from .bucketing import MultiplierBuckets, bucketize_multipliers
from .backends import (
    BackendKind,
    KdeBackend,
    BackendFactory,
    ExactKdeBackend,
    SamplingKdeBackend
)

__all__ = [
    'SmoothKernel',
    'kernel_eval',
    'MultiplierBuckets',
    'bucketize_multipliers',
    'BackendKind',
    'KdeBackend',
    'BackendFactory',
    'ExactKdeBackend',
    'SamplingKdeBackend'
]

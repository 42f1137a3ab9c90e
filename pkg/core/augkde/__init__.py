"""
增強 KDE 模組
權重排序樹、門檻網格與重要性取樣查詢
"""

from ..kde.bucketing import MultiplierBuckets, bucketize_multipliers
from .tree import (
    TreeNode,
    AugmentedKdeTree,
    default_grid_anchor,
    inclusion_probability
)

__all__ = [
    'MultiplierBuckets',
    'bucketize_multipliers',
    'TreeNode',
    'AugmentedKdeTree',
    'default_grid_anchor',
    'inclusion_probability'
]

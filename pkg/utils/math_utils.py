"""
數學工具模組
ρ 次方根、幾何分桶與中位數技巧的重複次數
"""

import math


def rho_root(value: float, rho: float) -> float:
    """夾至非負後取 ρ 次方根"""
    return max(float(value), 0.0) ** (1.0 / rho)


def geometric_bucket_count(low: float, high: float, eps: float) -> int:
    """[low, high] 以 (1+ε) 幾何分段所需的桶數"""
    if high <= low:
        return 1
    return max(1, math.ceil(math.log(high / low) / math.log1p(eps)))


def median_repetitions(delta: float, constant: float = 9.0) -> int:
    """中位數技巧的重複次數 ceil(constant·ln(1/δ))，至少 1"""
    return max(1, math.ceil(constant * math.log(1.0 / delta)))


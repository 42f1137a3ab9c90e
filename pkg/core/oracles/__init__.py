"""
oracle 模組
小規模實例的精確 R_ρ、EMD、2×2 三分搜尋與 Sinkhorn 基準
"""

from .rrho import (
    CertificateKind,
    OracleResult,
    check_oracle_size,
    coupling_2x2,
    exact_rrho,
    ternary_2x2,
)
from .flow import PriorityNode, TransportNetwork, enumerate_2x2_emd, exact_emd
from .sinkhorn import entropy, sinkhorn

__all__ = [
    'CertificateKind',
    'OracleResult',
    'check_oracle_size',
    'coupling_2x2',
    'exact_rrho',
    'ternary_2x2',
    'PriorityNode',
    'TransportNetwork',
    'enumerate_2x2_emd',
    'exact_emd',
    'entropy',
    'sinkhorn',
]

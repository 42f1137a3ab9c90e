"""
驗證與基準模組
"""

from .benchmark import BENCH_COLUMNS, plot_bench, run_bench, write_bench_csv
from .instances import random_masses, random_pair, random_point_set
from .suites import SuiteResult, available_suites, register_suite, run_suite

__all__ = [
    'BENCH_COLUMNS',
    'plot_bench',
    'run_bench',
    'write_bench_csv',
    'random_masses',
    'random_pair',
    'random_point_set',
    'SuiteResult',
    'available_suites',
    'register_suite',
    'run_suite',
]

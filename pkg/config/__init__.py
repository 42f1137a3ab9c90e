"""
配置模組
提供全局配置管理功能
"""

from .settings import (
    GlobalSettings,
    PathSettings,
    SolverSettings,
    KdeSettings,
    OracleSettings,
    PerformanceSettings,
    LoggingSettings,
    ValidationSettings,
    THREADS_ENV_VAR,
    get_settings,
    init_settings
)

__all__ = [
    'GlobalSettings',
    'PathSettings',
    'SolverSettings',
    'KdeSettings',
    'OracleSettings',
    'PerformanceSettings',
    'LoggingSettings',
    'ValidationSettings',
    'THREADS_ENV_VAR',
    'get_settings',
    'init_settings'
]

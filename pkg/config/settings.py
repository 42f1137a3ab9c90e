"""
全局配置管理模組
提供求解器常數、KDE 參數、oracle 容差、平行化與日誌等配置
"""

import os
import json
from pathlib import Path
from dataclasses import dataclass, asdict, field
from typing import Dict, Any, Optional


THREADS_ENV_VAR = "RRHO_THREADS"


@dataclass
class PathSettings:
    """路徑配置"""
    # 專案根目錄
    project_root: str = str(Path(__file__).parent.parent)

    data_dir: str = None
    config_dir: str = None
    log_dir: str = None
    report_dir: str = None

    def __post_init__(self):
        """初始化後自動設定路徑"""
        if self.data_dir is None:
            self.data_dir = os.path.join(self.project_root, "data")
        if self.config_dir is None:
            self.config_dir = os.path.join(self.project_root, "config")
        if self.log_dir is None:
            self.log_dir = os.path.join(self.data_dir, "logs")
        if self.report_dir is None:
            self.report_dir = os.path.join(self.data_dir, "reports")

    def ensure_dirs(self):
        """確保輸出目錄存在"""
        for dir_path in [self.data_dir, self.log_dir, self.report_dir]:
            os.makedirs(dir_path, exist_ok=True)

    @property
    def profiles_file(self) -> str:
        return os.path.join(self.config_dir, "solver_profiles.yaml")

    @property
    def report_schema_file(self) -> str:
        return os.path.join(self.config_dir, "report_schema.json")


@dataclass
class SolverSettings:
    """梯度上升求解器配置"""
    # 推導常數 c0..c4
    c0: float = 0.1
    c1: float = 0.1
    c2: float = 0.1
    c3: float = 0.1
    c4: float = 2.0

    # 預設值
    default_mode: str = "practical"
    default_engine: str = "exact"
    default_seed: int = 0
    delta: float = 0.1

    # 實用模式的迭代上限
    practical_max_iters: int = 200000

    # 每 N 次迭代輸出一次 DEBUG 日誌
    log_every: int = 1000

    # g >= 0 不變量的容差（以 r^ρ 為單位）
    g_invariant_tol: float = 1e-9

    def constants(self) -> Dict[str, float]:
        return {'c0': self.c0, 'c1': self.c1, 'c2': self.c2,
                'c3': self.c3, 'c4': self.c4}


@dataclass
class KdeSettings:
    """核密度估計與增強 KDE 配置"""
    # 核下限 ε0 = eps0_factor·ε
    eps0_factor: float = 0.5

    # 每桶樣本數常數：ceil(sample_constant·R_K/ε²)
    sample_constant: float = 4.0

    # 重複次數常數：T = ceil(repetition_constant·2^s2/ε²)
    repetition_constant: float = 16.0

    # 中位數常數：ceil(median_constant·ln(1/δ))
    median_constant: float = 9.0

    # 網格錨點是否下調至最小正權重差
    adaptive_anchor: bool = True

    # 取樣距離的相對容差
    aspect_tolerance: float = 1e-9

    default_backend: str = "exact"


@dataclass
class OracleSettings:
    """精確求解器與基準配置"""
    tolerance: float = 1e-9
    # 牛頓法停滯時可接受的相對間隙
    stall_tolerance: float = 1e-5
    armijo: float = 1e-4
    lbfgs_max_iter: int = 5000
    newton_max_iter: int = 200
    slsqp_max_iter: int = 1000

    # 由對偶恢復的耦合之邊際容差
    marginal_tolerance: float = 1e-6

    # Sinkhorn
    sinkhorn_log_threshold: float = 0.05
    sinkhorn_tol: float = 1e-9
    sinkhorn_max_iter: int = 100000

    # 規模上限
    dense_limit: int = 1000000
    oracle_limit: int = 10000

    # 最小費用流的約化成本容差
    flow_tolerance: float = 1e-12


@dataclass
class PerformanceSettings:
    """效能配置"""
    max_workers: int = field(default_factory=lambda: _threads_from_env(4))

    # 單次迭代內查詢數低於此值時不使用執行緒池
    parallel_threshold: int = 64


@dataclass
class LoggingSettings:
    """日誌配置"""
    name: str = "RrhoTransport"
    level: str = "INFO"
    log_to_file: bool = False


@dataclass
class ValidationSettings:
    """驗證套件配置"""
    sandwich_instances: int = 200
    triangle_instances: int = 100
    gradcheck_instances: int = 20
    gradcheck_points: int = 100
    kde_points: int = 200
    kde_repetitions: int = 100000
    kde_variance_queries: int = 100
    convergence_instances: int = 100
    convergence_profile: str = "desk"
    convergence_eps: float = 0.1
    sampling_instances: int = 50
    sampling_profile: str = "sampling"
    sampling_eps: float = 0.25
    sampling_support: int = 64
    kde_queries: int = 5
    max_support: int = 6
    solver_support: int = 8
    max_dim: int = 4


def _threads_from_env(default: int) -> int:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


_SECTIONS = {
    'paths': PathSettings,
    'solver': SolverSettings,
    'kde': KdeSettings,
    'oracle': OracleSettings,
    'performance': PerformanceSettings,
    'logging': LoggingSettings,
    'validation': ValidationSettings,
}


class GlobalSettings:
    """全局配置管理器"""

    def __init__(self, config_file: Optional[str] = None):
        """
        初始化全局配置

        參數:
            config_file: 配置文件路徑（可選，JSON 格式）
        """
        self.reset_to_default()

        self.config_file = config_file or os.path.join(
            self.paths.config_dir, "settings.json"
        )

        self.load()

    def load(self) -> bool:
        """
        從文件載入配置

        返回:
            是否成功載入
        """
        if not os.path.exists(self.config_file):
            return False
        with open(self.config_file, 'r', encoding='utf-8') as f:
            config_data = json.load(f)

        for name, section_cls in _SECTIONS.items():
            if name in config_data:
                setattr(self, name, section_cls(**config_data[name]))

        # 環境變數優先於配置文件
        self.performance.max_workers = _threads_from_env(self.performance.max_workers)
        return True

    def save(self) -> bool:
        """
        儲存配置到文件

        返回:
            是否成功儲存
        """
        os.makedirs(os.path.dirname(self.config_file), exist_ok=True)
        with open(self.config_file, 'w', encoding='utf-8') as f:
            json.dump(self.get_dict(), f, indent=4, ensure_ascii=False)
        return True

    def reset_to_default(self):
        """重設為預設配置"""
        self.paths = PathSettings()
        self.solver = SolverSettings()
        self.kde = KdeSettings()
        self.oracle = OracleSettings()
        self.performance = PerformanceSettings()
        self.logging = LoggingSettings()
        self.validation = ValidationSettings()

    def get_dict(self) -> Dict[str, Any]:
        """獲取配置字典"""
        return {name: asdict(getattr(self, name)) for name in _SECTIONS}


# 全局配置實例
_global_settings: Optional[GlobalSettings] = None


def get_settings() -> GlobalSettings:
    """
    獲取全局配置實例（單例模式）

    返回:
        GlobalSettings實例
    """
    global _global_settings
    if _global_settings is None:
        _global_settings = GlobalSettings()
    return _global_settings


def init_settings(config_file: Optional[str] = None) -> GlobalSettings:
    """
    初始化全局配置

    參數:
        config_file: 配置文件路徑（可選）

    返回:
        GlobalSettings實例
    """
    global _global_settings
    _global_settings = GlobalSettings(config_file)
    return _global_settings

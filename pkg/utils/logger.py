"""
日誌工具模組
提供統一的日誌管理，控制台彩色輸出與可選的文件輸出
"""

import functools
import logging
import os
import sys
import time
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional


DEFAULT_LOGGER_NAME = 'RrhoTransport'

# ==========================================
# 日誌等級映射
# ==========================================
LOG_LEVELS = {
    'DEBUG': logging.DEBUG,
    'INFO': logging.INFO,
    'WARNING': logging.WARNING,
    'ERROR': logging.ERROR,
    'CRITICAL': logging.CRITICAL
}


class LogFormatter(logging.Formatter):
    """自訂日誌格式器，終端機下以顏色標示等級"""

    COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[35m',
        'RESET': '\033[0m'
    }

    def __init__(self, use_color: bool = True, stream=None):
        super().__init__(
            fmt='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )
        self.use_color = use_color
        self.stream = stream

    def format(self, record):
        stream = self.stream or sys.stderr
        is_tty = getattr(stream, 'isatty', lambda: False)()
        if not (self.use_color and is_tty and record.levelname in self.COLORS):
            return super().format(record)
        # 複製記錄，避免顏色碼汙染文件處理器
        colored = logging.makeLogRecord(record.__dict__)
        colored.levelname = (
            f"{self.COLORS[record.levelname]}{record.levelname}{self.COLORS['RESET']}"
        )
        return super().format(colored)


# ==========================================
# 日誌管理器
# ==========================================
class Logger:
    """統一的日誌管理器"""

    _instances = {}

    def __init__(self, name: str = DEFAULT_LOGGER_NAME,
                 level: str = 'INFO',
                 log_dir: Optional[str] = None,
                 log_to_file: bool = False,
                 log_to_console: bool = True):
        """
        初始化日誌管理器

        參數:
            name: 日誌名稱
            level: 日誌等級
            log_dir: 日誌目錄（預設 data/logs）
            log_to_file: 是否輸出到文件
            log_to_console: 是否輸出到控制台（stderr，stdout 保留給報告）
        """
        self.name = name
        self.logger = logging.getLogger(name)
        self.logger.setLevel(LOG_LEVELS.get(level.upper(), logging.INFO))
        self.logger.handlers.clear()
        self.log_file: Optional[str] = None

        if log_to_console:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setFormatter(LogFormatter(use_color=True, stream=sys.stderr))
            self.logger.addHandler(console_handler)

        if log_to_file:
            if log_dir is None:
                project_root = Path(__file__).parent.parent
                log_dir = os.path.join(project_root, 'data', 'logs')
            os.makedirs(log_dir, exist_ok=True)

            log_filename = f"{name}_{datetime.now().strftime('%Y%m%d')}.log"
            self.log_file = os.path.join(log_dir, log_filename)

            file_handler = logging.FileHandler(self.log_file, encoding='utf-8')
            file_handler.setFormatter(LogFormatter(use_color=False))
            self.logger.addHandler(file_handler)

        self.logger.propagate = False

    def debug(self, message: str):
        self.logger.debug(message)

    def info(self, message: str):
        self.logger.info(message)

    def warning(self, message: str):
        self.logger.warning(message)

    def error(self, message: str):
        self.logger.error(message)

    def critical(self, message: str):
        self.logger.critical(message)

    def exception(self, message: str):
        """輸出異常日誌（包含堆疊追蹤）"""
        self.logger.exception(message)

    def set_level(self, level: str):
        """
        設定日誌等級

        參數:
            level: DEBUG, INFO, WARNING, ERROR, CRITICAL
        """
        self.logger.setLevel(LOG_LEVELS.get(level.upper(), logging.INFO))

    def is_enabled_for(self, level: str) -> bool:
        return self.logger.isEnabledFor(LOG_LEVELS.get(level.upper(), logging.INFO))

    @classmethod
    def get_instance(cls, name: str = DEFAULT_LOGGER_NAME, **kwargs) -> 'Logger':
        """
        獲取日誌實例（單例模式）

        參數:
            name: 日誌名稱
            **kwargs: 其他初始化參數

        返回:
            Logger 實例
        """
        if name not in cls._instances:
            cls._instances[name] = cls(name, **kwargs)
        return cls._instances[name]


# ==========================================
# 便捷函數
# ==========================================
def setup_logger(name: str = DEFAULT_LOGGER_NAME,
                 level: str = 'INFO',
                 log_dir: Optional[str] = None,
                 log_to_file: bool = False,
                 log_to_console: bool = True) -> Logger:
    """
    設定日誌管理器並取代同名單例

    返回:
        Logger 實例
    """
    instance = Logger(name, level, log_dir, log_to_file, log_to_console)
    Logger._instances[name] = instance
    return instance


def get_logger(name: str = DEFAULT_LOGGER_NAME) -> Logger:
    """獲取日誌實例"""
    return Logger.get_instance(name)


# ==========================================
# 日誌裝飾器
# ==========================================
def log_execution_time(logger: Optional[Logger] = None, level: str = 'DEBUG') -> Callable:
    """
    日誌裝飾器，記錄函數執行時間

    使用範例:
        @log_execution_time()
        def exact_emd(inst):
            ...
    """
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            _logger = logger or get_logger()
            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                elapsed = time.perf_counter() - start_time
                _logger.debug(f"{func.__name__} 執行失敗 ({elapsed:.4f} 秒): {e}")
                raise
            elapsed = time.perf_counter() - start_time
            getattr(_logger, level.lower())(f"{func.__name__} 執行時間: {elapsed:.4f} 秒")
            return result
        return wrapper
    return decorator

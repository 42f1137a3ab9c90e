"""
測試共用設定與 fixture
"""

import numpy as np
import pytest

from config import init_settings
from core.base.domain import WeightedPointSet
from core.geometry.preprocess import make_instance
from utils.logger import setup_logger


@pytest.fixture(autouse=True)
def fresh_settings(tmp_path):
    """每個測試使用預設配置（不讀取專案中的 settings.json）"""
    settings = init_settings(str(tmp_path / "settings.json"))
    setup_logger(name=settings.logging.name, level='WARNING', log_to_file=False)
    return settings


@pytest.fixture
def line_pair():
    """x = {0, 1}、y = {0.5, 2} 的均勻分佈，EMD = 0.75"""
    mu = WeightedPointSet.uniform([[0.0], [1.0]])
    nu = WeightedPointSet.uniform([[0.5], [2.0]])
    return mu, nu


@pytest.fixture
def line_instance(line_pair):
    return make_instance(*line_pair)


@pytest.fixture
def random_instance():
    """3×4 的非均勻隨機實例（二維，交叉距離 ≥ 0.5）"""
    rng = np.random.default_rng(7)
    mu = WeightedPointSet(rng.random((3, 2)), rng.dirichlet(np.ones(3)))
    nu = WeightedPointSet(rng.random((4, 2)) + np.array([1.5, 0.0]), rng.dirichlet(np.ones(4)))
    return make_instance(mu, nu)

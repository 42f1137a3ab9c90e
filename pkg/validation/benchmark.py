"""
基準測試
對不同 (n, ρ) 記錄迭代次數、估計誤差與耗時，輸出 CSV 並可繪圖
"""

import math
import time
from typing import Any, Dict, List, Mapping, Optional, Sequence

from tqdm import tqdm

from config import get_settings
from core.base.errors import MaxItersExceeded
from core.base.params import holder_pair
from core.geometry.preprocess import make_instance
from core.oracles.rrho import exact_rrho
from core.solver.gradient_ascent import estimate_rrho
from utils.file_io import write_csv_rows
from utils.logger import get_logger
from utils.rng import StreamTag, stream

from .instances import random_point_set

BENCH_COLUMNS = (
    'n', 'rho', 'engine', 'iterations', 'termination',
    'estimate', 'exact', 'abs_error', 'wall_time_ms',
)


def run_bench(sizes: Sequence[int],
              rhos: Sequence[float],
              engine: str = "exact",
              eps: float = 0.1,
              seed: int = 0,
              dim: int = 2,
              overrides: Optional[Mapping[str, Any]] = None,
              progress: bool = True) -> List[Dict[str, Any]]:
    """
    執行基準

    參數:
        sizes: 支撐大小 n（μ、ν 皆為 n 點）
        rhos: ρ 值
        engine: exact 或 sampling
        eps: 目標精度
        seed: 種子
        dim: 點的維度
        overrides: 參數覆寫

    返回:
        每個 (n, ρ) 一列的字典
    """
    oracle_limit = get_settings().oracle.oracle_limit
    rows: List[Dict[str, Any]] = []
    cases = [(n, rho) for n in sizes for rho in rhos]
    for k, (n, rho) in enumerate(tqdm(cases, desc='bench', disable=not progress)):
        rng = stream(seed, StreamTag.VALIDATION, 100, k)
        mu = random_point_set(rng, n, dim)
        nu = random_point_set(rng, n, dim)

        start = time.perf_counter()
        try:
            report, _ = estimate_rrho(mu, nu, rho, eps, engine=engine, seed=seed,
                                      overrides=overrides)
        except MaxItersExceeded as e:
            report = e.report
        elapsed = (time.perf_counter() - start) * 1000.0

        exact = float('nan')
        if n * n <= oracle_limit:
            exact = exact_rrho(make_instance(mu, nu), holder_pair(rho)).value
        rows.append({
            'n': n,
            'rho': rho,
            'engine': report.engine.value,
            'iterations': report.iterations,
            'termination': report.termination.value,
            'estimate': report.estimate,
            'exact': exact,
            'abs_error': abs(report.estimate - exact) if math.isfinite(exact) else float('nan'),
            'wall_time_ms': elapsed,
        })
        get_logger().debug(f"基準 n={n}, ρ={rho}: {elapsed:.1f} ms")
    return rows


def write_bench_csv(path: str, rows: List[Dict[str, Any]]) -> int:
    return write_csv_rows(path, BENCH_COLUMNS, rows)


def plot_bench(rows: List[Dict[str, Any]], path: str):
    """耗時對 n 的雙對數圖，每個 ρ 一條線"""
    import matplotlib
    matplotlib.use('Agg')
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(1, 1, figsize=(8, 6))
    for rho in sorted({row['rho'] for row in rows}):
        series = sorted((row['n'], row['wall_time_ms']) for row in rows if row['rho'] == rho)
        ax.plot([p[0] for p in series], [p[1] for p in series], 'o-', label=f'ρ={rho:g}')
    ax.set_xscale('log')
    ax.set_yscale('log')
    ax.set_xlabel('n')
    ax.set_ylabel('wall time (ms)')
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

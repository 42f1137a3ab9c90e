"""
R_ρ Transport - 主程式入口
ℓ_ρ 鬆弛運輸距離估計器的命令列介面
"""

import sys
import time
import argparse
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

# 添加專案根目錄到路徑
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from config import init_settings, get_settings
from utils import get_logger, setup_logger

# 退出碼
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MAX_ITERS = 2

COMMANDS = ('dist', 'baseline', 'validate', 'bench')


@dataclass
class RunConfig:
    """單次執行的設定"""
    command: str
    mu_path: Optional[str] = None
    nu_path: Optional[str] = None
    rho: float = 2.0
    eps: float = 0.1
    mode: str = "practical"
    engine: str = "exact"
    seed: int = 0
    max_iters: Optional[int] = None
    jl_dim: Optional[int] = None
    profile: Optional[str] = None
    algo: Optional[str] = None
    eta: Optional[float] = None
    out: Optional[str] = None
    suites: List[str] = field(default_factory=list)
    count: Optional[int] = None
    sizes: List[int] = field(default_factory=list)
    rhos: List[float] = field(default_factory=list)
    plot: Optional[str] = None

    def validate(self):
        """檢查旗標一致性"""
        if self.command not in COMMANDS:
            raise ValueError(f"未知的命令: {self.command}")
        if self.command in ('dist', 'baseline') and not (self.mu_path and self.nu_path):
            raise ValueError(f"{self.command} 需要 --mu 與 --nu")
        if self.command == 'baseline':
            if self.algo not in ('emd', 'sinkhorn'):
                raise ValueError("baseline 需要 --algo emd|sinkhorn")
            if self.algo == 'sinkhorn' and (self.eta is None or self.eta <= 0):
                raise ValueError("sinkhorn 需要正的 --eta")
        elif self.algo is not None or self.eta is not None:
            raise ValueError("--algo 與 --eta 只能用於 baseline")
        if self.command == 'bench' and not (self.sizes and self.rhos):
            raise ValueError("bench 需要 --sizes 與 --rhos")

    def overrides(self) -> Dict[str, Any]:
        """預設組合的覆寫加上 --max-iters（paper 模式的 --max-iters 見 iteration_cap）"""
        from utils.file_io import load_solver_profile

        values: Dict[str, Any] = {}
        if self.profile:
            values.update(load_solver_profile(self.profile))
        if self.max_iters is not None and self.mode != 'paper':
            values['max_iters'] = self.max_iters
        return values

    def iteration_cap(self) -> Optional[int]:
        """paper 模式的參數不可覆寫，--max-iters 只限制實際迭代次數"""
        return self.max_iters if self.mode == 'paper' else None


def parse_arguments(argv: Optional[List[str]] = None):
    """解析命令列參數"""
    solver = get_settings().solver
    parser = argparse.ArgumentParser(
        description='R_ρ Transport - ℓ_ρ 鬆弛運輸距離估計器',
        formatter_class=argparse.RawDescriptionHelpFormatter
    )

    parser.add_argument('--config', type=str, default=None, help='配置文件路徑')
    parser.add_argument(
        '--log-level',
        type=str,
        default='INFO',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'],
        help='日誌等級'
    )
    parser.add_argument('--profile', type=str, default=None,
                        help='solver_profiles.yaml 中的參數預設組合')
    parser.add_argument('--jl-dim', type=int, default=None,
                        help='隨機投影目標維度（0 使用預設維度）')

    sub = parser.add_subparsers(dest='command', required=True)

    def add_inputs(p):
        p.add_argument('--mu', dest='mu_path', required=True, help='μ 點集 CSV')
        p.add_argument('--nu', dest='nu_path', required=True, help='ν 點集 CSV')
        p.add_argument('--out', type=str, default=None, help='輸出路徑（預設 stdout）')

    def add_solver(p):
        p.add_argument('--rho', type=float, default=2.0, help='ρ ∈ (1, 2]')
        p.add_argument('--eps', type=float, default=0.1, help='加性精度 ε ∈ (0, 1/4]')
        p.add_argument('--mode', choices=['paper', 'practical'], default=solver.default_mode)
        p.add_argument('--engine', choices=['exact', 'sampling'], default=solver.default_engine)
        p.add_argument('--seed', type=int, default=solver.default_seed)
        p.add_argument('--max-iters', type=int, default=None)

    dist = sub.add_parser('dist', help='估計 R_ρ(μ, ν)')
    add_inputs(dist)
    add_solver(dist)

    baseline = sub.add_parser('baseline', help='EMD 或 Sinkhorn 基準')
    add_inputs(baseline)
    baseline.add_argument('--algo', choices=['emd', 'sinkhorn'], required=True)
    baseline.add_argument('--eta', type=float, default=None, help='Sinkhorn 正則化 η')

    validate = sub.add_parser('validate', help='執行驗證套件')
    validate.add_argument('--suite', dest='suites', action='append', default=[],
                          help='套件名稱（可重複；all 表示全部）')
    validate.add_argument('--seed', type=int, default=solver.default_seed)
    validate.add_argument('--count', type=int, default=None, help='實例數')

    bench = sub.add_parser('bench', help='輸出每個 (n, ρ) 的耗時 CSV')
    bench.add_argument('--sizes', type=int, nargs='+', default=[2, 4, 8])
    bench.add_argument('--rhos', type=float, nargs='+', default=[1.25, 1.5, 2.0])
    bench.add_argument('--eps', type=float, default=0.1)
    bench.add_argument('--engine', choices=['exact', 'sampling'], default=solver.default_engine)
    bench.add_argument('--seed', type=int, default=solver.default_seed)
    bench.add_argument('--max-iters', type=int, default=None)
    bench.add_argument('--out', type=str, default=None, help='CSV 路徑（預設 stdout）')
    bench.add_argument('--plot', type=str, default=None, help='耗時圖 PNG 路徑')

    return parser.parse_args(argv)


def build_config(args) -> RunConfig:
    """由命令列參數建立 RunConfig"""
    names = RunConfig.__dataclass_fields__
    values = {k: v for k, v in vars(args).items() if k in names}
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def initialize_system(args):
    """初始化系統"""
    settings = init_settings(args.config)
    logger = setup_logger(
        name=settings.logging.name,
        level=args.log_level,
        log_dir=settings.paths.log_dir,
        log_to_file=settings.logging.log_to_file,
        log_to_console=True
    )
    logger.debug(f"配置文件: {args.config or '使用預設配置'}")
    return logger, settings


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + '\n', encoding='utf-8')
    else:
        sys.stdout.write(text + '\n')


# ==========================================
# 命令
# ==========================================
def run_dist(cfg: RunConfig) -> int:
    """估計 R_ρ 並輸出 JSON 報告"""
    from core.base.errors import MaxItersExceeded
    from core.solver import estimate_rrho
    from utils.file_io import dumps_report, load_point_set

    logger = get_logger()
    mu = load_point_set(cfg.mu_path)
    nu = load_point_set(cfg.nu_path)

    code = EXIT_OK
    try:
        report, _ = estimate_rrho(
            mu, nu, cfg.rho, cfg.eps, mode=cfg.mode, engine=cfg.engine,
            seed=cfg.seed, overrides=cfg.overrides(), jl_dim=cfg.jl_dim,
            iteration_cap=cfg.iteration_cap())
    except MaxItersExceeded as e:
        report = e.report
        code = EXIT_MAX_ITERS
        logger.warning(str(e))

    _emit(dumps_report(report.to_dict()), cfg.out)
    return code


def run_baseline(cfg: RunConfig) -> int:
    """EMD（最小費用流）或 Sinkhorn 基準"""
    from core.geometry import make_instance
    from core.oracles import exact_emd, sinkhorn
    from utils.file_io import dumps_report, load_point_set

    inst = make_instance(load_point_set(cfg.mu_path), load_point_set(cfg.nu_path))
    start = time.perf_counter()
    if cfg.algo == 'emd':
        value = exact_emd(inst).value
    else:
        value = sinkhorn(inst, cfg.eta)
    elapsed = (time.perf_counter() - start) * 1000.0

    _emit(dumps_report({
        'algo': cfg.algo,
        'value': value,
        'eta': cfg.eta,
        'r': inst.r,
        'n': inst.n,
        'm': inst.m,
        'wall_time_ms': elapsed,
    }), cfg.out)
    return EXIT_OK


def run_validate(cfg: RunConfig) -> int:
    """執行驗證套件並輸出各套件的通過數"""
    from validation import available_suites, run_suite

    names = cfg.suites or ['all']
    if 'all' in names:
        names = available_suites()
    failed = False
    for name in names:
        result = run_suite(name, seed=cfg.seed, count=cfg.count)
        print(result.summary_line())
        for detail in result.failures[:10]:
            print(f"  失敗: {detail}")
        failed = failed or not result.ok
    return EXIT_ERROR if failed else EXIT_OK


def run_bench(cfg: RunConfig) -> int:
    """基準 CSV（與可選的耗時圖）"""
    import csv
    import io

    from validation import BENCH_COLUMNS, plot_bench, run_bench as bench, write_bench_csv

    rows = bench(cfg.sizes, cfg.rhos, engine=cfg.engine, eps=cfg.eps,
                 seed=cfg.seed, overrides=cfg.overrides())
    if cfg.out:
        write_bench_csv(cfg.out, rows)
    else:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=list(BENCH_COLUMNS), lineterminator='\n')
        writer.writeheader()
        writer.writerows(rows)
        sys.stdout.write(buffer.getvalue())
    if cfg.plot:
        plot_bench(rows, cfg.plot)
    return EXIT_OK


_RUNNERS = {
    'dist': run_dist,
    'baseline': run_baseline,
    'validate': run_validate,
    'bench': run_bench,
}


def main(argv: Optional[List[str]] = None) -> int:
    """主函式"""
    from core.base.errors import RrhoError

    args = parse_arguments(argv)

    try:
        logger, settings = initialize_system(args)
    except (OSError, ValueError) as e:
        print(f"系統初始化失敗: {e}", file=sys.stderr)
        return EXIT_ERROR

    try:
        cfg = build_config(args)
        return _RUNNERS[cfg.command](cfg)

    except KeyboardInterrupt:
        logger.info("用戶中斷程式")
        return EXIT_ERROR

    except (RrhoError, OSError, ValueError) as e:
        print(f"錯誤: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())

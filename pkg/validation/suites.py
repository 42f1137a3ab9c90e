"""
驗證套件
以固定種子檢查 oracle 不變量、梯度正確性、增強 KDE 統計性質與求解器精度
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from config import get_settings
from core.augkde.tree import AugmentedKdeTree
from core.base.domain import WeightedPointSet
from core.base.errors import MaxItersExceeded, NonConvergence, UnknownSuite
from core.base.params import holder_pair
from core.dual.objective import DualState, dual_objective, gradient, sandwich_bounds
from core.geometry.preprocess import make_instance
from core.kde.backends import BackendKind
from core.kde.kernel import SmoothKernel
from core.oracles.flow import exact_emd
from core.oracles.rrho import exact_rrho
from core.solver.estimators import EngineKind
from core.solver.gradient_ascent import estimate_rrho
from utils.file_io import load_solver_profile
from utils.logger import get_logger
from utils.rng import StreamTag, stream

from .instances import random_pair, random_point_set

SANDWICH_RHOS = (1.05, 1.25, 1.5, 2.0)
SOLVER_RHOS = (1.25, 1.5, 2.0)


@dataclass
class SuiteResult:
    """單一套件的結果"""
    name: str
    passed: int = 0
    total: int = 0
    required: Optional[int] = None
    max_error: Optional[float] = None
    failures: List[str] = field(default_factory=list)
    notes: Dict[str, float] = field(default_factory=dict)
    # 必須處處成立的性質之違反次數，任一次即不通過
    violations: int = 0

    @property
    def ok(self) -> bool:
        needed = self.total if self.required is None else self.required
        return self.passed >= needed and self.violations == 0

    def violate(self, count: int, detail: str = ""):
        if count <= 0:
            return
        self.violations += count
        if detail:
            self.failures.append(detail)

    def record(self, passed: bool, error: Optional[float] = None, detail: str = ""):
        self.total += 1
        if passed:
            self.passed += 1
        elif detail:
            self.failures.append(detail)
        if error is not None:
            self.max_error = error if self.max_error is None else max(self.max_error, error)

    def summary_line(self) -> str:
        line = f"{self.name}: {self.passed}/{self.total}"
        if self.max_error is not None:
            line += f" (最大誤差 {self.max_error:.3e})"
        for key, value in self.notes.items():
            line += f", {key}={value:g}"
        if self.violations:
            line += f", 違反 {self.violations}"
        return line


SuiteFunc = Callable[[int, Optional[int], bool], SuiteResult]
_SUITES: Dict[str, SuiteFunc] = {}


def register_suite(name: str):
    """註冊驗證套件"""
    def decorator(func: SuiteFunc) -> SuiteFunc:
        _SUITES[name] = func
        return func
    return decorator


def available_suites() -> List[str]:
    return list(_SUITES)


def run_suite(name: str, seed: int = 0, count: Optional[int] = None,
              progress: bool = True) -> SuiteResult:
    """
    執行指定套件

    參數:
        name: 套件名稱
        seed: 種子
        count: 實例數（預設取自 ValidationSettings）
        progress: 是否顯示進度條

    返回:
        SuiteResult
    """
    if name not in _SUITES:
        raise UnknownSuite(name, available_suites())
    result = _SUITES[name](seed, count, progress)
    get_logger().info(result.summary_line())
    return result


def _rng(seed: int, suite_id: int, index: int) -> np.random.Generator:
    return stream(seed, StreamTag.VALIDATION, suite_id, index)


# ==========================================
# Oracle 不變量
# ==========================================
@register_suite('sandwich')
def sandwich_suite(seed: int, count: Optional[int] = None, progress: bool = True) -> SuiteResult:
    """EMD ≤ R_ρ ≤ sup(1/(μν))^((ρ−1)/ρ)·EMD"""
    cfg = get_settings().validation
    count = count or cfg.sandwich_instances
    result = SuiteResult('sandwich')

    def check(mu: WeightedPointSet, nu: WeightedPointSet, rho: float, label: str):
        inst = make_instance(mu, nu)
        emd = exact_emd(inst).value
        try:
            value = exact_rrho(inst, holder_pair(rho)).value
        except NonConvergence as e:
            result.record(False, None, f"{label}: {e}")
            return
        low, high = sandwich_bounds(emd, mu.masses, nu.masses, rho)
        slack = 1e-7 * inst.r
        violation = max(low - value, value - high, 0.0) / inst.r
        result.record(violation <= slack / inst.r, violation,
                      f"{label}: EMD={emd:.9g}, R={value:.9g}, 上界={high:.9g}")

    for k in tqdm(range(count), desc='sandwich', disable=not progress):
        rng = _rng(seed, 1, k)
        mu, nu = random_pair(rng, cfg.max_support, cfg.max_dim)
        rho = float(rng.choice(SANDWICH_RHOS))
        check(mu, nu, rho, f"實例 {k} (ρ={rho})")

    # 均勻 4×4、ρ = 1.01：R ≤ 16^(0.01/1.01)·EMD
    rng = _rng(seed, 1, count)
    mu = random_point_set(rng, 4, 2, uniform=True)
    nu = random_point_set(rng, 4, 2, uniform=True)
    check(mu, nu, 1.01, "均勻 4×4 (ρ=1.01)")
    return result


@register_suite('triangle')
def triangle_suite(seed: int, count: Optional[int] = None, progress: bool = True) -> SuiteResult:
    """共用支撐上的三角不等式與自身距離為 0"""
    cfg = get_settings().validation
    count = count or cfg.triangle_instances
    result = SuiteResult('triangle')

    for k in tqdm(range(count), desc='triangle', disable=not progress):
        rng = _rng(seed, 2, k)
        size = int(rng.integers(2, cfg.max_support + 1))
        dim = int(rng.integers(1, cfg.max_dim + 1))
        points = rng.random((size, dim))
        mu, nu, xi = (random_point_set(rng, size, dim, points=points) for _ in range(3))
        hp = holder_pair(float(rng.choice(SOLVER_RHOS)))

        try:
            d_mn = exact_rrho(make_instance(mu, nu), hp).value
            d_nx = exact_rrho(make_instance(nu, xi), hp).value
            d_mx = exact_rrho(make_instance(mu, xi), hp).value
            self_dist = exact_rrho(make_instance(mu, mu), hp).value
        except NonConvergence as e:
            result.record(False, None, f"實例 {k}: {e}")
            continue
        r = make_instance(mu, xi).r
        excess = max(d_mx - d_mn - d_nx, 0.0) / r
        ok = excess <= 1e-7 and self_dist <= 1e-8 * r
        result.record(ok, excess,
                      f"實例 {k}: R(μ,ξ)={d_mx:.9g} > {d_mn:.9g}+{d_nx:.9g} 或 R(μ,μ)={self_dist:.3g}")
    return result


# ==========================================
# 梯度
# ==========================================
@register_suite('gradcheck')
def gradcheck_suite(seed: int, count: Optional[int] = None, progress: bool = True) -> SuiteResult:
    """解析梯度與中央差分比較，相對誤差 ≤ 1e-5"""
    cfg = get_settings().validation
    count = count or cfg.gradcheck_instances
    result = SuiteResult('gradcheck')
    h = 1e-6

    for k in tqdm(range(count), desc='gradcheck', disable=not progress):
        rng = _rng(seed, 3, k)
        mu, nu = random_pair(rng, cfg.max_support, cfg.max_dim)
        inst = make_instance(mu, nu)
        hp = holder_pair(float(rng.choice(SOLVER_RHOS)))
        dist = inst.cross_distances() / inst.r
        checked = 0
        while checked < cfg.gradcheck_points:
            alpha = rng.random(inst.n) * 0.5
            beta = rng.random(inst.m) * 0.5
            # 只在 |α_i − β_j| 遠離 0 的光滑點檢查
            if np.min(np.abs(alpha[:, None] - beta[None, :])) < 1e-3:
                continue
            z = np.concatenate([alpha, beta])
            state = DualState.from_vector(z, inst.n)
            analytic = gradient(inst, state, hp, dist)
            numeric = np.empty_like(z)
            for idx in range(z.size):
                step = np.zeros_like(z)
                step[idx] = h
                up = dual_objective(inst, DualState.from_vector(z + step, inst.n), hp, dist)
                down = dual_objective(inst, DualState.from_vector(z - step, inst.n), hp, dist)
                numeric[idx] = (up - down) / (2.0 * h)
            scale = max(float(np.max(np.abs(analytic))), 1e-12)
            error = float(np.max(np.abs(numeric - analytic))) / scale
            result.record(error <= 1e-5, error, f"實例 {k}: 相對誤差 {error:.3e}")
            checked += 1
    return result


# ==========================================
# 增強 KDE 統計
# ==========================================
def _kde_tree(rng: np.random.Generator, s2: float, eps: float,
              repetitions: Optional[int] = None) -> AugmentedKdeTree:
    cfg = get_settings().validation
    n = cfg.kde_points
    points = rng.random((n, 2))
    weights = rng.random(n)
    multipliers = rng.dirichlet(np.ones(n))
    kernel = SmoothKernel(s=2.0, floor=1e-3)
    return AugmentedKdeTree.build(points, weights, multipliers, s2, kernel,
                                  backend_kind=BackendKind.EXACT, eps=eps,
                                  repetitions=repetitions)


@register_suite('kde-unbiased')
def kde_unbiased_suite(seed: int, count: Optional[int] = None, progress: bool = True) -> SuiteResult:
    """單次估計的平均值落在真值的 3 個標準誤內"""
    cfg = get_settings().validation
    reps = count or cfg.kde_repetitions
    result = SuiteResult('kde-unbiased')

    for s2 in (1.0, 2.0):
        for q in tqdm(range(cfg.kde_queries), desc=f'kde-unbiased s2={s2:g}',
                      disable=not progress):
            rng = _rng(seed, 4, int(s2) * 1000 + q)
            tree = _kde_tree(rng, s2, 0.5, repetitions=1)
            y = rng.random(2)
            beta = float(rng.uniform(0.0, 0.5))
            truth = tree.exact_sum(y, beta)
            samples = tree.query_samples(y, beta, reps, rng)
            stderr = float(samples.std(ddof=1)) / math.sqrt(reps)
            error = abs(float(samples.mean()) - truth)
            result.record(error <= 3.0 * stderr + 1e-12 * truth, error / max(truth, 1e-300),
                          f"s2={s2:g} 查詢 {q}: 平均 {samples.mean():.9g} vs 真值 {truth:.9g}")
    return result


@register_suite('kde-variance')
def kde_variance_suite(seed: int, count: Optional[int] = None, progress: bool = True) -> SuiteResult:
    """預設 T 下單次估計的經驗變異數 ≤ ε·E²"""
    cfg = get_settings().validation
    queries = count or cfg.kde_variance_queries
    eps = 0.25
    result = SuiteResult('kde-variance')

    for s2 in (1.0, 2.0):
        rng = _rng(seed, 5, int(s2))
        tree = _kde_tree(rng, s2, eps)
        for q in tqdm(range(queries), desc=f'kde-variance s2={s2:g}', disable=not progress):
            y = rng.random(2)
            beta = float(rng.uniform(0.0, 0.5))
            truth = tree.exact_sum(y, beta)
            samples = tree.query_samples(y, beta, 50, rng)
            ratio = float(samples.var(ddof=1)) / max(truth ** 2, 1e-300)
            result.record(ratio <= eps, ratio, f"s2={s2:g} 查詢 {q}: Var/E² = {ratio:.3e}")
    return result


# ==========================================
# 求解器
# ==========================================
def _trajectory_violations(report, exact: float, rho: float, r: float) -> Tuple[int, int]:
    """(g ≥ 0 時懲罰項超過 4·R^ρ 的次數, g 未嚴格上升的更新步數)"""
    bound = 4.0 * exact ** rho + 1e-6 * r ** rho
    gs = [g for _, g, _ in report.trajectory]
    breaches = sum(1 for _, g, p in report.trajectory if g >= 0 and p > bound)
    stalls = sum(1 for a, b in zip(gs[:-1], gs[1:]) if not b > a)
    return breaches, stalls


def _accuracy_case(result: SuiteResult, label: str, mu: WeightedPointSet,
                   nu: WeightedPointSet, rho: float, eps: float, seed: int,
                   overrides, engine: EngineKind, record_trajectory: bool):
    """
    對單一實例比較 estimate_rrho 與 exact_rrho

    返回:
        (SolverReport, 精確值, r)；oracle 未收斂時記為失敗並返回 None
    """
    raw = make_instance(mu, nu)
    try:
        exact = exact_rrho(raw, holder_pair(rho)).value
    except NonConvergence as e:
        result.record(False, None, f"{label}: {e}")
        return None
    try:
        report, _ = estimate_rrho(mu, nu, rho, eps, engine=engine, seed=seed,
                                  overrides=overrides, record_trajectory=record_trajectory)
    except MaxItersExceeded as e:
        report = e.report

    error = abs(report.estimate - exact) / raw.r
    result.record(error <= eps, error,
                  f"{label}: 估計 {report.estimate:.6g} vs {exact:.6g}")
    return report, exact, raw.r


@register_suite('convergence')
def convergence_suite(seed: int, count: Optional[int] = None, progress: bool = True) -> SuiteResult:
    """
    精確引擎的估計值落在 exact_rrho 的 ε·r 之內（至少 95%）

    沿軌跡，g ≥ 0 時懲罰項須 ≤ 4·R^ρ，且每次更新 g 須嚴格上升；任一違反即不通過。
    """
    cfg = get_settings().validation
    count = count or cfg.convergence_instances
    eps = cfg.convergence_eps
    overrides = load_solver_profile(cfg.convergence_profile)
    result = SuiteResult('convergence', required=math.ceil(0.95 * count))
    penalty_breaches = 0
    stalls = 0

    for k in tqdm(range(count), desc='convergence', disable=not progress):
        rng = _rng(seed, 6, k)
        mu, nu = random_pair(rng, cfg.solver_support, cfg.max_dim)
        rho = float(rng.choice(SOLVER_RHOS))
        label = f"實例 {k} (ρ={rho})"
        outcome = _accuracy_case(result, label, mu, nu, rho, eps, seed + k,
                                 overrides, EngineKind.EXACT, record_trajectory=True)
        if outcome is None:
            continue
        report, exact, r = outcome
        breaches, flat = _trajectory_violations(report, exact, rho, r)
        result.violate(breaches, f"{label}: 懲罰項超界 {breaches} 次")
        result.violate(flat, f"{label}: g 未上升 {flat} 次")
        penalty_breaches += breaches
        stalls += flat

    result.notes['懲罰項超界'] = penalty_breaches
    result.notes['未上升步數'] = stalls
    return result


@register_suite('sampling')
def sampling_suite(seed: int, count: Optional[int] = None, progress: bool = True) -> SuiteResult:
    """取樣引擎的估計值落在 exact_rrho 的 ε·r 之內（至少 90%）"""
    cfg = get_settings().validation
    count = count or cfg.sampling_instances
    eps = cfg.sampling_eps
    overrides = load_solver_profile(cfg.sampling_profile)
    result = SuiteResult('sampling', required=math.ceil(0.9 * count))

    for k in tqdm(range(count), desc='sampling', disable=not progress):
        rng = _rng(seed, 7, k)
        mu, nu = random_pair(rng, cfg.sampling_support, cfg.max_dim)
        rho = float(rng.choice(SOLVER_RHOS))
        _accuracy_case(result, f"實例 {k} (ρ={rho})", mu, nu, rho, eps, seed + k,
                       overrides, EngineKind.SAMPLING, record_trajectory=False)
    return result

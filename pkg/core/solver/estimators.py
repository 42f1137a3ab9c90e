"""
梯度估計引擎
Est-Alpha / Est-Beta / Est-Penalty 的精確引擎與增強 KDE 取樣引擎
"""

from abc import ABC, abstractmethod
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from utils.parallel import ordered_map
from utils.rng import StreamTag, stream

from ..augkde.tree import AugmentedKdeTree, default_grid_anchor
from ..base.domain import HolderPair, SolverParams
from ..base.errors import UnregisteredComponent
from ..dual.objective import (
    DualState,
    dual_objective,
    grad_alpha_exact,
    grad_beta_exact,
    penalty_exact,
)
from ..geometry.preprocess import ProblemInstance
from ..kde.backends import BackendKind
from ..kde.kernel import SmoothKernel


class EngineKind(Enum):
    """估計引擎類型"""
    EXACT = "exact"
    SAMPLING = "sampling"


class EstimatorEngine(ABC):
    """
    估計引擎抽象基類

    每次呼叫都帶有迭代編號，取樣引擎以 (種子, 迭代, 標籤, 查詢索引) 衍生隨機流。
    """

    def __init__(self, inst: ProblemInstance, hp: HolderPair,
                 params: SolverParams, seed: int = 0):
        self.inst = inst
        self.hp = hp
        self.params = params
        self.seed = int(seed)
        self.iteration = 0

    @property
    @abstractmethod
    def kind(self) -> EngineKind:
        pass

    @abstractmethod
    def est_alpha(self, state: DualState, eps1: float, tau: float) -> np.ndarray:
        pass

    @abstractmethod
    def est_beta(self, state: DualState, eps1: float, tau: float) -> np.ndarray:
        pass

    @abstractmethod
    def est_penalty(self, state: DualState, eps1: float, tau: float) -> float:
        pass

    def objective(self, state: DualState) -> Optional[float]:
        """精確的 g(α, β)；取樣引擎不提供"""
        return None


class EngineFactory:
    """估計引擎工廠類"""

    _registry: Dict[EngineKind, type] = {}

    @classmethod
    def register(cls, kind: EngineKind):
        """註冊引擎類型"""
        def decorator(engine_class: type):
            cls._registry[kind] = engine_class
            return engine_class
        return decorator

    @classmethod
    def create(cls, kind, inst: ProblemInstance, hp: HolderPair,
               params: SolverParams, seed: int = 0) -> EstimatorEngine:
        """建立引擎實例"""
        try:
            kind = EngineKind(kind)
        except ValueError:
            raise UnregisteredComponent(kind) from None
        engine_class = cls._registry.get(kind)
        if engine_class is None:
            raise UnregisteredComponent(kind)
        return engine_class(inst, hp, params, seed)

    @classmethod
    def get_available_types(cls) -> List[EngineKind]:
        return list(cls._registry.keys())


# ==========================================
# 精確引擎
# ==========================================
@EngineFactory.register(EngineKind.EXACT)
class ExactEngine(EstimatorEngine):
    """以對偶模組直接計算 η、ξ、ω（每次迭代 O(nm)）"""

    def __init__(self, inst, hp, params, seed=0):
        super().__init__(inst, hp, params, seed)
        self.distances = inst.cross_distances()

    @property
    def kind(self) -> EngineKind:
        return EngineKind.EXACT

    def est_alpha(self, state, eps1, tau):
        return grad_alpha_exact(self.inst, state, self.hp, self.distances)

    def est_beta(self, state, eps1, tau):
        return grad_beta_exact(self.inst, state, self.hp, self.distances)

    def est_penalty(self, state, eps1, tau):
        return penalty_exact(self.inst, state, self.hp, self.distances)

    def objective(self, state):
        return dual_objective(self.inst, state, self.hp, self.distances)


# ==========================================
# 取樣引擎
# ==========================================
@EngineFactory.register(EngineKind.SAMPLING)
class SamplingEngine(EstimatorEngine):
    """
    以增強 KDE 樹估計

    Est-Alpha：樹建在 {y_j} 上，權重 −β_j、乘數 ν_j，於 (x_i, −α_i) 查詢，s2 = s − 1；
    Est-Beta：樹建在 {x_i} 上，權重 α_i、乘數 μ_i，於 (y_j, β_j) 查詢，s2 = s − 1；
    Est-Penalty：同 Est-Beta 但 s2 = s，輸出 C_s·Σ_j ν_j·ξ̂_j。

    樹依 (用途, s2, ε₁) 保留一棵；權重排序不變時以 reweighted 重用節點後端。
    """

    def __init__(self, inst, hp, params, seed=0):
        super().__init__(inst, hp, params, seed)
        self.kernel = SmoothKernel.for_instance(inst, hp.s, params.eps0)
        calls = params.max_iters * (inst.n + inst.m + 1)
        self.call_delta = params.delta / calls
        self._trees: Dict[Tuple[int, float, float], AugmentedKdeTree] = {}
        self.rebuilds = 0

    @property
    def kind(self) -> EngineKind:
        return EngineKind.SAMPLING

    def _anchor(self, size: int, eps1: float) -> float:
        return default_grid_anchor(
            self.params.eps0, self.inst.min_distance, size,
            self.inst.aspect_ratio, self.hp.s, eps1)

    def _tree(self, tag: StreamTag, points: np.ndarray, weights: np.ndarray,
              multipliers: np.ndarray, s2: float, eps1: float) -> AugmentedKdeTree:
        key = (int(tag), s2, float(eps1))
        tree = self._trees.get(key)
        if tree is not None:
            if np.array_equal(tree.sorted_weights, weights[tree.leaf_order]):
                return tree
            tree = tree.reweighted(weights)
        if tree is None:
            tree = AugmentedKdeTree.build(
                points, weights, multipliers, s2, self.kernel,
                backend_kind=BackendKind.SAMPLING,
                eps=eps1,
                delta=self.call_delta,
                grid_anchor=self._anchor(weights.size, eps1),
                seed=self.seed + int(tag),
                backend_options={
                    'min_distance': self.inst.min_distance,
                    'aspect_ratio': self.inst.aspect_ratio,
                },
            )
            self.rebuilds += 1
        self._trees[key] = tree
        return tree

    def _query_all(self, tree: AugmentedKdeTree, tag: StreamTag,
                   points: np.ndarray, offsets: np.ndarray) -> np.ndarray:
        iteration = self.iteration

        def one(index: int) -> float:
            rng = stream(self.seed, iteration, int(tag), index)
            return tree.query(points[index], float(offsets[index]), rng)

        return np.array(ordered_map(one, list(range(len(offsets)))), dtype=float)

    def est_alpha(self, state, eps1, tau):
        tree = self._tree(StreamTag.EST_ALPHA, self.inst.nu.points, -state.beta,
                          self.inst.nu.masses, self.hp.s - 1.0, eps1)
        raw = self._query_all(tree, StreamTag.EST_ALPHA, self.inst.mu.points, -state.alpha)
        eta = self.hp.s_c_s * raw
        eta[eta < tau] = 0.0
        return eta

    def est_beta(self, state, eps1, tau):
        tree = self._tree(StreamTag.EST_BETA, self.inst.mu.points, state.alpha,
                          self.inst.mu.masses, self.hp.s - 1.0, eps1)
        raw = self._query_all(tree, StreamTag.EST_BETA, self.inst.nu.points, state.beta)
        xi = self.hp.s_c_s * raw
        xi[xi < tau] = 0.0
        return xi

    def est_penalty(self, state, eps1, tau):
        tree = self._tree(StreamTag.EST_PENALTY, self.inst.mu.points, state.alpha,
                          self.inst.mu.masses, self.hp.s, eps1)
        raw = self._query_all(tree, StreamTag.EST_PENALTY, self.inst.nu.points, state.beta)
        return self.hp.c_s * float(self.inst.nu.masses @ raw)


# ==========================================
# 函數介面
# ==========================================
def est_alpha(inst: ProblemInstance, state: DualState, hp: HolderPair,
              eps1: float, tau: float, engine: EstimatorEngine) -> np.ndarray:
    """
    估計 η_i = sC_s Σ_j ν_j ((α_i−β_j)^+)^(s−1)/‖x_i−y_j‖^s

    返回:
        長度 n 的 η̂
    """
    return engine.est_alpha(state, eps1, tau)


def est_beta(inst: ProblemInstance, state: DualState, hp: HolderPair,
             eps1: float, tau: float, engine: EstimatorEngine) -> np.ndarray:
    """估計 ξ_j = sC_s Σ_i μ_i ((α_i−β_j)^+)^(s−1)/‖x_i−y_j‖^s"""
    return engine.est_beta(state, eps1, tau)


def est_penalty(inst: ProblemInstance, state: DualState, hp: HolderPair,
                eps1: float, tau: float, engine: EstimatorEngine) -> float:
    """估計懲罰項 ω ≈ C_s Σ μ_iν_j ((α_i−β_j)^+/‖x_i−y_j‖)^s"""
    return engine.est_penalty(state, eps1, tau)

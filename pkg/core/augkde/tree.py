"""
增強 KDE 樹
依儲存權重 α 排序的平衡二元樹，每個節點持有一個 KDE 後端；
以幾何門檻網格與重要性取樣估計 Σ_i μ_i·((α_i − β)^+)^s2·K(x_i, y)
"""

import copy
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import get_settings
from utils.rng import spawn_seed

from ..base.errors import EmptyInput, WeightPromiseViolated
from ..kde.backends import BackendFactory, BackendKind, KdeBackend
from ..kde.kernel import SmoothKernel


@dataclass(frozen=True, eq=False)
class TreeNode:
    """樹節點：葉序區間 [lo, hi) 內的點與其後端"""
    node_id: int
    lo: int
    hi: int
    min: float
    max: float
    med: float
    indices: np.ndarray
    backend: KdeBackend

    @property
    def size(self) -> int:
        return self.hi - self.lo


def default_grid_anchor(eps0: float, min_distance: float, n: int,
                        aspect_ratio: float, s: float, eps: float) -> float:
    """網格錨點 σ1 = ε0·σr / M，M = n·Φ·2^s/ε"""
    big_m = n * aspect_ratio * 2.0 ** s / eps
    return eps0 * min_distance / big_m


def inclusion_probability(alpha_i: float, beta: float, lo: float, hi: float, s2: float) -> float:
    """
    門檻取樣的納入機率

    w ~ U[lo^s2, hi^s2]，當 α_i − β 落在 (lo, hi] 時
    P[α_i ≥ β + w^(1/s2)] = ((α_i − β)^s2 − lo^s2) / (hi^s2 − lo^s2)，否則為 0。
    """
    gap = alpha_i - beta
    if gap <= lo or gap > hi:
        return 0.0
    return (gap ** s2 - lo ** s2) / (hi ** s2 - lo ** s2)


class AugmentedKdeTree:
    """
    增強 KDE 資料結構

    以 2 的冪容量的隱式線段樹組織排序後的點，節點 k 的子節點為 2k 與 2k+1，
    葉節點為 capacity + i。任意葉序區間可分解為 O(log n) 個標準節點。
    """

    def __init__(self,
                 points: np.ndarray,
                 weights: np.ndarray,
                 multipliers: np.ndarray,
                 s2: float,
                 kernel: SmoothKernel,
                 backend_kind: BackendKind = BackendKind.EXACT,
                 eps: float = 0.25,
                 delta: float = 0.1,
                 grid_anchor: Optional[float] = None,
                 adaptive_anchor: Optional[bool] = None,
                 repetitions: Optional[int] = None,
                 median_count: Optional[int] = None,
                 seed: int = 0,
                 backend_options: Optional[dict] = None):
        """
        建立樹

        參數:
            points: (n, d) 資料點
            weights: 儲存權重 α（排序鍵）
            multipliers: 每點乘數 μ
            s2: 權重冪次 (>= 1)
            kernel: 平滑核
            backend_kind: 節點後端類型
            eps, delta: 估計精度與失敗機率
            grid_anchor: 網格錨點 σ1（None 時取最小正權重差）
            adaptive_anchor: 是否將錨點下調至最小正權重差
            repetitions: 每格取樣次數 T（預設 ceil(16·2^s2/ε²)）
            median_count: 中位數重複次數（預設 ceil(9·ln(1/δ))）
            seed: 後端建構種子
            backend_options: 傳給後端的額外參數
        """
        kde = get_settings().kde
        points = np.asarray(points, dtype=float)
        weights = np.asarray(weights, dtype=float)
        multipliers = np.asarray(multipliers, dtype=float)
        if weights.size == 0:
            raise EmptyInput("增強 KDE 樹需要至少一個點")
        if points.ndim == 1:
            points = points.reshape(weights.size, -1)

        self.s2 = float(s2)
        self.kernel = kernel
        self.backend_kind = BackendKind(backend_kind)
        self.eps = float(eps)
        self.delta = float(delta)
        self.grid_anchor = grid_anchor
        self.adaptive_anchor = kde.adaptive_anchor if adaptive_anchor is None else adaptive_anchor
        self.repetitions = repetitions or math.ceil(
            kde.repetition_constant * 2.0 ** self.s2 / self.eps ** 2)
        self.median_count = median_count or max(
            1, math.ceil(kde.median_constant * math.log(1.0 / self.delta)))
        self.seed = int(seed)

        self.n = int(weights.size)
        self.leaf_order = np.argsort(weights, kind='stable')
        self.sorted_weights = weights[self.leaf_order]
        self._points = points[self.leaf_order]
        self._multipliers = multipliers[self.leaf_order]

        self.capacity = 1
        while self.capacity < self.n:
            self.capacity <<= 1
        self.depth = int(math.log2(self.capacity))

        options = dict(backend_options or {})
        self.nodes: Dict[int, TreeNode] = {}
        for node_id, lo, hi in self._node_ranges():
            node_options = dict(options)
            if self.backend_kind is BackendKind.SAMPLING:
                node_options.setdefault('eps', self.eps)
                node_options.setdefault('delta', self.delta)
                node_options['seed'] = spawn_seed(self.seed, node_id)
            segment = self.sorted_weights[lo:hi]
            self.nodes[node_id] = TreeNode(
                node_id=node_id,
                lo=lo,
                hi=hi,
                min=float(segment[0]),
                max=float(segment[-1]),
                med=float(np.median(segment)),
                indices=self.leaf_order[lo:hi],
                backend=BackendFactory.create(
                    self.backend_kind, self._points[lo:hi],
                    self._multipliers[lo:hi], kernel, **node_options),
            )
        self._node_cache: Dict[bytes, np.ndarray] = {}

    @classmethod
    def build(cls, points, weights, multipliers, s2, kernel,
              backend_kind=BackendKind.EXACT, **kwargs) -> 'AugmentedKdeTree':
        return cls(points, weights, multipliers, s2, kernel, backend_kind, **kwargs)

    def reweighted(self, weights: np.ndarray) -> Optional['AugmentedKdeTree']:
        """
        以新的儲存權重重用此樹

        節點後端只依賴排序後的點，因此排序不變時共用後端與核值快取，
        只更新節點的 min/med/max。排序改變時返回 None。
        """
        weights = np.asarray(weights, dtype=float)
        if weights.size != self.n:
            return None
        order = np.argsort(weights, kind='stable')
        if not np.array_equal(order, self.leaf_order):
            return None
        tree = copy.copy(self)
        tree.sorted_weights = weights[order]
        tree.nodes = {}
        for node_id, node in self.nodes.items():
            segment = tree.sorted_weights[node.lo:node.hi]
            tree.nodes[node_id] = replace(
                node, min=float(segment[0]), max=float(segment[-1]),
                med=float(np.median(segment)))
        return tree

    # ==========================================
    # 樹結構
    # ==========================================
    def _node_ranges(self):
        """產生所有非空節點 (id, lo, hi)，葉序區間截斷至 n"""
        span = self.capacity
        level_start = 1
        while span >= 1:
            for k in range(level_start, 2 * level_start):
                lo = (k - level_start) * span
                if lo >= self.n:
                    break
                yield k, lo, min(lo + span, self.n)
            span >>= 1
            level_start <<= 1

    @property
    def root(self) -> TreeNode:
        return self.nodes[1]

    @property
    def max_weight(self) -> float:
        return float(self.sorted_weights[-1])

    @property
    def min_weight(self) -> float:
        return float(self.sorted_weights[0])

    def decompose(self, lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        向量化標準節點分解

        參數:
            lo, hi: 葉序半開區間 [lo, hi) 的陣列

        返回:
            (區間編號, 節點編號)，每個區間的節點互不相交且恰好覆蓋該區間
        """
        left = np.asarray(lo, dtype=np.int64) + self.capacity
        right = np.asarray(hi, dtype=np.int64) + self.capacity
        owner = np.arange(left.size)
        owners: List[np.ndarray] = []
        picked: List[np.ndarray] = []
        while left.size:
            keep = left < right
            left, right, owner = left[keep], right[keep], owner[keep]
            take_left = (left & 1) == 1
            owners.append(owner[take_left])
            picked.append(left[take_left])
            left = left + take_left
            take_right = (right & 1) == 1
            right = right - take_right
            owners.append(owner[take_right])
            picked.append(right[take_right])
            left >>= 1
            right >>= 1
        if not picked:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        return np.concatenate(owners), np.concatenate(picked)

    def canonical_nodes(self, threshold: float,
                        interval: Optional[Tuple[float, float]] = None) -> List[TreeNode]:
        """
        覆蓋 {i : α_i ≥ threshold 且 α_i ∈ (low, high]} 的標準節點

        參數:
            threshold: 門檻 a*
            interval: 權重區間 (low, high]，None 表示整個範圍
        """
        lo = int(np.searchsorted(self.sorted_weights, threshold, side='left'))
        hi = self.n
        if interval is not None:
            low, high = interval
            lo = max(lo, int(np.searchsorted(self.sorted_weights, low, side='right')))
            hi = int(np.searchsorted(self.sorted_weights, high, side='right'))
        if lo >= hi:
            return []
        _, ids = self.decompose(np.array([lo]), np.array([hi]))
        return [self.nodes[int(k)] for k in ids]

    # ==========================================
    # 查詢
    # ==========================================
    def _gaps(self, beta: float) -> np.ndarray:
        return self.sorted_weights - beta

    def grid(self, beta: float) -> np.ndarray:
        """
        權重差空間的網格邊界 [0, σ1, 2σ1, 4σ1, ..., max − β]

        max ≤ β 時返回空陣列。
        """
        gaps = self._gaps(beta)
        top = float(gaps[-1])
        if top <= 0:
            return np.zeros(0)
        first_positive = float(gaps[np.searchsorted(gaps, 0.0, side='right')])
        anchor = self.grid_anchor if self.grid_anchor is not None else first_positive
        if self.adaptive_anchor:
            anchor = min(anchor, first_positive)
        elif first_positive < anchor:
            raise WeightPromiseViolated(first_positive, anchor)
        anchor = min(anchor, top)
        bounds = [0.0, anchor]
        while bounds[-1] * 2.0 < top:
            bounds.append(bounds[-1] * 2.0)
        if bounds[-1] < top:
            bounds.append(top)
        return np.array(bounds)

    def _cached_values(self, y: np.ndarray) -> np.ndarray:
        """查詢點 y 的節點核值快取（節點後端固定，值可跨查詢重用）"""
        key = y.tobytes()
        cache = self._node_cache.get(key)
        if cache is None:
            cache = np.full(2 * self.capacity, np.nan)
            self._node_cache[key] = cache
        return cache

    def _node_values(self, cache: np.ndarray, ids: np.ndarray, y: np.ndarray) -> np.ndarray:
        missing = np.unique(ids[np.isnan(cache[ids])])
        for k in missing:
            cache[k] = self.nodes[int(k)].backend.query(y)
        return cache[ids]

    def _range_sums(self, lo: np.ndarray, hi: np.ndarray, cache: np.ndarray,
                    y: np.ndarray) -> np.ndarray:
        owner, ids = self.decompose(lo, hi)
        sums = np.zeros(lo.size)
        if ids.size:
            sums += np.bincount(owner, weights=self._node_values(cache, ids, y),
                                minlength=lo.size)
        return sums

    def query_samples(self, y: np.ndarray, beta: float, count: int,
                      rng: np.random.Generator) -> np.ndarray:
        """
        產生 count 個獨立的單次估計（未取中位數）

        每格 (σ_ℓ, σ_(ℓ+1)] 的估計為 σ_ℓ^s2·(格內總和) + Δ_ℓ·平均 ξ̂_(ℓ,t)，
        其中 ξ̂_(ℓ,t) 為權重差 ≥ w^(1/s2) 的格內點之 KDE 總和，
        w ~ U[σ_ℓ^s2, σ_(ℓ+1)^s2]，Δ_ℓ = σ_(ℓ+1)^s2 − σ_ℓ^s2。

        門檻只透過「排除格內前 j 個點」影響 ξ̂，因此 T 次門檻以
        多項分佈一次抽出各 j 的次數，與逐次取樣同分佈。
        """
        bounds = self.grid(beta)
        if bounds.size == 0:
            return np.zeros(count)
        y = np.asarray(y, dtype=float)
        gaps = self._gaps(beta)
        cache = self._cached_values(y)

        powered = bounds ** self.s2
        low_pow, high_pow = powered[:-1], powered[1:]
        widths = high_pow - low_pow
        cell_lo = np.searchsorted(gaps, bounds[:-1], side='right')
        cell_hi = np.searchsorted(gaps, bounds[1:], side='right')

        base = float(low_pow @ self._range_sums(cell_lo, cell_hi, cache, y))

        # 空格的增量為 0
        filled = np.flatnonzero(cell_hi > cell_lo)
        if filled.size == 0:
            return np.full(count, base)
        first, last = cell_lo[filled], cell_hi[filled]
        sizes = last - first
        offsets = np.arange(int(sizes.max()) + 1)

        # 後綴和 [first + j, last)，j ≥ 格大小時為空區間
        lo = np.minimum(first[:, None] + offsets, last[:, None])
        hi = np.broadcast_to(last[:, None], lo.shape)
        suffix = self._range_sums(lo.ravel(), hi.ravel(), cache, y).reshape(lo.shape)

        # P[恰排除前 j 個點] = (g_j^s2 − g_(j−1)^s2) / Δ_ℓ
        edges = np.broadcast_to(high_pow[filled, None], lo.shape).copy()
        inside = offsets[None, :] < sizes[:, None]
        edges[inside] = gaps[lo[inside]] ** self.s2
        previous = np.concatenate([low_pow[filled, None], edges[:, :-1]], axis=1)
        probs = np.maximum(edges - previous, 0.0)
        probs /= probs.sum(axis=1, keepdims=True)

        reps = self.repetitions
        counts = rng.multinomial(reps, probs, size=(count, filled.size))
        means = (counts * suffix).sum(axis=2) / reps
        return base + means @ widths[filled]

    def query(self, y: np.ndarray, beta: float, rng: np.random.Generator,
              median_count: Optional[int] = None) -> float:
        """
        估計 Σ_i μ_i·((α_i − β)^+)^s2·K(x_i, y)

        參數:
            y: 查詢點
            beta: 偏移 β
            rng: 本次查詢的隨機流
            median_count: 中位數重複次數（預設建構時的值）

        返回:
            單次估計的中位數；max α ≤ β 時為 0
        """
        if self.max_weight <= beta:
            return 0.0
        samples = self.query_samples(y, beta, median_count or self.median_count, rng)
        return float(np.median(samples))

    def exact_sum(self, y: np.ndarray, beta: float) -> float:
        """直接計算目標值（測試與驗證用）"""
        gaps = np.maximum(self.sorted_weights - beta, 0.0)
        kernel_values = self.kernel.evaluate(self._points, y)
        return float(np.sum(self._multipliers * gaps ** self.s2 * kernel_values))

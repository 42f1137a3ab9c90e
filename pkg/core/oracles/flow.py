"""
最小費用流 EMD
完全二部圖上的逐次最短增廣路徑（Dijkstra + 勢能）
"""

import heapq
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from config import get_settings
from utils.logger import get_logger, log_execution_time

from ..base.domain import Coupling
from ..geometry.preprocess import ProblemInstance
from .rrho import CertificateKind, OracleResult, verified_result, check_oracle_size

# 剩餘容量低於此值視為 0
_CAPACITY_EPS = 1e-14


@dataclass(order=True)
class PriorityNode:
    """優先隊列節點"""
    priority: float
    node: int = field(compare=False)


class TransportNetwork:
    """
    供給 μ、需求 ν 的二部運輸網路

    節點編號：源點 0，x_i 為 1+i，y_j 為 1+n+j，匯點 1+n+m。
    """

    def __init__(self, supply: np.ndarray, demand: np.ndarray, costs: np.ndarray):
        self.n, self.m = costs.shape
        self.costs = np.asarray(costs, dtype=float)
        self.supply_left = np.asarray(supply, dtype=float).copy()
        self.demand_left = np.asarray(demand, dtype=float).copy()
        self.flow = np.zeros((self.n, self.m))
        self.source = 0
        self.sink = 1 + self.n + self.m
        self.potential = np.zeros(self.sink + 1)
        self.tolerance = get_settings().oracle.flow_tolerance

    def _x(self, i) -> int:
        return 1 + i

    def _y(self, j) -> int:
        return 1 + self.n + j

    def _reduced(self, cost: np.ndarray, u: int, v: np.ndarray) -> np.ndarray:
        rc = cost + self.potential[u] - self.potential[v]
        # 浮點誤差造成的微小負值
        return np.maximum(rc, 0.0)

    def shortest_paths(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        以約化成本執行 Dijkstra

        返回:
            (距離, 前驅節點)
        """
        size = self.sink + 1
        dist = np.full(size, np.inf)
        prev = np.full(size, -1, dtype=np.int64)
        visited = np.zeros(size, dtype=bool)
        dist[self.source] = 0.0
        open_set: List[PriorityNode] = [PriorityNode(0.0, self.source)]

        def relax(u: int, targets: np.ndarray, costs: np.ndarray):
            if targets.size == 0:
                return
            cand = dist[u] + self._reduced(costs, u, targets)
            better = cand < dist[targets]
            for v, d in zip(targets[better], cand[better]):
                dist[v] = d
                prev[v] = u
                heapq.heappush(open_set, PriorityNode(float(d), int(v)))

        while open_set:
            current = heapq.heappop(open_set)
            u = current.node
            if visited[u]:
                continue
            visited[u] = True

            if u == self.source:
                rows = np.flatnonzero(self.supply_left > _CAPACITY_EPS)
                relax(u, self._x(rows), np.zeros(rows.size))
            elif u <= self.n:
                i = u - 1
                relax(u, self._y(np.arange(self.m)), self.costs[i])
            elif u < self.sink:
                j = u - 1 - self.n
                rows = np.flatnonzero(self.flow[:, j] > _CAPACITY_EPS)
                relax(u, self._x(rows), -self.costs[rows, j])
                if self.demand_left[j] > _CAPACITY_EPS:
                    relax(u, np.array([self.sink]), np.zeros(1))
        return dist, prev

    def _path(self, prev: np.ndarray) -> List[int]:
        path = [self.sink]
        while path[-1] != self.source:
            path.append(int(prev[path[-1]]))
        return path[::-1]

    def _bottleneck(self, path: List[int]) -> float:
        amount = np.inf
        for u, v in zip(path[:-1], path[1:]):
            if u == self.source:
                amount = min(amount, self.supply_left[v - 1])
            elif v == self.sink:
                amount = min(amount, self.demand_left[u - 1 - self.n])
            elif u > self.n:
                amount = min(amount, self.flow[v - 1, u - 1 - self.n])
        return float(amount)

    def _augment(self, path: List[int], amount: float):
        for u, v in zip(path[:-1], path[1:]):
            if u == self.source:
                self.supply_left[v - 1] -= amount
            elif v == self.sink:
                self.demand_left[u - 1 - self.n] -= amount
            elif u <= self.n:
                self.flow[u - 1, v - 1 - self.n] += amount
            else:
                self.flow[v - 1, u - 1 - self.n] -= amount

    def solve(self) -> int:
        """
        逐次增廣直到供給耗盡

        返回:
            增廣次數
        """
        augmentations = 0
        while self.supply_left.sum() > _CAPACITY_EPS * self.n:
            dist, prev = self.shortest_paths()
            if not np.isfinite(dist[self.sink]):
                break
            path = self._path(prev)
            amount = self._bottleneck(path)
            self._augment(path, amount)
            self.potential += np.where(np.isfinite(dist), dist, dist[self.sink])
            augmentations += 1
        np.maximum(self.flow, 0.0, out=self.flow)
        return augmentations

    @property
    def total_cost(self) -> float:
        return float(np.sum(self.flow * self.costs))


@log_execution_time()
def exact_emd(inst: ProblemInstance) -> OracleResult:
    """
    最小費用流計算 EMD

    參數:
        inst: 實例（n·m ≤ oracle 上限）

    返回:
        OracleResult，certificate 為最佳流量矩陣
    """
    check_oracle_size(inst)
    network = TransportNetwork(inst.mu.masses, inst.nu.masses, inst.cross_distances())
    augmentations = network.solve()
    get_logger().debug(f"EMD = {network.total_cost:.12g}（{augmentations} 次增廣）")
    result = OracleResult(
        value=network.total_cost,
        certificate=Coupling(network.flow),
        kind=CertificateKind.FLOW,
        solver_tol=network.tolerance,
        iterations=augmentations,
    )
    return verified_result(result, inst, "exact_emd")


def enumerate_2x2_emd(inst: ProblemInstance, atol: Optional[float] = 1e-12) -> float:
    """均勻 2×2 實例的 EMD：兩個置換耦合中較小者"""
    if inst.n != 2 or inst.m != 2:
        raise ValueError(f"enumerate_2x2_emd 需要 2×2 實例，收到 {inst.n}×{inst.m}")
    if not (np.allclose(inst.mu.masses, 0.5, atol=atol)
            and np.allclose(inst.nu.masses, 0.5, atol=atol)):
        raise ValueError("enumerate_2x2_emd 需要均勻質量")
    d = inst.cross_distances()
    return 0.5 * min(d[0, 0] + d[1, 1], d[0, 1] + d[1, 0])

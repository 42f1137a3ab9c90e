"""
例外類別模組
定義傳輸距離估計器所有可辨識的錯誤類型
"""

from typing import Any, Optional


class RrhoError(Exception):
    """所有估計器錯誤的基類"""


# ==========================================
# 參數與輸入錯誤
# ==========================================
class RhoOutOfRange(RrhoError, ValueError):
    """ρ 不在 (1, 2] 範圍內"""

    def __init__(self, rho: float):
        super().__init__(f"ρ 必須位於 (1, 2]，收到: {rho}")
        self.rho = rho


class EpsOutOfRange(RrhoError, ValueError):
    """ε 不在 (0, 1/4] 範圍內"""

    def __init__(self, eps: float):
        super().__init__(f"ε 必須位於 (0, 0.25]，收到: {eps}")
        self.eps = eps


class OverrideNonPositive(RrhoError, ValueError):
    """參數覆寫值非正數"""

    def __init__(self, name: str, value: Any):
        super().__init__(f"參數覆寫無效: {name}={value}")
        self.name = name
        self.value = value


class UnknownOverride(RrhoError, ValueError):
    """覆寫了不存在或不可覆寫的欄位"""

    def __init__(self, name: str, known: Optional[list] = None):
        message = f"未知的參數覆寫: {name}"
        if known:
            message += f"（可用: {', '.join(known)}）"
        super().__init__(message)
        self.name = name


class PaperModeOverride(RrhoError, ValueError):
    """paper 模式的參數必須完全由公式推導"""

    def __init__(self, names: list):
        super().__init__(f"paper 模式不接受參數覆寫: {', '.join(names)}")
        self.names = names


class EmptyInput(RrhoError, ValueError):
    """輸入點集為空"""


class AllMassPruned(RrhoError, ValueError):
    """所有點的質量都低於剪枝門檻"""

    def __init__(self, floor: float, size: int):
        super().__init__(f"所有 {size} 個點的質量皆低於 {floor}/{size}，無法剪枝")
        self.floor = floor
        self.size = size


class CouplingMarginalViolation(RrhoError, ValueError):
    """耦合矩陣的邊際和不符"""

    def __init__(self, residual: float, tol: float):
        super().__init__(f"耦合邊際殘差 {residual:.3e} 超過容差 {tol:.1e}")
        self.residual = residual
        self.tol = tol


class DenseTooLarge(RrhoError, ValueError):
    """稠密矩陣超過允許的大小"""

    def __init__(self, n: int, m: int, limit: int):
        super().__init__(f"稠密矩陣 {n}x{m} 超過上限 {limit} 個元素")
        self.n = n
        self.m = m
        self.limit = limit


class AspectRatioViolated(RrhoError, ValueError):
    """查詢點違反距離長寬比承諾"""

    def __init__(self, distance: float, low: float, high: float):
        super().__init__(
            f"查詢距離 {distance:.6g} 不在承諾範圍 [{low:.6g}, {high:.6g}] 內"
        )
        self.distance = distance


class WeightPromiseViolated(RrhoError, ValueError):
    """權重差落在網格錨點之下"""

    def __init__(self, gap: float, anchor: float):
        super().__init__(f"權重差 {gap:.6g} 小於網格錨點 {anchor:.6g}")
        self.gap = gap
        self.anchor = anchor


class UnregisteredComponent(RrhoError, ValueError):
    """工廠中找不到指定的元件類型"""

    def __init__(self, kind: Any):
        super().__init__(f"未註冊的元件類型: {kind}")
        self.kind = kind


class UnknownSuite(RrhoError, ValueError):
    """未知的驗證套件名稱"""

    def __init__(self, name: str, available: Optional[list] = None):
        hint = f"，可用: {', '.join(available)}" if available else ""
        super().__init__(f"未知的驗證套件: {name}{hint}")
        self.name = name


class UnknownProfile(RrhoError, ValueError):
    """未知的參數預設組合"""

    def __init__(self, name: str, available: Optional[list] = None):
        hint = f"，可用: {', '.join(available)}" if available else ""
        super().__init__(f"未知的參數預設組合: {name}{hint}")
        self.name = name


# ==========================================
# 檔案解析錯誤
# ==========================================
class PointSetParseError(RrhoError, ValueError):
    """點集檔案格式錯誤"""

    def __init__(self, path: str, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line
        self.reason = reason


class WeightSumError(RrhoError, ValueError):
    """權重總和偏離 1 過多"""

    def __init__(self, total: float):
        super().__init__(f"權重總和 {total:.9g} 偏離 1 超過 1e-2")
        self.total = total


class DimensionMismatch(RrhoError, ValueError):
    """點的維度不一致"""

    def __init__(self, expected: int, got: int, where: str = ""):
        location = f" ({where})" if where else ""
        super().__init__(f"維度不一致{location}: 預期 {expected}，實際 {got}")
        self.expected = expected
        self.got = got


# ==========================================
# 數值與收斂錯誤
# ==========================================
class MaxItersExceeded(RrhoError, RuntimeError):
    """梯度上升超過最大迭代次數，附帶部分報告"""

    def __init__(self, max_iters: int, report: Any = None):
        super().__init__(f"超過最大迭代次數 {max_iters}")
        self.max_iters = max_iters
        self.report = report


class NonConvergence(RrhoError, RuntimeError):
    """精確求解器在預算內未收斂"""


class NumericalUnderflow(RrhoError, ArithmeticError):
    """數值下溢（例如 Sinkhorn 的 Gibbs 核）"""

"""
文件讀寫工具模組
提供點集 CSV、JSON 報告、YAML 參數檔與基準 CSV 的讀寫功能
"""

import csv
import io
import json
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import yaml

from config import get_settings

from core.base.domain import WeightedPointSet
from core.base.errors import EmptyInput, PointSetParseError, UnknownProfile, WeightSumError

from .logger import get_logger


# 權重總和容差：低於 RENORM_SILENT 靜默正規化，介於兩者之間警告，超過則錯誤
RENORM_SILENT = 1e-6
RENORM_LIMIT = 1e-2


# ==========================================
# 點集 CSV 讀寫
# ==========================================
def _parse_header(path: str, row: List[str]) -> int:
    names = [c.strip() for c in row]
    if not names or names[0] != 'w':
        raise PointSetParseError(path, 1, "表頭第一欄必須為 w")
    coords = names[1:]
    if not coords:
        raise PointSetParseError(path, 1, "表頭缺少座標欄 x1..xd")
    expected = [f"x{k}" for k in range(1, len(coords) + 1)]
    if coords != expected:
        raise PointSetParseError(path, 1, f"座標欄必須為 {','.join(expected)}")
    return len(coords)


def parse_point_set(text: str, path: str = "<memory>") -> WeightedPointSet:
    """
    解析點集 CSV 內容

    參數:
        text: 文字內容（表頭 w,x1,...,xd；LF 或 CRLF）
        path: 錯誤訊息用的來源名稱

    返回:
        WeightedPointSet（質量已正規化，零質量點已移除）
    """
    reader = csv.reader(io.StringIO(text, newline=''))
    dim: Optional[int] = None
    weights: List[float] = []
    points: List[List[float]] = []

    for line_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if dim is None:
            dim = _parse_header(path, row)
            continue
        if len(row) != dim + 1:
            raise PointSetParseError(
                path, line_no, f"欄位數 {len(row)} 與表頭的 {dim + 1} 不符")
        try:
            values = [float(c) for c in row]
        except ValueError:
            raise PointSetParseError(path, line_no, "無法解析為數值") from None
        if not all(np.isfinite(values)):
            raise PointSetParseError(path, line_no, "數值必須為有限值")
        if values[0] < 0:
            raise PointSetParseError(path, line_no, "權重不可為負")
        if values[0] == 0:
            continue
        weights.append(values[0])
        points.append(values[1:])

    if dim is None:
        raise PointSetParseError(path, 1, "缺少表頭")
    if not weights:
        raise EmptyInput(f"{path}: 沒有正權重的資料列")

    total = float(np.sum(weights))
    deviation = abs(total - 1.0)
    if deviation > RENORM_LIMIT:
        raise WeightSumError(total)
    if deviation > RENORM_SILENT:
        get_logger().warning(f"{path}: 權重總和為 {total:.9g}，已重新正規化")

    return WeightedPointSet.from_arrays(
        np.array(points, dtype=float).reshape(len(points), dim),
        np.array(weights, dtype=float),
        normalize=True,
    )


def load_point_set(path: str) -> WeightedPointSet:
    """
    讀取點集 CSV 文件

    參數:
        path: 文件路徑（UTF-8）

    返回:
        WeightedPointSet
    """
    with open(path, 'r', encoding='utf-8-sig', newline='') as f:
        text = f.read()
    return parse_point_set(text, path)


def write_point_set(path: str, point_set: WeightedPointSet, precision: int = 17):
    """寫入點集 CSV 文件"""
    _ensure_parent(path)
    header = ['w'] + [f"x{k}" for k in range(1, point_set.dim + 1)]
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for w, p in zip(point_set.masses, point_set.points):
            writer.writerow([f"{w:.{precision}g}"] + [f"{v:.{precision}g}" for v in p])


# ==========================================
# JSON 文件讀寫
# ==========================================
def read_json(filepath: str) -> Dict[str, Any]:
    """讀取 JSON 文件"""
    with open(filepath, 'r', encoding='utf-8') as f:
        return json.load(f)


def load_report_schema() -> Dict[str, Any]:
    """讀取 dist 報告的 JSON schema"""
    return read_json(get_settings().paths.report_schema_file)


def dumps_report(data: Dict[str, Any]) -> str:
    """穩定排序的 JSON 字串（鍵排序，固定縮排）"""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False)


def write_json(filepath: str, data: Dict[str, Any]) -> bool:
    """
    寫入 JSON 文件

    參數:
        filepath: 文件路徑
        data: 要寫入的資料

    返回:
        是否成功
    """
    _ensure_parent(filepath)
    with open(filepath, 'w', encoding='utf-8') as f:
        f.write(dumps_report(data))
        f.write('\n')
    return True


# ==========================================
# YAML 文件讀寫
# ==========================================
def read_yaml(filepath: str) -> Optional[Dict[str, Any]]:
    """
    讀取 YAML 文件

    參數:
        filepath: 文件路徑

    返回:
        YAML 資料字典，文件不存在返回 None
    """
    if not os.path.exists(filepath):
        get_logger().warning(f"文件不存在: {filepath}")
        return None
    with open(filepath, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f)


# ==========================================
# 基準 CSV
# ==========================================
def write_csv_rows(filepath: str, columns: Sequence[str],
                   rows: Iterable[Dict[str, Any]]) -> int:
    """
    寫入 CSV 表格

    返回:
        寫入的資料列數
    """
    _ensure_parent(filepath)
    count = 0
    with open(filepath, 'w', encoding='utf-8', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, '') for k in columns})
            count += 1
    return count


def _ensure_parent(filepath: str):
    parent = os.path.dirname(os.path.abspath(filepath))
    os.makedirs(parent, exist_ok=True)


# ==========================================
# 求解參數預設組合
# ==========================================
def load_solver_profile(name: str, filepath: Optional[str] = None) -> Dict[str, Any]:
    """
    讀取 solver_profiles.yaml 中的一組參數覆寫

    參數:
        name: 組合名稱
        filepath: 文件路徑，預設 PathSettings.profiles_file

    返回:
        覆寫字典（可直接傳給 derive_params）
    """
    if filepath is None:
        filepath = get_settings().paths.profiles_file
    profiles = read_yaml(filepath) or {}
    if name not in profiles:
        raise UnknownProfile(name, sorted(profiles))
    return dict(profiles[name].get('overrides') or {})

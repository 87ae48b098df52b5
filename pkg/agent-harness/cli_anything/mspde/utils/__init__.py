"""
MSPDE CLI 工具函数
"""

import re
import sys
from pathlib import Path
from typing import Tuple

_ORDER_PATTERN = re.compile(r"^\s*([-+]?[\d.eE+-]+?)\s*(?:±|\+-|\+/-)\s*([\d.eE+-]+)\s*$")


def get_mspde_root():
    """获取MSPDE项目根目录"""
    # 尝试从当前文件向上查找mspde目录
    current_path = Path(__file__).parent
    for parent in current_path.parents:
        if (parent / "mspde" / "__init__.py").exists():
            return parent
    # 如果没找到，返回当前目录
    return Path.cwd()


def ensure_mspde_available():
    """确保MSPDE模块可用"""
    mspde_root = get_mspde_root()
    if str(mspde_root) not in sys.path:
        sys.path.insert(0, str(mspde_root))


def parse_assert_order(text: str) -> Tuple[float, float]:
    """
    解析 --assert-order 参数

    Args:
        text: 形如 "0.5±0.15"、"0.5+-0.15" 或 "0.5+/-0.15"

    Returns:
        (期望斜率, 容差)
    """
    match = _ORDER_PATTERN.match(text)
    if not match:
        raise ValueError(f"无法解析收敛阶断言 '{text}'，应为 EXPECTED±TOL")
    expected, tolerance = float(match.group(1)), float(match.group(2))
    if tolerance < 0:
        raise ValueError(f"容差必须非负: {tolerance}")
    return expected, tolerance

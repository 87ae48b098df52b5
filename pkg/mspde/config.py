# 作者：Xiaoqiang
# 微信公众号：XiaoqiangClub
# GitHub：https://github.com/xiaoqiangclub
# 邮箱：xiaoqiangclub@hotmail.com
# 创建时间：2025-03-02 10:00
# 文件描述：配置类定义（Newton 求解器、时间步进格式）
# 文件路径：mspde/config.py

import math
from dataclasses import dataclass, field
from typing import Optional

from .basis import Basis
from .constants import NEWTON_DAMPING, NEWTON_MAX_ITER, NEWTON_TOL, SCHEME_LABELS
from .exceptions import ConfigError
from .strategies import SchemeKind


@dataclass
class NewtonConfig:
    """
    Newton 求解器配置

    属性:
        tol_residual: 残差 L² 范数的接受阈值
        max_iter: 最大迭代次数
        damping: 阻尼因子，取值 (0, 1]
    """
    tol_residual: float = NEWTON_TOL
    max_iter: int = NEWTON_MAX_ITER
    damping: float = NEWTON_DAMPING

    def __post_init__(self):
        if not self.tol_residual > 0:
            raise ConfigError("newton.tol", f"必须为正数，当前值 {self.tol_residual}")
        if self.max_iter < 1:
            raise ConfigError("newton.max_iter", f"必须 ≥ 1，当前值 {self.max_iter}")
        if not 0 < self.damping <= 1:
            raise ConfigError("newton.damping", f"必须在 (0, 1] 内，当前值 {self.damping}")


@dataclass
class SchemeConfig:
    """
    时间步进配置

    属性:
        scheme: 格式（euler / milstein）
        basis: 空间离散（SpectralBasis 或 FemMesh）
        tau: 时间步长 τ ∈ (0, 1)
        M: 步数，T = M·τ
        newton: Newton 求解器配置
        name: 格式名称（DIEG / DIESG / DIEMG / DIEMSG），未设置时自动推导
    """
    scheme: SchemeKind
    basis: Basis
    tau: float
    M: int
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    name: Optional[str] = None

    def __post_init__(self):
        if not 0 < self.tau < 1:
            raise ConfigError("scheme.tau", f"必须在 (0, 1) 内，当前值 {self.tau}")
        if self.M < 0:
            raise ConfigError("scheme.M", f"步数不能为负，当前值 {self.M}")
        if self.name is None:
            self.name = SCHEME_LABELS[(self.scheme.value, self.basis.kind.value)]

    @property
    def T(self) -> float:
        return self.M * self.tau

    def check_step_restriction(self, one_sided: float):
        """
        检查步长限制：L_f > 0 时要求 τ < 1/(4·L_f)

        :param one_sided: 漂移的单侧 Lipschitz 常数 L_f
        """
        if math.isinf(one_sided):
            raise ConfigError("model.drift", "漂移不满足单侧 Lipschitz 条件，隐式步不可解")
        if one_sided > 0 and self.tau >= 1.0 / (4.0 * one_sided):
            raise ConfigError(
                "scheme.tau",
                f"步长限制 τ < 1/(4·L_f) = {1.0 / (4.0 * one_sided):.6g} 不满足 (τ = {self.tau}, L_f = {one_sided:.6g})",
            )

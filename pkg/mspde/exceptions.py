# 作者：Xiaoqiang
# 微信公众号：XiaoqiangClub
# GitHub：https://github.com/xiaoqiangclub
# 邮箱：xiaoqiangclub@hotmail.com
# 创建时间：2025-03-02 10:00:00
# 文件描述：自定义异常类
# 文件路径：mspde/exceptions.py

from typing import Optional


class MspdeError(Exception):
    """mspde 基础异常类"""
    pass


class ValidationError(MspdeError):
    """参数验证错误"""
    pass


class ConfigError(ValidationError):
    """
    配置错误

    属性:
        key: 出错的配置键
        constraint: 违反的约束说明
    """

    def __init__(self, key: str, constraint: str):
        self.key = key
        self.constraint = constraint
        super().__init__(f"{key}: {constraint}")


class NumericError(MspdeError):
    """数值错误（NaN/Inf、多项式溢出等）"""

    def __init__(self, message: str, magnitude: Optional[float] = None):
        self.magnitude = magnitude
        if magnitude is not None:
            message = f"{message} (|u| 最大值: {magnitude:.6g})"
        super().__init__(message)


class SolverError(MspdeError):
    """Newton 迭代失败"""

    def __init__(self, message: str, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (残差: {residual:.3e}, 迭代次数: {iterations})")


class StudyError(MspdeError):
    """收敛性研究中止（失败样本过多）"""
    pass


class NoiseFormatError(MspdeError):
    """噪声树二进制文件格式错误"""
    pass

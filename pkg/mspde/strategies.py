# 作者：Xiaoqiang
# 微信公众号：XiaoqiangClub
# GitHub：https://github.com/xiaoqiangclub
# 邮箱：xiaoqiangclub@hotmail.com
# 创建时间：2025-03-02 10:00:00
# 文件描述：枚举定义（基函数、格式、研究轴、漂移/扩散类型、通知模式）
# 文件路径：mspde/strategies.py

from enum import Enum


class BasisKind(Enum):
    """空间离散类型"""
    SPECTRAL = "spectral"          # Dirichlet Laplace 正弦特征基
    FEM = "fem"                    # 均匀网格分片线性有限元


class SchemeKind(Enum):
    """时间离散格式"""
    EULER = "euler"                # 漂移隐式 Euler
    MILSTEIN = "milstein"          # 漂移隐式 Milstein


class StudyAxis(Enum):
    """收敛性研究的加密方向"""
    TEMPORAL = "temporal"          # 时间步长 τ
    SPATIAL = "spatial"            # 空间分辨率 h = 1/N 或 1/n_cells
    TRUNCATION = "truncation"      # 噪声截断模数 K


class DriftKind(Enum):
    """漂移项类型"""
    CUBIC_ALLEN_CAHN = "cubic_allen_cahn"   # f(x) = x - x³
    ODD_POLYNOMIAL = "odd_polynomial"       # 首项系数为负的奇次多项式
    LINEAR = "linear"                       # f(x) = c·x
    ZERO = "zero"                           # f ≡ 0


class DiffusionKind(Enum):
    """扩散项类型"""
    NONE = "none"                  # g ≡ 0（确定性）
    ADDITIVE = "additive"          # G(u)v = b·v
    LINEAR = "linear"              # g(u) = σu
    SINE = "sine"                  # g(u) = σ·sin(u)
    NEMYTSKII = "nemytskii"        # 用户自定义 g, g', g''


class InitialDatum(Enum):
    """预设初值"""
    SINE = "sine"                  # u0(x) = sin(πx)
    PARABOLA = "parabola"          # u0(x) = x(1-x)


class NotificationMode(Enum):
    """通知模式枚举"""
    SUCCESS = "success"            # 仅发送成功消息
    ERROR = "error"                # 仅发送错误消息
    ALL = "all"                    # 发送所有消息（成功和错误）
    NONE = "none"                  # 不发送消息

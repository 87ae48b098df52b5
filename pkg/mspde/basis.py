# 作者：Xiaoqiang
# 微信公众号：XiaoqiangClub
# GitHub：https://github.com/xiaoqiangclub
# 邮箱：xiaoqiangclub@hotmail.com
# 创建时间：2025-03-02 10:00:00
# 文件描述：(0,1) 上齐次 Dirichlet 条件的空间离散：正弦谱基与均匀 P1 有限元
# 文件路径：mspde/basis.py

"""
mspde 空间离散模块

两种离散空间：
- SpectralBasis: V_N = Span{e_1, …, e_N}，e_k(x) = √2·sin(kπx)，λ_k = (kπ)²
- FemMesh: 均匀网格上的分片线性帽函数，边界节点无自由度

两者共用同一套接口（Basis）：
- synthesize / analyze: 在求积网格上的合成与 L² 投影
- evaluate: 任意点取值
- inner / norm: 离散 L² 内积与范数

求积统一采用复合中点公式：
- 谱基 P = max(4·q·N, 1024)，其中 q 为漂移增长指数
- 有限元 P = 8·n_cells

快速开始：
    >>> from mspde.basis import SpectralBasis, project
    >>> import numpy as np
    >>> basis = SpectralBasis(8)
    >>> u = project(lambda x: np.sin(np.pi * x), basis)
    >>> u.coeffs[0]    # 1/√2
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np
from scipy import fft, linalg, sparse

from .constants import (
    FEM_QUADRATURE_PER_CELL,
    MIN_SPECTRAL_QUADRATURE,
    SPECTRAL_QUADRATURE_FACTOR,
)
from .exceptions import NumericError, ValidationError
from .strategies import BasisKind

SQRT2 = math.sqrt(2.0)


# ============================================================================
# 三对角矩阵
# ============================================================================

@dataclass(frozen=True, eq=False)
class TridiagonalMatrix:
    """
    三对角矩阵

    属性:
        sub: 下对角线（长度 n-1）
        diag: 主对角线（长度 n）
        sup: 上对角线（长度 n-1）
    """
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if n == 0 or len(self.sub) != n - 1 or len(self.sup) != n - 1:
            raise ValidationError(
                f"三对角矩阵维数不匹配: diag={n}, sub={len(self.sub)}, sup={len(self.sup)}")

    @property
    def n(self) -> int:
        return len(self.diag)

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.sub, self.sup))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.sub * x[:-1]
        y[:-1] += self.sup * x[1:]
        return y

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def upper_banded(self) -> np.ndarray:
        """上三角带状存储（供 scipy.linalg 的 *_banded 系列使用）"""
        ab = np.zeros((2, self.n))
        ab[0, 1:] = self.sup
        ab[1] = self.diag
        return ab

    def is_positive_definite(self) -> bool:
        """Cholesky 分解所有主元为正"""
        if not self.is_symmetric:
            return False
        try:
            linalg.cholesky_banded(self.upper_banded())
        except linalg.LinAlgError:
            return False
        return True

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """
        求解 A x = rhs

        对称矩阵走带状 Cholesky，非正定时抛出 scipy.linalg.LinAlgError
        """
        if self.is_symmetric:
            return linalg.solveh_banded(self.upper_banded(), rhs)
        ab = np.zeros((3, self.n))
        ab[0, 1:] = self.sup
        ab[1] = self.diag
        ab[2, :-1] = self.sub
        return linalg.solve_banded((1, 1), ab, rhs)

    def combine(self, other: "TridiagonalMatrix", alpha: float = 1.0,
                beta: float = 1.0) -> "TridiagonalMatrix":
        """返回 alpha·self + beta·other"""
        return TridiagonalMatrix(
            sub=alpha * self.sub + beta * other.sub,
            diag=alpha * self.diag + beta * other.diag,
            sup=alpha * self.sup + beta * other.sup,
        )

    @classmethod
    def from_sparse(cls, matrix: sparse.spmatrix) -> "TridiagonalMatrix":
        matrix = sparse.csr_matrix(matrix)
        return cls(
            sub=np.asarray(matrix.diagonal(-1), dtype=float),
            diag=np.asarray(matrix.diagonal(0), dtype=float),
            sup=np.asarray(matrix.diagonal(1), dtype=float),
        )


# ============================================================================
# 基函数接口
# ============================================================================

class Basis(ABC):
    """离散空间的公共接口"""

    kind: BasisKind

    def __init__(self, dim: int, quadrature: int):
        self.dim = dim
        self.quadrature = quadrature
        # 复合中点公式
        self.grid = (np.arange(quadrature) + 0.5) / quadrature
        self.weight = 1.0 / quadrature

    @property
    @abstractmethod
    def key(self) -> Tuple:
        """用于相等性判断的标识"""

    @property
    @abstractmethod
    def label(self) -> str:
        """显示用名称"""

    @abstractmethod
    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """系数 -> 求积网格上的取值"""

    @abstractmethod
    def load(self, values: np.ndarray) -> np.ndarray:
        """求积网格取值 -> 载荷向量 ⟨v, φ_i⟩"""

    @abstractmethod
    def analyze(self, values: np.ndarray) -> np.ndarray:
        """求积网格取值 -> L² 投影系数"""

    @abstractmethod
    def evaluate(self, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
        """任意点 x ∈ [0,1] 的取值"""

    @abstractmethod
    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """离散 L² 内积"""

    def norm(self, coeffs: np.ndarray) -> float:
        return math.sqrt(max(self.inner(coeffs, coeffs), 0.0))

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.dim))

    def __eq__(self, other) -> bool:
        return isinstance(other, Basis) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return self.label


class SpectralBasis(Basis):
    """
    Dirichlet Laplace 正弦特征基

    :param N: 模数
    :param growth: 漂移增长指数 q（决定防混叠求积点数）
    :param quadrature: 指定求积点数，None 时取 max(4·q·N, 1024)
    """

    kind = BasisKind.SPECTRAL

    def __init__(self, N: int, growth: int = 4, quadrature: int = None):
        if N < 1:
            raise ValidationError(f"模数 N 必须为正整数: {N}")
        if growth < 2:
            raise ValidationError(f"增长指数 q 必须 ≥ 2: {growth}")
        if quadrature is None:
            quadrature = max(SPECTRAL_QUADRATURE_FACTOR * growth * N, MIN_SPECTRAL_QUADRATURE)
        if quadrature < growth * N or quadrature <= N:
            raise ValidationError(f"求积点数 P={quadrature} 不满足 P ≥ q·N = {growth * N}")
        super().__init__(N, quadrature)
        self.N = N
        self.growth = growth
        self.modes = np.arange(1, N + 1)
        self.lambdas = (self.modes * np.pi) ** 2

    @property
    def key(self) -> Tuple:
        return ("spectral", self.N, self.quadrature)

    @property
    def label(self) -> str:
        return f"spectral(N={self.N})"

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        padded = np.zeros(self.quadrature)
        padded[:self.N] = coeffs
        # DST-III: v_j = √2 Σ_k c_k sin(kπ x_j)
        return fft.dst(padded, type=3) * (SQRT2 / 2.0)

    def load(self, values: np.ndarray) -> np.ndarray:
        # DST-II: c_k = (1/P) Σ_j v_j √2 sin(kπ x_j)，在中点网格上离散正交
        return fft.dst(values, type=2)[:self.N] * (SQRT2 / (2.0 * self.quadrature))

    def analyze(self, values: np.ndarray) -> np.ndarray:
        return self.load(values)

    def evaluate(self, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
        x = _check_points(x)
        values = SQRT2 * np.sin(np.outer(x, self.modes * np.pi)) @ coeffs
        values[(x == 0.0) | (x == 1.0)] = 0.0
        return values

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.dot(a, b))

    def multiplier_matrix(self, d: np.ndarray) -> np.ndarray:
        """
        逐点乘子 d(x) 在 V_N 上的 Galerkin 矩阵 (1/P) Φᵀ diag(d) Φ

        利用 2 sin(a) sin(b) = cos(a-b) - cos(a+b)，由一次 DCT-II 得到全部余弦矩，
        矩阵为 Toeplitz 减 Hankel 结构。
        """
        if 2 * self.N >= self.quadrature:
            raise ValidationError(f"求积点数 P={self.quadrature} 不足以构造 {self.N} 模乘子矩阵")
        moments = fft.dct(d, type=2) / (2.0 * self.quadrature)
        k = self.modes
        return moments[np.abs(k[:, None] - k[None, :])] - moments[k[:, None] + k[None, :]]


class FemMesh(Basis):
    """
    均匀网格分片线性有限元

    :param n_cells: 单元数（内部节点数为 n_cells - 1）
    """

    kind = BasisKind.FEM

    def __init__(self, n_cells: int):
        if n_cells < 2:
            raise ValidationError(f"n_cells 必须 ≥ 2（否则没有内部节点）: {n_cells}")
        super().__init__(n_cells - 1, FEM_QUADRATURE_PER_CELL * n_cells)
        self.n_cells = n_cells
        self.h = 1.0 / n_cells
        self.nodes = np.arange(1, n_cells) * self.h
        self.hat_matrix = self._build_hat_matrix()
        # 与载荷同一求积公式的质量矩阵，保证投影在离散内积下正交
        self.discrete_mass = TridiagonalMatrix.from_sparse(
            self.hat_matrix.T @ self.hat_matrix * self.weight)
        self.stiffness = assemble_stiffness(self)

    def _build_hat_matrix(self) -> sparse.csr_matrix:
        """求积点上帽函数的取值矩阵 Ψ (P × dim)"""
        cells = np.arange(self.quadrature) // FEM_QUADRATURE_PER_CELL
        t = self.grid / self.h - cells
        rows, cols, vals = [], [], []
        # 左节点 = cells（自由度 cells-1），右节点 = cells+1（自由度 cells）
        left = cells >= 1
        rows.append(np.nonzero(left)[0])
        cols.append(cells[left] - 1)
        vals.append(1.0 - t[left])
        right = cells + 1 <= self.n_cells - 1
        rows.append(np.nonzero(right)[0])
        cols.append(cells[right])
        vals.append(t[right])
        return sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.quadrature, self.dim),
        )

    @property
    def key(self) -> Tuple:
        return ("fem", self.n_cells)

    @property
    def label(self) -> str:
        return f"fem(h=1/{self.n_cells})"

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return self.hat_matrix @ coeffs

    def load(self, values: np.ndarray) -> np.ndarray:
        return self.hat_matrix.T @ (values * self.weight)

    def analyze(self, values: np.ndarray) -> np.ndarray:
        return self.discrete_mass.solve(self.load(values))

    def evaluate(self, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
        x = _check_points(x)
        knots = np.concatenate(([0.0], self.nodes, [1.0]))
        nodal = np.concatenate(([0.0], coeffs, [0.0]))
        return np.interp(x, knots, nodal)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.dot(a, self.discrete_mass.matvec(b)))

    def multiplier_matrix(self, d: np.ndarray) -> TridiagonalMatrix:
        """逐点乘子 d(x) 的 Galerkin 矩阵 Ψᵀ diag(w·d) Ψ（三对角）"""
        weighted = self.hat_matrix.multiply((d * self.weight)[:, None])
        return TridiagonalMatrix.from_sparse(self.hat_matrix.T @ weighted)


# ============================================================================
# 离散场
# ============================================================================

@dataclass(frozen=True, eq=False)
class Field:
    """
    离散空间中的函数

    属性:
        basis: 所属基（SpectralBasis 或 FemMesh）
        coeffs: 系数向量，维数等于基的维数，所有元素有限
    """
    basis: Basis
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != (self.basis.dim,):
            raise ValidationError(
                f"系数维数 {coeffs.shape} 与基 {self.basis.label} 的维数 {self.basis.dim} 不一致")
        if not np.all(np.isfinite(coeffs)):
            raise NumericError("Field 含有非有限值")
        object.__setattr__(self, "coeffs", coeffs)

    def values(self) -> np.ndarray:
        """求积网格上的取值"""
        return self.basis.synthesize(self.coeffs)

    def norm(self) -> float:
        """离散 L² 范数"""
        return self.basis.norm(self.coeffs)

    def __add__(self, other: "Field") -> "Field":
        _check_same_basis(self, other)
        return Field(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: "Field") -> "Field":
        _check_same_basis(self, other)
        return Field(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.basis, self.coeffs * scalar)

    __rmul__ = __mul__


def _check_same_basis(a: Field, b: Field):
    if a.basis != b.basis:
        raise ValidationError(f"基不一致: {a.basis.label} vs {b.basis.label}")


def _check_points(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0.0) or np.any(x > 1.0) or not np.all(np.isfinite(x)):
        raise ValidationError("取值点必须位于 [0, 1] 内")
    return x


# ============================================================================
# 模块操作
# ============================================================================

def eigenpair(k: int) -> Tuple[float, Callable[[np.ndarray], np.ndarray]]:
    """
    −A 的第 k 个特征对

    :param k: 模指标（≥ 1）
    :return: (λ_k = (kπ)², x ↦ √2 sin(kπx))
    """
    if int(k) != k or k < 1:
        raise ValidationError(f"模指标必须 ≥ 1: {k}")
    k = int(k)

    def e_k(x):
        return SQRT2 * np.sin(k * np.pi * np.asarray(x, dtype=float))

    return (k * np.pi) ** 2, e_k


def assemble_mass(mesh: FemMesh) -> TridiagonalMatrix:
    """精确 P1 质量矩阵：对角 4h/6，次对角 h/6"""
    n = mesh.n_cells - 1
    h = mesh.h
    off = np.full(n - 1, h / 6.0)
    return TridiagonalMatrix(sub=off, diag=np.full(n, 4.0 * h / 6.0), sup=off.copy())


def assemble_stiffness(mesh: FemMesh) -> TridiagonalMatrix:
    """P1 刚度矩阵：对角 2/h，次对角 −1/h"""
    n = mesh.n_cells - 1
    h = mesh.h
    off = np.full(n - 1, -1.0 / h)
    return TridiagonalMatrix(sub=off, diag=np.full(n, 2.0 / h), sup=off.copy())


def generalized_eigenvalues(mesh: FemMesh) -> np.ndarray:
    """
    离散 Laplace 的特征值：K c = μ M c 的升序解

    第 k 个值以 O(h²) 收敛到 (kπ)²
    """
    stiffness = assemble_stiffness(mesh).to_dense()
    mass = assemble_mass(mesh).to_dense()
    return linalg.eigh(stiffness, mass, eigvals_only=True)


def project(u: Union[Callable, float], basis: Basis) -> Field:
    """
    将逐点可求值函数 L² 投影到离散空间

    :param u: 函数 x ↦ u(x)（需支持 numpy 向量化）或常数
    :param basis: 目标基
    :return: 投影后的 Field
    """
    values = u(basis.grid) if callable(u) else u
    values = np.broadcast_to(np.asarray(values, dtype=float), basis.grid.shape)
    if not np.all(np.isfinite(values)):
        raise NumericError("投影的被积函数在求积点上出现非有限值",
                           magnitude=float(np.nanmax(np.abs(values))))
    return Field(basis, basis.analyze(np.array(values)))


def evaluate(field: Field, grid) -> np.ndarray:
    """在给定点求值，x ∈ {0, 1} 处恒为 0"""
    return field.basis.evaluate(field.coeffs, grid)


def sobolev_norm(field: Field, theta: float) -> float:
    """Ḣ^θ 范数 sqrt(Σ λ_k^θ c_k²)，仅适用于谱基"""
    if not isinstance(field.basis, SpectralBasis):
        raise ValidationError("sobolev_norm 仅适用于谱基")
    return float(np.sqrt(np.sum(field.basis.lambdas ** theta * field.coeffs ** 2)))


def energy_norm(field: Field) -> float:
    """Ḣ¹ 范数（谱基用特征展开，有限元用 sqrt(cᵀKc)）"""
    if isinstance(field.basis, SpectralBasis):
        return sobolev_norm(field, 1.0)
    return math.sqrt(max(float(np.dot(field.coeffs, field.basis.stiffness.matvec(field.coeffs))), 0.0))


def transfer(field: Field, target: Basis) -> Field:
    """
    在不同基之间转移 Field

    - 相同基：原样返回
    - 谱 → 谱：补零或截断
    - 涉及有限元：在目标求积网格上求值后投影
    """
    if field.basis == target:
        return field
    if isinstance(field.basis, SpectralBasis) and isinstance(target, SpectralBasis):
        coeffs = np.zeros(target.N)
        n = min(field.basis.N, target.N)
        coeffs[:n] = field.coeffs[:n]
        return Field(target, coeffs)
    values = field.basis.evaluate(field.coeffs, target.grid)
    return Field(target, target.analyze(values))

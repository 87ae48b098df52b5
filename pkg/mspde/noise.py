# 作者：Xiaoqiang
# 微信公众号：XiaoqiangClub
# GitHub：https://github.com/xiaoqiangclub
# 邮箱：xiaoqiangclub@hotmail.com
# 创建时间：2025-03-02 10:00:00
# 文件描述：截断 Q-Wiener 过程模拟、多分辨率 Brown 增量耦合、Milstein 所需的对称迭代积分
# 文件路径：mspde/noise.py

"""
mspde 噪声模块

W(t) = Σ_{k≤K} √λ^Q_k · e_k · β_k(t)，e_k(x) = √2 sin(kπx)

随机数流：
    每个 (master_seed, sample_id, k) 对应一条 numpy Philox（基于计数器的生成器）流，
    流内第 m 个数就是最细层第 m 步的标准正态增量。粗层增量由细层两两相加得到，
    因此粗细耦合逐位精确，且与抽样顺序、线程调度无关。

二进制转储格式（小端）：
    magic      8s   b"MSPDENT1"
    seed       u64
    sample_id  u64
    K          u32
    levels     u32
    finest_M   u64
    T          f64
    随后按 (level, m, k) 顺序（粗 → 细）写入 f64 增量
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from .basis import Basis, Field, SpectralBasis
from .constants import DEFAULT_Q_DECAY, DEFAULT_T, MIN_Q_DECAY, NOISE_DUMP_MAGIC
from .exceptions import NoiseFormatError, ValidationError

_HEADER = struct.Struct("<8sQQIIQd")


@dataclass(frozen=True, eq=False)
class QWienerSpec:
    """
    截断 Q-Wiener 过程描述

    属性:
        q_eigs: Q 的特征值 λ^Q_k（非负、单调不增），长度即截断模数 K
    """
    q_eigs: np.ndarray

    def __post_init__(self):
        q = np.array(self.q_eigs, dtype=float).ravel()
        if q.size == 0:
            raise ValidationError("噪声截断模数 K 必须 ≥ 1")
        if np.any(q < 0) or not np.all(np.isfinite(q)):
            raise ValidationError("Q 特征值必须非负且有限")
        if np.any(np.diff(q) > 0):
            raise ValidationError("Q 特征值必须单调不增")
        object.__setattr__(self, "q_eigs", q)

    @classmethod
    def power_law(cls, K: int, beta: float = DEFAULT_Q_DECAY) -> "QWienerSpec":
        """λ^Q_k = k^{-β}，要求 β > 3"""
        if K < 1:
            raise ValidationError(f"噪声截断模数 K 必须 ≥ 1: {K}")
        if beta <= MIN_Q_DECAY:
            raise ValidationError(f"衰减指数 β 必须 > {MIN_Q_DECAY}: {beta}")
        return cls(np.arange(1, K + 1, dtype=float) ** (-beta))

    @property
    def K(self) -> int:
        return self.q_eigs.size

    @property
    def trace(self) -> float:
        return float(np.sum(self.q_eigs))

    def truncate(self, K: int) -> "QWienerSpec":
        if not 1 <= K <= self.K:
            raise ValidationError(f"截断模数必须在 [1, {self.K}] 内: {K}")
        return QWienerSpec(self.q_eigs[:K])

    def tail(self, K: int) -> float:
        """Σ_{K<k≤K_max} λ^Q_k"""
        return float(np.sum(self.q_eigs[K:]))

    def mode_values(self, grid: np.ndarray) -> np.ndarray:
        """求积网格上的 √λ^Q_k · e_k(x)，形状 (P, K)"""
        k = np.arange(1, self.K + 1)
        return np.sqrt(2.0 * self.q_eigs)[None, :] * np.sin(np.outer(grid, k * np.pi))


@dataclass(frozen=True, eq=False)
class NoiseTree:
    """
    多分辨率 Brown 增量表

    属性:
        master_seed: 主种子
        sample_id: 样本编号
        T: 终止时间
        levels: 各层 (M, τ)，从粗到细，M 逐层翻倍
        increments: 各层增量数组，形状 (M, K)，单位 √time
    """
    master_seed: int
    sample_id: int
    T: float
    levels: Tuple[Tuple[int, float], ...]
    increments: Tuple[np.ndarray, ...]

    @property
    def K(self) -> int:
        return self.increments[0].shape[1]

    @property
    def finest_level(self) -> int:
        return len(self.levels) - 1

    def level_for(self, M: int) -> int:
        """步数为 M 的层编号"""
        for level, (level_M, _) in enumerate(self.levels):
            if level_M == M:
                return level
        raise ValidationError(f"噪声树中没有 M={M} 的层，现有: {[lv[0] for lv in self.levels]}")

    def tau(self, level: int) -> float:
        self._check_level(level)
        return self.levels[level][1]

    def step(self, level: int, m: int) -> np.ndarray:
        """第 level 层第 m 步的 Δβ（长度 K）"""
        self._check_level(level)
        M = self.levels[level][0]
        if not 0 <= m < M:
            raise ValidationError(f"步编号越界: m={m}, 该层 M={M}")
        return self.increments[level][m]

    def _check_level(self, level: int):
        if not 0 <= level < len(self.levels):
            raise ValidationError(f"层编号越界: {level}, 共 {len(self.levels)} 层")


class NoiseEvaluator:
    """
    在固定求积网格上合成 ΔW(x) 与 q(x) = Σ λ^Q_k e_k(x)²

    每条轨道构造一次，之后逐步复用模态矩阵。
    """

    def __init__(self, spec: QWienerSpec, grid: np.ndarray):
        self.spec = spec
        self.modes = spec.mode_values(grid)
        self.q_values = np.sum(self.modes ** 2, axis=1)

    def dw(self, dbeta: np.ndarray) -> np.ndarray:
        if dbeta.size < self.spec.K:
            raise ValidationError(f"增量只有 {dbeta.size} 个模，少于噪声截断模数 {self.spec.K}")
        return self.modes @ dbeta[:self.spec.K]

    def bracket(self, dbeta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.dw(dbeta), self.q_values


def _mode_stream(seed: int, sample_id: int, k: int, count: int) -> np.ndarray:
    """(seed, sample_id, k) 对应的 Philox 流前 count 个标准正态数"""
    generator = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, sample_id, k])))
    return generator.standard_normal(count)


def sample_tree(spec: QWienerSpec, finest_M: int, levels: int, seed: int,
                sample_id: int, T: float = DEFAULT_T) -> NoiseTree:
    """
    生成一个样本的多分辨率增量表

    :param spec: Q-Wiener 描述（决定 K）
    :param finest_M: 最细层步数
    :param levels: 层数（≥ 1），最粗层步数为 finest_M / 2^(levels-1)
    :param seed: 主种子（非负整数）
    :param sample_id: 样本编号（非负整数）
    :param T: 终止时间
    :return: NoiseTree
    """
    if levels < 1:
        raise ValidationError(f"层数必须 ≥ 1: {levels}")
    if finest_M < 1 or finest_M % (2 ** (levels - 1)) != 0:
        raise ValidationError(f"最细层步数 {finest_M} 不是最粗层步数的 2^{levels - 1} 倍")
    if seed < 0 or sample_id < 0:
        raise ValidationError("种子与样本编号必须为非负整数")
    if T <= 0:
        raise ValidationError(f"终止时间必须为正: {T}")

    tau = T / finest_M
    fine = np.empty((finest_M, spec.K))
    for k in range(1, spec.K + 1):
        fine[:, k - 1] = np.sqrt(tau) * _mode_stream(seed, sample_id, k, finest_M)

    increments = [fine]
    level_info = [(finest_M, tau)]
    for _ in range(levels - 1):
        child = increments[0]
        increments.insert(0, child[0::2] + child[1::2])
        M = child.shape[0] // 2
        level_info.insert(0, (M, T / M))

    return NoiseTree(
        master_seed=int(seed),
        sample_id=int(sample_id),
        T=float(T),
        levels=tuple(level_info),
        increments=tuple(increments),
    )


def increment_field(tree: NoiseTree, level: int, m: int, spec: QWienerSpec, basis: Basis) -> Field:
    """
    δ_mW 作为离散场：ΔW(x) = Σ_{k≤K} √λ^Q_k · e_k(x) · Δβ_k 的投影
    """
    dbeta = tree.step(level, m)
    if dbeta.size < spec.K:
        raise ValidationError(f"噪声树只有 {dbeta.size} 个模，少于 K={spec.K}")
    if isinstance(basis, SpectralBasis):
        n = min(spec.K, basis.N)
        coeffs = np.zeros(basis.N)
        coeffs[:n] = np.sqrt(spec.q_eigs[:n]) * dbeta[:n]
        return Field(basis, coeffs)
    values = NoiseEvaluator(spec, basis.grid).dw(dbeta)
    return Field(basis, basis.analyze(values))


def milstein_bracket(tree: NoiseTree, level: int, m: int, spec: QWienerSpec,
                     grid: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Milstein 修正所需的逐点量

    交换性噪声下 I_kl + I_lk = Δβ_kΔβ_l − δ_kl·τ，于是
    Σ_kl DG(u)(G(u)g_k)g_l·I_kl = ½ g'(u)g(u)·[ΔW(x)² − τ·q(x)]

    :return: (ΔW(x), q(x) = Σ_k λ^Q_k e_k(x)²)
    """
    return NoiseEvaluator(spec, np.asarray(grid, dtype=float)).bracket(tree.step(level, m))


def iterated_ito_integrals(micro: np.ndarray) -> np.ndarray:
    """
    由细分增量计算迭代 Itô 积分 I_kl = Σ_n (β_k(r_n) − β_k(t_m))·δβ_l,n

    :param micro: 形状 (n_micro, K) 的细分增量
    :return: 形状 (K, K) 的矩阵
    """
    micro = np.asarray(micro, dtype=float)
    before = np.cumsum(micro, axis=0) - micro
    return before.T @ micro


# ============================================================================
# 二进制转储
# ============================================================================

def tree_to_bytes(tree: NoiseTree) -> bytes:
    header = _HEADER.pack(
        NOISE_DUMP_MAGIC, tree.master_seed, tree.sample_id, tree.K,
        len(tree.levels), tree.levels[-1][0], tree.T,
    )
    body = b"".join(np.ascontiguousarray(inc, dtype="<f8").tobytes() for inc in tree.increments)
    return header + body


def tree_from_bytes(data: bytes) -> NoiseTree:
    if len(data) < _HEADER.size:
        raise NoiseFormatError("文件过短，缺少头部")
    magic, seed, sample_id, K, levels, finest_M, T = _HEADER.unpack_from(data)
    if magic != NOISE_DUMP_MAGIC:
        raise NoiseFormatError(f"魔数不匹配: {magic!r}")
    if levels < 1 or finest_M % (2 ** (levels - 1)) != 0:
        raise NoiseFormatError("层数与最细层步数不一致")

    sizes = [finest_M // 2 ** (levels - 1 - level) for level in range(levels)]
    expected = _HEADER.size + 8 * K * sum(sizes)
    if len(data) != expected:
        raise NoiseFormatError(f"文件长度 {len(data)} 与头部声明的 {expected} 不一致")

    offset = _HEADER.size
    increments = []
    for M in sizes:
        count = M * K
        block = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        increments.append(block.astype(float).reshape(M, K))
        offset += 8 * count
    return NoiseTree(
        master_seed=seed,
        sample_id=sample_id,
        T=T,
        levels=tuple((M, T / M) for M in sizes),
        increments=tuple(increments),
    )


def dump_tree(tree: NoiseTree, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_bytes(tree_to_bytes(tree))
    return path


def load_tree(path: Union[str, Path]) -> NoiseTree:
    return tree_from_bytes(Path(path).read_bytes())

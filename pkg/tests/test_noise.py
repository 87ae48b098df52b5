# 作者：Xiaoqiang
# 微信公众号：XiaoqiangClub
# GitHub：https://github.com/xiaoqiangclub
# 邮箱：xiaoqiangclub@hotmail.com
# 创建时间：2025-03-02 10:00
# 文件描述：噪声模块单元测试
# 文件路径：tests/test_noise.py

import math

import numpy as np
import pytest

from mspde import (
    FemMesh,
    NoiseFormatError,
    QWienerSpec,
    SpectralBasis,
    ValidationError,
    dump_tree,
    eigenpair,
    increment_field,
    iterated_ito_integrals,
    load_tree,
    milstein_bracket,
    project,
    sample_tree,
)
from mspde.noise import tree_from_bytes, tree_to_bytes


class TestQWienerSpec:
    """测试 Q-Wiener 描述"""

    def test_power_law(self):
        """λ_k = k^-4"""
        spec = QWienerSpec.power_law(4)
        np.testing.assert_allclose(spec.q_eigs, [1.0, 1 / 16, 1 / 81, 1 / 256])
        assert spec.K == 4
        assert spec.trace == pytest.approx(1.0 + 1 / 16 + 1 / 81 + 1 / 256)

    def test_tail_and_truncate(self):
        """尾和与截断"""
        spec = QWienerSpec.power_law(8)
        assert spec.tail(8) == 0.0
        assert spec.tail(4) == pytest.approx(sum(k ** -4.0 for k in range(5, 9)))
        assert spec.truncate(3).K == 3

    @pytest.mark.parametrize("eigs", [[], [1.0, -0.1], [0.5, 1.0], [1.0, np.inf]])
    def test_invalid_eigenvalues(self, eigs):
        """空、负、递增或非有限的特征值"""
        with pytest.raises(ValidationError):
            QWienerSpec(np.array(eigs, dtype=float))

    def test_decay_too_slow(self):
        """β 必须 > 3"""
        with pytest.raises(ValidationError):
            QWienerSpec.power_law(8, beta=3.0)


class TestSampleTree:
    """测试多分辨率增量表"""

    def test_coarse_is_sum_of_fine(self):
        """粗层增量逐位等于细层两两之和"""
        tree = sample_tree(QWienerSpec.power_law(4), 16, 3, seed=7, sample_id=2)
        for level in range(tree.finest_level):
            fine = tree.increments[level + 1]
            np.testing.assert_array_equal(tree.increments[level], fine[0::2] + fine[1::2])
        assert [M for M, _ in tree.levels] == [4, 8, 16]
        assert tree.tau(0) == pytest.approx(0.5 / 4)

    def test_deterministic(self):
        """相同 (seed, sample_id) 给出相同增量，不同 sample_id 不同"""
        spec = QWienerSpec.power_law(3)
        a = sample_tree(spec, 8, 2, seed=1, sample_id=5)
        b = sample_tree(spec, 8, 2, seed=1, sample_id=5)
        c = sample_tree(spec, 8, 2, seed=1, sample_id=6)
        np.testing.assert_array_equal(a.increments[-1], b.increments[-1])
        assert not np.array_equal(a.increments[-1], c.increments[-1])

    def test_finest_level_independent_of_layout(self):
        """最细层增量与层数、截断模数无关"""
        one = sample_tree(QWienerSpec.power_law(2), 32, 1, seed=3, sample_id=0)
        three = sample_tree(QWienerSpec.power_law(6), 32, 3, seed=3, sample_id=0)
        np.testing.assert_array_equal(one.increments[-1], three.increments[-1][:, :2])

    def test_increment_variance(self):
        """E Δβ² = τ（4 个标准误内）"""
        M = 8192
        tree = sample_tree(QWienerSpec.power_law(1), M, 1, seed=11, sample_id=0, T=1.0)
        tau = 1.0 / M
        squares = tree.increments[0][:, 0] ** 2
        se = tau * math.sqrt(2.0 / M)
        assert abs(squares.mean() - tau) < 4.0 * se

    def test_invalid_refinement(self):
        """最细层步数必须是最粗层的 2^(levels-1) 倍"""
        with pytest.raises(ValidationError):
            sample_tree(QWienerSpec.power_law(2), 10, 3, seed=0, sample_id=0)

    def test_step_out_of_range(self):
        """步编号与层编号越界"""
        tree = sample_tree(QWienerSpec.power_law(2), 8, 2, seed=0, sample_id=0)
        with pytest.raises(ValidationError):
            tree.step(0, 4)
        with pytest.raises(ValidationError):
            tree.step(2, 0)
        with pytest.raises(ValidationError):
            tree.level_for(16)


class TestIncrementField:
    """测试增量场与 Milstein 逐点量"""

    def test_spectral_coefficients(self):
        """谱基上增量系数为 √λ_k·Δβ_k"""
        spec = QWienerSpec.power_law(4)
        tree = sample_tree(spec, 4, 1, seed=0, sample_id=0)
        field = increment_field(tree, 0, 1, spec, SpectralBasis(8))
        expected = np.zeros(8)
        expected[:4] = np.sqrt(spec.q_eigs) * tree.step(0, 1)
        np.testing.assert_allclose(field.coeffs, expected, atol=1e-15)

    def test_fem_matches_projection(self):
        """有限元增量场为逐点 ΔW 的投影"""
        spec = QWienerSpec.power_law(4)
        tree = sample_tree(spec, 4, 1, seed=0, sample_id=0)
        mesh = FemMesh(16)
        dw, _ = milstein_bracket(tree, 0, 2, spec, mesh.grid)
        np.testing.assert_allclose(increment_field(tree, 0, 2, spec, mesh).coeffs, mesh.analyze(dw), atol=1e-14)

    def test_bracket_q_values(self):
        """q(x) = Σ λ_k·2sin²(kπx)"""
        spec = QWienerSpec.power_law(3)
        tree = sample_tree(spec, 2, 1, seed=0, sample_id=0)
        x = np.array([0.1, 0.25, 0.5])
        dw, q = milstein_bracket(tree, 0, 0, spec, x)
        k = np.arange(1, 4)
        expected_q = (2.0 * spec.q_eigs[None, :] * np.sin(np.outer(x, k * np.pi)) ** 2).sum(axis=1)
        expected_dw = (np.sqrt(2.0 * spec.q_eigs)[None, :] * np.sin(np.outer(x, k * np.pi))) @ tree.step(0, 0)
        np.testing.assert_allclose(q, expected_q, atol=1e-15)
        np.testing.assert_allclose(dw, expected_dw, atol=1e-15)

    def test_spectral_ito_isometry(self):
        """谱基：E‖ΔW‖² = τ·Σλ_k（2% 内）"""
        spec = QWienerSpec.power_law(4)
        M = 2 ** 16
        tree = sample_tree(spec, M, 1, seed=21, sample_id=0, T=1.0)
        basis = SpectralBasis(8)
        mean_square = np.mean([increment_field(tree, 0, m, spec, basis).norm() ** 2 for m in range(M)])
        assert mean_square == pytest.approx(spec.trace / M, rel=0.02)

    def test_fem_ito_isometry(self):
        """有限元：E‖P_hΔW‖² = τ·Σλ_k‖P_h e_k‖²（3% 内）"""
        spec = QWienerSpec.power_law(4)
        M = 2 ** 16
        tree = sample_tree(spec, M, 1, seed=22, sample_id=0, T=1.0)
        mesh = FemMesh(32)
        expected = sum(lam * project(eigenpair(k)[1], mesh).norm() ** 2
                       for k, lam in enumerate(spec.q_eigs, start=1)) / M
        mean_square = np.mean([increment_field(tree, 0, m, spec, mesh).norm() ** 2 for m in range(M)])
        assert mean_square == pytest.approx(expected, rel=0.03)

    def test_modes_uncorrelated(self):
        """不同模的增量样本相关系数 < 0.01"""
        tree = sample_tree(QWienerSpec.power_law(2), 2 ** 18, 1, seed=23, sample_id=0, T=1.0)
        increments = tree.increments[0]
        assert abs(np.corrcoef(increments[:, 0], increments[:, 1])[0, 1]) < 0.01

    def test_bracket_matches_iterated_integrals(self):
        """
        噪声树上一步 τ = 2^-4：ΔW² − τq 与最细层 2^12 个细分步的 2Σ a_k a_l I_kl 一致，
        偏差除以 q 的 RMS < 3·2^-6·τ
        """
        spec = QWienerSpec.power_law(2)
        tau = 2.0 ** -4
        x = np.array([0.1, 0.3, 0.5])
        k = np.arange(1, 3)
        a = np.sqrt(2.0 * spec.q_eigs)[None, :] * np.sin(np.outer(x, k * np.pi))
        ratios = []
        for sample_id in range(200):
            tree = sample_tree(spec, 2 ** 12, 13, seed=24, sample_id=sample_id, T=tau)
            dw, q = milstein_bracket(tree, 0, 0, spec, x)
            integrals = iterated_ito_integrals(tree.increments[-1])
            expected = 2.0 * np.einsum("xk,kl,xl->x", a, integrals, a)
            ratios.append((dw ** 2 - tau * q - expected) / q)
        assert math.sqrt(np.mean(np.square(ratios))) < 3.0 * 2.0 ** -6 * tau


class TestIteratedIntegrals:
    """测试迭代 Itô 积分"""

    def test_symmetric_part_identity(self):
        """I_kl + I_lk = Δβ_kΔβ_l − Σ_n δβ_k,n δβ_l,n"""
        micro = np.random.default_rng(4).standard_normal((64, 3)) * 0.1
        integrals = iterated_ito_integrals(micro)
        total = micro.sum(axis=0)
        expected = np.outer(total, total) - micro.T @ micro
        np.testing.assert_allclose(integrals + integrals.T, expected, atol=1e-13)

    def test_single_step_is_zero(self):
        """只有一个细分步时积分为 0"""
        np.testing.assert_array_equal(iterated_ito_integrals(np.ones((1, 2))), np.zeros((2, 2)))


class TestNoiseDump:
    """测试噪声树转储"""

    def test_dump_and_load(self, tmp_path):
        """写出再读回得到相同的增量表"""
        tree = sample_tree(QWienerSpec.power_law(3), 8, 3, seed=9, sample_id=4, T=0.5)
        path = dump_tree(tree, tmp_path / "tree.bin")
        restored = load_tree(path)
        assert restored.master_seed == 9
        assert restored.sample_id == 4
        assert restored.levels == tree.levels
        for a, b in zip(restored.increments, tree.increments):
            np.testing.assert_array_equal(a, b)

    def test_bad_magic(self):
        """魔数错误"""
        data = bytearray(tree_to_bytes(sample_tree(QWienerSpec.power_law(1), 2, 1, seed=0, sample_id=0)))
        data[0:8] = b"NOTATREE"
        with pytest.raises(NoiseFormatError):
            tree_from_bytes(bytes(data))

    def test_truncated(self):
        """文件被截断"""
        data = tree_to_bytes(sample_tree(QWienerSpec.power_law(1), 2, 1, seed=0, sample_id=0))
        with pytest.raises(NoiseFormatError):
            tree_from_bytes(data[:-8])
        with pytest.raises(NoiseFormatError):
            tree_from_bytes(data[:10])

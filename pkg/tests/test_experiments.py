# 作者：Xiaoqiang
# 微信公众号：XiaoqiangClub
# GitHub：https://github.com/xiaoqiangclub
# 邮箱：xiaoqiangclub@hotmail.com
# 创建时间：2025-03-02 10:00
# 文件描述：收敛性研究单元测试（小规模）
# 文件路径：tests/test_experiments.py

import numpy as np
import pytest

from mspde import (
    BasisKind,
    DiffusionSpec,
    DriftSpec,
    ModelSpec,
    NewtonConfig,
    NotificationManager,
    NotificationMode,
    QWienerSpec,
    SchemeKind,
    StudyAxis,
    StudyError,
    StudyPlan,
    ValidationError,
    fit_rate,
    strong_error_study,
    truncation_study,
)


def make_model(drift=None, diffusion=None, K=8, T=0.5):
    return ModelSpec(
        drift=drift or DriftSpec.cubic_allen_cahn(),
        diffusion=diffusion or DiffusionSpec.linear(0.5),
        noise=QWienerSpec.power_law(K),
        T=T,
    )


def small_plan(**kwargs):
    options = dict(
        axis=StudyAxis.TEMPORAL,
        resolutions=[4, 8, 16],
        reference=64,
        model=make_model(),
        space=8,
        samples=4,
        threads=1,
        verbose=False,
    )
    options.update(kwargs)
    return StudyPlan(**options)


class TestFitRate:
    """测试收敛阶回归"""

    def test_exact_power_law(self):
        """e = 2·r^{1/2}"""
        points = [(2.0 ** -k, 2.0 * 2.0 ** (-k / 2)) for k in range(2, 7)]
        fit = fit_rate(points)
        assert fit.slope == pytest.approx(0.5, abs=1e-12)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)

    def test_constant_errors(self):
        """常数误差：斜率 0，R² 记为 1"""
        fit = fit_rate([(0.5, 1.0), (0.25, 1.0), (0.125, 1.0)])
        assert fit.slope == pytest.approx(0.0, abs=1e-12)
        assert fit.r2 == 1.0

    def test_noisy_first_order(self):
        """5% 乘性噪声下斜率在 [0.9, 1.1]"""
        rng = np.random.default_rng(0)
        r = 2.0 ** -np.arange(2, 11)
        e = r * (1.0 + 0.05 * rng.standard_normal(r.size))
        fit = fit_rate(list(zip(r, e)))
        assert 0.9 <= fit.slope <= 1.1

    @pytest.mark.parametrize("points", [
        [(0.5, 1.0), (0.25, 0.5)],
        [(0.5, 1.0), (0.25, 0.0), (0.125, 0.1)],
        [(0.5, 1.0), (-0.25, 0.5), (0.125, 0.1)],
    ])
    def test_invalid_points(self, points):
        """点数不足或出现非正值"""
        with pytest.raises(ValidationError):
            fit_rate(points)


class TestStudyPlan:
    """测试研究计划校验"""

    def test_defaults(self):
        """默认样本数与分辨率换算"""
        plan = small_plan(samples=None)
        assert plan.samples == 200
        assert plan.resolution_value(8) == pytest.approx(0.5 / 8)
        assert plan.tree_layout() == (64, 5)

    def test_not_increasing(self):
        """分辨率必须严格递增"""
        with pytest.raises(ValidationError):
            small_plan(resolutions=[8, 4, 16])

    def test_reference_too_coarse(self):
        """参考分辨率至少为最细被测分辨率的 4 倍"""
        with pytest.raises(ValidationError):
            small_plan(resolutions=[4, 8], reference=16)

    def test_reference_not_power_of_two(self):
        """时间方向参考步数必须是被测步数的 2 的幂倍"""
        with pytest.raises(ValidationError):
            small_plan(resolutions=[4, 8], reference=48)

    def test_exact_reference_requires_linear_model(self):
        """闭式参考解只适用于线性确定性模型"""
        with pytest.raises(ValidationError):
            small_plan(exact_reference=True)

    def test_truncation_needs_enough_modes(self):
        """模型噪声模数不少于参考截断模数"""
        with pytest.raises(ValidationError):
            small_plan(axis=StudyAxis.TRUNCATION, resolutions=[2, 4], reference=16, model=make_model(K=8))

    def test_reference_scheme_defaults(self):
        """参考格式：时间方向默认 Milstein，空间与截断方向跟随被测格式"""
        assert small_plan().reference_scheme == SchemeKind.MILSTEIN
        spatial = small_plan(axis=StudyAxis.SPATIAL, resolutions=[4, 8], reference=32, steps=16)
        assert spatial.reference_scheme == SchemeKind.EULER
        assert spatial.reference_config().scheme == SchemeKind.EULER
        truncation = small_plan(axis=StudyAxis.TRUNCATION, resolutions=[2, 4], reference=8,
                                scheme=SchemeKind.MILSTEIN)
        assert truncation.reference_scheme == SchemeKind.MILSTEIN

    @pytest.mark.parametrize("axis, resolutions, reference", [
        (StudyAxis.SPATIAL, [4, 8], 32),
        (StudyAxis.TRUNCATION, [2, 4], 8),
    ])
    def test_reference_scheme_mismatch(self, axis, resolutions, reference):
        """空间与截断方向显式给出不同的参考格式时拒绝"""
        with pytest.raises(ValidationError):
            small_plan(axis=axis, resolutions=resolutions, reference=reference, steps=16,
                       scheme=SchemeKind.EULER, reference_scheme=SchemeKind.MILSTEIN)

    def test_config_hash(self):
        """相同计划哈希相同，种子不同哈希不同"""
        assert small_plan().config_hash() == small_plan().config_hash()
        assert small_plan().config_hash() != small_plan(master_seed=1).config_hash()

    def test_describe_labels(self):
        """描述中给出被测与参考格式名称"""
        described = small_plan(scheme=SchemeKind.MILSTEIN).describe()
        assert described["label"] == "DIEMSG"
        assert described["reference_label"] == "DIEMSG"
        assert described["model"]["u0"] == "_sine_datum"


class TestStrongErrorStudy:
    """测试强误差研究"""

    @pytest.mark.parametrize("scheme", [SchemeKind.EULER, SchemeKind.MILSTEIN])
    @pytest.mark.parametrize("basis", [BasisKind.SPECTRAL, BasisKind.FEM])
    def test_coupling_self_check(self, scheme, basis):
        """参考配置与最细被测配置相同时误差恰为 0"""
        plan = small_plan(resolutions=[4, 8, 16], reference=16, min_refinement=1, scheme=scheme,
                          basis=basis, reference_scheme=scheme)
        report = strong_error_study(plan)
        assert report.errors[-1] == 0.0
        assert report.errors[0] > 0.0
        assert report.fit is None

    def test_spatial_self_check(self):
        """空间方向：参考离散与最细被测离散相同时误差恰为 0"""
        plan = small_plan(axis=StudyAxis.SPATIAL, resolutions=[4, 8], reference=8, min_refinement=1,
                          steps=16, basis=BasisKind.FEM, reference_basis=BasisKind.FEM,
                          reference_scheme=SchemeKind.EULER)
        report = strong_error_study(plan)
        assert report.errors[-1] == 0.0

    def test_exact_linear_oracle(self):
        """线性漂移、无噪声：对闭式解拟合的时间阶为 1"""
        model = make_model(DriftSpec.linear(-1.0), DiffusionSpec.none(), K=1, T=1.0)
        plan = small_plan(resolutions=[128, 256, 512, 1024, 2048], reference=8192, model=model,
                          samples=1, exact_reference=True)
        report = strong_error_study(plan)
        assert report.fit.slope == pytest.approx(1.0, abs=0.05)
        assert report.fit.r2 >= 0.99

    def test_fem_against_spectral_reference(self):
        """有限元空间误差随网格加密下降"""
        model = make_model(diffusion=DiffusionSpec.none())
        plan = small_plan(axis=StudyAxis.SPATIAL, resolutions=[4, 8, 16], reference=64, steps=16,
                          basis=BasisKind.FEM, samples=1, model=model)
        report = strong_error_study(plan)
        assert report.errors[0] > report.errors[1] > report.errors[2] > 0.0
        assert report.fit is not None

    def test_fem_spatial_slope_with_noise(self):
        """带噪声的有限元空间研究：同格式参考下误差单调下降，斜率约为 2"""
        plan = small_plan(axis=StudyAxis.SPATIAL, resolutions=[8, 16, 32], reference=128, steps=32,
                          basis=BasisKind.FEM, reference_basis=BasisKind.SPECTRAL, samples=4)
        report = strong_error_study(plan)
        assert report.errors[0] > report.errors[1] > report.errors[2] > 0.0
        assert 1.6 <= report.fit.slope <= 2.5

    def test_spectral_spatial_slope_with_noise(self):
        """带噪声的谱空间研究：斜率不低于 2 阶下界"""
        plan = small_plan(axis=StudyAxis.SPATIAL, resolutions=[4, 8, 16], reference=64, steps=32, samples=4)
        report = strong_error_study(plan)
        assert report.errors[0] > report.errors[1] > report.errors[2] > 0.0
        assert report.fit.slope >= 1.7

    def test_thread_count_does_not_change_result(self):
        """线程数不影响结果"""
        one = strong_error_study(small_plan(threads=1))
        three = strong_error_study(small_plan(threads=3))
        assert one.errors == three.errors
        assert one.raw == three.raw
        assert one.sample_ids == [0, 1, 2, 3]

    def test_failing_samples_abort(self):
        """Newton 迭代上限过小导致样本失败，研究中止"""
        plan = small_plan(newton=NewtonConfig(max_iter=1))
        with pytest.raises(StudyError):
            strong_error_study(plan)

    def test_notifier(self):
        """每个样本一条消息，结束时一条汇总"""
        messages = []
        notifier = NotificationManager(callbacks=[messages.append], mode=NotificationMode.ALL, verbose=False)
        strong_error_study(small_plan(samples=3, notifier=notifier))
        assert len(messages) == 4
        assert messages[-1]["message"] == "研究完成"
        assert all(message["is_success"] for message in messages)

    def test_report_rows(self):
        """CSV 行数与字段"""
        report = strong_error_study(small_plan(samples=2))
        assert len(report.csv_rows()) == 3
        assert len(report.raw_rows()) == 6
        assert report.to_dict()["provenance"]["samples"] == 2
        assert report.expected_slope == 0.5


class TestTruncationStudy:
    """测试噪声截断研究"""

    def test_full_truncation_is_exact(self):
        """K = K_ref 时误差恰为 0，不拟合斜率"""
        plan = small_plan(axis=StudyAxis.TRUNCATION, resolutions=[2, 4, 8], reference=8, steps=16)
        report = truncation_study(plan)
        assert report.errors[-1] == 0.0
        assert report.fit is None
        assert report.details["tails"][-1] == 0.0

    def test_error_follows_tail(self):
        """K 加倍时误差至少减半"""
        plan = small_plan(axis=StudyAxis.TRUNCATION, resolutions=[8, 16, 32], reference=64,
                          model=make_model(K=64), space=64, steps=32, samples=8)
        report = truncation_study(plan)
        assert report.errors[2] / report.errors[1] < 0.5
        assert report.details["tail_consistent"]

    def test_no_diffusion(self):
        """无噪声时截断无影响"""
        plan = small_plan(axis=StudyAxis.TRUNCATION, resolutions=[2, 4, 8], reference=8, steps=16,
                          model=make_model(diffusion=DiffusionSpec.none()))
        report = truncation_study(plan)
        assert report.errors == [0.0, 0.0, 0.0]
        assert report.fit is None

    def test_requires_truncation_axis(self):
        """非截断方向的计划被拒绝"""
        with pytest.raises(ValidationError):
            truncation_study(small_plan())

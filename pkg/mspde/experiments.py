# 作者：Xiaoqiang
# 微信公众号：XiaoqiangClub
# GitHub：https://github.com/xiaoqiangclub
# 邮箱：xiaoqiangclub@hotmail.com
# 创建时间：2025-03-02 10:00:00
# 文件描述：耦合路径蒙特卡洛强误差估计、参考解管理、收敛阶回归
# 文件路径：mspde/experiments.py

"""
mspde 收敛性研究模块

每个样本生成一棵噪声树，参考轨道与所有被测轨道共用同一组 Brown 增量（粗层 = 细层之和），
误差取被测时间网格上 sup_m ‖u^m − u_ref(t_m)‖_{L²}，样本间平方平均后开方。

分辨率的记号：
- temporal:   τ = T/M
- spatial:    h = 1/N（谱）或 1/n_cells（有限元）
- truncation: 1/K
"""

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .basis import Basis, FemMesh, Field, SpectralBasis, project, transfer
from .callbacks import NotificationManager
from .coefficients import ModelSpec
from .config import NewtonConfig, SchemeConfig
from .constants import DEFAULT_SAMPLES, EXPECTED_SLOPES, MAX_FAILURE_FRACTION, MIN_REFINEMENT
from .exceptions import MspdeError, StudyError, ValidationError
from .noise import sample_tree
from .schemes import Trajectory, run
from .strategies import BasisKind, DiffusionKind, DriftKind, SchemeKind, StudyAxis
from .version import __version__


# ============================================================================
# 收敛阶拟合
# ============================================================================

@dataclass
class RateFit:
    """
    对数-对数最小二乘拟合结果：log e = slope·log r + intercept

    属性:
        slope: 斜率（经验收敛阶）
        intercept: 截距
        r2: 决定系数
    """
    slope: float
    intercept: float
    r2: float

    def to_dict(self) -> Dict[str, float]:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2}


def fit_rate(points: Sequence[Tuple[float, float]]) -> RateFit:
    """
    经验收敛阶回归

    :param points: (分辨率, 误差) 列表，至少 3 个点，均为正数
    :return: RateFit，误差 ∝ 分辨率^slope
    """
    if len(points) < 3:
        raise ValidationError(f"拟合至少需要 3 个点，当前 {len(points)} 个")
    data = np.asarray(points, dtype=float)
    if not np.all(np.isfinite(data)) or np.any(data <= 0):
        raise ValidationError("分辨率与误差必须为正的有限数")

    x = np.log(data[:, 0])
    y = np.log(data[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(slope=float(slope), intercept=float(intercept), r2=r2)


# ============================================================================
# 研究计划
# ============================================================================

def make_basis(kind: BasisKind, size: int, growth: int = 4) -> Basis:
    """按类型构造离散空间：谱基 size = N，有限元 size = n_cells"""
    if kind == BasisKind.SPECTRAL:
        return SpectralBasis(size, growth=growth)
    return FemMesh(size)


@dataclass
class StudyPlan:
    """
    收敛性研究计划

    属性:
        axis: 加密方向
        resolutions: 被测分辨率，严格递增的整数（temporal: M；spatial: N 或 n_cells；truncation: K）
        reference: 参考分辨率（同一记号）
        model: 模型
        scheme: 被测格式
        basis: 被测空间离散类型
        space: 非空间方向研究时使用的 N 或 n_cells
        steps: 非时间方向研究时使用的步数 M
        samples: 样本数，None 时按方向取默认值
        master_seed: 主种子
        reference_scheme: 参考轨道格式，None 时 temporal 取 Milstein，其余方向取被测格式
        reference_basis: 空间方向研究的参考离散类型
        newton: Newton 配置
        threads: 并行线程数，None 时取机器核数
        min_refinement: 参考分辨率相对最细被测分辨率的最小加密倍数
        exact_reference: 线性确定性模型用闭式解代替参考轨道
        verbose: 是否打印进度
        notifier: 进度通知管理器
    """
    axis: StudyAxis
    resolutions: Sequence[int]
    reference: int
    model: ModelSpec
    scheme: SchemeKind = SchemeKind.EULER
    basis: BasisKind = BasisKind.SPECTRAL
    space: int = 64
    steps: int = 512
    samples: Optional[int] = None
    master_seed: int = 0
    reference_scheme: Optional[SchemeKind] = None
    reference_basis: BasisKind = BasisKind.SPECTRAL
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    threads: Optional[int] = None
    min_refinement: int = MIN_REFINEMENT
    exact_reference: bool = False
    verbose: bool = True
    notifier: Optional[NotificationManager] = None

    def __post_init__(self):
        self.resolutions = tuple(int(r) for r in self.resolutions)
        if not self.resolutions:
            raise ValidationError("至少需要一个被测分辨率")
        if any(r < 1 for r in self.resolutions) or any(
                b <= a for a, b in zip(self.resolutions, self.resolutions[1:])):
            raise ValidationError(f"被测分辨率必须为严格递增的正整数: {list(self.resolutions)}")
        if self.samples is None:
            self.samples = DEFAULT_SAMPLES[self.axis.value]
        if self.samples < 1:
            raise ValidationError(f"样本数必须 ≥ 1: {self.samples}")
        if self.master_seed < 0:
            raise ValidationError(f"主种子必须为非负整数: {self.master_seed}")
        if self.threads is not None and self.threads < 1:
            raise ValidationError(f"线程数必须 ≥ 1: {self.threads}")
        if self.min_refinement < 1:
            raise ValidationError(f"最小加密倍数必须 ≥ 1: {self.min_refinement}")

        # 空间与截断方向的参考轨道必须与被测轨道同一时间格式，时间误差才能相消
        if self.reference_scheme is None:
            self.reference_scheme = SchemeKind.MILSTEIN if self.axis == StudyAxis.TEMPORAL else self.scheme
        elif self.axis != StudyAxis.TEMPORAL and self.reference_scheme != self.scheme:
            raise ValidationError(
                f"{self.axis.value} 方向的参考格式 {self.reference_scheme.value} "
                f"必须与被测格式 {self.scheme.value} 一致")

        finest = self.resolutions[-1]
        if self.axis == StudyAxis.TRUNCATION:
            if self.reference < finest:
                raise ValidationError(f"参考截断模数 {self.reference} 小于被测最大值 {finest}")
            if self.model.noise.K < self.reference:
                raise ValidationError(
                    f"模型噪声只有 {self.model.noise.K} 个模，少于参考截断模数 {self.reference}")
        elif self.reference < self.min_refinement * finest:
            raise ValidationError(
                f"参考分辨率 {self.reference} 至少应为最细被测分辨率 {finest} 的 {self.min_refinement} 倍")

        if self.axis == StudyAxis.TEMPORAL:
            for M in self.resolutions:
                ratio = self.reference // M
                if self.reference % M != 0 or ratio & (ratio - 1) != 0:
                    raise ValidationError(f"参考步数 {self.reference} 不是被测步数 {M} 的 2 的幂倍")

        if self.exact_reference:
            linear = self.model.drift.kind in (DriftKind.LINEAR, DriftKind.ZERO)
            if not linear or self.model.diffusion.kind != DiffusionKind.NONE:
                raise ValidationError("闭式参考解仅适用于线性漂移且无噪声的模型")
            if self.reference_basis_kind() != BasisKind.SPECTRAL:
                raise ValidationError("闭式参考解仅适用于谱基")

    # ------------------------------------------------------------------
    # 配置构造
    # ------------------------------------------------------------------

    def reference_basis_kind(self) -> BasisKind:
        return self.reference_basis if self.axis == StudyAxis.SPATIAL else self.basis

    def resolution_value(self, r: int) -> float:
        """整数分辨率 -> 报告使用的 τ / h / (1/K)"""
        if self.axis == StudyAxis.TEMPORAL:
            return self.model.T / r
        return 1.0 / r

    def tested_model(self, r: int) -> ModelSpec:
        if self.axis == StudyAxis.TRUNCATION:
            return self.model.with_noise(self.model.noise.truncate(r))
        return self.model

    def reference_model(self) -> ModelSpec:
        return self.tested_model(self.reference) if self.axis == StudyAxis.TRUNCATION else self.model

    def _scheme_config(self, scheme: SchemeKind, kind: BasisKind, size: int, M: int) -> SchemeConfig:
        return SchemeConfig(
            scheme=scheme,
            basis=make_basis(kind, size, self.model.drift.growth),
            tau=self.model.T / M,
            M=M,
            newton=self.newton,
        )

    def tested_config(self, r: int) -> SchemeConfig:
        if self.axis == StudyAxis.TEMPORAL:
            return self._scheme_config(self.scheme, self.basis, self.space, r)
        if self.axis == StudyAxis.SPATIAL:
            return self._scheme_config(self.scheme, self.basis, r, self.steps)
        return self._scheme_config(self.scheme, self.basis, self.space, self.steps)

    def reference_config(self) -> SchemeConfig:
        if self.axis == StudyAxis.TEMPORAL:
            return self._scheme_config(self.reference_scheme, self.basis, self.space, self.reference)
        if self.axis == StudyAxis.SPATIAL:
            return self._scheme_config(self.reference_scheme, self.reference_basis, self.reference, self.steps)
        return self._scheme_config(self.reference_scheme, self.basis, self.space, self.steps)

    def tree_layout(self) -> Tuple[int, int]:
        """(最细层步数, 层数)"""
        if self.axis == StudyAxis.TEMPORAL:
            coarsest = self.resolutions[0]
            return self.reference, int(round(math.log2(self.reference // coarsest))) + 1
        return self.steps, 1

    def noise_modes(self) -> int:
        return self.reference if self.axis == StudyAxis.TRUNCATION else self.model.noise.K

    def describe(self) -> Dict[str, Any]:
        """计划的可序列化描述（用于打印与配置哈希）"""
        model = self.model
        reference = self.reference_config()
        return {
            "axis": self.axis.value,
            "scheme": self.scheme.value,
            "label": self.tested_config(self.resolutions[0]).name,
            "basis": self.basis.value,
            "resolutions": list(self.resolutions),
            "reference": self.reference,
            "reference_label": reference.name,
            "reference_scheme": self.reference_scheme.value,
            "reference_basis": self.reference_basis_kind().value,
            "exact_reference": self.exact_reference,
            "space": self.space,
            "steps": self.steps,
            "samples": self.samples,
            "master_seed": self.master_seed,
            "model": {
                "drift": model.drift.kind.value,
                "drift_coeffs": [float(c) for c in model.drift.coeffs],
                "diffusion": model.diffusion.kind.value,
                "sigma": model.diffusion.sigma,
                "noise_K": model.noise.K,
                "noise_trace": model.noise.trace,
                "u0": getattr(model.u0, "__name__", "callable"),
                "T": model.T,
            },
            "newton": {
                "tol": self.newton.tol_residual,
                "max_iter": self.newton.max_iter,
                "damping": self.newton.damping,
            },
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.describe(), sort_keys=True, ensure_ascii=False, default=str)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# ============================================================================
# 误差报告
# ============================================================================

@dataclass
class ErrorReport:
    """
    强误差报告

    属性:
        axis: 加密方向
        label: 被测格式名称
        counts: 整数分辨率（M / N / n_cells / K）
        resolutions: τ / h / (1/K)
        errors: RMS 强误差 sqrt(E sup_m ‖e^m‖²)
        std_errors: 误差的标准误（delta 方法）
        raw: 每个成功样本在各分辨率下的 sup 误差
        sample_ids: raw 各行对应的样本编号
        fit: 收敛阶拟合，任一误差为 0 或点数不足 3 时为 None
        expected_slope: 理论收敛阶（γ = 1）
        failures: 失败样本 {样本编号: 错误信息}
        provenance: 种子、配置哈希、时间戳等
        details: 方向相关的附加信息（如截断研究的尾和）
    """
    axis: StudyAxis
    label: str
    counts: List[int]
    resolutions: List[float]
    errors: List[float]
    std_errors: List[float]
    raw: List[List[float]]
    sample_ids: List[int]
    fit: Optional[RateFit]
    expected_slope: Optional[float]
    failures: Dict[int, str] = field(default_factory=dict)
    provenance: Dict[str, Any] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "axis": self.axis.value,
            "label": self.label,
            "counts": list(self.counts),
            "resolutions": list(self.resolutions),
            "errors": list(self.errors),
            "std_errors": list(self.std_errors),
            "fit": self.fit.to_dict() if self.fit else None,
            "expected_slope": self.expected_slope,
            "failures": {str(k): v for k, v in self.failures.items()},
            "details": self.details,
            "provenance": self.provenance,
        }

    def csv_rows(self) -> List[Dict[str, Any]]:
        """每个分辨率一行"""
        return [
            {"count": c, "resolution": r, "error": e, "std_error": s}
            for c, r, e, s in zip(self.counts, self.resolutions, self.errors, self.std_errors)
        ]

    def raw_rows(self) -> List[Dict[str, Any]]:
        """每个 (样本, 分辨率) 一行"""
        return [
            {"sample_id": sid, "count": c, "resolution": r, "error": e}
            for sid, row in zip(self.sample_ids, self.raw)
            for c, r, e in zip(self.counts, self.resolutions, row)
        ]


# ============================================================================
# 参考解
# ============================================================================

def exact_linear_solution(model: ModelSpec, basis: SpectralBasis, times: Sequence[float]) -> List[Field]:
    """
    线性确定性模型 du = (Au + c·u)dt 在 V_N 中的闭式解 Σ_k c_k(0) e^{(c−λ_k)t} e_k

    :param model: 漂移须为 linear 或 zero，扩散须为 none
    :param basis: 谱基
    :param times: 时间点
    """
    if model.drift.kind not in (DriftKind.LINEAR, DriftKind.ZERO) or model.diffusion.kind != DiffusionKind.NONE:
        raise ValidationError("闭式解仅适用于线性漂移且无噪声的模型")
    if not isinstance(basis, SpectralBasis):
        raise ValidationError("闭式解仅适用于谱基")
    c = float(model.drift.coeffs[1]) if model.drift.coeffs.size > 1 else 0.0
    initial = project(model.u0, basis).coeffs
    return [Field(basis, initial * np.exp((c - basis.lambdas) * t)) for t in times]


# ============================================================================
# 强误差研究
# ============================================================================

def _sup_error(tested: Trajectory, reference: List[Field], basis: Basis) -> float:
    stride = (len(reference) - 1) // tested.M if tested.M else 1
    worst = 0.0
    for m, state in enumerate(tested.states):
        diff = transfer(state, basis) - reference[m * stride]
        worst = max(worst, diff.norm())
    return worst


def _run_sample(plan: StudyPlan, sample_id: int) -> List[float]:
    """单个样本：参考轨道 + 所有被测轨道，返回各分辨率的 sup 误差"""
    finest_M, levels = plan.tree_layout()
    reference_model = plan.reference_model()
    tree = sample_tree(reference_model.noise, finest_M, levels, plan.master_seed, sample_id,
                       T=plan.model.T)

    ref_config = plan.reference_config()
    if plan.exact_reference:
        times = [m * ref_config.tau for m in range(ref_config.M + 1)]
        reference = exact_linear_solution(reference_model, ref_config.basis, times)
    else:
        reference = run(reference_model, ref_config, tree).states

    errors = []
    for r in plan.resolutions:
        trajectory = run(plan.tested_model(r), plan.tested_config(r), tree)
        errors.append(_sup_error(trajectory, reference, ref_config.basis))
    return errors


def _guarded_sample(plan: StudyPlan, sample_id: int):
    try:
        return sample_id, _run_sample(plan, sample_id), None
    except MspdeError as e:
        return sample_id, None, f"{type(e).__name__}: {e}"


def _reduce(rows: List[List[float]]) -> Tuple[List[float], List[float]]:
    """按固定顺序补偿求和：RMS 误差与 delta 方法标准误"""
    n = len(rows)
    errors, std_errors = [], []
    for column in zip(*rows):
        squares = [e * e for e in column]
        mean = math.fsum(squares) / n
        rms = math.sqrt(mean)
        if n > 1:
            variance = math.fsum((s - mean) ** 2 for s in squares) / (n - 1)
            se_mean = math.sqrt(variance / n)
        else:
            se_mean = 0.0
        errors.append(rms)
        std_errors.append(se_mean / (2.0 * rms) if rms > 0 else 0.0)
    return errors, std_errors


def strong_error_study(plan: StudyPlan) -> ErrorReport:
    """
    耦合路径蒙特卡洛强误差研究

    :param plan: 研究计划
    :return: ErrorReport
    """
    # 所有轨道的步长限制在开始前检查
    for r in plan.resolutions:
        plan.tested_config(r).check_step_restriction(plan.model.drift.one_sided)
    plan.reference_config().check_step_restriction(plan.model.drift.one_sided)

    threads = plan.threads or os.cpu_count() or 1
    label = plan.tested_config(plan.resolutions[0]).name
    started = datetime.now().isoformat(timespec="seconds")
    if plan.verbose:
        print(f"🚀 开始 {plan.axis.value} 收敛性研究: {label}, 分辨率 {list(plan.resolutions)}, "
              f"参考 {plan.reference}, 样本 {plan.samples}, 线程 {threads}")

    notifier = plan.notifier
    outcomes = []
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for done, outcome in enumerate(pool.map(lambda i: _guarded_sample(plan, i), range(plan.samples)), 1):
            sample_id, errors, message = outcome
            outcomes.append(outcome)
            if message is not None:
                if plan.verbose:
                    print(f"⚠️  样本 {sample_id} 失败: {message}")
                if notifier:
                    notifier.notify(f"样本 {sample_id} 失败", is_success=False,
                                    data={"sample_id": sample_id, "error": message})
            elif notifier:
                notifier.notify(f"样本 {sample_id} 完成", data={"sample_id": sample_id, "errors": errors})
            if plan.verbose and (done % max(1, plan.samples // 10) == 0 or done == plan.samples):
                print(f"📊 进度 {done}/{plan.samples}")

    failures = {sid: msg for sid, _, msg in outcomes if msg is not None}
    if len(failures) > MAX_FAILURE_FRACTION * plan.samples:
        message = f"失败样本 {len(failures)}/{plan.samples} 超过 {MAX_FAILURE_FRACTION:.0%}，研究中止"
        if plan.verbose:
            print(f"❌ {message}")
        if notifier:
            notifier.notify(message, is_success=False, data={"failures": failures})
        raise StudyError(message)

    sample_ids = [sid for sid, errors, _ in outcomes if errors is not None]
    raw = [errors for _, errors, _ in outcomes if errors is not None]
    errors, std_errors = _reduce(raw)
    resolutions = [plan.resolution_value(r) for r in plan.resolutions]

    fit = None
    if len(errors) >= 3 and all(e > 0 for e in errors):
        fit = fit_rate(list(zip(resolutions, errors)))

    report = ErrorReport(
        axis=plan.axis,
        label=label,
        counts=list(plan.resolutions),
        resolutions=resolutions,
        errors=errors,
        std_errors=std_errors,
        raw=raw,
        sample_ids=sample_ids,
        fit=fit,
        expected_slope=EXPECTED_SLOPES.get((plan.axis.value, plan.scheme.value)),
        failures=failures,
        provenance={
            "master_seed": plan.master_seed,
            "samples": plan.samples,
            "config_hash": plan.config_hash(),
            "reference_label": plan.reference_config().name,
            "started": started,
            "finished": datetime.now().isoformat(timespec="seconds"),
            "version": __version__,
        },
    )
    if plan.verbose:
        for c, e, s in zip(report.counts, report.errors, report.std_errors):
            print(f"   {c:>6d}: 误差 {e:.6e} ± {s:.2e}")
        if fit:
            print(f"✅ 研究完成: 拟合斜率 {fit.slope:.4f} (理论 {report.expected_slope}), R² = {fit.r2:.4f}")
        else:
            print("✅ 研究完成: 误差含 0 或点数不足，未拟合斜率")
    if notifier:
        notifier.notify("研究完成", data=report.to_dict())
    return report


def truncation_study(plan: StudyPlan) -> ErrorReport:
    """
    噪声截断研究：K 变化，其余均取参考分辨率

    参考轨道与被测轨道使用相同格式，K = K_ref 时误差恰为 0。
    details 中给出各 K 的尾和 Σ_{k>K} λ^Q_k 以及误差是否随尾和一致衰减。
    """
    if plan.axis != StudyAxis.TRUNCATION:
        raise ValidationError(f"截断研究要求 axis = truncation，当前 {plan.axis.value}")
    report = strong_error_study(plan)

    reference_noise = plan.model.noise.truncate(plan.reference)
    tails = [reference_noise.tail(K) for K in plan.resolutions]
    consistent = True
    for i, (tail, error) in enumerate(zip(tails, report.errors)):
        if tail == 0.0 and error != 0.0:
            consistent = False
        if i > 0 and error > report.errors[i - 1] + 2.0 * report.std_errors[i - 1]:
            consistent = False
    report.details = {"tails": tails, "tail_consistent": consistent}
    if plan.verbose:
        status = "✅" if consistent else "⚠️ "
        print(f"{status} 误差随尾和衰减: {'一致' if consistent else '不一致'}")
    return report

# 作者：Xiaoqiang
# 微信公众号：XiaoqiangClub
# GitHub：https://github.com/xiaoqiangclub
# 邮箱：xiaoqiangclub@hotmail.com
# 创建时间：2025-03-02 10:00:00
# 文件描述：漂移与扩散模型（Nemytskii 算子）、导数、常数及假设的数值检查
# 文件路径：mspde/coefficients.py

"""
mspde 系数模块

漂移 F(u)(x) = f(u(x))，f 为多项式：
- cubic_allen_cahn: f(x) = x − x³
- odd_polynomial: 首项系数为负的奇次多项式
- linear: f(x) = c·x
- zero: f ≡ 0

扩散 G(u)v(x) = g(u(x))·v(x)：
- none: g ≡ 0
- additive: G(u)v = b·v，与 u 无关
- linear: g(u) = σu
- sine: g(u) = σ·sin(u)
- nemytskii: 用户提供 g, g', g''

Nemytskii 算子均以伪谱方式实现：在求积网格上求值 → 逐点作用 → 投影回离散空间。
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial

from .basis import Basis, Field, transfer
from .constants import (
    CHECK_GRID_POINTS,
    CHECK_GRID_RADIUS,
    CHECK_STATUS_MAP,
    CHECK_TOLERANCE,
    DEFAULT_SIGMA,
    DEFAULT_T,
)
from .exceptions import NumericError, ValidationError
from .noise import QWienerSpec
from .strategies import DiffusionKind, DriftKind, InitialDatum


# ============================================================================
# 漂移
# ============================================================================

@dataclass(frozen=True, eq=False)
class DriftSpec:
    """
    多项式漂移

    属性:
        kind: 漂移类型
        coeffs: 升幂系数 (a_0, a_1, …)
        growth: 增长指数 q（f 至多按 |x|^{q-1} 增长）
        one_sided: 单侧 Lipschitz 常数 L_f = sup f'（非单调时为 inf）
        growth_constant: L'_f，满足 |f'(x)| ≤ L'_f(1+|x|^{q-2})
        second_constant: L''_f，满足 |f''(x)| ≤ L''_f(1+|x|^{max(q-3,0)})
    """
    kind: DriftKind
    coeffs: np.ndarray
    growth: int
    one_sided: float
    growth_constant: float
    second_constant: float

    @property
    def poly(self) -> Polynomial:
        return Polynomial(self.coeffs)

    def f(self, x: np.ndarray) -> np.ndarray:
        return _checked_eval(self.poly, x, "漂移 f")

    def df(self, x: np.ndarray) -> np.ndarray:
        return _checked_eval(self.poly.deriv(), x, "漂移导数 f'")

    def d2f(self, x: np.ndarray) -> np.ndarray:
        return _checked_eval(self.poly.deriv(2), x, "漂移二阶导数 f''")

    @property
    def is_linear(self) -> bool:
        return self.poly.degree() <= 1

    @classmethod
    def cubic_allen_cahn(cls) -> "DriftSpec":
        return _drift_from_coeffs(DriftKind.CUBIC_ALLEN_CAHN, [0.0, 1.0, 0.0, -1.0], strict=True)

    @classmethod
    def odd_polynomial(cls, coeffs: Sequence[float], strict: bool = True) -> "DriftSpec":
        """
        :param coeffs: 升幂系数
        :param strict: True 时要求奇次且首项系数为负；False 时允许构造非单调漂移（仅供假设检查）
        """
        return _drift_from_coeffs(DriftKind.ODD_POLYNOMIAL, coeffs, strict=strict)

    @classmethod
    def linear(cls, c: float) -> "DriftSpec":
        return _drift_from_coeffs(DriftKind.LINEAR, [0.0, float(c)], strict=False)

    @classmethod
    def zero(cls) -> "DriftSpec":
        return _drift_from_coeffs(DriftKind.ZERO, [0.0], strict=False)


def _checked_eval(poly: Polynomial, x: np.ndarray, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out = poly(x)
    if not np.all(np.isfinite(out)):
        raise NumericError(f"{what} 求值溢出", magnitude=float(np.nanmax(np.abs(x))) if x.size else None)
    return np.asarray(out, dtype=float)


def _sup_derivative(poly: Polynomial) -> float:
    """sup_x f'(x)，无上界时返回 inf"""
    d1 = poly.deriv()
    if d1.degree() <= 0:
        return float(d1.coef[0]) if d1.coef.size else 0.0
    if d1.degree() % 2 == 1 or d1.coef[-1] > 0:
        return math.inf
    critical = d1.deriv().roots()
    real = critical[np.abs(critical.imag) < 1e-9].real
    return float(np.max(d1(real)))


def _drift_from_coeffs(kind: DriftKind, coeffs: Sequence[float], strict: bool) -> DriftSpec:
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size == 0 or not np.all(np.isfinite(coeffs)):
        raise ValidationError("漂移系数必须为非空有限实数列")
    poly = Polynomial(coeffs).trim()
    degree = poly.degree()
    if strict and (degree % 2 == 0 or poly.coef[-1] >= 0):
        raise ValidationError(
            f"漂移必须是首项系数为负的奇次多项式: 次数={degree}, 首项系数={poly.coef[-1]}")
    return DriftSpec(
        kind=kind,
        coeffs=poly.coef.copy(),
        growth=max(degree + 1, 2),
        one_sided=_sup_derivative(poly),
        growth_constant=float(np.sum(np.abs(poly.deriv().coef))),
        second_constant=float(np.sum(np.abs(poly.deriv(2).coef))),
    )


# ============================================================================
# 扩散
# ============================================================================

ScalarFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class DiffusionSpec:
    """
    扩散算子

    属性:
        kind: 扩散类型
        sigma: 噪声强度（linear/sine）或加性常数剖面
        g, dg, d2g: Nemytskii 函数及其导数（加性类型为 None）
        profile: 加性剖面 b(x)
        lipschitz: L_g（sup|g'|）
        assumption3_declared: 模型构造者是否声明 G 把 Ḣ^{1+θ} 映入 L_2^{1+θ}
    """
    kind: DiffusionKind
    sigma: float = 0.0
    g: Optional[ScalarFunction] = None
    dg: Optional[ScalarFunction] = None
    d2g: Optional[ScalarFunction] = None
    profile: Optional[ScalarFunction] = None
    lipschitz: float = 0.0
    assumption3_declared: bool = True

    @property
    def additive(self) -> bool:
        return self.kind in (DiffusionKind.NONE, DiffusionKind.ADDITIVE)

    @property
    def commutative(self) -> bool:
        # 对角 Q 下 Nemytskii 核 g'(u)g(u)·(Q^{1/2}g_k)(Q^{1/2}g_l) 关于 (k,l) 对称
        return True

    @classmethod
    def none(cls) -> "DiffusionSpec":
        return cls(kind=DiffusionKind.NONE)

    @classmethod
    def additive_noise(cls, b: Union[float, ScalarFunction] = 1.0) -> "DiffusionSpec":
        if callable(b):
            profile = b
            sigma = float("nan")
        else:
            sigma = float(b)

            def profile(x, _b=sigma):
                return np.full(np.shape(x), _b)
        return cls(kind=DiffusionKind.ADDITIVE, sigma=sigma, profile=profile)

    @classmethod
    def linear(cls, sigma: float = DEFAULT_SIGMA) -> "DiffusionSpec":
        return cls(
            kind=DiffusionKind.LINEAR,
            sigma=float(sigma),
            g=lambda u, s=sigma: s * u,
            dg=lambda u, s=sigma: np.full(np.shape(u), float(s)),
            d2g=lambda u: np.zeros(np.shape(u)),
            lipschitz=abs(float(sigma)),
        )

    @classmethod
    def sine(cls, sigma: float = DEFAULT_SIGMA) -> "DiffusionSpec":
        return cls(
            kind=DiffusionKind.SINE,
            sigma=float(sigma),
            g=lambda u, s=sigma: s * np.sin(u),
            dg=lambda u, s=sigma: s * np.cos(u),
            d2g=lambda u, s=sigma: -s * np.sin(u),
            lipschitz=abs(float(sigma)),
        )

    @classmethod
    def nemytskii(cls, g: ScalarFunction, dg: ScalarFunction, d2g: ScalarFunction,
                  lipschitz: float = math.nan, assumption3_declared: bool = False) -> "DiffusionSpec":
        return cls(kind=DiffusionKind.NEMYTSKII, g=g, dg=dg, d2g=d2g,
                   lipschitz=lipschitz, assumption3_declared=assumption3_declared)


# ============================================================================
# 模型
# ============================================================================

def initial_datum(kind: InitialDatum) -> ScalarFunction:
    """预设初值：sine 为 sin(πx) ∈ Ḣ²，parabola 为 x(1−x)"""
    if kind == InitialDatum.SINE:
        return _sine_datum
    if kind == InitialDatum.PARABOLA:
        return _parabola_datum
    raise ValidationError(f"未知初值类型: {kind}")


def _sine_datum(x):
    return np.sin(np.pi * np.asarray(x, dtype=float))


def _parabola_datum(x):
    x = np.asarray(x, dtype=float)
    return x * (1.0 - x)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """
    SPDE 模型 du = (Au + F(u))dt + G(u)dW

    属性:
        drift: 漂移
        diffusion: 扩散
        noise: Q-Wiener 描述
        u0: 初值函数
        T: 终止时间
    """
    drift: DriftSpec
    diffusion: DiffusionSpec
    noise: QWienerSpec
    u0: ScalarFunction = field(default_factory=lambda: initial_datum(InitialDatum.SINE))
    T: float = DEFAULT_T

    def __post_init__(self):
        if not self.T > 0:
            raise ValidationError(f"终止时间必须为正: {self.T}")

    def with_noise(self, noise: QWienerSpec) -> "ModelSpec":
        return replace(self, noise=noise)


# ============================================================================
# Nemytskii 算子
# ============================================================================

def apply_drift(spec: DriftSpec, u: Field, basis: Optional[Basis] = None) -> Field:
    """P F(u)：求积网格上逐点作用 f 后投影"""
    basis = basis or u.basis
    values = transfer(u, basis).values()
    return Field(basis, basis.analyze(spec.f(values)))


def diffusion_values(spec: DiffusionSpec, u_values: np.ndarray, dw_values: np.ndarray,
                     grid: np.ndarray) -> np.ndarray:
    """逐点 g(u(x))·ΔW(x)"""
    if spec.kind == DiffusionKind.NONE:
        return np.zeros_like(dw_values)
    if spec.kind == DiffusionKind.ADDITIVE:
        return spec.profile(grid) * dw_values
    return spec.g(u_values) * dw_values


def apply_diffusion(spec: DiffusionSpec, u: Field, dw: Union[Field, np.ndarray],
                    basis: Optional[Basis] = None) -> Field:
    """
    P G(u) ΔW

    :param dw: 增量场，或 basis 求积网格上的逐点取值
    """
    basis = basis or u.basis
    dw_values = transfer(dw, basis).values() if isinstance(dw, Field) else np.asarray(dw, dtype=float)
    if dw_values.shape != basis.grid.shape:
        raise ValidationError(f"增量取值形状 {dw_values.shape} 与求积网格 {basis.grid.shape} 不一致")
    if spec.kind == DiffusionKind.NONE:
        return basis.zeros()
    u_values = transfer(u, basis).values()
    return Field(basis, basis.analyze(diffusion_values(spec, u_values, dw_values, basis.grid)))


def milstein_values(spec: DiffusionSpec, u_values: np.ndarray, dw_values: np.ndarray,
                    q_values: np.ndarray, tau: float) -> np.ndarray:
    """逐点 ½·g'(u)·g(u)·[ΔW² − τ·q]，加性噪声恒为 0"""
    if spec.additive:
        return np.zeros_like(u_values)
    return 0.5 * spec.dg(u_values) * spec.g(u_values) * (dw_values ** 2 - tau * q_values)


def milstein_correction(spec: DiffusionSpec, u: Field, bracket: Tuple[np.ndarray, np.ndarray],
                        tau: float, basis: Optional[Basis] = None) -> Field:
    """
    P DG(u)G(u)[∫(W(r)−W(t_m))dW(r)] 的交换性闭式

    :param bracket: noise.milstein_bracket 返回的 (ΔW(x), q(x))
    """
    basis = basis or u.basis
    if spec.additive:
        return basis.zeros()
    dw_values, q_values = bracket
    u_values = transfer(u, basis).values()
    return Field(basis, basis.analyze(milstein_values(spec, u_values, dw_values, q_values, tau)))


# ============================================================================
# 假设检查
# ============================================================================

@dataclass
class AssumptionCheck:
    """单项检查结果"""
    assumption: int
    name: str
    status: str
    estimate: Optional[float] = None
    detail: str = ""
    witness: Optional[Tuple[float, float]] = None

    @property
    def display(self) -> str:
        return CHECK_STATUS_MAP.get(self.status, f"❓ {self.status}")

    def to_dict(self) -> Dict:
        return {
            "assumption": self.assumption,
            "name": self.name,
            "status": self.status,
            "estimate": self.estimate,
            "detail": self.detail,
            "witness": list(self.witness) if self.witness else None,
        }


@dataclass
class AssumptionReport:
    """假设 1–5 的检查报告"""
    checks: List[AssumptionCheck]
    estimates: Dict[str, float]
    regime: str

    @property
    def passed(self) -> bool:
        return all(check.status != "fail" for check in self.checks)

    def lines(self) -> List[str]:
        lines = []
        for check in self.checks:
            line = f"{check.display}  假设 {check.assumption} - {check.name}"
            if check.estimate is not None:
                line += f"  估计值: {check.estimate:.6g}"
            if check.detail:
                line += f"  ({check.detail})"
            if check.witness:
                line += f"  反例点对: x={check.witness[0]:.6g}, y={check.witness[1]:.6g}"
            lines.append(line)
        lines.append(f"ℹ️  适用区间: {self.regime}")
        return lines

    def to_dict(self) -> Dict:
        return {
            "passed": self.passed,
            "regime": self.regime,
            "estimates": dict(self.estimates),
            "checks": [check.to_dict() for check in self.checks],
        }


_CHECK_SCALES = (1.0, 2.0, 4.0)
_SATURATION_RATIO = 0.75


def _sup_on_radii(func: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> List[float]:
    """sup|func| 在 [−R,R]、[−2R,2R]、[−4R,4R] 上的估计"""
    return [float(np.max(np.abs(func(scale * x)))) for scale in _CHECK_SCALES]


def _stays_bounded(sups: List[float], tol: float) -> bool:
    """
    半径加倍时估计值不再增长，或增量至少按 3/4 收缩

    多项式、对数增长的增量不收缩，判为无界
    """
    if not all(math.isfinite(s) for s in sups):
        return False
    near, mid, far = sups
    if far <= near * (1.0 + 1e-9) + tol:
        return True
    return far - mid <= _SATURATION_RATIO * (mid - near)


def _radii_detail(sups: List[float], radius: float) -> str:
    return "半径 " + " / ".join(f"{scale * radius:g}: {s:.6g}" for scale, s in zip(_CHECK_SCALES, sups))


def check_assumptions(drift: DriftSpec, diffusion: DiffusionSpec,
                      sink: Optional[Callable[[str], None]] = None,
                      radius: float = CHECK_GRID_RADIUS,
                      points: int = CHECK_GRID_POINTS) -> AssumptionReport:
    """
    在 [−R, R] 网格上数值检查假设 1–5

    扩散的有界性项另在 2R、4R 上重算，估计值随半径持续增长即判为 fail

    :param drift: 漂移
    :param diffusion: 扩散
    :param sink: 逐行接收报告文本的回调（如 print / click.echo）
    :return: AssumptionReport，违反项记为 fail，不抛异常
    """
    x = np.linspace(-radius, radius, points)
    checks: List[AssumptionCheck] = []
    estimates: Dict[str, float] = {"q": float(drift.growth)}
    tol = CHECK_TOLERANCE

    # 假设 1：单侧 Lipschitz
    fx = drift.f(x)
    secants = np.diff(fx) / np.diff(x)
    idx = int(np.argmax(secants))
    l_hat = float(max(secants[idx], np.max(drift.df(x))))
    estimates["L_f"] = l_hat
    if math.isfinite(drift.one_sided) and l_hat <= drift.one_sided + tol:
        checks.append(AssumptionCheck(1, "单侧 Lipschitz (f(x)−f(y))(x−y) ≤ L_f|x−y|²", "pass",
                                      l_hat, f"L_f = {drift.one_sided:.6g}"))
    else:
        checks.append(AssumptionCheck(1, "单侧 Lipschitz (f(x)−f(y))(x−y) ≤ L_f|x−y|²", "fail",
                                      l_hat, f"声明 L_f = {drift.one_sided:.6g}",
                                      witness=(float(x[idx]), float(x[idx + 1]))))

    # 假设 1：f' 的多项式增长
    bound = drift.growth_constant * (1.0 + np.abs(x) ** (drift.growth - 2))
    growth_ok = bool(np.all(np.abs(drift.df(x)) <= bound + tol))
    estimates["L'_f"] = drift.growth_constant
    checks.append(AssumptionCheck(1, f"增长 |f'(x)| ≤ L'_f(1+|x|^{drift.growth - 2})",
                                  "pass" if growth_ok else "fail", drift.growth_constant))

    # 假设 4：f'' 的多项式增长
    q_tilde = max(drift.growth - 3, 0)
    bound2 = drift.second_constant * (1.0 + np.abs(x) ** q_tilde)
    second_ok = bool(np.all(np.abs(drift.d2f(x)) <= bound2 + tol))
    estimates["L''_f"] = drift.second_constant
    checks.append(AssumptionCheck(4, f"增长 |f''(x)| ≤ L''_f(1+|x|^{q_tilde})",
                                  "pass" if second_ok else "fail", drift.second_constant))

    if diffusion.additive:
        checks.append(AssumptionCheck(2, "G Lipschitz 且 G(Ḣ¹) ⊂ L_2^1", "trivial", 0.0,
                                      "加性噪声" if diffusion.kind == DiffusionKind.ADDITIVE else "无噪声"))
        checks.append(AssumptionCheck(3, "G 映 Ḣ^{1+θ} 入 L_2^{1+θ}", "declared", None, "加性噪声"))
        checks.append(AssumptionCheck(4, "DG 有界、g'g Lipschitz", "trivial", 0.0, "DG ≡ 0"))
        checks.append(AssumptionCheck(5, "交换性条件", "trivial", None, "Milstein 修正项为 0"))
        estimates["L_g"] = 0.0
    else:
        sup_dg_radii = _sup_on_radii(diffusion.dg, x)
        sup_dg = sup_dg_radii[0]
        estimates["L_g"] = sup_dg
        dg_ok = _stays_bounded(sup_dg_radii, tol)
        if dg_ok and math.isfinite(diffusion.lipschitz):
            dg_ok = max(sup_dg_radii) <= diffusion.lipschitz + tol
        checks.append(AssumptionCheck(2, "sup|g'| < ∞（G Lipschitz）", "pass" if dg_ok else "fail", sup_dg,
                                      _radii_detail(sup_dg_radii, radius)))
        g0 = float(np.asarray(diffusion.g(np.zeros(1)))[0])
        checks.append(AssumptionCheck(2, "边界相容 g(0) = 0",
                                      "pass" if abs(g0) <= tol else "fail", g0))

        if diffusion.assumption3_declared:
            checks.append(AssumptionCheck(3, "G 映 Ḣ^{1+θ} 入 L_2^{1+θ}", "declared", None,
                                          "逐点不可检，由内置模型声明"))
        else:
            checks.append(AssumptionCheck(3, "G 映 Ḣ^{1+θ} 入 L_2^{1+θ}", "undeclared", None,
                                          "自定义模型未声明"))

        sup_d2g_radii = _sup_on_radii(diffusion.d2g, x)
        estimates["sup|g''|"] = sup_d2g_radii[0]
        checks.append(AssumptionCheck(4, "sup|g''| < ∞",
                                      "pass" if _stays_bounded(sup_d2g_radii, tol) else "fail",
                                      sup_d2g_radii[0], _radii_detail(sup_d2g_radii, radius)))
        lip_radii = []
        for scale in _CHECK_SCALES:
            xs = scale * x
            product = diffusion.dg(xs) * diffusion.g(xs)
            lip_radii.append(float(np.max(np.abs(np.diff(product) / np.diff(xs)))))
        estimates["Lip(g'g)"] = lip_radii[0]
        checks.append(AssumptionCheck(4, "x ↦ g'(x)g(x) Lipschitz",
                                      "pass" if _stays_bounded(lip_radii, tol) else "fail",
                                      lip_radii[0], _radii_detail(lip_radii, radius)))
        checks.append(AssumptionCheck(5, "交换性条件", "pass" if diffusion.commutative else "fail",
                                      None, "对角 Q 下 Nemytskii 核对称"))

    supports_gamma1 = all(check.status in ("pass", "trivial", "declared") for check in checks)
    report = AssumptionReport(
        checks=checks,
        estimates=estimates,
        regime="γ = 1（Euler 阶 1/2，Milstein 阶 1）" if supports_gamma1 else "γ < 1",
    )
    if sink is not None:
        for line in report.lines():
            sink(line)
    return report

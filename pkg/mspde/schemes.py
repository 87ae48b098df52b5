# 作者：Xiaoqiang
# 微信公众号：XiaoqiangClub
# GitHub：https://github.com/xiaoqiangclub
# 邮箱：xiaoqiangclub@hotmail.com
# 创建时间：2025-03-02 10:00:00
# 文件描述：漂移隐式 Euler / Milstein 时间步进（DIEG、DIESG、DIEMG、DIEMSG）及单调隐式步的 Newton 求解器
# 文件路径：mspde/schemes.py

"""
mspde 时间步进模块

每一步求解 w − τA w − τP F(w) = rhs，其中
- Euler:    rhs = u^m + P G(u^m) δ_mW
- Milstein: rhs 再加上 P DG(u^m)G(u^m)[∫(W(r)−W(t_m))dW(r)]（交换性闭式）

噪声项始终取上一步的状态。τ·L_f < 1/4 时隐式映射强单调，Newton 的 Jacobian 对称正定。
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator, cg

from .basis import Field, FemMesh, SpectralBasis, energy_norm, project
from .coefficients import ModelSpec, apply_diffusion, milstein_correction
from .config import SchemeConfig
from .constants import DENSE_JACOBIAN_LIMIT
from .exceptions import NumericError, SolverError, ValidationError
from .noise import NoiseEvaluator, NoiseTree
from .strategies import DiffusionKind, SchemeKind

# 接受阈值中的舍入误差放大系数
_ROUNDOFF_FACTOR = 64.0


@dataclass
class NewtonResult:
    """单次隐式求解的结果"""
    state: Field
    iterations: int
    residual: float


@dataclass
class Trajectory:
    """
    离散轨道

    属性:
        states: u^0, …, u^M
        newton_iterations: 每步 Newton 迭代次数（长度 M）
        residuals: 每步接受时的残差（长度 M）
        label: 格式名称
    """
    states: List[Field]
    newton_iterations: List[int] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    label: str = ""

    @property
    def M(self) -> int:
        return len(self.states) - 1

    @property
    def final(self) -> Field:
        return self.states[-1]

    def sup_norm(self) -> float:
        """sup_m ‖u^m‖_{L²}"""
        return max(state.norm() for state in self.states)


# ============================================================================
# Newton 求解器
# ============================================================================

def _spectral_system(basis: SpectralBasis, model: ModelSpec, tau: float, rhs: np.ndarray):
    diag = 1.0 + tau * basis.lambdas
    drift = model.drift

    def residual(w: np.ndarray) -> Tuple[np.ndarray, float, float]:
        values = basis.synthesize(w)
        linear = diag * w
        r = linear - tau * basis.analyze(drift.f(values)) - rhs
        scale = float(np.linalg.norm(linear)) + float(np.linalg.norm(rhs))
        return r, float(np.linalg.norm(r)), scale

    def solve(w: np.ndarray, r: np.ndarray) -> np.ndarray:
        slope = drift.df(basis.synthesize(w))
        if basis.N <= DENSE_JACOBIAN_LIMIT:
            jacobian = np.diag(diag) - tau * basis.multiplier_matrix(slope)
            return linalg.cho_solve(linalg.cho_factor(jacobian), r)

        def matvec(v):
            return diag * v - tau * basis.load(slope * basis.synthesize(v))

        operator = LinearOperator((basis.N, basis.N), matvec=matvec, dtype=float)
        preconditioner = LinearOperator((basis.N, basis.N), matvec=lambda v: v / diag, dtype=float)
        delta, info = cg(operator, r, rtol=1e-13, atol=0.0, maxiter=10 * basis.N, M=preconditioner)
        if info != 0:
            raise linalg.LinAlgError(f"共轭梯度 {info} 次迭代内未收敛" if info > 0 else f"共轭梯度输入非法 (info={info})")
        return delta

    return residual, solve


def _fem_system(mesh: FemMesh, model: ModelSpec, tau: float, rhs: np.ndarray):
    mass = mesh.discrete_mass
    system = mass.combine(mesh.stiffness, 1.0, tau)
    mass_rhs = mass.matvec(rhs)
    drift = model.drift

    def dual_norm(v: np.ndarray) -> float:
        # 载荷向量对应函数的 L² 范数 sqrt(vᵀ M⁻¹ v)
        return math.sqrt(max(float(np.dot(v, mass.solve(v))), 0.0))

    def residual(w: np.ndarray) -> Tuple[np.ndarray, float, float]:
        linear = system.matvec(w)
        r = linear - tau * mesh.load(drift.f(mesh.synthesize(w))) - mass_rhs
        return r, dual_norm(r), dual_norm(linear) + dual_norm(mass_rhs)

    def solve(w: np.ndarray, r: np.ndarray) -> np.ndarray:
        jacobian = system.combine(mesh.multiplier_matrix(drift.df(mesh.synthesize(w))), 1.0, -tau)
        return jacobian.solve(r)

    return residual, solve


def solve_implicit(rhs: Field, model: ModelSpec, config: SchemeConfig) -> NewtonResult:
    """
    阻尼 Newton 求解 w − τA w − τP F(w) = rhs，初值取 rhs

    :param rhs: 右端项（须属于 config.basis）
    :param model: 模型
    :param config: 格式配置（提供 τ 与 Newton 参数）
    :return: NewtonResult
    """
    basis = config.basis
    if rhs.basis != basis:
        raise ValidationError(f"右端项的基 {rhs.basis.label} 与配置的基 {basis.label} 不一致")
    newton = config.newton
    tau = config.tau

    if isinstance(basis, SpectralBasis):
        residual, solve = _spectral_system(basis, model, tau, rhs.coeffs)
    else:
        residual, solve = _fem_system(basis, model, tau, rhs.coeffs)

    w = rhs.coeffs.copy()
    res = math.inf
    for iteration in range(newton.max_iter + 1):
        r, res, scale = residual(w)
        if not math.isfinite(res):
            raise SolverError("Newton 残差出现非有限值", res, iteration)
        if res <= max(newton.tol_residual, _ROUNDOFF_FACTOR * np.finfo(float).eps * scale):
            return NewtonResult(Field(basis, w), iteration, res)
        if iteration == newton.max_iter:
            break
        try:
            delta = solve(w, r)
        except (linalg.LinAlgError, ValueError) as e:
            raise SolverError(f"Jacobian 求解失败（奇异、非正定或迭代未收敛）: {e}",
                              res, iteration)
        w = w - newton.damping * delta
    raise SolverError(f"Newton 在 {newton.max_iter} 次迭代内未收敛", res, newton.max_iter)


def newton_solve(rhs: Field, model: ModelSpec, config: SchemeConfig) -> Field:
    """隐式步的解（不含诊断信息）"""
    return solve_implicit(rhs, model, config).state


# ============================================================================
# 单步
# ============================================================================

def _dw_values(dw: Union[Field, np.ndarray], config: SchemeConfig) -> np.ndarray:
    if isinstance(dw, Field):
        return dw.basis.evaluate(dw.coeffs, config.basis.grid) if dw.basis != config.basis else dw.values()
    return np.asarray(dw, dtype=float)


def _euler_rhs(state: Field, dw: Union[Field, np.ndarray], model: ModelSpec, config: SchemeConfig) -> Field:
    if model.diffusion.kind == DiffusionKind.NONE:
        return state
    return state + apply_diffusion(model.diffusion, state, _dw_values(dw, config))


def _milstein_rhs(state: Field, bracket: Tuple[np.ndarray, np.ndarray], model: ModelSpec,
                  config: SchemeConfig) -> Field:
    dw_values, q_values = bracket
    if model.diffusion.additive:
        # 修正项恒为 0，与 Euler 逐位一致
        return _euler_rhs(state, dw_values, model, config)
    return (state
            + apply_diffusion(model.diffusion, state, dw_values)
            + milstein_correction(model.diffusion, state, (dw_values, q_values), config.tau))


def euler_step(state: Field, dw: Union[Field, np.ndarray], model: ModelSpec,
               config: SchemeConfig) -> Field:
    """
    漂移隐式 Euler 一步

    :param state: u^m
    :param dw: 增量 ΔW，Field 或求积网格上的取值
    :return: u^{m+1}
    """
    return solve_implicit(_euler_rhs(state, dw, model, config), model, config).state


def milstein_step(state: Field, bracket: Tuple[np.ndarray, np.ndarray], model: ModelSpec,
                  config: SchemeConfig) -> Field:
    """
    漂移隐式 Milstein 一步

    :param state: u^m
    :param bracket: (ΔW(x), q(x))，见 noise.milstein_bracket
    :return: u^{m+1}
    """
    return solve_implicit(_milstein_rhs(state, bracket, model, config), model, config).state


# ============================================================================
# 整条轨道
# ============================================================================

def scheme_label(config: SchemeConfig) -> str:
    return config.name


def _check_tree(tree: NoiseTree, level: Optional[int], model: ModelSpec, config: SchemeConfig) -> int:
    if level is None:
        level = tree.level_for(config.M)
    M, tau = tree.levels[level]
    if M != config.M:
        raise ValidationError(f"噪声树第 {level} 层步数 {M} 与配置步数 {config.M} 不一致")
    if not math.isclose(tau, config.tau, rel_tol=1e-12):
        raise ValidationError(f"噪声树第 {level} 层步长 {tau} 与配置步长 {config.tau} 不一致")
    if tree.K < model.noise.K:
        raise ValidationError(f"噪声树只有 {tree.K} 个模，模型需要 K={model.noise.K}")
    return level


def run(model: ModelSpec, config: SchemeConfig, tree: Optional[NoiseTree] = None,
        level: Optional[int] = None, u0: Optional[Callable] = None,
        verbose: bool = False) -> Trajectory:
    """
    运行 M 步选定格式

    :param model: 模型
    :param config: 格式配置
    :param tree: 噪声树，None 表示零噪声
    :param level: 噪声树层编号，None 时按 config.M 查找
    :param u0: 初值函数，None 时取 model.u0
    :param verbose: 是否打印每步诊断
    :return: Trajectory（给定 model/config/tree 时完全确定）
    """
    config.check_step_restriction(model.drift.one_sided)
    basis = config.basis

    state = project(u0 or model.u0, basis)
    if not math.isfinite(energy_norm(state)):
        raise NumericError("初值投影的 Ḣ¹ 范数非有限")

    noisy = tree is not None and model.diffusion.kind != DiffusionKind.NONE
    if tree is not None:
        level = _check_tree(tree, level, model, config)
    evaluator = NoiseEvaluator(model.noise, basis.grid) if noisy else None
    zero_dw = np.zeros(basis.grid.shape)

    trajectory = Trajectory(states=[state], label=config.name)
    for m in range(config.M):
        dw = evaluator.dw(tree.step(level, m)) if noisy else zero_dw
        if config.scheme == SchemeKind.MILSTEIN:
            q_values = evaluator.q_values if noisy else zero_dw
            rhs = _milstein_rhs(state, (dw, q_values), model, config)
        else:
            rhs = _euler_rhs(state, dw, model, config)
        result = solve_implicit(rhs, model, config)
        state = result.state
        trajectory.states.append(state)
        trajectory.newton_iterations.append(result.iterations)
        trajectory.residuals.append(result.residual)
        if verbose:
            print(f"🔄 [{config.name}] 第 {m + 1}/{config.M} 步: Newton 迭代 {result.iterations} 次, "
                  f"残差 {result.residual:.2e}, ‖u‖ = {state.norm():.6g}")
    return trajectory

# 作者：Xiaoqiang
# 微信公众号：XiaoqiangClub
# GitHub：https://github.com/xiaoqiangclub
# 邮箱：xiaoqiangclub@hotmail.com
# 创建时间：2025-03-02 10:00:00
# 文件描述：mspde 模块入口文件，导出核心功能
# 文件路径：mspde/__init__.py

from .version import __version__, __author__, __email__
from .basis import (
    Basis,
    SpectralBasis,
    FemMesh,
    Field,
    TridiagonalMatrix,
    eigenpair,
    assemble_mass,
    assemble_stiffness,
    generalized_eigenvalues,
    project,
    evaluate,
    sobolev_norm,
    energy_norm,
    transfer,
)
from .noise import (
    QWienerSpec,
    NoiseTree,
    NoiseEvaluator,
    sample_tree,
    increment_field,
    milstein_bracket,
    iterated_ito_integrals,
    dump_tree,
    load_tree,
)
from .coefficients import (
    DriftSpec,
    DiffusionSpec,
    ModelSpec,
    AssumptionReport,
    initial_datum,
    apply_drift,
    apply_diffusion,
    milstein_correction,
    check_assumptions,
)
from .config import NewtonConfig, SchemeConfig
from .schemes import Trajectory, newton_solve, euler_step, milstein_step, run, scheme_label
from .experiments import (
    StudyPlan,
    ErrorReport,
    RateFit,
    fit_rate,
    strong_error_study,
    truncation_study,
    exact_linear_solution,
)
from .callbacks import NotificationManager
from .strategies import (
    BasisKind,
    SchemeKind,
    StudyAxis,
    DriftKind,
    DiffusionKind,
    InitialDatum,
    NotificationMode,
)
from .exceptions import (
    MspdeError,
    ValidationError,
    ConfigError,
    NumericError,
    SolverError,
    StudyError,
    NoiseFormatError,
)

__all__ = [
    # 版本信息
    "__version__",
    "__author__",
    "__email__",

    # 空间离散
    "Basis",
    "SpectralBasis",
    "FemMesh",
    "Field",
    "TridiagonalMatrix",
    "eigenpair",
    "assemble_mass",
    "assemble_stiffness",
    "generalized_eigenvalues",
    "project",
    "evaluate",
    "sobolev_norm",
    "energy_norm",
    "transfer",

    # 噪声
    "QWienerSpec",
    "NoiseTree",
    "NoiseEvaluator",
    "sample_tree",
    "increment_field",
    "milstein_bracket",
    "iterated_ito_integrals",
    "dump_tree",
    "load_tree",

    # 系数
    "DriftSpec",
    "DiffusionSpec",
    "ModelSpec",
    "AssumptionReport",
    "initial_datum",
    "apply_drift",
    "apply_diffusion",
    "milstein_correction",
    "check_assumptions",

    # 配置与格式
    "NewtonConfig",
    "SchemeConfig",
    "Trajectory",
    "newton_solve",
    "euler_step",
    "milstein_step",
    "run",
    "scheme_label",

    # 收敛性研究
    "StudyPlan",
    "ErrorReport",
    "RateFit",
    "fit_rate",
    "strong_error_study",
    "truncation_study",
    "exact_linear_solution",
    "NotificationManager",

    # 枚举
    "BasisKind",
    "SchemeKind",
    "StudyAxis",
    "DriftKind",
    "DiffusionKind",
    "InitialDatum",
    "NotificationMode",

    # 异常类
    "MspdeError",
    "ValidationError",
    "ConfigError",
    "NumericError",
    "SolverError",
    "StudyError",
    "NoiseFormatError",
]

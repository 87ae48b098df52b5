"""
MSPDE CLI 核心模块 - 配置管理

配置文件为扁平的 key = value 纯文本，键用点号分节，# 开头为注释：

    # 时间方向 Milstein 研究
    scheme.kind = milstein
    study.resolutions = 2^-4, 2^-5, 2^-6, 2^-7, 2^-8
    study.reference = 2^-11

未知键、类型不符、违反约束均报告为 ConfigError（带键名与约束）。
"""

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from mspde import (
    BasisKind,
    DiffusionKind,
    DiffusionSpec,
    DriftKind,
    DriftSpec,
    InitialDatum,
    ModelSpec,
    NewtonConfig,
    QWienerSpec,
    SchemeConfig,
    SchemeKind,
    StudyAxis,
    StudyPlan,
    initial_datum,
)
from mspde.constants import DEFAULT_SAMPLES
from mspde.exceptions import ConfigError, ValidationError
from mspde.experiments import make_basis

AUTO = "auto"

_POWER_OF_TWO = re.compile(r"^2\^(-?\d+)$")


def parse_float(text: str) -> float:
    """浮点数，支持 2^-k 记法"""
    text = text.strip()
    match = _POWER_OF_TWO.match(text.replace(" ", ""))
    value = 2.0 ** int(match.group(1)) if match else float(text)
    if not math.isfinite(value):
        raise ValueError(f"非有限数: {text}")
    return value


def parse_int(text: str) -> int:
    value = parse_float(text)
    if value != int(value):
        raise ValueError(f"不是整数: {text}")
    return int(value)


def parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"不是布尔值: {text}")


def parse_list(item: Callable[[str], Any]) -> Callable[[str], List[Any]]:
    def parser(text: str) -> List[Any]:
        parts = [p for p in (s.strip() for s in text.split(",")) if p]
        if not parts:
            raise ValueError("列表为空")
        return [item(p) for p in parts]
    return parser


def parse_enum(enum_cls) -> Callable[[str], str]:
    choices = [e.value for e in enum_cls]

    def parser(text: str) -> str:
        value = text.strip().lower()
        if value not in choices:
            raise ValueError(f"可选值为 {', '.join(choices)}")
        return value
    return parser


def _auto_or(parser: Callable[[str], Any]) -> Callable[[str], Any]:
    def wrapped(text: str):
        return AUTO if text.strip().lower() == AUTO else parser(text)
    return wrapped


# 键 -> (解析函数, 默认值, 说明)
CONFIG_SCHEMA: Dict[str, Tuple[Callable[[str], Any], str, str]] = {
    "model.drift.kind": (parse_enum(DriftKind), "cubic_allen_cahn", "漂移类型"),
    "model.drift.coeffs": (parse_list(parse_float), "0, 1, 0, -1", "odd_polynomial 的升幂系数"),
    "model.drift.c": (parse_float, "-1.0", "linear 漂移 f(x) = c·x 的系数"),
    "model.diffusion.kind": (parse_enum(DiffusionKind), "linear", "扩散类型（nemytskii 仅能通过 API 构造）"),
    "model.diffusion.sigma": (parse_float, "0.5", "噪声强度 σ（additive 时为常数剖面 b）"),
    "model.noise.K": (parse_int, "64", "噪声截断模数 K"),
    "model.noise.beta": (parse_float, "4.0", "Q 特征值衰减 λ_k = k^-β，β > 3"),
    "model.u0": (parse_enum(InitialDatum), "sine", "初值"),
    "model.T": (parse_float, "0.5", "终止时间"),
    "scheme.kind": (parse_enum(SchemeKind), "euler", "被测格式"),
    "scheme.basis": (parse_enum(BasisKind), "spectral", "被测空间离散"),
    "scheme.N": (parse_int, "64", "谱模数 N 或有限元单元数（非空间方向研究）"),
    "scheme.tau": (parse_float, "2^-10", "时间步长（非时间方向研究）"),
    "newton.tol": (parse_float, "1e-12", "Newton 残差阈值"),
    "newton.max_iter": (parse_int, "50", "Newton 最大迭代次数"),
    "newton.damping": (parse_float, "1.0", "Newton 阻尼因子 (0, 1]"),
    "study.axis": (parse_enum(StudyAxis), "temporal", "加密方向"),
    "study.resolutions": (_auto_or(parse_list(parse_float)), AUTO, "被测分辨率：τ 列表 / N 或 n_cells 列表 / K 列表"),
    "study.reference": (_auto_or(parse_float), AUTO, "参考分辨率：τ_ref / N_ref / K_ref"),
    "study.samples": (_auto_or(parse_int), AUTO, "蒙特卡洛样本数"),
    "study.seed": (parse_int, "0", "主种子"),
    "study.threads": (parse_int, "0", "并行线程数，0 表示机器核数"),
    "study.reference_scheme": (_auto_or(parse_enum(SchemeKind)), AUTO,
                               "参考轨道格式，auto: temporal 取 milstein，其余方向取 scheme.kind"),
    "study.reference_basis": (parse_enum(BasisKind), "spectral", "空间方向研究的参考离散"),
    "study.min_refinement": (parse_int, "4", "参考分辨率的最小加密倍数"),
    "study.exact_reference": (parse_bool, "false", "线性确定性模型使用闭式参考解"),
    "output.dir": (str.strip, "./mspde_output", "输出目录"),
    "output.json": (parse_bool, "true", "写出 report.json"),
    "output.csv": (parse_bool, "true", "写出 report.csv 与 raw_errors.csv"),
}

# 各方向的默认分辨率
AXIS_DEFAULTS = {
    ("temporal", "spectral"): ([2.0 ** -k for k in range(4, 9)], 2.0 ** -11),
    ("temporal", "fem"): ([2.0 ** -k for k in range(4, 9)], 2.0 ** -11),
    ("spatial", "spectral"): ([4.0, 8.0, 16.0, 32.0], 128.0),
    ("spatial", "fem"): ([8.0, 16.0, 32.0, 64.0], 256.0),
    ("truncation", "spectral"): ([4.0, 8.0, 16.0, 32.0], 64.0),
    ("truncation", "fem"): ([4.0, 8.0, 16.0, 32.0], 64.0),
}


def format_value(value: Any) -> str:
    """写回配置文件的文本形式，浮点数用 repr 保证往返一致"""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(v) for v in value)
    return str(value)


def _integral_steps(T: float, tau: float, key: str) -> int:
    steps = T / tau
    M = int(round(steps))
    if M < 1 or abs(steps - M) > 1e-9 * max(1.0, steps):
        raise ConfigError(key, f"T/τ = {steps:.12g} 必须为正整数 (T = {T}, τ = {tau})")
    return M


@dataclass
class RunConfig:
    """
    经过完整验证、默认值已填充的运行配置

    属性:
        values: 键 -> 类型化的值（auto 已解析为具体值）
    """
    values: Dict[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def axis(self) -> StudyAxis:
        return StudyAxis(self["study.axis"])

    @property
    def output_dir(self) -> Path:
        return Path(self["output.dir"])

    def to_text(self) -> str:
        """生效配置（含默认值）的文本形式"""
        lines = ["# mspde 生效配置（含默认值）"]
        section = None
        for key in CONFIG_SCHEMA:
            prefix = key.split(".")[0]
            if prefix != section:
                lines.append("")
                lines.append(f"# [{prefix}]")
                section = prefix
            lines.append(f"{key} = {format_value(self.values[key])}")
        return "\n".join(lines) + "\n"

    # ------------------------------------------------------------------
    # 构造库对象
    # ------------------------------------------------------------------

    def drift(self, strict: bool = True) -> DriftSpec:
        kind = DriftKind(self["model.drift.kind"])
        if kind == DriftKind.CUBIC_ALLEN_CAHN:
            return DriftSpec.cubic_allen_cahn()
        if kind == DriftKind.ODD_POLYNOMIAL:
            return DriftSpec.odd_polynomial(self["model.drift.coeffs"], strict=strict)
        if kind == DriftKind.LINEAR:
            return DriftSpec.linear(self["model.drift.c"])
        return DriftSpec.zero()

    def diffusion(self) -> DiffusionSpec:
        kind = DiffusionKind(self["model.diffusion.kind"])
        sigma = self["model.diffusion.sigma"]
        if kind == DiffusionKind.NONE:
            return DiffusionSpec.none()
        if kind == DiffusionKind.ADDITIVE:
            return DiffusionSpec.additive_noise(sigma)
        if kind == DiffusionKind.LINEAR:
            return DiffusionSpec.linear(sigma)
        if kind == DiffusionKind.SINE:
            return DiffusionSpec.sine(sigma)
        raise ConfigError("model.diffusion.kind", "nemytskii 需要用户函数，仅能通过 API 构造")

    def model(self, strict: bool = True) -> ModelSpec:
        return ModelSpec(
            drift=self.drift(strict=strict),
            diffusion=self.diffusion(),
            noise=QWienerSpec.power_law(self["model.noise.K"], self["model.noise.beta"]),
            u0=initial_datum(InitialDatum(self["model.u0"])),
            T=self["model.T"],
        )

    def newton(self) -> NewtonConfig:
        return NewtonConfig(
            tol_residual=self["newton.tol"],
            max_iter=self["newton.max_iter"],
            damping=self["newton.damping"],
        )

    def steps(self) -> int:
        return _integral_steps(self["model.T"], self["scheme.tau"], "scheme.tau")

    def scheme_config(self) -> SchemeConfig:
        """非时间方向研究所用的基础格式配置"""
        return SchemeConfig(
            scheme=SchemeKind(self["scheme.kind"]),
            basis=make_basis(BasisKind(self["scheme.basis"]), self["scheme.N"], self.drift().growth),
            tau=self["scheme.tau"],
            M=self.steps(),
            newton=self.newton(),
        )

    def plan(self, verbose: bool = True, notifier=None) -> StudyPlan:
        axis = self.axis
        if axis == StudyAxis.TEMPORAL:
            T = self["model.T"]
            resolutions = [_integral_steps(T, tau, "study.resolutions") for tau in self["study.resolutions"]]
            reference = _integral_steps(T, self["study.reference"], "study.reference")
        else:
            resolutions = [int(r) for r in self["study.resolutions"]]
            reference = int(self["study.reference"])
        threads = self["study.threads"]
        try:
            return StudyPlan(
                axis=axis,
                resolutions=resolutions,
                reference=reference,
                model=self.model(),
                scheme=SchemeKind(self["scheme.kind"]),
                basis=BasisKind(self["scheme.basis"]),
                space=self["scheme.N"],
                steps=self.steps(),
                samples=self["study.samples"],
                master_seed=self["study.seed"],
                reference_scheme=SchemeKind(self["study.reference_scheme"]),
                reference_basis=BasisKind(self["study.reference_basis"]),
                newton=self.newton(),
                threads=threads if threads > 0 else None,
                min_refinement=self["study.min_refinement"],
                exact_reference=self["study.exact_reference"],
                verbose=verbose,
                notifier=notifier,
            )
        except ConfigError:
            raise
        except ValidationError as e:
            raise ConfigError("study", str(e))


class ConfigManager:
    """配置管理器：默认值 < 配置文件 < 覆盖项"""

    def __init__(self, config_file: Optional[str] = None):
        """
        初始化配置管理器

        Args:
            config_file: 配置文件路径，None 时只使用默认值
        """
        self.config_file = Path(config_file) if config_file else None
        self.raw: Dict[str, str] = {key: default for key, (_, default, _) in CONFIG_SCHEMA.items()}
        if self.config_file is not None:
            self.load_config()

    @staticmethod
    def parse_text(text: str, source: str = "<text>") -> Dict[str, str]:
        """解析 key = value 文本，返回原始字符串映射"""
        entries = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{source}:{lineno}", f"缺少 '=': {line.strip()}")
            key, value = (part.strip() for part in stripped.split("=", 1))
            entries[key] = value
        return entries

    def load_config(self) -> Dict[str, str]:
        """读取配置文件；读取失败抛出 OSError"""
        text = self.config_file.read_text(encoding="utf-8")
        entries = self.parse_text(text, str(self.config_file))
        for key, value in entries.items():
            self.set(key, value)
        return entries

    def set(self, key: str, value: str):
        """设置原始值（未知键立即报错）"""
        key = key.strip()
        if key not in CONFIG_SCHEMA:
            raise ConfigError(key, "未知配置键")
        self.raw[key] = str(value).strip()

    def apply_overrides(self, overrides: Iterable[str]):
        """应用 KEY=VALUE 形式的覆盖项"""
        for item in overrides:
            if "=" not in item:
                raise ConfigError(item, "覆盖项必须为 KEY=VALUE 形式")
            key, value = item.split("=", 1)
            self.set(key, value)

    def get(self, key: str) -> str:
        if key not in CONFIG_SCHEMA:
            raise ConfigError(key, "未知配置键")
        return self.raw[key]

    def build(self, strict: bool = True) -> RunConfig:
        """
        类型解析、默认值解析与约束检查

        Args:
            strict: False 时允许非单调漂移（供 check-model 报告），并跳过步长限制检查

        Returns:
            RunConfig
        """
        values = {}
        for key, (parser, _, _) in CONFIG_SCHEMA.items():
            try:
                values[key] = parser(self.raw[key])
            except ValueError as e:
                raise ConfigError(key, f"类型不符: {e}")

        axis = values["study.axis"]
        default_res, default_ref = AXIS_DEFAULTS[(axis, values["scheme.basis"])]
        if values["study.resolutions"] == AUTO:
            values["study.resolutions"] = list(default_res)
        if values["study.reference"] == AUTO:
            values["study.reference"] = default_ref
        if values["study.samples"] == AUTO:
            values["study.samples"] = DEFAULT_SAMPLES[axis]
        if values["study.reference_scheme"] == AUTO:
            values["study.reference_scheme"] = "milstein" if axis == "temporal" else values["scheme.kind"]

        config = RunConfig(values)
        self._validate(config, strict)
        return config

    @staticmethod
    def _validate(config: RunConfig, strict: bool):
        v = config.values
        checks = [
            ("model.T", v["model.T"] > 0, "必须为正数"),
            ("model.noise.K", v["model.noise.K"] >= 1, "必须 ≥ 1"),
            ("model.noise.beta", v["model.noise.beta"] > 3, "必须 > 3"),
            ("scheme.N", v["scheme.N"] >= (2 if v["scheme.basis"] == "fem" else 1),
             "谱模数 ≥ 1，有限元单元数 ≥ 2"),
            ("scheme.tau", 0 < v["scheme.tau"] < 1, "必须在 (0, 1) 内"),
            ("study.samples", v["study.samples"] >= 1, "必须 ≥ 1"),
            ("study.seed", v["study.seed"] >= 0, "必须为非负整数"),
            ("study.threads", v["study.threads"] >= 0, "必须 ≥ 0"),
            ("study.min_refinement", v["study.min_refinement"] >= 1, "必须 ≥ 1"),
        ]
        for key, ok, constraint in checks:
            if not ok:
                raise ConfigError(key, f"{constraint}，当前值 {format_value(v[key])}")
        if v["study.axis"] != "temporal":
            for key in ("study.resolutions", "study.reference"):
                items = v[key] if isinstance(v[key], list) else [v[key]]
                if any(r != int(r) or r < 1 for r in items):
                    raise ConfigError(key, "空间与截断方向的分辨率必须为正整数")

        try:
            config.newton()
            drift = config.drift(strict=strict)
            config.diffusion()
            QWienerSpec.power_law(v["model.noise.K"], v["model.noise.beta"])
        except ConfigError:
            raise
        except ValidationError as e:
            raise ConfigError("model", str(e))
        if not strict:
            return

        config.scheme_config().check_step_restriction(drift.one_sided)
        plan = config.plan(verbose=False)
        try:
            for r in plan.resolutions:
                plan.tested_config(r).check_step_restriction(drift.one_sided)
        except ConfigError as e:
            raise ConfigError("study.resolutions", e.constraint)
        try:
            plan.reference_config().check_step_restriction(drift.one_sided)
        except ConfigError as e:
            raise ConfigError("study.reference", e.constraint)


def parse_config(path: Optional[str] = None, overrides: Iterable[str] = (), strict: bool = True) -> RunConfig:
    """
    解析配置文件与覆盖项

    Args:
        path: 配置文件路径（可选）
        overrides: KEY=VALUE 覆盖项
        strict: 见 ConfigManager.build

    Returns:
        RunConfig
    """
    manager = ConfigManager(path)
    manager.apply_overrides(overrides)
    return manager.build(strict=strict)

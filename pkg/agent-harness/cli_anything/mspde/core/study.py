"""
MSPDE CLI 核心模块 - 研究编排
"""

import json
from pathlib import Path
from typing import Callable, Optional, Tuple

from mspde import (
    AssumptionReport,
    ErrorReport,
    NotificationManager,
    StudyAxis,
    check_assumptions,
    dump_tree,
    sample_tree,
    strong_error_study,
    truncation_study,
)
from mspde.exceptions import ConfigError

from .config import RunConfig
from .export import ExportManager


class StudyRunner:
    """研究运行器"""

    def __init__(self, config: RunConfig, verbose: bool = True,
                 notifier: Optional[NotificationManager] = None):
        """
        初始化研究运行器

        Args:
            config: 已验证的运行配置
            verbose: 是否显示详细日志
            notifier: 进度通知管理器
        """
        self.config = config
        self.verbose = verbose
        self.notifier = notifier

    def describe(self) -> str:
        """解析后的研究计划（--dry-run 输出）"""
        plan = self.config.plan(verbose=False)
        return json.dumps(plan.describe(), ensure_ascii=False, indent=2)

    def prepare_output(self) -> Path:
        """创建输出目录，失败时抛出 OSError"""
        out_dir = self.config.output_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        marker = out_dir / ".mspde_write_test"
        marker.write_text("", encoding="utf-8")
        marker.unlink()
        return out_dir

    def run(self) -> ErrorReport:
        """运行配置所描述的研究（截断方向走 truncation_study）"""
        plan = self.config.plan(verbose=self.verbose, notifier=self.notifier)
        if plan.axis == StudyAxis.TRUNCATION:
            return truncation_study(plan)
        return strong_error_study(plan)

    def run_and_export(self) -> Tuple[ErrorReport, bool]:
        """
        运行研究并写出全部产物

        Returns:
            (ErrorReport, 是否全部写出成功)
        """
        out_dir = self.prepare_output()
        report = self.run()
        exporter = ExportManager(verbose=self.verbose)
        ok = exporter.export_report(
            report,
            out_dir,
            self.config.to_text(),
            write_json=self.config["output.json"],
            write_csv=self.config["output.csv"],
        )
        return report, ok

    def check_model(self, sink: Optional[Callable[[str], None]] = None) -> AssumptionReport:
        """对配置中的模型运行假设检查"""
        model = self.config.model(strict=False)
        return check_assumptions(model.drift, model.diffusion, sink=sink)

    def dump_noise(self, sample_id: int, path: str) -> Path:
        """
        导出某个样本的噪声树（调试用）

        Args:
            sample_id: 样本编号
            path: 输出文件路径

        Returns:
            写出的文件路径
        """
        if sample_id < 0:
            raise ConfigError("--sample-id", "必须为非负整数")
        plan = self.config.plan(verbose=False)
        finest_M, levels = plan.tree_layout()
        tree = sample_tree(plan.reference_model().noise, finest_M, levels,
                           plan.master_seed, sample_id, T=plan.model.T)
        written = dump_tree(tree, path)
        if self.verbose:
            print(f"💾 噪声树已写出: {written} (K={tree.K}, 层数={len(tree.levels)}, 最细步数={finest_M})")
        return written


def check_order(report: ErrorReport, expected: float, tolerance: float) -> Tuple[bool, str]:
    """
    检查拟合斜率是否落在 expected ± tolerance 内

    Returns:
        (是否通过, 说明)
    """
    if report.fit is None:
        return False, "没有可用的拟合斜率（误差含 0 或点数不足 3）"
    slope = report.fit.slope
    ok = abs(slope - expected) <= tolerance
    relation = "∈" if ok else "∉"
    return ok, f"拟合斜率 {slope:.4f} {relation} [{expected - tolerance:.4f}, {expected + tolerance:.4f}]"

"""
MSPDE CLI 核心模块 - 输出处理
"""

import csv
import json
from pathlib import Path
from typing import Any, Dict, List

from mspde import ErrorReport


class ExportManager:
    """输出管理器"""

    def __init__(self, verbose: bool = True):
        """
        初始化输出管理器

        Args:
            verbose: 是否打印导出结果
        """
        self.verbose = verbose

    def _log(self, message: str):
        if self.verbose:
            print(message)

    def export_json(self, data: Any, output_path: str, indent: int = 2) -> bool:
        """
        导出为JSON格式

        Args:
            data: 要导出的数据
            output_path: 输出文件路径
            indent: JSON缩进

        Returns:
            是否导出成功
        """
        try:
            with open(output_path, 'w', encoding='utf-8') as f:
                json.dump(data, f, ensure_ascii=False, indent=indent)
            self._log(f"✅ JSON数据已导出到: {output_path}")
            return True
        except (OSError, TypeError, ValueError) as e:
            print(f"❌ JSON导出失败: {str(e)}")
            return False

    def export_csv(self, data: List[Dict[str, Any]], output_path: str, headers: List[str]) -> bool:
        """
        导出为CSV格式

        Args:
            data: 要导出的数据列表
            output_path: 输出文件路径
            headers: CSV列标题

        Returns:
            是否导出成功
        """
        try:
            with open(output_path, 'w', newline='', encoding='utf-8') as f:
                writer = csv.DictWriter(f, fieldnames=headers)
                writer.writeheader()
                for row in data:
                    writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})

            self._log(f"✅ CSV数据已导出到: {output_path}")
            return True
        except OSError as e:
            print(f"❌ CSV导出失败: {str(e)}")
            return False

    def export_text(self, data: str, output_path: str) -> bool:
        """
        导出为文本格式

        Args:
            data: 要导出的文本
            output_path: 输出文件路径

        Returns:
            是否导出成功
        """
        try:
            with open(output_path, 'w', encoding='utf-8') as f:
                f.write(data)
            self._log(f"✅ 文本数据已导出到: {output_path}")
            return True
        except OSError as e:
            print(f"❌ 文本导出失败: {str(e)}")
            return False

    def format_table(self, rows: List[Dict[str, Any]]) -> str:
        """
        将字典列表格式化为对齐的文本表格

        Args:
            rows: 各行数据，列标题取第一行的键

        Returns:
            表格字符串，无数据时为空串
        """
        if not rows:
            return ""
        headers = list(rows[0].keys())
        cells = [[_cell(row.get(h, "")) for h in headers] for row in rows]
        widths = [max(len(h), *(len(row[i]) for row in cells)) for i, h in enumerate(headers)]
        header_line = " | ".join(h.ljust(w) for h, w in zip(headers, widths))
        lines = [header_line, "-" * len(header_line)]
        lines.extend(" | ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells)
        return "\n".join(lines)

    def summary(self, report: ErrorReport) -> str:
        """人类可读的研究摘要（含拟合斜率与理论阶对比）"""
        lines = [
            f"📊 {report.axis.value} 收敛性研究: {report.label}",
            f"   参考轨道: {report.provenance.get('reference_label', '?')}",
            f"   样本数: {len(report.raw)}（失败 {len(report.failures)}）",
            f"   主种子: {report.provenance.get('master_seed')}",
            f"   配置哈希: {report.provenance.get('config_hash')}",
            "",
            self.format_table(report.csv_rows()),
            "",
        ]
        if report.fit is not None:
            lines.append(f"拟合斜率: {report.fit.slope:.4f}  截距: {report.fit.intercept:.4f}  R²: {report.fit.r2:.4f}")
        else:
            lines.append("拟合斜率: 无（误差含 0 或点数不足 3）")
        if report.expected_slope is not None:
            lines.append(f"理论收敛阶 (γ = 1): {report.expected_slope}")
        if report.details:
            lines.append(f"附加信息: {json.dumps(report.details, ensure_ascii=False)}")
        return "\n".join(lines) + "\n"

    def export_report(self, report: ErrorReport, out_dir: Path, config_text: str,
                      write_json: bool = True, write_csv: bool = True) -> bool:
        """
        写出全部研究产物：report.json、report.csv、raw_errors.csv、summary.txt、config.effective.txt

        Returns:
            全部写出成功时为 True
        """
        out_dir = Path(out_dir)
        ok = self.export_text(config_text, str(out_dir / "config.effective.txt"))
        if write_json:
            ok = self.export_json(report.to_dict(), str(out_dir / "report.json")) and ok
        if write_csv:
            ok = self.export_csv(report.csv_rows(), str(out_dir / "report.csv"),
                                 headers=["count", "resolution", "error", "std_error"]) and ok
            ok = self.export_csv(report.raw_rows(), str(out_dir / "raw_errors.csv"),
                                 headers=["sample_id", "count", "resolution", "error"]) and ok
        ok = self.export_text(self.summary(report), str(out_dir / "summary.txt")) and ok
        return ok


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6e}"
    return str(value)

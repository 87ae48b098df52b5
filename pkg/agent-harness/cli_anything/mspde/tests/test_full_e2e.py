import unittest
import tempfile
import json
import os
import sys
from pathlib import Path

from click.testing import CliRunner

# 添加项目根目录到系统路径
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', '..'))

from cli_anything.mspde.core.mspde_cli import cli  # noqa: E402
from mspde import load_tree  # noqa: E402

# 几秒内可以跑完的小研究
TINY_STUDY = [
    "--set", "study.resolutions=2^-3, 2^-4, 2^-5",
    "--set", "study.reference=2^-7",
    "--set", "study.samples=2",
    "--set", "scheme.N=8",
    "--set", "model.noise.K=8",
    "--threads", "1",
    "--quiet",
]


class TestCLICommands(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner()
        self.temp_dir = tempfile.mkdtemp()

    def test_cli_help(self):
        """测试CLI帮助命令"""
        result = self.runner.invoke(cli, ['--help'])
        self.assertEqual(result.exit_code, 0)
        self.assertIn('MSPDE CLI - 单调漂移 SPDE 收敛性研究命令行工具', result.output)
        for command in ('run', 'truncation-study', 'check-model', 'dump-noise'):
            self.assertIn(command, result.output)

    def test_dry_run(self):
        """--dry-run 只打印解析后的计划"""
        result = self.runner.invoke(cli, ['run', '--dry-run', '--set', 'scheme.kind=milstein'])
        self.assertEqual(result.exit_code, 0)
        self.assertIn('解析后的研究计划', result.output)
        self.assertIn('DIEMSG', result.output)
        self.assertIn('"reference": 1024', result.output)

    def test_check_model_default(self):
        """默认模型满足全部假设"""
        result = self.runner.invoke(cli, ['check-model'])
        self.assertEqual(result.exit_code, 0)
        self.assertIn('所有可检查的假设均满足', result.output)

    def test_check_model_non_monotone(self):
        """首项系数为正的漂移报告未满足"""
        result = self.runner.invoke(cli, ['check-model', '--set', 'model.drift.kind=odd_polynomial',
                                          '--set', 'model.drift.coeffs=0, 1, 0, 1'])
        self.assertEqual(result.exit_code, 0)
        self.assertIn('存在未满足的假设', result.output)

    def test_config_error_exit_code(self):
        """配置错误退出码 2"""
        result = self.runner.invoke(cli, ['run', '--set', 'scheme.tau=0.5'])
        self.assertEqual(result.exit_code, 2)
        self.assertIn('scheme.tau', result.output)

        result = self.runner.invoke(cli, ['run', '--set', 'no.such.key=1'])
        self.assertEqual(result.exit_code, 2)

    def test_missing_config_file(self):
        """配置文件不存在退出码 5"""
        result = self.runner.invoke(cli, ['run', '--config', os.path.join(self.temp_dir, 'absent.conf')])
        self.assertEqual(result.exit_code, 5)


class TestFullWorkflow(unittest.TestCase):
    """完整的端到端工作流测试"""

    def setUp(self):
        self.runner = CliRunner()
        self.temp_dir = tempfile.mkdtemp()
        self.out_dir = os.path.join(self.temp_dir, 'out')

    def test_run_writes_artifacts(self):
        """小规模时间方向研究写出全部产物"""
        result = self.runner.invoke(cli, ['run', '--out', self.out_dir, '--seed', '7'] + TINY_STUDY)
        self.assertEqual(result.exit_code, 0, result.output)
        out = Path(self.out_dir)
        for name in ("report.json", "report.csv", "raw_errors.csv", "summary.txt", "config.effective.txt"):
            self.assertTrue((out / name).exists(), name)

        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        self.assertEqual(report["counts"], [4, 8, 16])
        self.assertEqual(report["provenance"]["master_seed"], 7)
        self.assertIsNotNone(report["fit"])
        effective = (out / "config.effective.txt").read_text(encoding="utf-8")
        self.assertIn("study.seed = 7", effective)

    def test_run_is_reproducible(self):
        """相同种子两次运行 report.csv 逐字节一致"""
        first = os.path.join(self.temp_dir, 'first')
        second = os.path.join(self.temp_dir, 'second')
        self.assertEqual(self.runner.invoke(cli, ['run', '--out', first] + TINY_STUDY).exit_code, 0)
        self.assertEqual(self.runner.invoke(cli, ['run', '--out', second] + TINY_STUDY).exit_code, 0)
        self.assertEqual(Path(first, 'report.csv').read_bytes(), Path(second, 'report.csv').read_bytes())

    def test_assert_order(self):
        """收敛阶断言：通过退出码 0，失败退出码 4"""
        passed = self.runner.invoke(cli, ['run', '--out', self.out_dir, '--assert-order', '0.5±100'] + TINY_STUDY)
        self.assertEqual(passed.exit_code, 0, passed.output)
        self.assertIn('收敛阶断言通过', passed.output)

        failed = self.runner.invoke(cli, ['run', '--out', self.out_dir, '--assert-order', '50+-0.01'] + TINY_STUDY)
        self.assertEqual(failed.exit_code, 4)

    def test_unwritable_output(self):
        """输出目录不可写退出码 5"""
        blocker = Path(self.temp_dir) / 'blocker'
        blocker.write_text('', encoding='utf-8')
        result = self.runner.invoke(cli, ['run', '--out', str(blocker / 'out')] + TINY_STUDY)
        self.assertEqual(result.exit_code, 5)

    def test_truncation_study(self):
        """截断研究：K = K_ref 处误差为 0"""
        result = self.runner.invoke(cli, ['truncation-study', '--out', self.out_dir,
                                          '--set', 'study.resolutions=2, 4, 8',
                                          '--set', 'study.reference=8',
                                          '--set', 'study.samples=2',
                                          '--set', 'scheme.N=8',
                                          '--set', 'scheme.tau=2^-4',
                                          '--quiet'])
        self.assertEqual(result.exit_code, 0, result.output)
        report = json.loads(Path(self.out_dir, 'report.json').read_text(encoding='utf-8'))
        self.assertEqual(report["errors"][-1], 0.0)
        self.assertIn("tails", report["details"])

    def test_dump_noise(self):
        """导出的噪声树可以读回"""
        path = os.path.join(self.temp_dir, 'tree.bin')
        result = self.runner.invoke(cli, ['dump-noise', '--sample-id', '3', '-f', path] + TINY_STUDY)
        self.assertEqual(result.exit_code, 0, result.output)
        tree = load_tree(path)
        self.assertEqual(tree.sample_id, 3)
        self.assertEqual(tree.K, 8)
        self.assertEqual([M for M, _ in tree.levels], [4, 8, 16, 32, 64])


if __name__ == '__main__':
    # 运行所有测试
    unittest.main()

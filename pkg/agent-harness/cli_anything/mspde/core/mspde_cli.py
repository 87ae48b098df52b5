"""
MSPDE CLI - 单调漂移 SPDE 收敛性研究命令行工具

此模块实现了MSPDE库的命令行接口，支持收敛性研究、模型假设检查、噪声截断研究与噪声树导出。

退出码：
    0 成功
    2 配置错误
    3 求解器/数值/研究错误
    4 收敛阶断言失败
    5 I/O 错误
"""

import functools
import os
import sys

import click

# 添加项目根目录到系统路径
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', '..'))

from cli_anything.mspde.utils import ensure_mspde_available, parse_assert_order  # noqa: E402

ensure_mspde_available()

from mspde import __version__  # noqa: E402
from mspde.exceptions import (  # noqa: E402
    ConfigError,
    NoiseFormatError,
    NumericError,
    SolverError,
    StudyError,
    ValidationError,
)
from cli_anything.mspde.core.config import parse_config  # noqa: E402
from cli_anything.mspde.core.study import StudyRunner, check_order  # noqa: E402

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_ASSERT = 4
EXIT_IO = 5


def _fail(message: str, code: int):
    click.echo(message, err=True)
    sys.exit(code)


def config_options(func):
    """各子命令共用的配置选项"""
    @click.option('--config', '-c', 'config_path', type=click.Path(dir_okay=False), help='配置文件路径 (key = value)')
    @click.option('--set', '-s', 'overrides', multiple=True, metavar='KEY=VALUE', help='覆盖配置项，可重复')
    @click.option('--out', '-o', 'out_dir', help='输出目录（覆盖 output.dir）')
    @click.option('--seed', type=click.IntRange(min=0), help='主种子（覆盖 study.seed）')
    @click.option('--threads', type=click.IntRange(min=0), help='并行线程数，0 为机器核数（覆盖 study.threads）')
    @click.option('--verbose/--quiet', default=True, help='是否显示详细日志')
    @functools.wraps(func)
    def wrapper(config_path, overrides, out_dir, seed, threads, **kwargs):
        overrides = list(overrides)
        if out_dir is not None:
            overrides.append(f"output.dir={out_dir}")
        if seed is not None:
            overrides.append(f"study.seed={seed}")
        if threads is not None:
            overrides.append(f"study.threads={threads}")
        return func(config_path=config_path, overrides=overrides, **kwargs)
    return wrapper


def _load(config_path, overrides, strict: bool = True):
    try:
        return parse_config(config_path, overrides, strict=strict)
    except ConfigError as e:
        _fail(f"❌ 配置错误: {e.key}: {e.constraint}", EXIT_CONFIG)
    except ValidationError as e:
        _fail(f"❌ 配置错误: {e}", EXIT_CONFIG)
    except OSError as e:
        _fail(f"❌ 无法读取配置文件: {e}", EXIT_IO)


def _run_study(config, verbose: bool, assert_order, dry_run: bool):
    runner = StudyRunner(config, verbose=verbose)
    if dry_run:
        click.echo("📝 解析后的研究计划（--dry-run，不执行计算）:")
        click.echo(runner.describe())
        return

    try:
        report, exported = runner.run_and_export()
    except ConfigError as e:
        _fail(f"❌ 配置错误: {e.key}: {e.constraint}", EXIT_CONFIG)
    except (SolverError, NumericError, StudyError) as e:
        _fail(f"❌ 研究失败: {e}", EXIT_SOLVER)
    except ValidationError as e:
        _fail(f"❌ 配置错误: {e}", EXIT_CONFIG)
    except OSError as e:
        _fail(f"❌ 输出目录不可写: {e}", EXIT_IO)

    if not exported:
        _fail(f"❌ 研究产物写出失败: {config.output_dir}", EXIT_IO)

    if report.fit is not None:
        click.echo(f"📈 拟合斜率 {report.fit.slope:.4f}（理论 {report.expected_slope}），R² = {report.fit.r2:.4f}")
    click.echo(f"💾 结果已写入: {config.output_dir}")

    if assert_order is not None:
        ok, message = check_order(report, *assert_order)
        if not ok:
            _fail(f"❌ 收敛阶断言失败: {message}", EXIT_ASSERT)
        click.echo(f"✅ 收敛阶断言通过: {message}")


def _parse_order(ctx, param, value):
    if value is None:
        return None
    try:
        return parse_assert_order(value)
    except ValueError as e:
        raise click.BadParameter(str(e))


@click.group()
@click.version_option(version=__version__)
def cli():
    """MSPDE CLI - 单调漂移 SPDE 收敛性研究命令行工具"""
    pass


@cli.command()
@config_options
@click.option('--assert-order', callback=_parse_order, help='断言拟合斜率落在 EXPECTED±TOL 内，否则退出码 4')
@click.option('--dry-run', is_flag=True, help='只打印解析后的研究计划，不执行')
def run(config_path, overrides, verbose, assert_order, dry_run):
    """运行强收敛性研究"""
    config = _load(config_path, overrides)
    _run_study(config, verbose, assert_order, dry_run)


@cli.command('truncation-study')
@config_options
@click.option('--assert-order', callback=_parse_order, help='断言拟合斜率落在 EXPECTED±TOL 内，否则退出码 4')
@click.option('--dry-run', is_flag=True, help='只打印解析后的研究计划，不执行')
def truncation_study(config_path, overrides, verbose, assert_order, dry_run):
    """运行噪声截断研究（study.axis 固定为 truncation）"""
    config = _load(config_path, list(overrides) + ["study.axis=truncation"])
    _run_study(config, verbose, assert_order, dry_run)


@cli.command('check-model')
@config_options
def check_model(config_path, overrides, verbose):
    """检查模型是否满足假设 1–5"""
    config = _load(config_path, overrides, strict=False)
    try:
        report = StudyRunner(config, verbose=verbose).check_model(sink=click.echo)
    except (ConfigError, ValidationError) as e:
        _fail(f"❌ 配置错误: {e}", EXIT_CONFIG)
    if report.passed:
        click.echo("✅ 所有可检查的假设均满足")
    else:
        click.echo("❌ 存在未满足的假设")


@cli.command('dump-noise')
@config_options
@click.option('--sample-id', default=0, type=int, help='样本编号')
@click.option('--output', '-f', 'output_file', required=True, type=click.Path(dir_okay=False), help='噪声树输出文件')
def dump_noise(config_path, overrides, verbose, sample_id, output_file):
    """导出一个样本的噪声树（调试用）"""
    config = _load(config_path, overrides)
    try:
        StudyRunner(config, verbose=verbose).dump_noise(sample_id, output_file)
    except ConfigError as e:
        _fail(f"❌ 配置错误: {e.key}: {e.constraint}", EXIT_CONFIG)
    except (OSError, NoiseFormatError) as e:
        _fail(f"❌ 噪声树写出失败: {e}", EXIT_IO)
    click.echo(f"✅ 噪声树已导出: {output_file}")


if __name__ == '__main__':
    cli()

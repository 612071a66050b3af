#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
各向异性剖分有限元实验室命令行入口

使用方式：
    python start_anisofem.py run --table 2              # 复现表 2，写出 results/table2.csv
    python start_anisofem.py run --fig 4                # 复现图 4 并写出作图系列
    python start_anisofem.py run --custom my.json       # 自定义实验（JSON 与 ExperimentConfig 字段一一对应）
    python start_anisofem.py verify                     # 运行校验套件
    python start_anisofem.py stencil --pattern C3 --N 8 --eps 0.01
    python start_anisofem.py metric --mesh HessianUniform --theta 1e-3 --N 64 --M 16
"""

import argparse
import sys

from app import cmd_metric, cmd_run, cmd_stencil, cmd_verify, config, log
from experiments import FIGURE_IDS
from logger_config import setup_logging
from mesh1d import MeshKind
from triangulation import PATTERN_NAMES
from verification import CHECK_IDS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='各向异性剖分有限元最大模收敛实验室',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  python start_anisofem.py run --table 2 --threads 4
  python start_anisofem.py run --table 2 --eps-sweep    # ε ≤ 2^-16 列展开为 k=16..24
  python start_anisofem.py verify --quick
  python start_anisofem.py verify --tolerance-scale 0   # 容差收紧为 0，预期失败
  python start_anisofem.py stencil --pattern B --N 8 --eps 0.01 --quadrature consistent
        """
    )
    parser.add_argument('--log-level', type=str, default=None,
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help=f'日志级别 (默认: {config.log.level}，环境变量 LOG_LEVEL)')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='运行表格/图预设或自定义实验')
    target = run.add_mutually_exclusive_group(required=True)
    target.add_argument('--table', type=int, choices=range(1, 10), help='表格编号 1..9')
    target.add_argument('--fig', type=int, choices=[int(f[3:]) for f in FIGURE_IDS], help='图编号')
    target.add_argument('--custom', type=str, help='自定义实验 JSON 文件')
    run.add_argument('--output-dir', type=str, default=None,
                     help=f'输出目录 (默认: {config.experiment.output_dir})')
    run.add_argument('--threads', type=int, default=None,
                     help=f'并发单元数 (默认: {config.experiment.threads}，环境变量 ANISOFEM_THREADS)')
    run.add_argument('--eps-sweep', action='store_true', help='把 ε=2^-16 展开为 ε=2^-k, k=16..24')
    run.set_defaults(handler=cmd_run)

    verify = sub.add_parser('verify', help='运行校验套件')
    verify.add_argument('--tolerance-scale', type=float, default=None,
                        help=f'容差系数 (默认: {config.verify.tolerance_scale})')
    verify.add_argument('--quick', action='store_true', help='跳过耗时的下界探针')
    verify.add_argument('--check', action='append', choices=CHECK_IDS, help='只运行指定校验项，可重复')
    verify.add_argument('--mutate', action='append', choices=PATTERN_NAMES,
                        help='负对照：把该剖分模式替换为全部 Slash')
    verify.set_defaults(handler=cmd_verify)

    stencil = sub.add_parser('stencil', help='提取条带上一行有限差分模板')
    stencil.add_argument('--pattern', type=str, required=True, choices=['A', 'B', 'C', 'C3', 'CHECKER'])
    stencil.add_argument('--N', type=int, required=True, help='N₀，条带 x 方向 2N₀ 个区间')
    stencil.add_argument('--eps', type=float, required=True)
    stencil.add_argument('--k0', type=int, default=None, help='C3 翻转列 (默认: N₀)')
    stencil.add_argument('--quadrature', type=str, default='lumped', help='lumped 或 consistent')
    stencil.add_argument('--rows', type=int, default=None, help='条带单元行数 (默认: B 为 4，其余为 2)')
    stencil.add_argument('--row', type=int, default=None, help='节点行 (默认: 中间行)')
    stencil.add_argument('--column', type=int, default=None, help='节点列 (默认: N₀)')
    stencil.set_defaults(handler=cmd_stencil)

    metric = sub.add_parser('metric', help='Hessian 度量下的拟一致性审计')
    metric.add_argument('--mesh', type=str, required=True, choices=[k.value for k in MeshKind])
    metric.add_argument('--theta', type=float, required=True)
    metric.add_argument('--N', type=int, default=64)
    metric.add_argument('--M', type=int, default=None, help='y 方向区间数 (默认: N/4)')
    metric.add_argument('--eps', type=float, default=2.0 ** -8)
    metric.add_argument('--pattern', type=str, default='A')
    metric.add_argument('--variant', type=str, default='AddThetaIdentity',
                        choices=['AddThetaIdentity', 'ClampEigenvalues'])
    metric.set_defaults(handler=cmd_metric)
    return parser


def main(argv=None) -> int:
    """主函数"""
    args = build_parser().parse_args(argv)
    try:
        config.validate_config()
    except ValueError as e:
        log.error(f"配置错误: {str(e)}")
        return 2
    if args.log_level:
        setup_logging(args.log_level)
    log.info(f"命令: {args.command}")
    try:
        return args.handler(args)
    except KeyboardInterrupt:
        log.info("收到停止信号，已中断")
        return 130


if __name__ == '__main__':
    sys.exit(main())

# -*- coding: utf-8 -*-
"""
命令处理

每个子命令一个处理函数，接收 argparse 解析结果，返回进程退出码。
"""
from functools import wraps

from analysis import (HessianMetric, MetricVariant, extract_stencil,
                      format_stencil, layer_hessian, layer_hessian_1d,
                      metric_edge_ratio, sqrt_hessian, sqrt_hessian_1d,
                      strip_space)
from assembly import Quadrature, assemble_system, reaction_diffusion
from config import get_config
from experiments import (ExperimentConfig, ExperimentError, build_x_mesh,
                         run_custom, run_table)
from logger_config import setup_logging
from mesh1d import MeshKind, metric_cell_lengths_1d, quasi_uniformity_ratio, uniform_mesh
from solver import SolverError
from triangulation import PatternSpec, build_triangulation
from verification import all_slash, verify_suite

# 获取配置
config = get_config()

# 初始化日志
log = setup_logging()


def handle_exceptions(f):
    """命令异常统一记录并转为非零退出码：参数错误 2，求解/实验失败 1"""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ValueError as e:
            log.error(f"参数错误 [{f.__name__}]: {str(e)}", exc_info=True)
            return 2
        except (ExperimentError, SolverError) as e:
            log.error(f"求解失败 [{f.__name__}]: {str(e)}", exc_info=True)
            return 1
        except Exception as e:
            log.error(f"命令异常 [{f.__name__}]: {str(e)}", exc_info=True)
            return 1

    return decorated_function


@handle_exceptions
def cmd_run(args) -> int:
    """run --table / --fig / --custom"""
    if args.custom:
        experiment = ExperimentConfig.from_json(args.custom)
        path = run_custom(experiment, args.output_dir, args.threads)
    elif args.fig:
        path = run_table(f"fig{args.fig}", args.output_dir, eps_sweep=args.eps_sweep, threads=args.threads)
    else:
        path = run_table(args.table, args.output_dir, eps_sweep=args.eps_sweep, threads=args.threads)
    print(path)
    return 0


def cmd_verify(args) -> int:
    """verify：失败以报告形式给出，从不抛出"""
    overrides = {name: all_slash() for name in (args.mutate or [])}
    report = verify_suite(tolerance_scale=args.tolerance_scale, pattern_overrides=overrides,
                          quick=args.quick, only=args.check)
    print(report.format())
    if not report.passed:
        log.error(f"校验失败: {', '.join(r.check_id for r in report.failures)}")
    return report.exit_code


@handle_exceptions
def cmd_stencil(args) -> int:
    """在 (0,2ε) 条带上提取一行模板并打印"""
    pattern = PatternSpec.parse(args.pattern, args.k0 if args.k0 is not None else
                                (args.N if args.pattern.upper() == 'C3' else None))
    cell_rows = args.rows or (4 if pattern.name == 'B' else 2)
    space = strip_space(args.eps, args.N, pattern, cell_rows=cell_rows)
    system = assemble_system(space, reaction_diffusion(args.eps), Quadrature.parse(args.quadrature))
    tri = space.triangulation
    row = cell_rows // 2 if args.row is None else args.row
    column = args.N if args.column is None else args.column
    print(format_stencil(extract_stencil(system, space, tri.vertex_index(column, row))))
    return 0


@handle_exceptions
def cmd_metric(args) -> int:
    """剖分在 Hessian 度量下的边长比，附一维审计"""
    kind = MeshKind(args.mesh)
    experiment = ExperimentConfig(table='metric', eps=[args.eps], mesh=kind.value, N=[args.N],
                                  m_rule='QuarterN' if args.M is None else f"Fixed({args.M})")
    xmesh = build_x_mesh(experiment, args.N, args.eps)
    ymesh = uniform_mesh(0.0, 1.0, experiment.M(args.N))
    tri = build_triangulation(xmesh, ymesh, PatternSpec.parse(args.pattern))

    if kind == MeshKind.GRADED_POWER:
        hessian, hessian_abs = sqrt_hessian(), sqrt_hessian_1d()
    else:
        hessian, hessian_abs = layer_hessian(args.eps), layer_hessian_1d(args.eps)
    metric = HessianMetric(args.theta, hessian, MetricVariant(args.variant))
    ratio = metric_edge_ratio(tri, metric)
    ratio_1d = quasi_uniformity_ratio(metric_cell_lengths_1d(xmesh, hessian_abs))
    print(f"mesh={kind.value} N={args.N} M={ymesh.n_intervals} eps={args.eps:.6g} theta={args.theta:.6g} "
          f"variant={metric.variant.value}")
    print(f"edge_ratio={ratio:.6e}")
    print(f"ratio_1d={ratio_1d:.6e}")
    return 0

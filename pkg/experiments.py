# -*- coding: utf-8 -*-
"""
实验编排

ExperimentConfig 描述一组 (N, ε) 实验单元；表格/图的预设展开为若干配置块。
每个单元独立地构造网格、剖分、组装、求解并度量最大节点误差，
单元可以并发执行，结果按 (配置块顺序, N 升序, ε 配置顺序) 合并后写出 CSV。
"""
import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from analysis import RateKind, convergence_rate, l2_error, max_nodal_error
from assembly import (ProblemKind, ProblemSpec, Quadrature, anisotropic_diffusion,
                      assemble_system, default_mu, laplace, reaction_diffusion,
                      singular)
from config import get_config
from logger_config import get_logger, log_duration
from mesh1d import (Mesh1D, MeshKind, bakhvalov_mesh, graded_mesh,
                    hessian_uniform_mesh, shishkin_mesh, uniform_mesh)
from solver import NewtonParams, SolverError, damped_newton, solve_spd
from triangulation import PatternSpec, build_triangulation, lagrange_space

log = get_logger(__name__)

CSV_COLUMNS = ['table', 'problem', 'mesh', 'pattern', 'degree', 'quadrature',
               'N', 'M', 'eps', 'error', 'rate', 'rate_kind', 'seconds']

TABLE_IDS = tuple(f"table{k}" for k in range(1, 10))
FIGURE_IDS = ('fig1', 'fig4', 'fig6')

EPS_TABLE = [1.0, 2.0 ** -8, 2.0 ** -16]
EPS_REPRESENTATIVE = 2.0 ** -16
EPS_SWEEP = [2.0 ** -k for k in range(16, 25)]

_FIXED_M = re.compile(r'^Fixed\((\d+)\)$')


class ExperimentError(RuntimeError):
    """实验单元失败，标明出错的 (N, ε)"""

    def __init__(self, message: str, N: int, eps: Optional[float]):
        super().__init__(f"{message} (N={N}, eps={eps})")
        self.N = N
        self.eps = eps


@dataclass
class ExperimentConfig:
    """一组实验单元；JSON 配置与字段一一对应"""
    table: str = 'custom'
    problem: str = ProblemKind.REACTION_DIFFUSION.value
    eps: List[float] = field(default_factory=lambda: [1.0])
    mesh: str = MeshKind.UNIFORM.value
    pattern: str = 'A'
    k0: Optional[int] = None
    degree: int = 1
    quadrature: str = Quadrature.CONSISTENT.value
    N: List[int] = field(default_factory=lambda: [32, 64, 128, 256])
    m_rule: str = 'QuarterN'
    output: Optional[str] = None
    measure_l2: bool = False
    mu_power: int = 2
    initial_guess: str = 'interpolant'

    def __post_init__(self):
        self.validate()

    @property
    def problem_kind(self) -> ProblemKind:
        return ProblemKind(self.problem)

    @property
    def mesh_kind(self) -> MeshKind:
        return MeshKind(self.mesh)

    @property
    def quadrature_kind(self) -> Quadrature:
        return Quadrature.parse(self.quadrature)

    @property
    def pattern_spec(self) -> PatternSpec:
        return PatternSpec.parse(self.pattern, self.k0)

    @property
    def rate_kind(self) -> RateKind:
        return RateKind.SHISHKIN_LOG if self.mesh_kind == MeshKind.SHISHKIN else RateKind.PLAIN

    @property
    def eps_values(self) -> List[Optional[float]]:
        """奇异问题没有 ε，用单个 None 占位"""
        return [None] if self.problem_kind == ProblemKind.SINGULAR else list(self.eps)

    def M(self, N: int) -> int:
        if self.m_rule == 'QuarterN':
            return N // 4
        return int(_FIXED_M.match(self.m_rule).group(1))

    def validate(self) -> None:
        try:
            kind = self.problem_kind
            self.mesh_kind
            quadrature = self.quadrature_kind
            self.pattern_spec
        except ValueError as e:
            raise ValueError(f"实验配置非法: {e}") from e
        if not self.N or any(n < 1 for n in self.N):
            raise ValueError(f"N 列表必须为正整数: {self.N}")
        if self.m_rule == 'QuarterN':
            bad = [n for n in self.N if n % 4 != 0]
            if bad:
                raise ValueError(f"M=N/4 要求 N 能被 4 整除: {bad}")
        elif not _FIXED_M.match(self.m_rule) or int(_FIXED_M.match(self.m_rule).group(1)) < 1:
            raise ValueError(f"未知的 M 规则: {self.m_rule}，可选 QuarterN 或 Fixed(k)")
        if kind != ProblemKind.SINGULAR and (not self.eps or any(e <= 0 for e in self.eps)):
            raise ValueError(f"ε 列表必须为正: {self.eps}")
        if quadrature == Quadrature.LUMPED and self.degree != 1:
            raise ValueError(f"集中质量只用于线性元: degree={self.degree}")
        if kind == ProblemKind.SINGULAR and self.degree != 1:
            raise ValueError(f"奇异问题只用线性元: degree={self.degree}")
        if self.initial_guess not in ('interpolant', 'constant'):
            raise ValueError(f"未知的初始猜测策略: {self.initial_guess}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'ExperimentConfig':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"实验配置包含未知字段: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> 'ExperimentConfig':
        with open(path, 'r', encoding='utf-8') as f:
            return cls.from_dict(json.load(f))


@dataclass
class ExperimentRow:
    """一个 (问题, 网格, 剖分, 阶数, 求积, N, ε) 实验结果"""
    table: str
    problem: str
    mesh: str
    pattern: str
    degree: int
    quadrature: str
    N: int
    M: int
    eps: Optional[float]
    error: float
    rate: Optional[float] = None
    rate_kind: str = RateKind.PLAIN.value
    seconds: Optional[float] = None
    l2_error: Optional[float] = None
    iterations: Optional[int] = None


def build_x_mesh(config: ExperimentConfig, N: int, eps: Optional[float]) -> Mesh1D:
    kind = config.mesh_kind
    if kind == MeshKind.GRADED_POWER:
        return graded_mesh(N)
    if kind == MeshKind.BAKHVALOV:
        return bakhvalov_mesh(eps, config.degree, N)
    if kind == MeshKind.SHISHKIN:
        return shishkin_mesh(eps, N)
    if config.problem_kind == ProblemKind.ANISOTROPIC_DIFFUSION:
        # x̂ = x/ε：(0,2ε) 上的网格拉伸到 (0,2)
        base = build_x_mesh(replace(config, problem=ProblemKind.LAPLACE.value), N, eps)
        return Mesh1D(base.nodes / eps, base.kind, eps=eps, r=base.r,
                      sigma=None if base.sigma is None else base.sigma / eps)
    if kind == MeshKind.HESSIAN_UNIFORM:
        return hessian_uniform_mesh(eps, N)
    return uniform_mesh(0.0, 2.0 * eps, N)


LAYER_ADAPTED = (MeshKind.BAKHVALOV, MeshKind.SHISHKIN)


def layer_pattern(config: ExperimentConfig, xmesh: Mesh1D, eps: Optional[float]) -> PatternSpec:
    """
    类型 C 的翻转列放在层区域 (0,2ε) 的中点：层适应网格上取最靠近 x = min(ε, 区间中点) 的内部节点列，
    (0,2ε) 上的网格取中间节点 Nx//2。
    """
    pattern = config.pattern_spec
    if pattern.name != 'C' or pattern.k0 is not None or xmesh.kind not in LAYER_ADAPTED or eps is None:
        return pattern
    scale = 1.0 if config.problem_kind == ProblemKind.ANISOTROPIC_DIFFUSION else eps
    target = min(scale, 0.5 * (xmesh.a + xmesh.b))
    k0 = int(np.argmin(np.abs(xmesh.nodes - target)))
    k0 = min(max(k0, 1), xmesh.n_intervals - 1)
    return PatternSpec('C', k0=k0)


def _problem(config: ExperimentConfig, N: int, eps: Optional[float]) -> ProblemSpec:
    kind = config.problem_kind
    if kind == ProblemKind.REACTION_DIFFUSION:
        return reaction_diffusion(eps)
    if kind == ProblemKind.LAPLACE:
        return laplace(eps)
    if kind == ProblemKind.ANISOTROPIC_DIFFUSION:
        return anisotropic_diffusion(eps)
    return singular(default_mu(N, config.mu_power), config.quadrature_kind == Quadrature.LUMPED)


def run_cell(config: ExperimentConfig, N: int, eps: Optional[float],
             pattern: Optional[PatternSpec] = None) -> ExperimentRow:
    """单个实验单元：网格 → 剖分 → 组装 → 求解 → 误差；pattern 给定时替换配置中的剖分模式"""
    start = time.perf_counter()
    M = config.M(N)
    xmesh = build_x_mesh(config, N, eps)
    ymesh = uniform_mesh(0.0, 1.0, M)
    pattern = pattern or layer_pattern(config, xmesh, eps)
    tri = build_triangulation(xmesh, ymesh, pattern)
    space = lagrange_space(tri, config.degree)
    problem = _problem(config, N, eps)
    quadrature = config.quadrature_kind

    try:
        if problem.kind == ProblemKind.SINGULAR:
            params = NewtonParams.from_config(initial_guess=config.initial_guess)
            uh, report = damped_newton(space, problem.mu, problem.lumped, params)
        else:
            extra = get_config().experiment.load_quadrature_extra
            system = assemble_system(space, problem, quadrature, extra)
            x, report = solve_spd(system)
            uh = system.expand(x)
    except SolverError as e:
        raise ExperimentError(f"{config.table} {pattern.label} 求解失败: {e}", N, eps) from e

    error = max_nodal_error(space, uh, problem.exact)
    l2 = l2_error(space, uh, problem.exact) if config.measure_l2 else None
    seconds = time.perf_counter() - start
    log.debug(f"{config.table}: {problem.label} {pattern.label} r={config.degree} "
              f"{quadrature.value} N={N} M={M} 误差={error:.3e} 迭代={report.iterations}")
    return ExperimentRow(
        table=config.table, problem=config.problem, mesh=config.mesh,
        pattern=pattern.label, degree=config.degree, quadrature=quadrature.value,
        N=N, M=M, eps=eps, error=error, rate_kind=config.rate_kind.value,
        seconds=seconds, l2_error=l2, iterations=report.iterations,
    )


def attach_rates(rows: List[ExperimentRow]) -> List[ExperimentRow]:
    """同一 ε 下 N 与 2N 两行都存在时，在 N 行上记录速率"""
    by_key: Dict[Tuple[Optional[float], int], ExperimentRow] = {(r.eps, r.N): r for r in rows}
    for row in rows:
        finer = by_key.get((row.eps, 2 * row.N))
        if finer is None or row.error <= 0 or finer.error <= 0:
            row.rate = None
            continue
        row.rate = convergence_rate(row.error, finer.error, row.N, RateKind(row.rate_kind))
    return rows


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None,
                   pattern: Optional[PatternSpec] = None) -> List[ExperimentRow]:
    """
    运行一组实验单元，返回按 N 升序、ε 配置顺序排列的结果行。
    pattern 给定时替换配置中的剖分模式（校验套件的负对照）。

    Raises:
        ExperimentError: 某个单元求解失败（消息中包含 N 与 ε）
    """
    threads = threads or get_config().experiment.threads
    cells = [(N, eps) for N in sorted(config.N) for eps in config.eps_values]
    log.info(f"运行实验 {config.table}: {config.problem} {config.mesh} {config.pattern} "
             f"r={config.degree} {config.quadrature}，共 {len(cells)} 个单元，线程数 {threads}")

    if threads == 1 or len(cells) == 1:
        rows = [run_cell(config, N, eps, pattern) for N, eps in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            rows = list(executor.map(lambda cell: run_cell(config, *cell, pattern), cells))
    return attach_rates(rows)


def _block(table: str, problem: ProblemKind, mesh: MeshKind, patterns: Sequence[str],
           quadratures: Sequence[Quadrature], N: Sequence[int], eps: Sequence[float],
           degree: int = 1, m_rule: str = 'QuarterN') -> List[ExperimentConfig]:
    return [ExperimentConfig(table=table, problem=problem.value, eps=list(eps), mesh=mesh.value,
                             pattern=pattern, degree=degree, quadrature=quadrature.value,
                             N=list(N), m_rule=m_rule)
            for quadrature in quadratures for pattern in patterns]


BOTH = (Quadrature.CONSISTENT, Quadrature.LUMPED)
NO_QUADRATURE = (Quadrature.CONSISTENT,)
LUMPED_ONLY = (Quadrature.LUMPED,)
RD = ProblemKind.REACTION_DIFFUSION


def preset(table_id: Union[str, int]) -> List[ExperimentConfig]:
    """表格/图编号展开为完整的实验配置块"""
    key = normalize_id(table_id)
    N32 = (32, 64, 128, 256)
    N64 = (64, 128, 256, 512)
    if key == 'table1':
        return _block(key, RD, MeshKind.BAKHVALOV, ('A', 'C'), BOTH, N32, EPS_TABLE)
    if key == 'table2':
        return _block(key, RD, MeshKind.UNIFORM, ('A', 'C'), BOTH, N32, EPS_TABLE)
    if key == 'table3':
        return _block(key, ProblemKind.LAPLACE, MeshKind.UNIFORM, ('A', 'C'), LUMPED_ONLY, N64, EPS_TABLE)
    if key == 'table4':
        return (_block(key, ProblemKind.LAPLACE, MeshKind.HESSIAN_UNIFORM, ('A', 'C'), LUMPED_ONLY, N64, EPS_TABLE)
                + _block(key, ProblemKind.LAPLACE, MeshKind.HESSIAN_UNIFORM, ('A', 'C'), LUMPED_ONLY, N64,
                         EPS_TABLE, m_rule='Fixed(16)'))
    if key == 'table5':
        return _block(key, RD, MeshKind.UNIFORM, ('B',), BOTH, N32, EPS_TABLE)
    if key == 'table6':
        return _block(key, RD, MeshKind.SHISHKIN, ('B',), BOTH, N32, EPS_TABLE)
    if key == 'table7':
        return _block(key, RD, MeshKind.BAKHVALOV, ('A', 'C'), NO_QUADRATURE, N32, EPS_TABLE, degree=2)
    if key == 'table8':
        return _block(key, RD, MeshKind.UNIFORM, ('A', 'C'), NO_QUADRATURE, N32, EPS_TABLE, degree=2)
    if key == 'table9':
        return _block(key, RD, MeshKind.UNIFORM, ('A',), NO_QUADRATURE, (16, 32, 64, 128),
                      EPS_TABLE + [2.0 ** -24], degree=3)
    if key == 'fig1':
        return [config for degree in (1, 2, 3)
                for config in _block(key, RD, MeshKind.UNIFORM, ('A', 'C'), NO_QUADRATURE,
                                     (16, 32, 64, 128), [1e-3, 1.0], degree=degree)]
    if key == 'fig4':
        return _block(key, ProblemKind.SINGULAR, MeshKind.GRADED_POWER, ('A', 'B'), BOTH, N32 + (512,), [])
    if key == 'fig6':
        return (_block(key, RD, MeshKind.UNIFORM, ('A', 'B'), BOTH, N32, [1e-3])
                + _block(key, RD, MeshKind.SHISHKIN, ('A', 'B'), BOTH, N32, [1e-3]))
    raise ValueError(f"未知的表格/图编号: {table_id}，可选 {TABLE_IDS + FIGURE_IDS}")


def normalize_id(table_id: Union[str, int]) -> str:
    """1 → 'table1'，'Table 2' → 'table2'，'fig4' 保持不变"""
    if isinstance(table_id, (int, np.integer)):
        return f"table{int(table_id)}"
    text = str(table_id).strip().lower().replace(' ', '')
    if text.isdigit():
        return f"table{text}"
    return text


def with_eps_sweep(configs: List[ExperimentConfig]) -> List[ExperimentConfig]:
    """把代表值 ε = 2⁻¹⁶ 展开为 ε = 2⁻ᵏ，k = 16..24"""
    swept = []
    for config in configs:
        eps = []
        for e in config.eps:
            eps.extend(EPS_SWEEP if e == EPS_REPRESENTATIVE else [e])
        swept.append(replace(config, eps=list(dict.fromkeys(eps))))
    return swept


@dataclass(frozen=True)
class SweepCheck:
    """ε ≤ 2⁻¹⁶ 列的稳定性：与代表值误差的三位有效数字比较"""
    label: str
    N: int
    eps: float
    error: float
    representative: float

    @property
    def agrees(self) -> bool:
        return f"{self.error:.2e}" == f"{self.representative:.2e}"


def sweep_consistency(rows: Sequence[ExperimentRow]) -> List[SweepCheck]:
    reference = {(_series_key(r), r.N, r.M): r.error for r in rows if r.eps == EPS_REPRESENTATIVE}
    checks = []
    for r in rows:
        key = (_series_key(r), r.N, r.M)
        if r.eps is not None and r.eps < EPS_REPRESENTATIVE and key in reference:
            checks.append(SweepCheck('/'.join(map(str, key[0])), r.N, r.eps, r.error, reference[key]))
    return checks


def _series_key(row: ExperimentRow) -> tuple:
    return row.table, row.problem, row.mesh, row.pattern, row.degree, row.quadrature


def _format_sci(value: Optional[float]) -> str:
    return '' if value is None else f"{value:.5e}"


def rows_to_frame(rows: Sequence[ExperimentRow], timing: Optional[bool] = None,
                  with_l2: bool = False) -> pd.DataFrame:
    """结果行 → 已格式化（字符串）的 DataFrame；误差与 ε 为 6 位有效数字科学计数，速率保留两位小数"""
    timing = get_config().experiment.timing if timing is None else timing
    records = []
    for row in rows:
        record = {
            'table': row.table,
            'problem': row.problem,
            'mesh': row.mesh,
            'pattern': row.pattern,
            'degree': row.degree,
            'quadrature': row.quadrature,
            'N': row.N,
            'M': row.M,
            'eps': _format_sci(row.eps),
            'error': _format_sci(row.error),
            'rate': '' if row.rate is None else f"{row.rate:.2f}",
            'rate_kind': row.rate_kind,
            'seconds': f"{row.seconds:.3f}" if timing and row.seconds is not None else '',
        }
        if with_l2:
            record['l2_error'] = _format_sci(row.l2_error)
        records.append(record)
    columns = CSV_COLUMNS + (['l2_error'] if with_l2 else [])
    return pd.DataFrame.from_records(records, columns=columns)


def write_csv(rows: Sequence[ExperimentRow], path: Union[str, Path], with_l2: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows_to_frame(rows, with_l2=with_l2).to_csv(path, index=False, lineterminator='\n')
    log.info(f"结果已写入: {path}（{len(rows)} 行）")
    return path


def series_label(row: ExperimentRow) -> str:
    eps = 'none' if row.eps is None else f"{row.eps:.0e}"
    return f"{row.pattern}_r{row.degree}_{row.quadrature}_{row.mesh}_eps{eps}"


def write_plot_series(rows: Sequence[ExperimentRow], output_dir: Union[str, Path], prefix: str) -> List[Path]:
    """图输出：每个系列一个 (N, error) 的 CSV，供双对数作图"""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    series: Dict[str, List[ExperimentRow]] = {}
    for row in rows:
        series.setdefault(series_label(row), []).append(row)
    paths = []
    for label, group in series.items():
        frame = pd.DataFrame({'N': [r.N for r in group], 'error': [_format_sci(r.error) for r in group]})
        path = output_dir / f"{prefix}_{label}.csv"
        frame.to_csv(path, index=False, lineterminator='\n')
        paths.append(path)
    log.info(f"{prefix}: 写出 {len(paths)} 个作图系列")
    return paths


def run_configs(configs: Sequence[ExperimentConfig], threads: Optional[int] = None) -> List[ExperimentRow]:
    rows: List[ExperimentRow] = []
    for config in configs:
        rows.extend(run_experiment(config, threads))
    return rows


def run_table(table_id: Union[str, int], output_dir: Optional[Union[str, Path]] = None,
              eps_sweep: bool = False, threads: Optional[int] = None) -> Path:
    """
    复现一张表或一幅图，写出 <output_dir>/<id>.csv；图另外按系列写出作图数据。

    Returns:
        主 CSV 文件路径
    """
    key = normalize_id(table_id)
    configs = preset(key)
    if eps_sweep:
        configs = with_eps_sweep(configs)
    output_dir = Path(output_dir or get_config().experiment.output_dir)
    with log_duration(log, f"{key} 共 {len(configs)} 个配置块"):
        rows = run_configs(configs, threads)
    path = write_csv(rows, output_dir / f"{key}{'_sweep' if eps_sweep else ''}.csv")
    if key in FIGURE_IDS:
        write_plot_series(rows, output_dir / f"{key}_series", key)
    if eps_sweep:
        checks = sweep_consistency(rows)
        unstable = [c for c in checks if not c.agrees]
        log.info(f"ε 扫描: {len(checks) - len(unstable)}/{len(checks)} 个单元与 ε=2^-16 三位有效数字一致")
        for c in unstable:
            log.warning(f"ε 扫描不一致: {c.label} N={c.N} eps={c.eps:.3e}: {c.error:.3e} vs {c.representative:.3e}")
    return path


def run_custom(config: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None,
               threads: Optional[int] = None) -> Path:
    with log_duration(log, f"自定义实验 {config.table}"):
        rows = run_experiment(config, threads)
    output = Path(config.output) if config.output else \
        Path(output_dir or get_config().experiment.output_dir) / f"{config.table}.csv"
    return write_csv(rows, output, with_l2=config.measure_l2)

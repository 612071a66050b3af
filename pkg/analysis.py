# -*- coding: utf-8 -*-
"""
误差与速率、有限差分模板提取、截断误差与下界探针、Hessian 度量审计
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from assembly import (Quadrature, ScalarField, SparseSystem,
                      assemble_system, consistent_mass, reaction_diffusion)
from logger_config import get_logger
from mesh1d import uniform_mesh
from reference_element import lagrange_basis, triangle_quadrature
from triangulation import (FeSpace, PatternSpec, TensorTriangulation,
                           build_triangulation, lagrange_space)

log = get_logger(__name__)

# 一阶区间判定：N·误差 的 max/min 不超过该值
FIRST_ORDER_SPREAD = 1.3

COMPASS = {(-1, 0): 'west', (1, 0): 'east', (0, -1): 'south', (0, 1): 'north'}


class RateKind(str, Enum):
    PLAIN = 'Plain'
    SHISHKIN_LOG = 'ShishkinLog'


def max_nodal_error(space: FeSpace, uh: np.ndarray, exact: ScalarField) -> float:
    """全部拉格朗日节点上的 max |u_h - u|"""
    u = space.interpolate(exact)
    return float(np.abs(np.asarray(uh) - u).max())


def l2_error(space: FeSpace, uh: np.ndarray, exact: ScalarField, extra_degree: int = 4) -> float:
    """‖u_h - u‖_{L2}，每个单元用 2r + extra_degree 阶求积"""
    basis = lagrange_basis(space.degree)
    points, weights = triangle_quadrature(2 * space.degree + extra_degree)
    phi = basis.values(points)
    tri = space.triangulation
    p = tri.vertices[tri.triangles]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
    det = np.abs(jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0])
    phys = p[:, 0][:, None, :] + np.einsum('tdk,qk->tqd', jac, points)

    uh_q = np.asarray(uh)[space.cells] @ phi.T
    u_q = np.broadcast_to(np.asarray(exact(phys[..., 0], phys[..., 1]), dtype=float), uh_q.shape)
    integral = np.einsum('q,tq->t', weights, (uh_q - u_q) ** 2) @ det
    return float(math.sqrt(max(integral, 0.0)))


def convergence_rate(eN: float, e2N: float, N: int, factor: RateKind = RateKind.PLAIN) -> float:
    """
    相邻两级的计算收敛速率：
    Plain → log(e_N/e_2N)/log 2；ShishkinLog → 以 N^{-1} ln N 为步长度量
    """
    if eN <= 0 or e2N <= 0:
        raise ValueError(f"计算速率需要正的误差: e_N={eN}, e_2N={e2N}")
    ratio = math.log(eN / e2N)
    if factor == RateKind.PLAIN:
        return ratio / math.log(2.0)
    if N < 2:
        raise ValueError(f"Shishkin 速率要求 N ≥ 2: N={N}")
    step = (math.log(N) / N) / (math.log(2 * N) / (2 * N))
    return ratio / math.log(step)


@dataclass(frozen=True)
class StencilRecord:
    """一行归一化（除以 h·H）后的有限差分模板"""
    node: int
    position: Tuple[int, int]
    h: float
    H: float
    west: float
    east: float
    south: float
    north: float
    center: float
    diagonals: Tuple[Tuple[Tuple[int, int], float], ...]
    gamma: float
    mass_center: float = 0.0
    mass_neighbors: Tuple[Tuple[Tuple[int, int], float], ...] = field(default=())

    def diagonal(self, offset: Tuple[int, int]) -> float:
        return dict(self.diagonals).get(offset, 0.0)



def extract_stencil(system: SparseSystem, space: FeSpace, node: int) -> StencilRecord:
    """
    把线性元矩阵的一行看作张量网格上的差分模板：除以局部 h·H 后按方位归类。

    γ 取归一化质量块在顶点列上的行和（一致质量与集中质量相同），
    mass_center / mass_neighbors 记录反应块（除以 c 后）的中心与邻点系数。
    """
    if space.degree != 1:
        raise ValueError(f"模板提取只用于线性元: r={space.degree}")
    tri = space.triangulation
    if not 0 <= node < tri.n_vertices:
        raise ValueError(f"顶点编号越界: {node}")
    i, j = tri.vertex_position(node)
    if i in (0, tri.nx) or j in (0, tri.ny):
        raise ValueError(f"模板提取要求内部顶点，({i}, {j}) 位于边界")

    x, y = tri.xmesh.nodes, tri.ymesh.nodes
    h = 0.5 * (x[i + 1] - x[i - 1])
    H = 0.5 * (y[j + 1] - y[j - 1])
    scale = h * H

    def normalized_row(matrix) -> Dict[Tuple[int, int], float]:
        row = matrix.getrow(node).tocoo()
        entries: Dict[Tuple[int, int], float] = {}
        for col, value in zip(row.col, row.data):
            ci, cj = tri.vertex_position(int(col))
            entries[(ci - i, cj - j)] = entries.get((ci - i, cj - j), 0.0) + value / scale
        return entries

    entries = normalized_row(system.operator)
    compass = {name: entries.get(offset, 0.0) for offset, name in COMPASS.items()}
    diagonals = tuple(sorted((off, val) for off, val in entries.items()
                             if off != (0, 0) and off not in COMPASS))

    gamma = sum(normalized_row(consistent_mass(space)).values())
    reaction = normalized_row(system.reaction)
    # 反应块除以系数 c 后才是质量块
    c = sum(reaction.values()) / gamma if gamma else 0.0
    if c != 0.0:
        mass_center = reaction.get((0, 0), 0.0) / c
        mass_neighbors = tuple(sorted((off, val / c) for off, val in reaction.items()
                                      if off != (0, 0) and abs(val) > 0))
    else:
        mass_center, mass_neighbors = 0.0, ()

    return StencilRecord(node=node, position=(i, j), h=h, H=H,
                         west=compass['west'], east=compass['east'],
                         south=compass['south'], north=compass['north'],
                         center=entries.get((0, 0), 0.0), diagonals=diagonals, gamma=gamma,
                         mass_center=mass_center, mass_neighbors=mass_neighbors)


def reduce_stencil_1d(record: StencilRecord, a_y: float) -> Tuple[float, float]:
    """
    y = ±H 上误差为零时的一维约化 L^h_x：返回 (x 差分权重, 中心附加项)，
    即 L^h_x e_i = w[-e_{i-1} + 2e_i - e_{i+1}] + (2a_y/H² + 附加项) e_i。
    """
    x_weight = -0.5 * (record.west + record.east)
    center_addition = record.center - 2.0 * x_weight - 2.0 * a_y / record.H ** 2
    return x_weight, center_addition


def format_stencil(record: StencilRecord) -> str:
    """对齐文本形式的模板，用于黄金文件比对与命令行输出"""
    lines = [
        f"node {record.node} at (i={record.position[0]}, j={record.position[1]})  h={record.h:.6e}  H={record.H:.6e}",
        f"  {'west':>8} {record.west:+.12e}",
        f"  {'east':>8} {record.east:+.12e}",
        f"  {'south':>8} {record.south:+.12e}",
        f"  {'north':>8} {record.north:+.12e}",
        f"  {'center':>8} {record.center:+.12e}",
        f"  {'gamma':>8} {record.gamma:+.12e}",
    ]
    for (di, dj), value in record.diagonals:
        lines.append(f"  {f'({di:+d},{dj:+d})':>8} {value:+.12e}")
    if record.mass_neighbors:
        lines.append(f"  {'mass.c':>8} {record.mass_center:+.12e}")
        for (di, dj), value in record.mass_neighbors:
            lines.append(f"  {f'm({di:+d},{dj:+d})':>8} {value:+.12e}")
    return '\n'.join(lines)


def strip_space(eps: float, N0: int, pattern: PatternSpec, H: Optional[float] = None,
                cell_rows: int = 2) -> FeSpace:
    """
    条带 (0,2ε)×(-cell_rows·H/2, cell_rows·H/2) 上的线性元空间，x 方向 2N₀ 个均匀区间（h = ε/N₀）
    """
    H = eps if H is None else H
    half = 0.5 * cell_rows * H
    tri = build_triangulation(uniform_mesh(0.0, 2.0 * eps, 2 * N0), uniform_mesh(-half, half, cell_rows), pattern)
    return lagrange_space(tri, 1)


@dataclass(frozen=True)
class TruncationProbe:
    """ℒ^h u^I 在某节点行上的拟合系数"""
    fitted: float
    row: int
    coefficients: np.ndarray


def truncation_probe(eps: float, N0: int, pattern: PatternSpec = PatternSpec('B'),
                     H: Optional[float] = None, row: Optional[int] = None) -> TruncationProbe:
    """
    在 4 行单元的条带上对 u = e^{-x/ε} 的插值施加组装算子（一致质量），减去载荷，
    除以 h·H 与 (h/ε)e^{-x_i/ε}；ℒ^h e = -ℒ^h u^I，故拟合系数取其相反数。
    类型 B 的中间节点行（y = 0）两个对角邻点都在 x_{i+1}，系数 → 1/6。
    """
    space = strip_space(eps, N0, pattern, H, cell_rows=4)
    problem = reaction_diffusion(eps)
    system = assemble_system(space, problem, Quadrature.CONSISTENT)
    tri = space.triangulation
    row = 2 if row is None else row
    if not 0 < row < tri.ny:
        raise ValueError(f"探针行必须是内部节点行: row={row}")

    u = space.interpolate(problem.exact)
    residual = system.operator @ u - system.load
    h = eps / N0
    Hy = tri.ymesh.spacing[0]
    i = np.arange(1, 2 * N0)
    nodes = row * (tri.nx + 1) + i
    x = tri.xmesh.nodes[i]
    coefficients = -(residual[nodes] / (h * Hy)) / ((h / eps) * np.exp(-x / eps))
    fitted = float(coefficients[N0 - 1])
    log.debug(f"截断探针: 模式={pattern.label}, N0={N0}, 行={row}, 拟合系数={fitted:.6f}")
    return TruncationProbe(fitted, row, coefficients)


@dataclass(frozen=True)
class SpreadReport:
    """N·误差 的分布"""
    minimum: float
    maximum: float

    @property
    def spread(self) -> float:
        return self.maximum / self.minimum

    @property
    def first_order(self) -> bool:
        return self.spread < FIRST_ORDER_SPREAD


def lower_bound_probe(rows: Sequence) -> SpreadReport:
    """同一配置族在不同 N 下的 N·误差 最小/最大值（下界引理结论的经验检查）"""
    if len(rows) < 2:
        raise ValueError(f"下界探针至少需要两行结果: {len(rows)}")
    products = [row.N * row.error for row in rows]
    if min(products) <= 0:
        raise ValueError("N·误差 必须为正")
    report = SpreadReport(min(products), max(products))
    log.debug(f"下界探针: N·误差 ∈ [{report.minimum:.4e}, {report.maximum:.4e}], 比值 {report.spread:.3f}")
    return report


class MetricVariant(str, Enum):
    ADD_THETA_IDENTITY = 'AddThetaIdentity'
    CLAMP_EIGENVALUES = 'ClampEigenvalues'


@dataclass(frozen=True)
class HessianMetric:
    """由 Hessian 诱导的度量 ℋ = Qᵗdiag(|λ_i|)Q + θI 或 Qᵗdiag(max{|λ_i|, θ})Q"""
    theta: float
    hessian: Callable[[np.ndarray, np.ndarray], np.ndarray]
    variant: MetricVariant = MetricVariant.ADD_THETA_IDENTITY

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError(f"θ 不能为负: {self.theta}")

    def matrices(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """各点的度量矩阵，形状 (n, 2, 2)"""
        hess = np.asarray(self.hessian(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=float)
        hess = np.broadcast_to(hess, (np.size(x), 2, 2))
        lam, q = np.linalg.eigh(0.5 * (hess + hess.transpose(0, 2, 1)))
        lam = np.abs(lam)
        if self.variant == MetricVariant.ADD_THETA_IDENTITY:
            metric = np.einsum('nik,nk,njk->nij', q, lam, q) + self.theta * np.eye(2)
        else:
            metric = np.einsum('nik,nk,njk->nij', q, np.maximum(lam, self.theta), q)
        return metric


def layer_hessian(eps: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """u = e^{-x/ε} 的 Hessian diag(ε^{-2}e^{-x/ε}, 0)"""
    def hessian(x, y):
        x = np.atleast_1d(x)
        out = np.zeros((x.size, 2, 2))
        out[:, 0, 0] = np.exp(-x / eps) / eps ** 2
        return out
    return hessian


def sqrt_hessian() -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """u = x^{1/2} 的 Hessian diag(-¼x^{-3/2}, 0)"""
    def hessian(x, y):
        x = np.atleast_1d(x)
        out = np.zeros((x.size, 2, 2))
        out[:, 0, 0] = -0.25 * x ** -1.5
        return out
    return hessian


def layer_hessian_1d(eps: float) -> Callable[[np.ndarray], np.ndarray]:
    """一维 |u''| = ε^{-2}e^{-x/ε}"""
    return lambda x: np.exp(-np.asarray(x) / eps) / eps ** 2


def sqrt_hessian_1d() -> Callable[[np.ndarray], np.ndarray]:
    """一维 |u''| = ¼x^{-3/2}"""
    return lambda x: 0.25 * np.asarray(x) ** -1.5


def triangulation_edges(tri: TensorTriangulation) -> np.ndarray:
    """剖分的全部（去重）边，形状 (n_edges, 2)"""
    t = tri.triangles
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    return np.unique(np.sort(edges, axis=1), axis=0)


def metric_edge_lengths(tri: TensorTriangulation, metric: HessianMetric) -> np.ndarray:
    """每条边在中点处度量下的长度 sqrt(eᵀℋ(m)e)"""
    edges = triangulation_edges(tri)
    a = tri.vertices[edges[:, 0]]
    b = tri.vertices[edges[:, 1]]
    mid = 0.5 * (a + b)
    e = b - a
    matrices = metric.matrices(mid[:, 0], mid[:, 1])
    if np.any(np.linalg.eigvalsh(matrices)[:, 0] <= 0):
        raise ValueError("度量在采样点处不是正定的（θ 过小或 Hessian 退化）")
    return np.sqrt(np.einsum('ni,nij,nj->n', e, matrices, e))


def metric_edge_ratio(tri: TensorTriangulation, metric: HessianMetric) -> float:
    """所有边度量长度的 max/min"""
    lengths = metric_edge_lengths(tri, metric)
    return float(lengths.max() / lengths.min())


def collect_stencils(system: SparseSystem, space: FeSpace, row: int) -> List[StencilRecord]:
    """某一内部节点行上全部内部顶点的模板"""
    tri = space.triangulation
    return [extract_stencil(system, space, tri.vertex_index(i, row)) for i in range(1, tri.nx)]

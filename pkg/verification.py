# -*- coding: utf-8 -*-
"""
校验套件

逐项运行模板恒等式、截断误差探针、一阶下界探针、Hessian 度量审计与各模块不变式，
每项给出 (测量值, 容差)。单项异常只记为失败，套件本身从不抛出。
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from analysis import (HessianMetric, RateKind, convergence_rate,
                      extract_stencil, layer_hessian, layer_hessian_1d, lower_bound_probe,
                      max_nodal_error, metric_edge_ratio, reduce_stencil_1d,
                      sqrt_hessian_1d, strip_space, truncation_probe)
from assembly import (Quadrature, anisotropic_diffusion, assemble_system,
                      consistent_mass, default_mu, dirichlet_split, laplace,
                      lumped_mass, reaction_diffusion, singular_jacobian,
                      singular_residual, with_exact_solution)
from config import get_config
from experiments import ExperimentConfig, run_experiment
from logger_config import get_logger
from mesh1d import (Mesh1D, bakhvalov_mesh, bakhvalov_sigma, graded_mesh,
                    hessian_uniform_mesh, metric_cell_lengths_1d,
                    quasi_uniformity_ratio, shishkin_mesh, uniform_mesh)
from reference_element import lattice_indices, triangle_quadrature
from solver import NewtonParams, damped_newton, solve_spd
from triangulation import (Orientation, PatternSpec, build_triangulation,
                           lagrange_space, node_patch)

log = get_logger(__name__)

STRIP_EPS = 1e-2
STRIP_N0 = 8


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ''


@dataclass
class VerifyReport:
    results: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def format(self) -> str:
        lines = []
        for r in self.results:
            status = 'PASS' if r.passed else 'FAIL'
            lines.append(f"[{status}] {r.check_id:<40} value={r.value:.4e} tol={r.tolerance:.4e} {r.detail}".rstrip())
        lines.append(f"{len(self.results) - len(self.failures)}/{len(self.results)} 项通过")
        return '\n'.join(lines)


def all_slash() -> PatternSpec:
    """负对照：全部 Slash"""
    return PatternSpec.custom(lambda i, j: Orientation.SLASH)


class VerifyContext:
    """容差系数与剖分模式替换（负对照用）"""

    def __init__(self, tolerance_scale: float, pattern_overrides: Optional[Dict[str, PatternSpec]] = None):
        self.tolerance_scale = tolerance_scale
        self.pattern_overrides = pattern_overrides or {}

    def override(self, name: str) -> Optional[PatternSpec]:
        """替换模式；C3 是类型 C 的两行条带，未单独替换时沿用 C 的替换"""
        if name in self.pattern_overrides:
            return self.pattern_overrides[name]
        if name == 'C3':
            return self.pattern_overrides.get('C')
        return None

    def pattern(self, name: str, k0: Optional[int] = None) -> PatternSpec:
        return self.override(name) or PatternSpec(name, k0=k0)

    def tol(self, value: float) -> float:
        return value * self.tolerance_scale


# 每个检查返回 (测量值, 基准容差, 说明)；通过条件为 测量值 ≤ 基准容差 × 系数
CheckFn = Callable[[VerifyContext], Tuple[float, float, str]]


def _rel(actual: float, expected: float) -> float:
    return abs(actual - expected) / max(abs(expected), 1.0)


def _strip_record(ctx: VerifyContext, pattern: PatternSpec, quadrature: Quadrature, cell_rows: int, node_i: int,
                  row: int):
    space = strip_space(STRIP_EPS, STRIP_N0, pattern, cell_rows=cell_rows)
    system = assemble_system(space, reaction_diffusion(STRIP_EPS), quadrature)
    tri = space.triangulation
    return extract_stencil(system, space, tri.vertex_index(node_i, row)), space, system


def check_lumped_gamma(ctx: VerifyContext):
    """C3(N₀) 条带，集中质量：γ_{N₀} = 2/3，其余内部节点 γ = 1"""
    pattern = ctx.pattern('C3', STRIP_N0)
    space = strip_space(STRIP_EPS, STRIP_N0, pattern, cell_rows=2)
    system = assemble_system(space, reaction_diffusion(STRIP_EPS), Quadrature.LUMPED)
    tri = space.triangulation
    worst = 0.0
    for i in range(1, tri.nx):
        record = extract_stencil(system, space, tri.vertex_index(i, 1))
        expected = 2.0 / 3.0 if i == STRIP_N0 else 1.0
        worst = max(worst, abs(record.gamma - expected), abs(record.mass_center - expected))
    return worst, 1e-12, f"pattern={pattern.label}"


def check_five_point(ctx: VerifyContext):
    """类型 A 条带，集中质量：标准五点格式，γ ≡ 1"""
    record, _, _ = _strip_record(ctx, ctx.pattern('A'), Quadrature.LUMPED, 2, STRIP_N0, 1)
    e2h = STRIP_EPS ** 2 / record.h ** 2
    e2H = STRIP_EPS ** 2 / record.H ** 2
    scale = max(e2h, e2H, 1.0)
    deviations = [
        abs(record.west + e2h), abs(record.east + e2h),
        abs(record.south + e2H), abs(record.north + e2H),
        abs(record.center - (2 * e2h + 2 * e2H + 1.0)),
        abs(record.gamma - 1.0),
    ] + [abs(v) for _, v in record.diagonals]
    return max(deviations) / scale, 1e-12, ''


def check_consistent_coupling(ctx: VerifyContext):
    """一致质量：每个边邻点 +1/12，中心 γ - |S_i|/12"""
    worst = 0.0
    pattern = ctx.pattern('C3', STRIP_N0)
    for i in (STRIP_N0 - 1, STRIP_N0, STRIP_N0 + 1):
        record, _, _ = _strip_record(ctx, pattern, Quadrature.CONSISTENT, 2, i, 1)
        neighbors = record.mass_neighbors
        worst = max([worst, abs(record.mass_center - (record.gamma - len(neighbors) / 12.0))]
                    + [abs(v - 1.0 / 12.0) for _, v in neighbors])
    return worst, 1e-12, f"pattern={pattern.label}"


def check_b_reduction(ctx: VerifyContext):
    """类型 B 条带、一致质量的一维约化：x 权重 ε²/h² - 1/12，中心附加项 2/3"""
    record, _, _ = _strip_record(ctx, ctx.pattern('B'), Quadrature.CONSISTENT, 4, STRIP_N0, 2)
    x_weight, center_addition = reduce_stencil_1d(record, STRIP_EPS ** 2)
    expected_weight = STRIP_EPS ** 2 / record.h ** 2 - 1.0 / 12.0
    return max(_rel(x_weight, expected_weight), abs(center_addition - 2.0 / 3.0)), 1e-10, ''


def check_truncation_apex(ctx: VerifyContext):
    """类型 B 顶点行：拟合系数 → 1/6"""
    probe = truncation_probe(1e-3, 256, ctx.pattern('B'))
    return abs(probe.fitted - 1.0 / 6.0) * 6.0, 0.02, f"fitted={probe.fitted:.5f}"


def check_truncation_sign(ctx: VerifyContext):
    """类型 B 谷行符号相反：拟合系数 → -1/6"""
    probe = truncation_probe(1e-3, 256, ctx.pattern('B'), row=1)
    return abs(probe.fitted + 1.0 / 6.0) * 6.0, 0.02, f"fitted={probe.fitted:.5f}"


def check_truncation_symmetric(ctx: VerifyContext):
    """类型 A 条带：拟合系数趋于 0"""
    probe = truncation_probe(1e-3, 256, ctx.pattern('A'))
    return abs(probe.fitted), 0.01, f"fitted={probe.fitted:.5f}"


def _spread(ctx: VerifyContext, config: ExperimentConfig) -> Tuple[float, float, str]:
    report = lower_bound_probe(run_experiment(config, pattern=ctx.override(config.pattern)))
    return report.spread - 1.0, 0.3, f"N·error ∈ [{report.minimum:.4e}, {report.maximum:.4e}]"


LEMMA_N = [64, 128, 256, 512]


def check_lemma_reaction_lumped(ctx: VerifyContext):
    return _spread(ctx, ExperimentConfig(table='verify', problem='ReactionDiffusion', eps=[2.0 ** -16],
                                         mesh='Uniform', pattern='C', quadrature='LumpedMass', N=LEMMA_N))


def check_lemma_laplace(ctx: VerifyContext):
    return _spread(ctx, ExperimentConfig(table='verify', problem='Laplace', eps=[2.0 ** -16],
                                         mesh='Uniform', pattern='C', quadrature='LumpedMass', N=LEMMA_N))


def check_lemma_no_quadrature(ctx: VerifyContext):
    return _spread(ctx, ExperimentConfig(table='verify', problem='ReactionDiffusion', eps=[2.0 ** -16],
                                         mesh='Uniform', pattern='B', quadrature='Consistent', N=LEMMA_N))


def check_metric_euclidean(ctx: VerifyContext):
    """θ = 1、零 Hessian：度量边长比等于欧氏边长比"""
    tri = build_triangulation(uniform_mesh(0.0, 2.0, 8), uniform_mesh(0.0, 1.0, 2), ctx.pattern('A'))
    metric = HessianMetric(1.0, lambda x, y: np.zeros((np.size(x), 2, 2)))
    ratio = metric_edge_ratio(tri, metric)
    h, H = 0.25, 0.5
    return _rel(ratio, math.hypot(h, H) / h), 1e-12, f"ratio={ratio:.4f}"


def check_metric_uniform_layer(ctx: VerifyContext):
    """均匀网格 (0,2ε)×(0,1)，M=N/4，θ=1：比值有界且与 ε 无关"""
    ratios = []
    for eps in (2.0 ** -8, 2.0 ** -16):
        tri = build_triangulation(uniform_mesh(0.0, 2.0 * eps, 64), uniform_mesh(0.0, 1.0, 16), ctx.pattern('A'))
        ratios.append(metric_edge_ratio(tri, HessianMetric(1.0, layer_hessian(eps))))
    return max(ratios), 10.0, f"ratios={[round(r, 3) for r in ratios]}"


def check_metric_hessian_uniform(ctx: VerifyContext):
    """Hessian 均匀网格 × M=16，θ = (2(1-e⁻¹)M/N)²：比值 ≤ 10"""
    N, M = 64, 16
    theta = (2.0 * (1.0 - math.exp(-1.0)) * M / N) ** 2
    ratios = []
    for eps in (1.0, 2.0 ** -8, 2.0 ** -16):
        tri = build_triangulation(hessian_uniform_mesh(eps, N), uniform_mesh(0.0, 1.0, M), ctx.pattern('C'))
        ratios.append(metric_edge_ratio(tri, HessianMetric(theta, layer_hessian(eps))))
    return max(ratios), 10.0, f"theta={theta:.4e}"


def check_graded_1d_metric(ctx: VerifyContext):
    """分级网格在 |u''| = ¼x^{-3/2} 下除首个区间外均匀"""
    lengths = metric_cell_lengths_1d(graded_mesh(32), sqrt_hessian_1d())
    return quasi_uniformity_ratio(lengths[1:]) - 1.0, 0.05, ''


def check_hessian_uniform_1d(ctx: VerifyContext):
    eps = 2.0 ** -8
    lengths = metric_cell_lengths_1d(hessian_uniform_mesh(eps, 64), layer_hessian_1d(eps))
    return quasi_uniformity_ratio(lengths) - 1.0, 1e-6, ''


def check_shishkin_not_quasi_uniform(ctx: VerifyContext):
    """Shishkin 网格不是拟一致的：比值随 ε 减小而增大"""
    ratios = []
    for eps in (2.0 ** -4, 2.0 ** -6):
        lengths = metric_cell_lengths_1d(shishkin_mesh(eps, 64), layer_hessian_1d(eps))
        ratios.append(quasi_uniformity_ratio(lengths))
    # 通过条件：ratios[0] / ratios[1] ≤ 1
    return ratios[0] / ratios[1], 1.0, f"ratios={ratios[0]:.3e},{ratios[1]:.3e}"


def check_bakhvalov_transition(ctx: VerifyContext):
    eps, N = 2.0 ** -16, 64
    mesh = bakhvalov_mesh(eps, 1, N)
    sigma = bakhvalov_sigma(eps, 1)
    return abs(mesh.nodes[3 * N // 4] - sigma) / sigma, 1e-14, f"sigma={sigma:.6e}"


def check_shishkin_refinement(ctx: VerifyContext):
    """N → 2N：两侧区间数加倍，σ(2N)/σ(N) = ln(2N)/ln N"""
    eps, N = 2.0 ** -16, 64
    coarse, fine = shishkin_mesh(eps, N), shishkin_mesh(eps, 2 * N)
    counts = [int(np.sum(m.nodes[1:] <= m.sigma)) for m in (coarse, fine)]
    ratio = fine.sigma / coarse.sigma
    return max(_rel(ratio, math.log(2 * N) / math.log(N)), abs(counts[1] - 2 * counts[0])), 1e-14, \
        f"intervals={counts}"


def check_node_counts(ctx: VerifyContext):
    """节点数闭式 (r·Nx+1)(r·Ny+1)，且每个节点至少属于一个单元"""
    nx, ny = 5, 3
    mismatches = 0
    for name in ('A', 'B', 'C'):
        tri = build_triangulation(uniform_mesh(0.0, 1.0, nx), uniform_mesh(0.0, 1.0, ny), ctx.pattern(name))
        for r in (1, 2, 3):
            space = lagrange_space(tri, r)
            mismatches += space.n_nodes != (r * nx + 1) * (r * ny + 1)
            mismatches += np.unique(space.cells).size != space.n_nodes
    return float(mismatches), 0.0, ''


def check_patch_areas(ctx: VerifyContext):
    """所有顶点片面积之和 = 3 × 区域面积"""
    worst = 0.0
    for name in ('A', 'B', 'C'):
        tri = build_triangulation(bakhvalov_mesh(2.0 ** -8, 1, 8), uniform_mesh(0.0, 1.0, 4), ctx.pattern(name))
        total = sum(node_patch(tri, v).area for v in range(tri.n_vertices))
        worst = max(worst, abs(total - 3.0 * tri.domain_area) / (3.0 * tri.domain_area))
    return worst, 1e-12, ''


def check_edge_conformity(ctx: VerifyContext):
    """P2/P3 单元节点是顶点的仿射组合；内部边恰好被两个三角形共享"""
    tri = build_triangulation(bakhvalov_mesh(2.0 ** -8, 2, 8), uniform_mesh(0.0, 1.0, 4), ctx.pattern('C'))
    worst = 0.0
    for r in (2, 3):
        space = lagrange_space(tri, r)
        p = tri.vertices[tri.triangles]
        lattice = lattice_indices(r) / r
        affine = (p[:, None, 0] + lattice[None, :, 0, None] * (p[:, None, 1] - p[:, None, 0])
                  + lattice[None, :, 1, None] * (p[:, None, 2] - p[:, None, 0]))
        worst = max(worst, float(np.abs(space.coords[space.cells] - affine).max()))

    edges = np.sort(tri.triangles[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2), axis=1)
    unique, counts = np.unique(edges, axis=0, return_counts=True)
    ends = tri.vertices[unique]
    on_boundary = np.zeros(len(unique), dtype=bool)
    for axis, mesh in ((0, tri.xmesh), (1, tri.ymesh)):
        for bound in (mesh.a, mesh.b):
            on_boundary |= np.all(ends[:, :, axis] == bound, axis=1)
    bad = int(np.sum(counts != np.where(on_boundary, 1, 2)))
    return max(worst, float(bad)), 1e-14, f"edges={len(unique)}"


def check_singular_jacobian(ctx: VerifyContext):
    """奇异问题 Jacobian 与中心差分的相对偏差"""
    N = 8
    mu = default_mu(N)
    tri = build_triangulation(graded_mesh(N), uniform_mesh(0.0, 1.0, 2), ctx.pattern('B'))
    space = lagrange_space(tri, 1)
    free, _ = dirichlet_split(space)
    U = np.sqrt(space.coords[:, 0])
    U[free] += 0.2
    direction = np.zeros(space.n_nodes)
    direction[free] = np.random.default_rng(5).standard_normal(free.size)
    step = 1e-6
    worst = 0.0
    for lumped in (False, True):
        fd = (singular_residual(space, U + step * direction, mu, lumped)
              - singular_residual(space, U - step * direction, mu, lumped)) / (2 * step)
        jd = singular_jacobian(space, U, mu, lumped) @ direction[free]
        worst = max(worst, float(np.abs(jd - fd).max() / np.abs(fd).max()))
    return worst, 1e-6, ''


def check_newton_monotone(ctx: VerifyContext):
    """阻尼 Newton：接受步残差严格下降，解非负"""
    N = 16
    tri = build_triangulation(graded_mesh(N), uniform_mesh(0.0, 1.0, N // 4), ctx.pattern('B'))
    space = lagrange_space(tri, 1)
    violations = 0
    for lumped in (False, True):
        U, report = damped_newton(space, default_mu(N), lumped, NewtonParams.from_config())
        violations += int(np.sum(np.diff(report.history) >= 0))
        violations += int(U.min() < -1e-10)
    return float(violations), 0.0, ''


def check_lumped_row_sums(ctx: VerifyContext):
    tri = build_triangulation(bakhvalov_mesh(2.0 ** -8, 1, 16), uniform_mesh(0.0, 1.0, 4), ctx.pattern('C'))
    space = lagrange_space(tri, 1)
    row_sums = np.asarray(consistent_mass(space).sum(axis=1)).ravel()
    diag = lumped_mass(space).diagonal()
    defect = np.abs(diag - row_sums).max() / row_sums.max()
    trace = abs(diag.sum() - tri.domain_area) / tri.domain_area
    return max(defect, trace), 1e-14, ''


def check_symmetry(ctx: VerifyContext):
    worst = 0.0
    for r in (1, 2, 3):
        tri = build_triangulation(uniform_mesh(0.0, 2e-3, 8), uniform_mesh(0.0, 1.0, 2), ctx.pattern('B'))
        system = assemble_system(lagrange_space(tri, r), reaction_diffusion(1e-3))
        A = system.matrix
        worst = max(worst, abs(A - A.T).max() / abs(A).max())
    return worst, 1e-15, ''


def check_rescaling(ctx: VerifyContext):
    """Laplace 系统乘以 ε 与各向异性扩散系统逐项相等"""
    eps, N = 2.0 ** -8, 16
    xmesh = hessian_uniform_mesh(eps, N)
    ymesh = uniform_mesh(0.0, 1.0, 4)
    pattern = ctx.pattern('C')
    lap = assemble_system(lagrange_space(build_triangulation(xmesh, ymesh, pattern), 1), laplace(eps),
                          Quadrature.LUMPED)
    scaled = Mesh1D(xmesh.nodes / eps, xmesh.kind, eps=eps)
    aniso = assemble_system(lagrange_space(build_triangulation(scaled, ymesh, pattern), 1),
                            anisotropic_diffusion(eps), Quadrature.LUMPED)
    matrix_defect = abs(eps * lap.matrix - aniso.matrix).max() / abs(aniso.matrix).max()
    rhs_defect = np.abs(eps * lap.rhs - aniso.rhs).max() / np.abs(aniso.rhs).max()
    return max(matrix_defect, rhs_defect), 1e-12, ''


def check_linear_exactness(ctx: VerifyContext):
    """u = x、f = 0 的 Laplace 问题：离散解等于插值"""
    tri = build_triangulation(bakhvalov_mesh(2.0 ** -8, 1, 16), uniform_mesh(0.0, 1.0, 4), ctx.pattern('C'))
    space = lagrange_space(tri, 1)
    problem = with_exact_solution(laplace(1.0), lambda x, y: np.asarray(x) + 0.0 * np.asarray(y))
    system = assemble_system(space, problem)
    x, _ = solve_spd(system)
    return max_nodal_error(space, system.expand(x), problem.exact), 1e-9, ''


def check_spd_contract(ctx: VerifyContext):
    rng = np.random.default_rng(20240611)
    worst = 0.0
    for n in (5, 20, 50):
        B = rng.standard_normal((n, n))
        A = B.T @ B + np.eye(n)
        b = rng.standard_normal(n)
        x, _ = solve_spd((sp.csr_matrix(A), b))
        x_ref = np.linalg.solve(A, b)
        worst = max(worst, np.linalg.norm(x - x_ref) / np.linalg.norm(x_ref))
    return worst, 1e-9, ''


def check_rates(ctx: VerifyContext):
    plain = abs(convergence_rate(4e-4, 1e-4, 64) - 2.0)
    halved = abs(convergence_rate(2e-4, 1e-4, 64) - 1.0)
    flat = abs(convergence_rate(1e-4, 1e-4, 64, RateKind.SHISHKIN_LOG))
    return max(plain, halved, flat), 1e-14, ''


def check_quadrature_weights(ctx: VerifyContext):
    return max(abs(triangle_quadrature(d)[1].sum() - 0.5) for d in range(0, 11)), 1e-14, ''


CHECKS: List[Tuple[str, CheckFn, bool]] = [
    ('stencil.lumped_gamma_c3', check_lumped_gamma, False),
    ('stencil.five_point_a', check_five_point, False),
    ('stencil.consistent_edge_coupling', check_consistent_coupling, False),
    ('stencil.b_reduction_1d', check_b_reduction, False),
    ('truncation.b_apex', check_truncation_apex, False),
    ('truncation.b_valley_sign', check_truncation_sign, False),
    ('truncation.a_symmetric', check_truncation_symmetric, False),
    ('lemma.reaction_lumped_c', check_lemma_reaction_lumped, True),
    ('lemma.laplace_lumped_c', check_lemma_laplace, True),
    ('lemma.no_quadrature_b', check_lemma_no_quadrature, True),
    ('metric.euclidean', check_metric_euclidean, False),
    ('metric.uniform_layer', check_metric_uniform_layer, False),
    ('metric.hessian_uniform_m16', check_metric_hessian_uniform, False),
    ('metric.graded_1d', check_graded_1d_metric, False),
    ('metric.hessian_uniform_1d', check_hessian_uniform_1d, False),
    ('metric.shishkin_not_quasi_uniform', check_shishkin_not_quasi_uniform, False),
    ('mesh.bakhvalov_transition', check_bakhvalov_transition, False),
    ('mesh.shishkin_refinement', check_shishkin_refinement, False),
    ('triangulation.node_counts', check_node_counts, False),
    ('triangulation.patch_areas', check_patch_areas, False),
    ('triangulation.edge_conformity', check_edge_conformity, False),
    ('assembly.lumped_row_sums', check_lumped_row_sums, False),
    ('assembly.symmetry', check_symmetry, False),
    ('assembly.rescaling', check_rescaling, False),
    ('assembly.linear_exactness', check_linear_exactness, False),
    ('solver.spd_contract', check_spd_contract, False),
    ('solver.singular_jacobian_fd', check_singular_jacobian, False),
    ('solver.newton_monotone', check_newton_monotone, False),
    ('analysis.rates', check_rates, False),
    ('reference.quadrature_weights', check_quadrature_weights, False),
]

CHECK_IDS = tuple(check_id for check_id, _, _ in CHECKS)


def run_check(check_id: str, fn: CheckFn, ctx: VerifyContext) -> CheckResult:
    try:
        value, tolerance, detail = fn(ctx)
    except Exception as e:
        log.warning(f"校验项 {check_id} 执行出错: {e}", exc_info=True)
        return CheckResult(check_id, False, math.nan, math.nan, f"error: {e}")
    tolerance = ctx.tol(tolerance)
    passed = bool(np.isfinite(value)) and value <= tolerance
    return CheckResult(check_id, passed, float(value), tolerance, detail)


def verify_suite(tolerance_scale: Optional[float] = None,
                 pattern_overrides: Optional[Dict[str, PatternSpec]] = None,
                 quick: bool = False, only: Optional[Sequence[str]] = None) -> VerifyReport:
    """
    运行全部（或指定的）校验项。

    Args:
        tolerance_scale: 容差系数，默认取配置（1.0）；取 0 时只有精确为零的测量值能通过
        pattern_overrides: 剖分模式名 → 替换模式，用于负对照
        quick: 跳过耗时的下界探针
        only: 只运行这些校验项
    """
    scale = get_config().verify.tolerance_scale if tolerance_scale is None else tolerance_scale
    ctx = VerifyContext(scale, pattern_overrides)
    if only:
        unknown = set(only) - set(CHECK_IDS)
        if unknown:
            return VerifyReport([CheckResult(c, False, math.nan, math.nan, 'unknown check id') for c in sorted(unknown)])

    report = VerifyReport()
    for check_id, fn, slow in CHECKS:
        if only and check_id not in only:
            continue
        if quick and slow:
            continue
        result = run_check(check_id, fn, ctx)
        report.results.append(result)
        if result.passed:
            log.info(f"校验通过: {check_id}")
        else:
            log.error(f"校验失败: {check_id} value={result.value:.4e} tol={result.tolerance:.4e} {result.detail}")
    return report

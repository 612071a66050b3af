# -*- coding: utf-8 -*-
"""
有限元组装

三个模型问题（反应扩散、Laplace/各向异性扩散、奇异非线性问题）在张量三角剖分上的
单元积分与全局组装，质量矩阵可取一致质量或集中质量（仅线性元）。
"""
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import wraps
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from logger_config import get_logger
from reference_element import lagrange_basis, triangle_quadrature
from triangulation import FeSpace

log = get_logger(__name__)

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]

# 载荷求积阶数为 2r + LOAD_QUADRATURE_EXTRA
LOAD_QUADRATURE_EXTRA = 4


class ProblemKind(str, Enum):
    REACTION_DIFFUSION = 'ReactionDiffusion'
    LAPLACE = 'Laplace'
    ANISOTROPIC_DIFFUSION = 'AnisotropicDiffusion'
    SINGULAR = 'Singular'


class Quadrature(str, Enum):
    CONSISTENT = 'Consistent'
    LUMPED = 'LumpedMass'

    @classmethod
    def parse(cls, text: str) -> 'Quadrature':
        key = text.strip().lower()
        if key in ('consistent', 'none', 'no-quadrature', 'noquadrature'):
            return cls.CONSISTENT
        if key in ('lumped', 'lumpedmass', 'lumped-mass', 'mass-lumping'):
            return cls.LUMPED
        raise ValueError(f"未知的求积方式: {text}")


@dataclass(frozen=True)
class ProblemSpec:
    """模型问题 -a_x u_xx - a_y u_yy + c u = f（奇异问题的非线性项另行处理）"""
    kind: ProblemKind
    exact: ScalarField
    rhs: Optional[ScalarField]
    a_x: float
    a_y: float
    c: float
    eps: Optional[float] = None
    mu: Optional[float] = None
    lumped: bool = False

    @property
    def label(self) -> str:
        if self.kind == ProblemKind.SINGULAR:
            return f"{self.kind.value}(mu={self.mu:.3e}, lumped={self.lumped})"
        return f"{self.kind.value}(eps={self.eps:.6g})"


def _zero(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


def reaction_diffusion(eps: float) -> ProblemSpec:
    """-ε²Δu + u = 0，精确解 u = e^{-x/ε}"""
    if eps <= 0:
        raise ValueError(f"ε 必须为正: {eps}")
    return ProblemSpec(
        ProblemKind.REACTION_DIFFUSION,
        exact=lambda x, y: np.exp(-np.asarray(x) / eps) + 0.0 * np.asarray(y),
        rhs=_zero,
        a_x=eps ** 2, a_y=eps ** 2, c=1.0, eps=eps,
    )


def laplace(eps: float) -> ProblemSpec:
    """-Δu = f，精确解 u = e^{-x/ε}，f = -ε^{-2} e^{-x/ε}"""
    if eps <= 0:
        raise ValueError(f"ε 必须为正: {eps}")
    return ProblemSpec(
        ProblemKind.LAPLACE,
        exact=lambda x, y: np.exp(-np.asarray(x) / eps) + 0.0 * np.asarray(y),
        rhs=lambda x, y: -np.exp(-np.asarray(x) / eps) / eps ** 2 + 0.0 * np.asarray(y),
        a_x=1.0, a_y=1.0, c=0.0, eps=eps,
    )


def anisotropic_diffusion(eps: float) -> ProblemSpec:
    """-û_xx - ε² û_yy = f̂ 于 (0,2)×(0,1)，精确解 û = e^{-x}，f̂ = -e^{-x}"""
    if eps <= 0:
        raise ValueError(f"ε 必须为正: {eps}")
    return ProblemSpec(
        ProblemKind.ANISOTROPIC_DIFFUSION,
        exact=lambda x, y: np.exp(-np.asarray(x)) + 0.0 * np.asarray(y),
        rhs=lambda x, y: -np.exp(-np.asarray(x)) + 0.0 * np.asarray(y),
        a_x=1.0, a_y=eps ** 2, c=0.0, eps=eps,
    )


def singular(mu: float, lumped: bool = False) -> ProblemSpec:
    """-Δu + f̃(u) = 0，f̃(u) = -¼ max{u, μ}^{-3}，精确解 u = x^{1/2}"""
    if mu <= 0:
        raise ValueError(f"正则化参数 μ 必须为正: {mu}")
    return ProblemSpec(
        ProblemKind.SINGULAR,
        exact=lambda x, y: np.sqrt(np.asarray(x)) + 0.0 * np.asarray(y),
        rhs=None,
        a_x=1.0, a_y=1.0, c=0.0, mu=mu, lumped=lumped,
    )


def with_exact_solution(problem: ProblemSpec, exact: ScalarField, rhs: ScalarField = _zero) -> ProblemSpec:
    """替换精确解与右端（调试/验证用，例如 u = x）"""
    return replace(problem, exact=exact, rhs=rhs)


@dataclass(frozen=True, eq=False)
class SparseSystem:
    """消去 Dirichlet 约束后的稀疏线性系统及其组装记录"""
    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    dirichlet: np.ndarray
    dirichlet_values: np.ndarray
    n_nodes: int
    operator: sp.csr_matrix
    stiffness: sp.csr_matrix
    reaction: sp.csr_matrix
    load: np.ndarray

    @property
    def n_free(self) -> int:
        return self.free.size

    def expand(self, free_values: np.ndarray) -> np.ndarray:
        """把自由节点上的解与 Dirichlet 值拼成全节点向量"""
        full = np.empty(self.n_nodes)
        full[self.free] = free_values
        full[self.dirichlet] = self.dirichlet_values
        return full


def _element_geometry(space: FeSpace) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """每个三角形的仿射映射：原点、Jacobian 及其行列式"""
    tri = space.triangulation
    p = tri.vertices[tri.triangles]
    origin = p[:, 0]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    if np.any(det <= 0):
        raise ValueError("三角形方向错误：存在非正 Jacobian 行列式")
    return origin, jac, det


def _cached_on_space(fn):
    """结果缓存在 space.matrix_cache 中，随空间一起释放"""
    @wraps(fn)
    def wrapper(space: FeSpace):
        cache = space.matrix_cache
        if fn.__name__ not in cache:
            cache[fn.__name__] = fn(space)
        return cache[fn.__name__]
    return wrapper


def _scatter(space: FeSpace, local: np.ndarray) -> sp.csr_matrix:
    rows = np.broadcast_to(space.cells[:, :, None], local.shape).ravel()
    cols = np.broadcast_to(space.cells[:, None, :], local.shape).ravel()
    n = space.n_nodes
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


@_cached_on_space
def stiffness_matrices(space: FeSpace) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    """K_x = (∂xφ_j, ∂xφ_i)，K_y = (∂yφ_j, ∂yφ_i)；求积精确到 2r 阶"""
    basis = lagrange_basis(space.degree)
    points, weights = triangle_quadrature(2 * space.degree)
    ref_grads = basis.gradients(points)
    _, jac, det = _element_geometry(space)
    inv = np.linalg.inv(jac)
    grads = np.einsum('tkd,qak->tqad', inv, ref_grads)

    kx = np.einsum('q,tqa,tqb->tab', weights, grads[..., 0], grads[..., 0]) * det[:, None, None]
    ky = np.einsum('q,tqa,tqb->tab', weights, grads[..., 1], grads[..., 1]) * det[:, None, None]
    kx = 0.5 * (kx + kx.transpose(0, 2, 1))
    ky = 0.5 * (ky + ky.transpose(0, 2, 1))
    return _scatter(space, kx), _scatter(space, ky)


@_cached_on_space
def consistent_mass(space: FeSpace) -> sp.csr_matrix:
    """一致质量矩阵 (φ_j, φ_i)"""
    basis = lagrange_basis(space.degree)
    points, weights = triangle_quadrature(2 * space.degree)
    phi = basis.values(points)
    ref_mass = np.einsum('q,qa,qb->ab', weights, phi, phi)
    ref_mass = 0.5 * (ref_mass + ref_mass.T)
    _, _, det = _element_geometry(space)
    return _scatter(space, det[:, None, None] * ref_mass[None, :, :])


@_cached_on_space
def lumped_mass(space: FeSpace) -> sp.csr_matrix:
    """集中质量：一致 P1 质量矩阵的行和"""
    if space.degree != 1:
        raise ValueError(f"集中质量只用于线性元: r={space.degree}")
    row_sums = np.asarray(consistent_mass(space).sum(axis=1)).ravel()
    return sp.diags(row_sums, format='csr')


def mass_matrix(space: FeSpace, quadrature: Quadrature) -> sp.csr_matrix:
    if quadrature == Quadrature.LUMPED:
        return lumped_mass(space)
    return consistent_mass(space)


def load_vector(space: FeSpace, rhs: ScalarField, extra_degree: int = LOAD_QUADRATURE_EXTRA) -> np.ndarray:
    """载荷向量 (f, φ_i)，求积阶数 2r + extra_degree"""
    basis = lagrange_basis(space.degree)
    points, weights = triangle_quadrature(2 * space.degree + extra_degree)
    phi = basis.values(points)
    origin, jac, det = _element_geometry(space)
    phys = origin[:, None, :] + np.einsum('tdk,qk->tqd', jac, points)
    f = np.asarray(rhs(phys[..., 0], phys[..., 1]), dtype=float)
    f = np.broadcast_to(f, phys.shape[:2])
    local = np.einsum('q,tq,qa->ta', weights, f, phi) * det[:, None]
    return np.bincount(space.cells.ravel(), weights=local.ravel(), minlength=space.n_nodes)


def lumped_load_vector(space: FeSpace, rhs: ScalarField) -> np.ndarray:
    """集中质量求积下的载荷 ∫(fφ_i)^I = f(x_i)·(M_L)_ii"""
    f = np.asarray(rhs(space.coords[:, 0], space.coords[:, 1]), dtype=float)
    return lumped_mass(space).diagonal() * np.broadcast_to(f, (space.n_nodes,))


def _check_space(space: FeSpace) -> None:
    tri = space.triangulation
    if space.cells.shape[0] != tri.n_triangles or space.cells.max() >= space.n_nodes:
        raise ValueError("有限元空间与三角剖分不匹配")


def dirichlet_split(space: FeSpace) -> Tuple[np.ndarray, np.ndarray]:
    """(自由节点, Dirichlet 节点) 编号"""
    dirichlet = space.boundary
    mask = np.ones(space.n_nodes, dtype=bool)
    mask[dirichlet] = False
    return np.nonzero(mask)[0], dirichlet


def assemble_system(space: FeSpace, problem: ProblemSpec,
                    quadrature: Quadrature = Quadrature.CONSISTENT,
                    load_extra_degree: int = LOAD_QUADRATURE_EXTRA) -> SparseSystem:
    """
    组装线性问题：matrix = a_x K_x + a_y K_y + c M，右端为载荷减去 Dirichlet 提升；
    集中质量时载荷也用顶点求积 ∫(fχ)^I；
    所有边界拉格朗日节点取精确解的值，对称消去。
    """
    if problem.kind == ProblemKind.SINGULAR:
        raise ValueError("奇异问题是非线性的，请使用 singular_residual / singular_jacobian")
    if quadrature == Quadrature.LUMPED and space.degree > 1:
        raise ValueError(f"集中质量只用于线性元: r={space.degree}")
    _check_space(space)

    kx, ky = stiffness_matrices(space)
    stiffness = (problem.a_x * kx + problem.a_y * ky).tocsr()
    if problem.c != 0.0:
        reaction = (problem.c * mass_matrix(space, quadrature)).tocsr()
    else:
        reaction = sp.csr_matrix((space.n_nodes, space.n_nodes))
    operator = (stiffness + reaction).tocsr()

    if quadrature == Quadrature.LUMPED:
        load = lumped_load_vector(space, problem.rhs or _zero)
    else:
        load = load_vector(space, problem.rhs or _zero, load_extra_degree)
    free, dirichlet = dirichlet_split(space)
    g = np.asarray(problem.exact(space.coords[dirichlet, 0], space.coords[dirichlet, 1]), dtype=float)

    rows = operator[free]
    matrix = rows[:, free].tocsr()
    rhs = load[free] - rows[:, dirichlet] @ g
    log.debug(f"组装完成: {problem.label}, r={space.degree}, {quadrature.value}, 自由度={free.size}")
    return SparseSystem(matrix, rhs, free, dirichlet, g, space.n_nodes, operator, stiffness, reaction, load)


def regularized_nonlinearity(U: np.ndarray, mu: float) -> np.ndarray:
    """F(U)_i = -¼ max{U_i, μ}^{-3}"""
    return -0.25 * np.maximum(U, mu) ** -3


def regularized_derivative(U: np.ndarray, mu: float) -> np.ndarray:
    """F'(u) = ¾ u^{-4}（u > μ），否则为 0"""
    safe = np.maximum(U, mu)
    return np.where(U > mu, 0.75 * safe ** -4, 0.0)


def _singular_blocks(space: FeSpace, lumped: bool) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    if space.degree != 1:
        raise ValueError(f"奇异问题只用线性元求解: r={space.degree}")
    _check_space(space)
    kx, ky = stiffness_matrices(space)
    mass = lumped_mass(space) if lumped else consistent_mass(space)
    return (kx + ky).tocsr(), mass


def singular_residual(space: FeSpace, U: np.ndarray, mu: float, lumped: bool = False) -> np.ndarray:
    """
    自由节点上的残差 K·U + M·F(U)：一致质量对应 (f̃(u_h)^I, χ)，
    集中质量对应 ∫(f̃(u_h)χ)^I。U 为全节点向量，边界分量已取精确值。
    """
    if mu <= 0:
        raise ValueError(f"正则化参数 μ 必须为正: {mu}")
    stiffness, mass = _singular_blocks(space, lumped)
    free, _ = dirichlet_split(space)
    full = stiffness @ U + mass @ regularized_nonlinearity(U, mu)
    return full[free]


def singular_jacobian(space: FeSpace, U: np.ndarray, mu: float, lumped: bool = False) -> sp.csr_matrix:
    """
    残差对自由节点的 Jacobian：K + M·diag(F'(U))。
    集中质量时反应块为对角阵、整体对称正定；一致质量时一般不对称。
    """
    if mu <= 0:
        raise ValueError(f"正则化参数 μ 必须为正: {mu}")
    stiffness, mass = _singular_blocks(space, lumped)
    free, _ = dirichlet_split(space)
    reaction = mass @ sp.diags(regularized_derivative(U, mu))
    jac = (stiffness + reaction).tocsr()
    return jac[free][:, free].tocsr()


def default_mu(N: int, power: int = 2) -> float:
    """μ = N^{-power}；默认 N^{-2}，集中质量可取 N^{-3}"""
    if N < 1 or power < 1:
        raise ValueError(f"μ 参数非法: N={N}, power={power}")
    return math.pow(N, -power)

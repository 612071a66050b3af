# -*- coding: utf-8 -*-
"""
一维网格生成

提供实验中用到的五类一维网格：
- 均匀网格
- Bakhvalov 型层适应网格（层内先均匀后渐变，σ 之后均匀）
- Shishkin 分段均匀网格
- 分级网格 x_i = (i/N)^4
- 一维 Hessian 度量下的均匀网格

以及在一维 Hessian 度量下审计网格单元长度的工具。
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from logger_config import get_logger

log = get_logger(__name__)

# 单元度量长度所用的 Gauss 点数
METRIC_GAUSS_POINTS = 5


class MeshKind(str, Enum):
    UNIFORM = 'Uniform'
    BAKHVALOV = 'Bakhvalov'
    SHISHKIN = 'Shishkin'
    GRADED_POWER = 'GradedPower'
    HESSIAN_UNIFORM = 'HessianUniform'


@dataclass(frozen=True)
class Mesh1D:
    """严格递增的一维节点向量及其生成参数"""
    nodes: np.ndarray
    kind: MeshKind
    eps: Optional[float] = None
    r: Optional[int] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError(f"网格至少需要两个节点: size={nodes.size}")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError(f"{self.kind.value} 网格节点必须严格递增")
        nodes.flags.writeable = False
        object.__setattr__(self, 'nodes', nodes)

    @property
    def n_intervals(self) -> int:
        return self.nodes.size - 1

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def h_min(self) -> float:
        """最小区间长度（层区域中的 h）"""
        return float(self.spacing.min())

    def metadata(self) -> dict:
        """CSV 元数据中记录的 (kind, ε, r, N, σ)"""
        return {
            'kind': self.kind.value,
            'eps': self.eps,
            'r': self.r,
            'N': self.n_intervals,
            'sigma': self.sigma,
        }


def _check_count(N: int, name: str = 'N') -> None:
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"{name} 必须为正整数: {N}")


def _check_eps(eps: float) -> None:
    if not (0.0 < eps <= 1.0):
        raise ValueError(f"ε 必须满足 0 < ε ≤ 1: {eps}")


def uniform_mesh(a: float, b: float, N: int) -> Mesh1D:
    """[a, b] 上 N 个区间的均匀网格"""
    _check_count(N)
    if not a < b:
        raise ValueError(f"区间退化: a={a}, b={b}")
    nodes = a + (b - a) * np.arange(N + 1) / N
    nodes[-1] = b
    return Mesh1D(nodes, MeshKind.UNIFORM)


def bakhvalov_sigma(eps: float, r: int) -> float:
    """过渡点 σ = ε(r+1)(|ln ε|+1)"""
    return eps * (r + 1) * (abs(math.log(eps)) + 1.0)


def bakhvalov_mesh(eps: float, r: int, N: int) -> Mesh1D:
    """
    Bakhvalov 型网格：σ ≥ 3/4 时为 [0,1] 上均匀网格；
    否则前 3N/4 个区间由 x(t) 生成，[σ,1] 上 N/4 个均匀区间。
    """
    _check_eps(eps)
    _check_count(N)
    if r not in (1, 2, 3):
        raise ValueError(f"不支持的单元阶数 r={r}")
    if N % 4 != 0:
        raise ValueError(f"Bakhvalov 网格要求 N 能被 4 整除: N={N}")

    sigma = bakhvalov_sigma(eps, r)
    if sigma >= 0.75:
        mesh = uniform_mesh(0.0, 1.0, N)
        return Mesh1D(mesh.nodes, MeshKind.BAKHVALOV, eps=eps, r=r, sigma=sigma)

    n_layer = 3 * N // 4
    scale = eps * (r + 1)
    # t_i = (2-ε)·i/(3N/4)，i = 3N/4 时 t = 2-ε、x(t) = σ
    t = (2.0 - eps) * np.arange(n_layer + 1) / n_layer
    layer = np.where(t <= 1.0, scale * t, scale * (1.0 - np.log(2.0 - np.maximum(t, 1.0))))
    layer[-1] = sigma

    tail = sigma + (1.0 - sigma) * np.arange(1, N // 4 + 1) / (N // 4)
    tail[-1] = 1.0
    nodes = np.concatenate([layer, tail])
    log.debug(f"Bakhvalov 网格: ε={eps}, r={r}, N={N}, σ={sigma:.6e}")
    return Mesh1D(nodes, MeshKind.BAKHVALOV, eps=eps, r=r, sigma=sigma)


def shishkin_sigma(eps: float, N: int) -> float:
    """过渡点 σ = min{2ε ln N, 1/2}"""
    return min(2.0 * eps * math.log(N), 0.5)


def shishkin_mesh(eps: float, N: int) -> Mesh1D:
    """Shishkin 网格：(0,σ) 与 (σ,1) 上各 N/2 个等距区间"""
    _check_eps(eps)
    _check_count(N)
    if N % 2 != 0 or N < 4:
        raise ValueError(f"Shishkin 网格要求 N 为不小于 4 的偶数: N={N}")

    sigma = shishkin_sigma(eps, N)
    half = N // 2
    fine = sigma * np.arange(half + 1) / half
    coarse = sigma + (1.0 - sigma) * np.arange(1, half + 1) / half
    fine[-1] = sigma
    coarse[-1] = 1.0
    nodes = np.concatenate([fine, coarse])
    return Mesh1D(nodes, MeshKind.SHISHKIN, eps=eps, sigma=sigma)


def graded_mesh(N: int) -> Mesh1D:
    """分级网格 x_i = (i/N)^4"""
    _check_count(N)
    nodes = (np.arange(N + 1) / N) ** 4
    nodes[-1] = 1.0
    return Mesh1D(nodes, MeshKind.GRADED_POWER)


def hessian_uniform_mesh(eps: float, N: int) -> Mesh1D:
    """
    一维 Hessian 度量下的均匀网格：x_i = x((1 - e^{-1}) i/N)，x(t) = -2ε ln(1 - t)，
    末节点直接取 2ε。
    """
    if eps <= 0:
        raise ValueError(f"ε 必须为正: {eps}")
    _check_count(N)
    t = (1.0 - math.exp(-1.0)) * np.arange(N + 1) / N
    nodes = -2.0 * eps * np.log1p(-t)
    nodes[0] = 0.0
    nodes[-1] = 2.0 * eps
    return Mesh1D(nodes, MeshKind.HESSIAN_UNIFORM, eps=eps, sigma=2.0 * eps)


def metric_cell_lengths_1d(mesh: Mesh1D, hessian_abs: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """
    每个单元在一维 Hessian 度量下的长度 ∫_cell |u''(x)|^{1/2} dx，
    每单元用 5 点 Gauss 求积近似。
    """
    xi, w = np.polynomial.legendre.leggauss(METRIC_GAUSS_POINTS)
    left = mesh.nodes[:-1, None]
    width = mesh.spacing[:, None]
    points = left + 0.5 * width * (xi[None, :] + 1.0)

    samples = np.asarray(hessian_abs(points), dtype=float)
    samples = np.broadcast_to(samples, points.shape)
    if np.any(samples < 0):
        raise ValueError("Hessian 绝对值采样出现负值")

    return 0.5 * width[:, 0] * (np.sqrt(samples) @ w)


def quasi_uniformity_ratio(lengths: np.ndarray) -> float:
    """度量长度的 max/min 比值"""
    lengths = np.asarray(lengths, dtype=float)
    if lengths.size == 0 or lengths.min() <= 0:
        raise ValueError("度量长度必须为正")
    return float(lengths.max() / lengths.min())

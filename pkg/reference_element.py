# -*- coding: utf-8 -*-
"""
参考三角形 (0,0)-(1,0)-(0,1) 上的求积公式与 r 阶拉格朗日基函数。

局部节点为等距重心坐标点 (p/r, q/r)，p + q ≤ r，按 q 外层、p 内层排序；
于是局部顶点 (0,0)、(1,0)、(0,1) 分别是第 0、第 r、最后一个局部节点。
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

SUPPORTED_DEGREES = (1, 2, 3)


@lru_cache(maxsize=None)
def triangle_quadrature(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    参考三角形上对总次数 ≤ degree 的多项式精确的求积公式。

    采用折叠（Duffy）变换 x = u(1-v), y = v 下的张量 Gauss-Legendre 积，
    权重之和为参考三角形面积 1/2。

    Returns:
        (points, weights)，points 形状 (n, 2)
    """
    if degree < 0:
        raise ValueError(f"求积阶数不能为负: {degree}")
    n = max(1, (degree + 3) // 2)
    xi, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (xi + 1.0)
    ws = 0.5 * w

    u, v = np.meshgrid(s, s, indexing='ij')
    wu, wv = np.meshgrid(ws, ws, indexing='ij')
    points = np.column_stack([(u * (1.0 - v)).ravel(), v.ravel()])
    weights = (wu * wv * (1.0 - v)).ravel()
    points.flags.writeable = False
    weights.flags.writeable = False
    return points, weights


def lattice_indices(r: int) -> np.ndarray:
    """局部节点的格点坐标 (p, q)，形状 (n_local, 2)"""
    return np.array([(p, q) for q in range(r + 1) for p in range(r + 1 - q)], dtype=int)


def _monomial_exponents(r: int) -> np.ndarray:
    return np.array([(total - b, b) for total in range(r + 1) for b in range(total + 1)], dtype=int)


def _monomials(points: np.ndarray, exps: np.ndarray) -> np.ndarray:
    x = points[:, 0:1]
    y = points[:, 1:2]
    return x ** exps[None, :, 0] * y ** exps[None, :, 1]


def _monomial_gradients(points: np.ndarray, exps: np.ndarray) -> np.ndarray:
    x = points[:, 0:1]
    y = points[:, 1:2]
    a = exps[None, :, 0]
    b = exps[None, :, 1]
    dx = np.where(a > 0, a * x ** np.maximum(a - 1, 0), 0.0) * y ** b
    dy = x ** a * np.where(b > 0, b * y ** np.maximum(b - 1, 0), 0.0)
    return np.stack([dx, dy], axis=-1)


@dataclass(frozen=True)
class LagrangeBasis:
    """参考三角形上的 r 阶拉格朗日基函数"""
    degree: int
    lattice: np.ndarray
    coefficients: np.ndarray
    exponents: np.ndarray

    @property
    def n_local(self) -> int:
        return self.lattice.shape[0]

    @property
    def vertex_locals(self) -> Tuple[int, int, int]:
        r = self.degree
        return 0, r, self.n_local - 1

    @property
    def nodes(self) -> np.ndarray:
        return self.lattice / self.degree

    def values(self, points: np.ndarray) -> np.ndarray:
        """基函数值，形状 (n_points, n_local)"""
        return _monomials(np.atleast_2d(points), self.exponents) @ self.coefficients

    def gradients(self, points: np.ndarray) -> np.ndarray:
        """参考坐标下的梯度，形状 (n_points, n_local, 2)"""
        grads = _monomial_gradients(np.atleast_2d(points), self.exponents)
        return np.einsum('pkd,kj->pjd', grads, self.coefficients)


@lru_cache(maxsize=None)
def lagrange_basis(r: int) -> LagrangeBasis:
    """构造 r 阶拉格朗日基（Vandermonde 矩阵求逆）"""
    if r not in SUPPORTED_DEGREES:
        raise ValueError(f"不支持的拉格朗日单元阶数 r={r}，可选 {SUPPORTED_DEGREES}")
    lattice = lattice_indices(r)
    exps = _monomial_exponents(r)
    vandermonde = _monomials(lattice / r, exps)
    coefficients = np.linalg.inv(vandermonde)
    return LagrangeBasis(r, lattice, coefficients, exps)

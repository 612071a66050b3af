# -*- coding: utf-8 -*-
"""
张量网格三角剖分

在张量积网格的每个矩形单元中画一条对角线得到三角剖分，对角线方向由剖分模式决定：
- A：全部 Backslash（左上到右下）
- B：偶数单元行 Slash、奇数单元行 Backslash（按行交替的人字形）
- C：每两行单元重复 C3(k₀)，k₀ 未指定时取 Nx//2（人字形对折）；层适应网格上由实验编排取最靠近 x=ε 的节点列
- C3(k₀)：两行单元条带，关于中间节点行镜像、跨 k₀ 列翻转，节点 (x_{k₀}, y_mid) 不与任何对角线相连
- CHECKER：(i+j) 为偶数时 Slash（棋盘式）
- CUSTOM：用户给定的 (i, j) -> Orientation 规则
"""
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from logger_config import get_logger
from mesh1d import Mesh1D
from reference_element import SUPPORTED_DEGREES, lattice_indices

log = get_logger(__name__)


class Orientation(str, Enum):
    SLASH = 'Slash'          # 左下 -> 右上
    BACKSLASH = 'Backslash'  # 左上 -> 右下


PATTERN_NAMES = ('A', 'B', 'C', 'C3', 'CHECKER', 'CUSTOM')


@dataclass(frozen=True)
class PatternSpec:
    """对角线方向模式"""
    name: str
    k0: Optional[int] = None
    rule: Optional[Callable[[int, int], Union[Orientation, bool]]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.name not in PATTERN_NAMES:
            raise ValueError(f"未知的剖分模式: {self.name}，可选 {PATTERN_NAMES}")
        if self.name == 'C3' and self.k0 is None:
            raise ValueError("C3 模式需要指定翻转列 k0")
        if self.name == 'CUSTOM' and self.rule is None:
            raise ValueError("CUSTOM 模式需要提供方向规则")

    @classmethod
    def parse(cls, text: str, k0: Optional[int] = None) -> 'PatternSpec':
        """从命令行/JSON 字符串解析，例如 'A'、'C3'（配合 k0）"""
        return cls(text.strip().upper(), k0=k0)

    @classmethod
    def custom(cls, rule: Callable[[int, int], Union[Orientation, bool]]) -> 'PatternSpec':
        return cls('CUSTOM', rule=rule)

    @property
    def label(self) -> str:
        if self.name == 'C3':
            return f"C3({self.k0})"
        return self.name

    def slash_mask(self, nx: int, ny: int) -> np.ndarray:
        """
        返回形状 (nx, ny) 的布尔数组，True 表示该单元为 Slash。

        C 为人字形：偶数单元行在 k₀ 列及其右侧为 Slash，奇数行在 k₀ 左侧为 Slash，
        每条奇数节点行上的 (x_{k₀}, y_j) 只接 4 个三角形；棋盘式见 CHECKER。
        """
        i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing='ij')
        if self.name == 'A':
            return np.zeros((nx, ny), dtype=bool)
        if self.name == 'B':
            return j % 2 == 0
        if self.name in ('C', 'C3'):
            if self.name == 'C3' and ny != 2:
                raise ValueError(f"C3 模式只用于两行单元的条带: ny={ny}")
            k0 = nx // 2 if self.k0 is None else self.k0
            if not 0 < k0 < nx:
                raise ValueError(f"翻转列 k0 必须是内部节点列: k0={k0}, nx={nx}")
            return np.where(j % 2 == 0, i >= k0, i < k0)
        if self.name == 'CHECKER':
            return (i + j) % 2 == 0
        mask = np.empty((nx, ny), dtype=bool)
        for ci in range(nx):
            for cj in range(ny):
                value = self.rule(ci, cj)
                mask[ci, cj] = value == Orientation.SLASH if isinstance(value, Orientation) else bool(value)
        return mask


@dataclass(frozen=True, eq=False)
class TensorTriangulation:
    """张量网格加逐单元对角线方向；三角形顶点按逆时针存储"""
    xmesh: Mesh1D
    ymesh: Mesh1D
    pattern: PatternSpec
    slash: np.ndarray
    vertices: np.ndarray
    triangles: np.ndarray

    @property
    def nx(self) -> int:
        return self.xmesh.n_intervals

    @property
    def ny(self) -> int:
        return self.ymesh.n_intervals

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def domain_area(self) -> float:
        return (self.xmesh.b - self.xmesh.a) * (self.ymesh.b - self.ymesh.a)

    def vertex_index(self, i: int, j: int) -> int:
        return j * (self.nx + 1) + i

    def vertex_position(self, node: int) -> Tuple[int, int]:
        """顶点的网格位置 (i, j)"""
        return node % (self.nx + 1), node // (self.nx + 1)

    def orientation(self, i: int, j: int) -> Orientation:
        return Orientation.SLASH if self.slash[i, j] else Orientation.BACKSLASH

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True)
class NodePatch:
    """与某顶点相邻的三角形片"""
    node: int
    triangles: Tuple[int, ...]
    area: float
    neighbors: Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class FeSpace:
    """张量三角剖分上的 r 阶拉格朗日空间

    全局节点就是加密格点 (I, J)，I = 0..r·Nx，J = 0..r·Ny，编号 J·(r·Nx+1) + I。
    """
    degree: int
    triangulation: TensorTriangulation
    coords: np.ndarray
    cells: np.ndarray
    boundary: np.ndarray
    matrix_cache: Dict[str, object] = field(default_factory=dict, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def lattice_shape(self) -> Tuple[int, int]:
        r = self.degree
        return r * self.triangulation.nx + 1, r * self.triangulation.ny + 1

    def node_index(self, I: int, J: int) -> int:
        return J * self.lattice_shape[0] + I

    def vertex_node(self, vertex: int) -> int:
        """剖分顶点对应的全局节点编号"""
        i, j = self.triangulation.vertex_position(vertex)
        return self.node_index(self.degree * i, self.degree * j)

    def vertex_nodes(self) -> np.ndarray:
        tri = self.triangulation
        i, j = np.meshgrid(np.arange(tri.nx + 1), np.arange(tri.ny + 1), indexing='xy')
        return (self.degree * j * self.lattice_shape[0] + self.degree * i).ravel()

    def interpolate(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
        """节点插值 u^I"""
        values = func(self.coords[:, 0], self.coords[:, 1])
        return np.broadcast_to(np.asarray(values, dtype=float), (self.n_nodes,)).copy()


def build_triangulation(xmesh: Mesh1D, ymesh: Mesh1D, pattern: PatternSpec) -> TensorTriangulation:
    """由 x、y 方向网格与对角线模式构造协调三角剖分"""
    if xmesh is None or ymesh is None or xmesh.n_intervals < 1 or ymesh.n_intervals < 1:
        raise ValueError("三角剖分需要非空的 x、y 网格")
    nx, ny = xmesh.n_intervals, ymesh.n_intervals
    slash = pattern.slash_mask(nx, ny)

    X, Y = np.meshgrid(xmesh.nodes, ymesh.nodes, indexing='xy')
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing='ij')
    bl = (j * (nx + 1) + i).ravel()
    br = bl + 1
    tl = bl + nx + 1
    tr = tl + 1
    s = slash.ravel()

    # Slash: (BL, BR, TR), (BL, TR, TL)；Backslash: (BL, BR, TL), (BR, TR, TL)
    first = np.where(s[:, None], np.column_stack([bl, br, tr]), np.column_stack([bl, br, tl]))
    second = np.where(s[:, None], np.column_stack([bl, tr, tl]), np.column_stack([br, tr, tl]))
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = first
    triangles[1::2] = second

    slash.flags.writeable = False
    vertices.flags.writeable = False
    triangles.flags.writeable = False
    log.debug(f"构造三角剖分: 模式={pattern.label}, Nx={nx}, Ny={ny}, 三角形数={triangles.shape[0]}")
    return TensorTriangulation(xmesh, ymesh, pattern, slash, vertices, triangles)


def node_patch(tri: TensorTriangulation, node: int) -> NodePatch:
    """顶点的三角形片、总面积与边邻点（网格邻点加对角线端点）"""
    if not 0 <= node < tri.n_vertices:
        raise ValueError(f"顶点编号越界: {node}（共 {tri.n_vertices} 个顶点）")
    adjacent = np.nonzero(np.any(tri.triangles == node, axis=1))[0]
    area = float(tri.triangle_areas()[adjacent].sum())
    others = np.unique(tri.triangles[adjacent])
    neighbors = tuple(int(v) for v in others if v != node)
    return NodePatch(node, tuple(int(t) for t in adjacent), area, neighbors)


def _refined_nodes(mesh: Mesh1D, r: int) -> np.ndarray:
    left = mesh.nodes[:-1, None]
    width = mesh.spacing[:, None]
    inner = (left + width * np.arange(r)[None, :] / r).ravel()
    return np.append(inner, mesh.nodes[-1])


def lagrange_space(tri: TensorTriangulation, r: int) -> FeSpace:
    """构造 r 阶拉格朗日空间的全局节点、单元连接与边界节点集"""
    if r not in SUPPORTED_DEGREES:
        raise ValueError(f"不支持的拉格朗日单元阶数 r={r}，可选 {SUPPORTED_DEGREES}")
    nx = tri.nx
    n_i = r * nx + 1
    n_j = r * tri.ny + 1

    xr = _refined_nodes(tri.xmesh, r)
    yr = _refined_nodes(tri.ymesh, r)
    X, Y = np.meshgrid(xr, yr, indexing='xy')
    coords = np.column_stack([X.ravel(), Y.ravel()])

    vi = tri.triangles % (nx + 1)
    vj = tri.triangles // (nx + 1)
    lattice = lattice_indices(r)
    p = lattice[None, :, 0]
    q = lattice[None, :, 1]
    I = r * vi[:, 0:1] + p * (vi[:, 1:2] - vi[:, 0:1]) + q * (vi[:, 2:3] - vi[:, 0:1])
    J = r * vj[:, 0:1] + p * (vj[:, 1:2] - vj[:, 0:1]) + q * (vj[:, 2:3] - vj[:, 0:1])
    cells = J * n_i + I

    II, JJ = np.meshgrid(np.arange(n_i), np.arange(n_j), indexing='xy')
    on_boundary = (II == 0) | (II == n_i - 1) | (JJ == 0) | (JJ == n_j - 1)
    boundary = np.nonzero(on_boundary.ravel())[0]

    coords.flags.writeable = False
    cells.flags.writeable = False
    boundary.flags.writeable = False
    return FeSpace(r, tri, coords, cells, boundary)


def export_plain_text(tri: TensorTriangulation, path: Union[str, Path]) -> Path:
    """调试导出：每行一个顶点 "x y"，随后每行一个三角形 "a b c"（0 起始）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        for x, y in tri.vertices:
            f.write(f"{x:.17g} {y:.17g}\n")
        for a, b, c in tri.triangles:
            f.write(f"{a} {b} {c}\n")
    log.info(f"三角剖分已导出: {path}（{tri.n_vertices} 个顶点，{tri.n_triangles} 个三角形）")
    return path

# -*- coding: utf-8 -*-
"""张量三角剖分与拉格朗日空间"""
import numpy as np
import pytest

from mesh1d import bakhvalov_mesh, uniform_mesh
from reference_element import lagrange_basis
from triangulation import (Orientation, PatternSpec, build_triangulation,
                           export_plain_text, lagrange_space, node_patch)


def _tri(pattern, nx=8, ny=4, eps=1e-2):
    return build_triangulation(uniform_mesh(0.0, 2.0 * eps, nx), uniform_mesh(0.0, 1.0, ny), pattern)


@pytest.mark.parametrize('pattern', [
    PatternSpec('A'), PatternSpec('B'), PatternSpec('C'), PatternSpec('C', k0=3),
    PatternSpec('CHECKER'), PatternSpec.custom(lambda i, j: (i * j) % 3 == 0),
])
def test_triangulation_is_ccw_and_covers_domain(pattern):
    tri = _tri(pattern)
    assert tri.n_vertices == 9 * 5
    assert tri.n_triangles == 2 * 8 * 4
    areas = tri.triangle_areas()
    assert np.all(areas > 0)
    assert areas.sum() == pytest.approx(tri.domain_area, rel=1e-12)


def test_pattern_a_is_all_backslash():
    tri = _tri(PatternSpec('A'))
    assert not tri.slash.any()
    assert tri.orientation(3, 2) == Orientation.BACKSLASH


def test_pattern_b_alternates_by_row():
    tri = _tri(PatternSpec('B'))
    assert tri.slash[:, 0].all() and tri.slash[:, 2].all()
    assert not tri.slash[:, 1].any() and not tri.slash[:, 3].any()


def test_pattern_c_chevron():
    tri = _tri(PatternSpec('C'))
    k0 = 4
    assert tri.slash[k0:, 0].all() and not tri.slash[:k0, 0].any()
    assert tri.slash[:k0, 1].all() and not tri.slash[k0:, 1].any()
    # 每两行单元重复
    assert np.array_equal(tri.slash[:, 0], tri.slash[:, 2])
    assert np.array_equal(tri.slash[:, 1], tri.slash[:, 3])


def test_pattern_c_flip_node_on_odd_rows_has_four_triangles():
    tri = _tri(PatternSpec('C'))
    k0 = 4
    for j in (1, 3):
        assert len(node_patch(tri, tri.vertex_index(k0, j)).triangles) == 4
    assert len(node_patch(tri, tri.vertex_index(k0, 2)).triangles) == 8


def test_pattern_checker():
    tri = _tri(PatternSpec('CHECKER'))
    i, j = np.meshgrid(np.arange(8), np.arange(4), indexing='ij')
    assert np.array_equal(tri.slash, (i + j) % 2 == 0)


def test_c3_requires_two_cell_rows_and_k0():
    with pytest.raises(ValueError):
        PatternSpec('C3')
    with pytest.raises(ValueError):
        _tri(PatternSpec('C3', k0=4), ny=4)
    with pytest.raises(ValueError):
        _tri(PatternSpec('C3', k0=8), ny=2)


def test_unknown_pattern():
    with pytest.raises(ValueError):
        PatternSpec.parse('D')
    assert PatternSpec.parse(' c3 ', 5) == PatternSpec('C3', k0=5)
    assert PatternSpec('C3', k0=5).label == 'C3(5)'


def test_c3_flip_node_has_four_triangles():
    tri = _tri(PatternSpec('C3', k0=4), ny=2)
    for i in range(1, 8):
        patch = node_patch(tri, tri.vertex_index(i, 1))
        assert len(patch.triangles) == (4 if i == 4 else 6)


def test_c_pattern_triangle_counts_on_node_rows():
    tri = _tri(PatternSpec('C'), ny=4)
    assert len(node_patch(tri, tri.vertex_index(4, 1)).triangles) == 4
    assert len(node_patch(tri, tri.vertex_index(4, 2)).triangles) == 8
    assert len(node_patch(tri, tri.vertex_index(2, 1)).triangles) == 6


def test_checker_triangle_counts():
    tri = _tri(PatternSpec('CHECKER'))
    for i, j in [(1, 1), (2, 1), (3, 2), (4, 2)]:
        expected = 4 if (i + j) % 2 == 1 else 8
        assert len(node_patch(tri, tri.vertex_index(i, j)).triangles) == expected


def test_node_patch_area_and_neighbors():
    tri = _tri(PatternSpec('A'))
    h, H = 2e-2 / 8, 0.25
    node = tri.vertex_index(3, 2)
    patch = node_patch(tri, node)
    assert patch.area == pytest.approx(3.0 * h * H, rel=1e-12)
    assert len(patch.neighbors) == 6
    assert tri.vertex_index(4, 1) in patch.neighbors and tri.vertex_index(2, 3) in patch.neighbors
    with pytest.raises(ValueError):
        node_patch(tri, tri.n_vertices)


def test_vertex_index_round_trip():
    tri = _tri(PatternSpec('B'))
    assert tri.vertex_position(tri.vertex_index(5, 3)) == (5, 3)
    assert np.allclose(tri.vertices[tri.vertex_index(5, 3)], [5 * 2e-2 / 8, 0.75])


@pytest.mark.parametrize('r', [1, 2, 3])
@pytest.mark.parametrize('name', ['A', 'B', 'C'])
def test_lagrange_space_layout(r, name):
    xmesh = bakhvalov_mesh(2.0 ** -8, r, 16)
    tri = build_triangulation(xmesh, uniform_mesh(0.0, 1.0, 4), PatternSpec(name))
    space = lagrange_space(tri, r)
    n_i, n_j = space.lattice_shape
    assert (n_i, n_j) == (16 * r + 1, 4 * r + 1)
    assert space.n_nodes == n_i * n_j
    assert space.cells.shape == (tri.n_triangles, (r + 1) * (r + 2) // 2)
    assert space.boundary.size == 2 * (n_i - 1) + 2 * (n_j - 1)
    assert np.allclose(space.coords[space.vertex_nodes()], tri.vertices)

    # 单元局部节点与仿射映射下的参考节点一致
    basis = lagrange_basis(r)
    p = tri.vertices[tri.triangles]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
    mapped = p[:, 0][:, None, :] + np.einsum('tdk,qk->tqd', jac, basis.nodes)
    assert np.allclose(space.coords[space.cells], mapped, rtol=1e-12, atol=1e-15)


def test_every_node_belongs_to_a_cell():
    space = lagrange_space(_tri(PatternSpec('C')), 3)
    assert np.array_equal(np.unique(space.cells), np.arange(space.n_nodes))


def test_interpolate():
    space = lagrange_space(_tri(PatternSpec('A')), 2)
    values = space.interpolate(lambda x, y: x + 2.0 * y)
    assert np.allclose(values, space.coords[:, 0] + 2.0 * space.coords[:, 1])
    assert space.interpolate(lambda x, y: 1.0).shape == (space.n_nodes,)


def test_lagrange_space_rejects_degree():
    with pytest.raises(ValueError):
        lagrange_space(_tri(PatternSpec('A')), 4)


def test_build_triangulation_rejects_missing_mesh():
    with pytest.raises(ValueError):
        build_triangulation(None, uniform_mesh(0.0, 1.0, 2), PatternSpec('A'))


def test_export_plain_text(tmp_path):
    tri = _tri(PatternSpec('B'), nx=4, ny=2)
    path = export_plain_text(tri, tmp_path / 'mesh' / 'tri.txt')
    lines = path.read_text(encoding='utf-8').splitlines()
    assert len(lines) == tri.n_vertices + tri.n_triangles
    assert lines[tri.n_vertices].split() == [str(v) for v in tri.triangles[0]]

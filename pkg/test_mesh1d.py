# -*- coding: utf-8 -*-
"""一维网格生成测试"""
import math

import numpy as np
import pytest

from mesh1d import (Mesh1D, MeshKind, bakhvalov_mesh, bakhvalov_sigma,
                    graded_mesh, hessian_uniform_mesh, metric_cell_lengths_1d,
                    quasi_uniformity_ratio, shishkin_mesh, shishkin_sigma,
                    uniform_mesh)


def test_uniform_mesh_endpoints_and_spacing():
    mesh = uniform_mesh(0.0, 2e-3, 16)
    assert mesh.n_intervals == 16
    assert mesh.a == 0.0 and mesh.b == 2e-3
    assert np.allclose(mesh.spacing, 2e-3 / 16, rtol=1e-12)
    assert mesh.kind == MeshKind.UNIFORM


@pytest.mark.parametrize('eps', [2.0 ** -8, 2.0 ** -16, 2.0 ** -24])
@pytest.mark.parametrize('r', [1, 2, 3])
def test_bakhvalov_transition_point(eps, r):
    N = 64
    mesh = bakhvalov_mesh(eps, r, N)
    sigma = bakhvalov_sigma(eps, r)
    assert mesh.n_intervals == N
    assert mesh.nodes[3 * N // 4] == pytest.approx(sigma, rel=1e-14)
    assert mesh.b == 1.0
    assert np.all(np.diff(mesh.nodes) > 0)
    # σ 之后 N/4 个等距区间
    assert np.allclose(np.diff(mesh.nodes[3 * N // 4:]), (1.0 - sigma) / (N // 4), rtol=1e-10)


def test_bakhvalov_layer_part_is_uniform_up_to_t_one():
    eps, N = 2.0 ** -16, 64
    mesh = bakhvalov_mesh(eps, 1, N)
    t = (2.0 - eps) * np.arange(3 * N // 4 + 1) / (3 * N // 4)
    inside = t <= 1.0
    assert np.allclose(mesh.nodes[:inside.size][inside], 2.0 * eps * t[inside], rtol=1e-12)


def test_bakhvalov_spacing_is_continuous_across_branches():
    mesh = bakhvalov_mesh(2.0 ** -8, 1, 64)
    spacing = mesh.spacing[:30]
    assert np.all(spacing[1:] / spacing[:-1] < 2.0)
    assert np.all(spacing[1:] / spacing[:-1] > 0.99)


def test_bakhvalov_layer_metric_ratio_bounded_by_e():
    eps = 2.0 ** -8
    mesh = bakhvalov_mesh(eps, 1, 64)
    lengths = metric_cell_lengths_1d(mesh, lambda x: np.exp(-x / eps) / eps ** 2)
    assert quasi_uniformity_ratio(lengths[:48]) <= math.e + 0.05


def test_bakhvalov_wide_layer_falls_back_to_uniform():
    mesh = bakhvalov_mesh(1.0, 1, 32)
    assert mesh.sigma >= 0.75
    assert np.allclose(mesh.nodes, np.linspace(0.0, 1.0, 33))
    assert mesh.kind == MeshKind.BAKHVALOV


def test_bakhvalov_requires_n_divisible_by_four():
    with pytest.raises(ValueError):
        bakhvalov_mesh(1e-3, 1, 30)


@pytest.mark.parametrize('eps,N', [(1e-3, 64), (1.0, 32), (2.0 ** -16, 128)])
def test_shishkin_mesh(eps, N):
    mesh = shishkin_mesh(eps, N)
    sigma = shishkin_sigma(eps, N)
    assert sigma == min(2 * eps * math.log(N), 0.5)
    assert mesh.nodes[N // 2] == pytest.approx(sigma, rel=1e-14)
    assert np.allclose(np.diff(mesh.nodes[:N // 2 + 1]), sigma / (N // 2), rtol=1e-10)
    assert np.allclose(np.diff(mesh.nodes[N // 2:]), (1.0 - sigma) / (N // 2), rtol=1e-10)


def test_shishkin_rejects_odd_n():
    with pytest.raises(ValueError):
        shishkin_mesh(1e-3, 33)


def test_graded_mesh_nodes():
    mesh = graded_mesh(16)
    assert np.allclose(mesh.nodes, (np.arange(17) / 16) ** 4)
    assert mesh.nodes[0] == 0.0 and mesh.nodes[-1] == 1.0


@pytest.mark.parametrize('eps', [1.0, 2.0 ** -8, 2.0 ** -16])
def test_hessian_uniform_mesh_is_uniform_in_metric(eps):
    mesh = hessian_uniform_mesh(eps, 64)
    assert mesh.nodes[0] == 0.0
    assert mesh.nodes[-1] == 2.0 * eps
    lengths = metric_cell_lengths_1d(mesh, lambda x: np.exp(-x / eps) / eps ** 2)
    assert quasi_uniformity_ratio(lengths) == pytest.approx(1.0, abs=1e-8)
    assert lengths.sum() == pytest.approx(2.0 * (1.0 - math.exp(-1.0)), rel=1e-8)


def test_graded_mesh_is_uniform_in_sqrt_metric_away_from_origin():
    lengths = metric_cell_lengths_1d(graded_mesh(32), lambda x: 0.25 * x ** -1.5)
    assert quasi_uniformity_ratio(lengths[1:]) < 1.05


def test_shishkin_mesh_is_not_quasi_uniform():
    ratios = []
    for eps in (2.0 ** -4, 2.0 ** -6):
        lengths = metric_cell_lengths_1d(shishkin_mesh(eps, 64), lambda x, e=eps: np.exp(-x / e) / e ** 2)
        ratios.append(quasi_uniformity_ratio(lengths))
    assert ratios[1] > ratios[0] > 1.0


@pytest.mark.parametrize('factory', [
    lambda: uniform_mesh(1.0, 1.0, 4),
    lambda: uniform_mesh(0.0, 1.0, 0),
    lambda: bakhvalov_mesh(0.0, 1, 16),
    lambda: bakhvalov_mesh(1e-3, 4, 16),
    lambda: shishkin_mesh(2.0, 16),
    lambda: hessian_uniform_mesh(-1.0, 16),
    lambda: Mesh1D(np.array([0.0, 0.5, 0.5, 1.0]), MeshKind.UNIFORM),
])
def test_invalid_mesh_parameters(factory):
    with pytest.raises(ValueError):
        factory()


def test_mesh_nodes_are_read_only():
    mesh = uniform_mesh(0.0, 1.0, 4)
    with pytest.raises(ValueError):
        mesh.nodes[1] = 0.3


def test_quasi_uniformity_ratio_rejects_degenerate_lengths():
    with pytest.raises(ValueError):
        quasi_uniformity_ratio(np.array([1.0, 0.0]))

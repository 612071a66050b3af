# -*- coding: utf-8 -*-
"""实验编排、预设与 CSV 输出"""
import json

import pytest

import experiments
from analysis import RateKind
from experiments import (CSV_COLUMNS, EPS_REPRESENTATIVE, EPS_SWEEP, EPS_TABLE,
                         ExperimentConfig, ExperimentError, ExperimentRow,
                         SweepCheck, attach_rates, build_x_mesh, layer_pattern,
                         normalize_id, preset, rows_to_frame, run_cell,
                         run_custom, run_experiment, run_table, series_label,
                         sweep_consistency, with_eps_sweep, write_csv)
from solver import NotSPDError

EPS_SMALL = 2.0 ** -16


def _row(N, error, eps=EPS_SMALL, pattern='C', rate_kind='Plain'):
    return ExperimentRow(table='t', problem='ReactionDiffusion', mesh='Uniform', pattern=pattern,
                         degree=1, quadrature='LumpedMass', N=N, M=N // 4, eps=eps, error=error,
                         rate_kind=rate_kind)


def test_config_defaults_and_properties():
    config = ExperimentConfig(eps=[1e-3], mesh='Shishkin', N=[32, 64])
    assert config.rate_kind == RateKind.SHISHKIN_LOG
    assert config.M(64) == 16
    assert ExperimentConfig(m_rule='Fixed(16)').M(256) == 16
    assert ExperimentConfig(problem='Singular', mesh='GradedPower').eps_values == [None]
    assert config.pattern_spec.name == 'A'


@pytest.mark.parametrize('kwargs', [
    dict(N=[30]),
    dict(N=[]),
    dict(problem='Heat'),
    dict(mesh='Random'),
    dict(pattern='Z'),
    dict(quadrature='LumpedMass', degree=2),
    dict(problem='Singular', degree=2),
    dict(m_rule='Half'),
    dict(eps=[-1.0]),
    dict(initial_guess='zero'),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ExperimentConfig(**kwargs)


def test_config_from_json(tmp_path):
    path = tmp_path / 'custom.json'
    path.write_text(json.dumps({'table': 'mine', 'eps': [0.01], 'pattern': 'B', 'N': [8, 16]}), encoding='utf-8')
    config = ExperimentConfig.from_json(path)
    assert config.table == 'mine' and config.pattern == 'B' and config.N == [8, 16]
    assert ExperimentConfig.from_dict(config.to_dict()) == config
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({'table': 'x', 'colour': 'red'})


def test_preset_tables():
    table2 = preset('table2')
    assert len(table2) == 4
    assert {(c.pattern, c.quadrature) for c in table2} == {
        ('A', 'Consistent'), ('C', 'Consistent'), ('A', 'LumpedMass'), ('C', 'LumpedMass')}
    for table_id in experiments.TABLE_IDS:
        for config in preset(table_id):
            assert config.eps[:3] == EPS_TABLE
    table4 = preset(4)
    assert sum(c.m_rule == 'Fixed(16)' for c in table4) == 4
    assert all(c.mesh == 'HessianUniform' for c in table4)
    table9 = preset('table9')
    assert table9[0].degree == 3 and table9[0].N == [16, 32, 64, 128]
    assert preset('fig4')[0].eps_values == [None]
    assert preset('fig4')[0].N == [32, 64, 128, 256, 512]
    with pytest.raises(ValueError):
        preset('table10')


def test_normalize_id():
    assert normalize_id(2) == 'table2'
    assert normalize_id('5') == 'table5'
    assert normalize_id('Table 3') == 'table3'
    assert normalize_id('fig4') == 'fig4'


def test_eps_sweep_expands_representative_value():
    configs = with_eps_sweep(preset('table2'))
    assert configs[0].eps == [1.0, 2.0 ** -8] + EPS_SWEEP
    assert len(configs[0].eps) == 11


def test_attach_rates_pairs_n_with_2n():
    rows = [_row(32, 4e-4), _row(64, 1e-4), _row(32, 1e-3, eps=1.0), _row(128, 5e-5)]
    attach_rates(rows)
    assert rows[0].rate == pytest.approx(2.0)
    assert rows[1].rate == pytest.approx(1.0)
    assert rows[2].rate is None
    assert rows[3].rate is None


def test_sweep_consistency():
    rows = [_row(64, 1.2345e-3), _row(64, 1.2349e-3, eps=2.0 ** -20), _row(64, 1.3e-3, eps=2.0 ** -24),
            _row(64, 9.0e-4, eps=2.0 ** -8)]
    checks = sweep_consistency(rows)
    assert [c.eps for c in checks] == [2.0 ** -20, 2.0 ** -24]
    assert checks[0].agrees and not checks[1].agrees
    assert SweepCheck('x', 64, 2.0 ** -18, 1.0e-3, 1.004e-3).agrees


def test_rows_to_frame_formatting():
    rows = attach_rates([_row(32, 2.99e-3), _row(64, 1.48e-3)])
    rows[0].seconds = 0.25
    frame = rows_to_frame(rows, timing=False)
    assert list(frame.columns) == CSV_COLUMNS
    assert frame.loc[0, 'error'] == '2.99000e-03'
    assert frame.loc[0, 'eps'] == '1.52588e-05'
    assert frame.loc[0, 'rate'] == '1.01'
    assert frame.loc[1, 'rate'] == ''
    assert frame.loc[0, 'seconds'] == ''
    assert rows_to_frame(rows, timing=True).loc[0, 'seconds'] == '0.250'
    assert 'l2_error' in rows_to_frame(rows, with_l2=True).columns


def test_csv_is_deterministic_across_thread_counts(tmp_path):
    config = ExperimentConfig(table='det', eps=[1.0, 2.0 ** -8], pattern='C', quadrature='LumpedMass', N=[8, 16, 32])
    first = write_csv(run_experiment(config, threads=1), tmp_path / 'a.csv')
    second = write_csv(run_experiment(config, threads=4), tmp_path / 'b.csv')
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text(encoding='utf-8').splitlines()
    assert lines[0] == ','.join(CSV_COLUMNS)
    assert len(lines) == 1 + 6
    # 行顺序：N 升序，同一 N 内按 ε 配置顺序
    assert [line.split(',')[6] for line in lines[1:]] == ['8', '8', '16', '16', '32', '32']


def test_build_x_mesh_domains():
    eps = 2.0 ** -8
    uniform = build_x_mesh(ExperimentConfig(eps=[eps]), 32, eps)
    assert uniform.b == pytest.approx(2.0 * eps)
    aniso = build_x_mesh(ExperimentConfig(problem='AnisotropicDiffusion', eps=[eps]), 32, eps)
    assert aniso.b == pytest.approx(2.0)
    bakhvalov = build_x_mesh(ExperimentConfig(mesh='Bakhvalov', eps=[eps]), 32, eps)
    assert bakhvalov.b == 1.0
    graded = build_x_mesh(ExperimentConfig(problem='Singular', mesh='GradedPower'), 32, None)
    assert graded.nodes[1] == pytest.approx(32.0 ** -4)


def test_run_cell_wraps_solver_failures(monkeypatch):
    def failing_solve(system, *args, **kwargs):
        raise NotSPDError('forced')

    monkeypatch.setattr(experiments, 'solve_spd', failing_solve)
    with pytest.raises(ExperimentError) as excinfo:
        run_cell(ExperimentConfig(eps=[0.5], N=[8]), 8, 0.5)
    assert excinfo.value.N == 8
    assert excinfo.value.eps == 0.5
    assert 'N=8' in str(excinfo.value)


def test_run_cell_singular_problem():
    config = ExperimentConfig(table='fig4', problem='Singular', mesh='GradedPower', quadrature='LumpedMass',
                              N=[16], mu_power=3)
    row = run_cell(config, 16, None)
    assert row.eps is None and row.M == 4
    assert row.iterations >= 1
    assert 0.0 < row.error < 0.05


def test_run_custom_writes_l2_column(tmp_path):
    config = ExperimentConfig(table='mine', eps=[0.1], pattern='B', N=[8, 16], measure_l2=True,
                              output=str(tmp_path / 'out' / 'mine.csv'))
    path = run_custom(config, threads=1)
    assert path == tmp_path / 'out' / 'mine.csv'
    header = path.read_text(encoding='utf-8').splitlines()[0]
    assert header.endswith(',l2_error')


def test_run_table_writes_figure_series(tmp_path, monkeypatch):
    small = [ExperimentConfig(table='fig1', eps=[1.0], pattern=p, N=[8, 16]) for p in ('A', 'C')]
    monkeypatch.setattr(experiments, 'preset', lambda key: small)
    path = run_table('fig1', tmp_path, threads=1)
    assert path == tmp_path / 'fig1.csv'
    series = sorted(p.name for p in (tmp_path / 'fig1_series').iterdir())
    assert len(series) == 2
    assert series[0] == f"fig1_{series_label(run_cell(small[0], 8, 1.0))}.csv"


# 下列数值在 ε ≤ 2⁻¹⁶ 时可由一维约化独立推出（节点行在 y 方向解耦）


def _error(config, N, eps=EPS_SMALL):
    return run_cell(config, N, eps).error


def test_uniform_reaction_diffusion_pattern_a():
    consistent = ExperimentConfig(eps=[EPS_SMALL], N=[64, 128])
    rows = run_experiment(consistent, threads=1)
    assert rows[0].error == pytest.approx(1.26e-5, rel=0.02)
    assert rows[0].rate == pytest.approx(2.0, abs=0.05)
    lumped = ExperimentConfig(eps=[EPS_SMALL], quadrature='LumpedMass', N=[64])
    assert _error(lumped, 64) == pytest.approx(1.19e-5, rel=0.02)


def test_uniform_reaction_diffusion_pattern_c_lumped():
    config = ExperimentConfig(eps=[EPS_SMALL], pattern='C', quadrature='LumpedMass', N=[32, 64])
    rows = run_experiment(config, threads=1)
    assert rows[0].error == pytest.approx(2.99e-3, rel=0.05)
    assert rows[1].error == pytest.approx(1.48e-3, rel=0.05)
    assert rows[0].rate == pytest.approx(1.0, abs=0.1)


def test_uniform_pattern_b_lumped_matches_pattern_a():
    b = ExperimentConfig(eps=[EPS_SMALL], pattern='B', quadrature='LumpedMass', N=[64])
    assert _error(b, 64) == pytest.approx(1.19e-5, rel=0.02)


def test_laplace_lumped():
    a = ExperimentConfig(problem='Laplace', eps=[EPS_SMALL], quadrature='LumpedMass', N=[128])
    c = ExperimentConfig(problem='Laplace', eps=[EPS_SMALL], pattern='C', quadrature='LumpedMass', N=[128])
    assert _error(a, 128) == pytest.approx(4.17e-6, rel=0.02)
    assert _error(c, 128) == pytest.approx(9.62e-4, rel=0.05)


def test_shishkin_pattern_b_lumped():
    config = ExperimentConfig(eps=[EPS_SMALL], mesh='Shishkin', pattern='B', quadrature='LumpedMass', N=[64, 128])
    rows = run_experiment(config, threads=1)
    assert rows[0].error == pytest.approx(1.03e-3, rel=0.05)
    assert rows[0].rate_kind == 'ShishkinLog'
    assert 1.7 < rows[0].rate < 2.2


@pytest.mark.slow
def test_pattern_c_is_first_order_for_small_eps():
    for problem in ('ReactionDiffusion', 'Laplace'):
        config = ExperimentConfig(problem=problem, eps=[EPS_REPRESENTATIVE], pattern='C',
                                  quadrature='LumpedMass', N=[64, 128, 256, 512])
        rows = run_experiment(config)
        products = [row.N * row.error for row in rows]
        assert max(products) / min(products) < 1.1


@pytest.mark.parametrize('eps,N,expected', [
    (EPS_SMALL, 64, 12),
    (EPS_SMALL, 128, 24),
    (1.0, 64, 32),
])
def test_pattern_c_flips_at_layer_midpoint_on_bakhvalov_mesh(eps, N, expected):
    config = ExperimentConfig(eps=[eps], mesh='Bakhvalov', pattern='C', N=[N])
    xmesh = build_x_mesh(config, N, eps)
    pattern = layer_pattern(config, xmesh, eps)
    assert pattern.name == 'C'
    assert pattern.k0 == expected
    assert pattern.label == 'C'


def test_layer_pattern_keeps_middle_column_elsewhere():
    uniform = ExperimentConfig(eps=[EPS_SMALL], pattern='C', N=[64])
    assert layer_pattern(uniform, build_x_mesh(uniform, 64, EPS_SMALL), EPS_SMALL).k0 is None
    fixed = ExperimentConfig(eps=[EPS_SMALL], mesh='Bakhvalov', pattern='C', k0=20, N=[64])
    assert layer_pattern(fixed, build_x_mesh(fixed, 64, EPS_SMALL), EPS_SMALL).k0 == 20
    a = ExperimentConfig(eps=[EPS_SMALL], mesh='Bakhvalov', pattern='A', N=[64])
    assert layer_pattern(a, build_x_mesh(a, 64, EPS_SMALL), EPS_SMALL).k0 is None


def test_shishkin_flip_column_sits_near_eps():
    config = ExperimentConfig(eps=[EPS_SMALL], mesh='Shishkin', pattern='C', N=[64])
    xmesh = build_x_mesh(config, 64, EPS_SMALL)
    k0 = layer_pattern(config, xmesh, EPS_SMALL).k0
    spacing = xmesh.spacing[0]
    assert abs(xmesh.nodes[k0] - EPS_SMALL) <= 0.5 * spacing


# 各表格代表单元（ε = 2⁻¹⁶，M = N/4）


@pytest.mark.slow
def test_bakhvalov_table_patterns_a_and_c():
    a = run_experiment(ExperimentConfig(eps=[EPS_SMALL], mesh='Bakhvalov', N=[64]), threads=1)
    assert a[0].error == pytest.approx(2.02e-4, rel=0.05)
    c = run_experiment(ExperimentConfig(eps=[EPS_SMALL], mesh='Bakhvalov', pattern='C', N=[64, 128]), threads=1)
    assert c[0].error == pytest.approx(6.42e-3, rel=0.05)
    assert c[1].error == pytest.approx(3.20e-3, rel=0.05)
    assert c[0].rate == pytest.approx(1.01, abs=0.05)
    assert c[0].pattern == 'C'


@pytest.mark.slow
def test_uniform_reaction_diffusion_pattern_c_consistent():
    rows = run_experiment(ExperimentConfig(eps=[EPS_SMALL], pattern='C', N=[64, 128]), threads=1)
    assert rows[0].error == pytest.approx(2.03e-3, rel=0.05)
    assert rows[0].rate == pytest.approx(1.0, abs=0.05)


@pytest.mark.slow
def test_hessian_uniform_fixed_m_pattern_c_eps_one():
    config = ExperimentConfig(problem='Laplace', eps=[1.0], mesh='HessianUniform', pattern='C',
                              quadrature='LumpedMass', N=[128, 256], m_rule='Fixed(16)')
    rows = run_experiment(config, threads=1)
    assert rows[0].M == 16
    assert rows[0].error == pytest.approx(4.38e-5, rel=0.1)
    assert rows[0].rate == pytest.approx(0.98, abs=0.05)


@pytest.mark.slow
def test_pattern_b_without_quadrature_is_first_order():
    uniform = run_experiment(ExperimentConfig(eps=[EPS_SMALL], pattern='B', N=[64, 128]), threads=1)
    assert uniform[0].error == pytest.approx(9.54e-4, rel=0.05)
    assert uniform[0].rate == pytest.approx(1.01, abs=0.05)
    shishkin = run_experiment(ExperimentConfig(eps=[EPS_SMALL], mesh='Shishkin', pattern='B', N=[64, 128]),
                              threads=1)
    assert shishkin[0].error == pytest.approx(1.40e-2, rel=0.05)
    assert shishkin[0].rate == pytest.approx(1.06, abs=0.1)


@pytest.mark.slow
def test_shishkin_pattern_b_lumped_rate():
    rows = run_experiment(ExperimentConfig(eps=[EPS_SMALL], mesh='Shishkin', pattern='B',
                                           quadrature='LumpedMass', N=[64, 128]), threads=1)
    assert rows[0].rate == pytest.approx(1.99, abs=0.1)


@pytest.mark.slow
def test_quadratic_elements():
    a = run_experiment(ExperimentConfig(eps=[EPS_SMALL], degree=2, N=[64, 128]), threads=1)
    assert a[0].error == pytest.approx(2.88e-6, rel=0.05)
    assert a[0].rate == pytest.approx(2.0, abs=0.05)
    c = run_cell(ExperimentConfig(eps=[EPS_SMALL], pattern='C', degree=2, N=[64]), 64, EPS_SMALL)
    assert c.error == pytest.approx(3.03e-6, rel=0.05)
    bakhvalov = run_cell(ExperimentConfig(eps=[EPS_SMALL], mesh='Bakhvalov', degree=2, N=[64]), 64, EPS_SMALL)
    assert bakhvalov.error == pytest.approx(7.19e-5, rel=0.05)


@pytest.mark.slow
def test_cubic_elements_pattern_a():
    rows = run_experiment(ExperimentConfig(eps=[EPS_SMALL], degree=3, N=[32, 64]), threads=1)
    assert rows[0].error == pytest.approx(2.02e-8, rel=0.1)
    assert rows[0].rate == pytest.approx(3.12, abs=0.1)


@pytest.mark.slow
def test_quadratic_superconvergence_for_eps_one():
    a = run_experiment(ExperimentConfig(eps=[1.0], degree=2, N=[64, 128]), threads=1)
    assert 3.7 <= a[0].rate <= 4.1
    c = run_experiment(ExperimentConfig(eps=[1.0], pattern='C', degree=2, N=[64, 128]), threads=1)
    assert c[0].rate == pytest.approx(3.0, abs=0.1)


@pytest.mark.slow
@pytest.mark.parametrize('quadrature', ['Consistent', 'LumpedMass'])
def test_singular_problem_pattern_a_is_second_order(quadrature):
    config = ExperimentConfig(table='fig4', problem='Singular', mesh='GradedPower', quadrature=quadrature,
                              N=[64, 128])
    rows = run_experiment(config, threads=1)
    assert 1.85 <= rows[0].rate <= 2.15
    assert all(row.iterations <= 100 for row in rows)


@pytest.mark.slow
def test_singular_problem_pattern_b_loses_order():
    consistent = run_experiment(ExperimentConfig(problem='Singular', mesh='GradedPower', pattern='B',
                                                 N=[64, 128, 256]), threads=1)
    assert consistent[0].error == pytest.approx(1.985e-3, rel=0.02)
    assert consistent[1].error == pytest.approx(5.899e-4, rel=0.02)
    assert consistent[1].rate < consistent[0].rate
    assert consistent[1].rate <= 1.5
    lumped = run_experiment(ExperimentConfig(problem='Singular', mesh='GradedPower', pattern='B',
                                             quadrature='LumpedMass', N=[64, 128]), threads=1)
    assert lumped[0].rate <= 1.5

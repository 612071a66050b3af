# -*- coding: utf-8 -*-
"""校验套件与负对照"""
import math

import pytest

from triangulation import PatternSpec
from verification import (CHECK_IDS, CheckResult, VerifyContext, VerifyReport,
                          all_slash, run_check, verify_suite)


def test_quick_suite_passes():
    report = verify_suite(quick=True)
    assert report.passed, report.format()
    assert report.exit_code == 0
    assert not any(r.check_id.startswith('lemma.') for r in report.results)


def test_zero_tolerance_scale_fails():
    report = verify_suite(tolerance_scale=0.0, quick=True)
    assert not report.passed
    assert report.exit_code == 1
    # 精确为零的测量值在零容差下仍然通过
    assert 'assembly.symmetry' not in {r.check_id for r in report.failures}


def test_all_slash_c3_is_detected():
    only = ['stencil.lumped_gamma_c3']
    assert verify_suite(only=only).passed
    report = verify_suite(pattern_overrides={'C3': all_slash()}, only=only)
    assert not report.passed
    assert report.failures[0].value == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_only_runs_selected_checks():
    report = verify_suite(only=['analysis.rates', 'solver.spd_contract'])
    assert [r.check_id for r in report.results] == ['solver.spd_contract', 'analysis.rates']
    assert report.passed


def test_unknown_check_id_fails():
    report = verify_suite(only=['stencil.nonexistent'])
    assert not report.passed
    assert report.results[0].detail == 'unknown check id'


def test_run_check_never_raises():
    def broken(ctx):
        raise RuntimeError('boom')

    result = run_check('custom.broken', broken, VerifyContext(1.0))
    assert not result.passed
    assert math.isnan(result.value)
    assert 'boom' in result.detail


def test_context_tolerance_and_overrides():
    ctx = VerifyContext(2.0, {'B': all_slash()})
    assert ctx.tol(0.5) == 1.0
    assert ctx.pattern('B').name == 'CUSTOM'
    assert ctx.pattern('C3', 8).label == 'C3(8)'


def test_report_format():
    report = VerifyReport([CheckResult('a.ok', True, 0.0, 1e-12), CheckResult('b.bad', False, 1.0, 0.5, 'x')])
    text = report.format()
    assert '[PASS] a.ok' in text and '[FAIL] b.bad' in text
    assert text.splitlines()[-1] == '1/2 项通过'
    assert [r.check_id for r in report.failures] == ['b.bad']


def test_check_ids_are_unique():
    assert len(set(CHECK_IDS)) == len(CHECK_IDS)


@pytest.mark.slow
def test_full_suite_passes():
    report = verify_suite()
    assert report.passed, report.format()
    assert len(report.results) == len(CHECK_IDS)


def test_pattern_c_override_reaches_strip_checks():
    report = verify_suite(pattern_overrides={'C': all_slash()}, quick=True)
    assert not report.passed
    failed = {r.check_id for r in report.failures}
    assert 'stencil.lumped_gamma_c3' in failed
    # 不依赖剖分方向的不变式照常通过
    assert {'triangulation.node_counts', 'triangulation.patch_areas', 'assembly.symmetry'}.isdisjoint(failed)


def test_context_routes_c_override_into_c3():
    ctx = VerifyContext(1.0, {'C': all_slash()})
    assert ctx.pattern('C3', 8).name == 'CUSTOM'
    assert ctx.override('A') is None
    assert VerifyContext(1.0, {'C3': all_slash(), 'C': PatternSpec('A')}).override('C3').name == 'CUSTOM'


@pytest.mark.parametrize('check_id', [
    'mesh.shishkin_refinement',
    'triangulation.node_counts',
    'triangulation.patch_areas',
    'triangulation.edge_conformity',
    'solver.singular_jacobian_fd',
    'solver.newton_monotone',
])
def test_invariant_checks_pass(check_id):
    report = verify_suite(only=[check_id])
    assert report.passed, report.format()


@pytest.mark.slow
def test_lemma_check_sees_pattern_override():
    report = verify_suite(pattern_overrides={'C': all_slash()}, only=['lemma.reaction_lumped_c'])
    assert not report.passed

"""Acceptance criteria 1-9.

Each test prints one PASS/FAIL line and records it for the terminal summary.
Tolerances live in :mod:`minklab.verify` and are asserted as written there.
"""

from __future__ import annotations

import pytest

from minklab import verify

from conftest import ACCEPTANCE_LINES


def _report(result: verify.CheckResult) -> None:
    line = result.line()
    print(f"\n{line}  {result.detail}")
    ACCEPTANCE_LINES.append(line)
    assert result.passed, result.detail


@pytest.fixture(scope="module")
def planar_runs():
    return {k: verify.planar_run(k) for k in (4, 6)}


def test_criterion_1_closed_forms():
    _report(verify.check_closed_forms())


@pytest.mark.full
def test_criterion_2_planar_limit(planar_runs):
    _report(verify.check_planar_limit(planar_runs))


@pytest.mark.full
def test_criterion_3_min_h_trend(planar_runs):
    _report(verify.check_min_h_trend({4: planar_runs[4]}))


def test_criterion_4_subdivision():
    _report(verify.check_subdivision())


@pytest.mark.full
def test_criterion_5_local_max_sampling():
    _report(verify.check_local_max_sampling(trials=500))


def test_criterion_6_duality():
    _report(verify.check_duality(20))


def test_criterion_7_ball_bound():
    _report(verify.check_ball_bound(20))


@pytest.mark.full
def test_criterion_8_limit_shape():
    _report(verify.check_limit_shape())


def test_criterion_9_scale_and_determinism():
    _report(verify.check_scale_and_determinism())

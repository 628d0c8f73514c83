"""The acceptance gate: every headline claim, one pass/fail line per criterion.

Simulation pools are shared module-wide, so the battery costs what a single
``fairalloc verify`` costs; tests run in canonical order (A1 first, on cold
pools, because A1 also asserts its own wall-clock budget).
"""

import pytest

from fairalloc import acceptance


@pytest.fixture(scope="module")
def pools():
    return acceptance.RunPools()


def _check(fn, pools):
    result = fn(pools)
    print(f"\n{result.name} {'PASS' if result.passed else 'FAIL'} - {result.detail}")
    assert result.passed, f"{result.name}: {result.detail}"


def test_a1_benchmark_separation(pools):
    _check(acceptance.check_a1, pools)


def test_a2_regret_under_budget(pools):
    _check(acceptance.check_a2, pools)


def test_a3_multiplier_cap(pools):
    _check(acceptance.check_a3, pools)


def test_a4_penalty_concentration(pools):
    _check(acceptance.check_a4, pools)


def test_a5_convex_toolbox(pools):
    _check(acceptance.check_a5, pools)


def test_a6_bandit_estimates(pools):
    _check(acceptance.check_a6, pools)


def test_a7_benchmark_statics(pools):
    _check(acceptance.check_a7, pools)


def test_a8_learned_means(pools):
    _check(acceptance.check_a8, pools)


def test_a9_variant_reductions(pools):
    _check(acceptance.check_a9, pools)

"""
驗證套件與基準測試
"""

import math

import numpy as np
import pytest

from core.base.errors import UnknownSuite
from validation import (
    BENCH_COLUMNS,
    SuiteResult,
    available_suites,
    plot_bench,
    random_masses,
    random_pair,
    random_point_set,
    run_bench,
    run_suite,
    write_bench_csv,
)
from validation import suites


@pytest.fixture
def small_validation(fresh_settings):
    cfg = fresh_settings.validation
    cfg.gradcheck_points = 3
    cfg.max_support = 3
    cfg.max_dim = 2
    cfg.kde_points = 16
    cfg.kde_queries = 1
    return cfg


def test_available_suites():
    assert available_suites() == [
        'sandwich', 'triangle', 'gradcheck', 'kde-unbiased', 'kde-variance', 'convergence']


def test_unknown_suite():
    with pytest.raises(UnknownSuite):
        run_suite('no-such-suite')


def test_suite_result_bookkeeping():
    result = SuiteResult('demo', required=2)
    result.record(True, 0.1)
    result.record(False, 0.3, "bad")
    assert not result.ok
    result.record(True)
    assert result.ok
    assert (result.passed, result.total) == (2, 3)
    assert result.failures == ["bad"]
    assert result.max_error == 0.3
    result.notes['k'] = 4
    assert result.summary_line() == "demo: 2/3 (最大誤差 3.000e-01), k=4"


def test_violations_fail_suite():
    result = SuiteResult('demo')
    result.record(True)
    result.violate(0, "ignored")
    assert result.ok and result.failures == []
    result.violate(2, "g 未上升 2 次")
    assert not result.ok
    assert result.violations == 2
    assert result.failures == ["g 未上升 2 次"]
    assert result.summary_line().endswith(", 違反 2")


def test_registered_suite_is_dispatched(monkeypatch):
    monkeypatch.setattr(suites, '_SUITES', dict(suites._SUITES))

    @suites.register_suite('echo')
    def echo(seed, count, progress):
        result = SuiteResult('echo')
        for _ in range(count):
            result.record(True)
        return result

    assert run_suite('echo', count=3).total == 3
    assert 'echo' in available_suites()


def test_gradcheck_suite(small_validation):
    result = run_suite('gradcheck', seed=1, count=2, progress=False)
    assert result.total == 2 * small_validation.gradcheck_points
    assert result.max_error < 1e-3


def test_sandwich_suite_adds_uniform_case(small_validation):
    result = run_suite('sandwich', seed=2, count=1, progress=False)
    assert result.total == 2


def test_sandwich_suite_default_seed_7(fresh_settings):
    result = run_suite('sandwich', seed=7, progress=False)
    assert result.ok
    assert result.total == fresh_settings.validation.sandwich_instances + 1


def test_convergence_suite_enforces_trajectory(small_validation):
    small_validation.solver_support = 3
    result = run_suite('convergence', seed=4, count=3, progress=False)
    assert result.total == 3
    assert result.violations == 0
    assert result.notes['懲罰項超界'] == 0
    assert result.notes['未上升步數'] == 0
    assert result.ok


def test_sampling_suite_runs(small_validation):
    small_validation.sampling_support = 3
    result = run_suite('sampling', seed=4, count=2, progress=False)
    assert result.total == 2
    assert result.required == 2
    assert result.max_error is not None


def test_kde_unbiased_suite_shape(small_validation):
    result = run_suite('kde-unbiased', seed=3, count=200, progress=False)
    assert result.total == 2


# ==========================================
# 實例產生器
# ==========================================
def test_random_masses():
    rng = np.random.default_rng(0)
    masses = random_masses(rng, 50)
    assert masses.sum() == pytest.approx(1.0)
    assert masses.min() > 0
    np.testing.assert_allclose(random_masses(rng, 4, uniform=True), 0.25)


def test_random_point_set_shares_support():
    rng = np.random.default_rng(1)
    points = rng.random((3, 2))
    a = random_point_set(rng, 3, 2, points=points)
    b = random_point_set(rng, 3, 2, points=points)
    np.testing.assert_array_equal(a.points, b.points)
    assert a.masses.sum() == pytest.approx(1.0)


def test_random_pair_ranges():
    rng = np.random.default_rng(2)
    for _ in range(20):
        mu, nu = random_pair(rng, 4, 3)
        assert 1 <= mu.size <= 4 and 1 <= nu.size <= 4
        assert mu.dim == nu.dim and 1 <= mu.dim <= 3


# ==========================================
# 基準
# ==========================================
@pytest.fixture
def bench_rows():
    return run_bench([1, 2], [2.0], eps=0.1, seed=5, overrides={'max_iters': 20},
                     progress=False)


def test_run_bench_rows(bench_rows):
    assert [row['n'] for row in bench_rows] == [1, 2]
    for row in bench_rows:
        assert set(row) == set(BENCH_COLUMNS)
        assert row['iterations'] <= 20
        assert math.isfinite(row['exact'])
        assert row['abs_error'] == pytest.approx(abs(row['estimate'] - row['exact']))


def test_run_bench_skips_exact_over_limit(fresh_settings):
    fresh_settings.oracle.oracle_limit = 1
    rows = run_bench([2], [1.5], overrides={'max_iters': 5}, progress=False)
    assert math.isnan(rows[0]['exact'])
    assert math.isnan(rows[0]['abs_error'])


def test_write_and_plot_bench(tmp_path, bench_rows):
    csv_path = tmp_path / "bench" / "rows.csv"
    assert write_bench_csv(str(csv_path), bench_rows) == 2
    header = csv_path.read_text(encoding='utf-8').splitlines()[0]
    assert header == ','.join(BENCH_COLUMNS)

    png = tmp_path / "bench.png"
    plot_bench(bench_rows, str(png))
    assert png.read_bytes()[:4] == b'\x89PNG'

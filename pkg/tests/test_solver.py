"""
梯度上升求解器與估計引擎測試
"""

import math

import numpy as np
import pytest

from core.base.domain import WeightedPointSet
from core.base.errors import MaxItersExceeded, UnregisteredComponent
from core.base.params import derive_params, holder_pair
from core.dual.objective import DualState
from core.geometry.preprocess import make_instance, preprocess
from core.oracles.rrho import exact_rrho
from core.solver import (
    EngineFactory,
    EngineKind,
    SamplingEngine,
    TerminationCause,
    estimate_rrho,
    solve,
)
from utils.file_io import load_solver_profile
from utils.rng import StreamTag
from validation.instances import random_pair

UNIT_OVERRIDES = {'lambda': 0.01, 'eps2': 0.01}


@pytest.fixture
def unit_pair():
    return WeightedPointSet.uniform([[0.0]]), WeightedPointSet.uniform([[1.0]])


def test_single_point_trajectory(unit_pair):
    report, inst = estimate_rrho(*unit_pair, 2.0, 0.1, overrides=UNIT_OVERRIDES)
    assert report.converged
    assert report.termination is TerminationCause.CONVERGED
    assert report.iterations == 200
    assert report.alpha_updates == 199
    assert report.beta_updates == 0
    assert report.estimate == pytest.approx(1.000037, abs=1e-5)
    assert report.r == pytest.approx(1.0)
    assert inst.lifted


def test_dual_values_stay_on_the_step_lattice(unit_pair):
    report, inst = estimate_rrho(*unit_pair, 2.0, 0.1, overrides=UNIT_OVERRIDES)
    step = report.params_echo.lam * inst.r ** 2.0
    ratio = report.state.alpha / step
    np.testing.assert_allclose(ratio, np.round(ratio), atol=1e-9)


def test_max_iters_raises_with_report(unit_pair):
    overrides = dict(UNIT_OVERRIDES, max_iters=5)
    with pytest.raises(MaxItersExceeded) as info:
        estimate_rrho(*unit_pair, 2.0, 0.1, overrides=overrides)
    report = info.value.report
    assert report.termination is TerminationCause.MAX_ITERS
    assert report.iterations == 5
    assert report.estimate >= 0.0


def test_max_iters_without_raising(unit_pair):
    overrides = dict(UNIT_OVERRIDES, max_iters=5)
    report, _ = estimate_rrho(*unit_pair, 2.0, 0.1, overrides=overrides,
                              raise_on_max_iters=False)
    assert not report.converged
    assert report.alpha_updates == 5


def test_progress_callback_and_trajectory(unit_pair, mocker):
    callback = mocker.Mock()
    report, _ = estimate_rrho(*unit_pair, 2.0, 0.1, overrides=UNIT_OVERRIDES,
                              progress_callback=callback, record_trajectory=True)
    assert callback.call_count == report.iterations
    t, a_res, b_res, g = callback.call_args_list[0].args
    assert t == 0 and a_res == pytest.approx(1.0) and g == 0.0
    gs = [g for _, g, _ in report.trajectory]
    assert len(gs) == report.iterations
    assert all(b > a for a, b in zip(gs[:-1], gs[1:]))
    assert report.g_violations == 0


def test_report_dict(unit_pair):
    report, _ = estimate_rrho(*unit_pair, 2.0, 0.1, overrides=UNIT_OVERRIDES, seed=4)
    data = report.to_dict()
    assert set(data) == {
        'estimate', 'dual_value', 'r', 'rho', 'eps', 'iterations', 'termination',
        'alpha_updates', 'beta_updates', 'seed', 'mode', 'engine', 'wall_time_ms', 'params',
    }
    assert data['termination'] == 'converged'
    assert data['engine'] == 'exact'
    assert data['seed'] == 4
    assert data['params']['lambda'] == pytest.approx(0.01)


def test_estimate_matches_exact_oracle(line_pair):
    eps = 0.1
    report, inst = estimate_rrho(*line_pair, 2.0, eps, overrides=load_solver_profile('desk'))
    exact = exact_rrho(make_instance(*line_pair), holder_pair(2.0)).value
    assert report.converged
    assert abs(report.estimate - exact) <= eps * inst.r


@pytest.mark.parametrize("k", range(10))
def test_random_instances_match_oracle(k):
    rng = np.random.default_rng(300 + k)
    mu, nu = random_pair(rng, 5, 3)
    rho = float(rng.choice([1.25, 1.5, 2.0]))
    eps = 0.1
    report, _ = estimate_rrho(mu, nu, rho, eps, overrides=load_solver_profile('desk'),
                              record_trajectory=True)
    raw = make_instance(mu, nu)
    exact = exact_rrho(raw, holder_pair(rho)).value
    assert report.converged
    assert report.g_violations == 0
    gs = [g for _, g, _ in report.trajectory]
    assert all(b > a for a, b in zip(gs[:-1], gs[1:]))
    assert abs(report.estimate - exact) <= eps * raw.r


def test_beta_step_raises_objective():
    # η = 1 時 ξ_j ∝ 1/d_j^s，近點的 β 必須上升
    mu = WeightedPointSet.uniform([[0.0]])
    nu = WeightedPointSet.uniform([[1.0], [2.0]])
    report, _ = estimate_rrho(mu, nu, 2.0, 0.1, overrides=load_solver_profile('desk'),
                              record_trajectory=True)
    assert report.converged
    assert report.beta_updates > 0
    assert report.g_violations == 0
    assert min(g for _, g, _ in report.trajectory) >= 0.0
    # 唯一耦合為 ν 本身：R_2 = (0.5·1 + 0.5·4)^(1/2)
    assert report.estimate == pytest.approx(math.sqrt(2.5), abs=0.1 * 2.0)


def test_iteration_cap_keeps_params_echo(unit_pair):
    report, _ = estimate_rrho(*unit_pair, 2.0, 0.1, mode='paper', iteration_cap=4,
                              raise_on_max_iters=False)
    assert report.iterations == 4
    assert report.termination is TerminationCause.MAX_ITERS
    assert report.params_echo == derive_params(2.0, 0.1, 1, 1, mode='paper')


def test_coincident_supports_use_unit_radius():
    w = WeightedPointSet.uniform([[0.0, 0.0]])
    # 升維後間距極小，步長使 α 在兩格之間擺盪
    report, inst = estimate_rrho(w, w, 1.5, 0.1, overrides=dict(UNIT_OVERRIDES, max_iters=200),
                                 raise_on_max_iters=False)
    assert inst.r == 1.0
    assert report.estimate < 0.1


def test_unknown_engine(line_instance):
    params = derive_params(2.0, 0.1, 2, 2)
    with pytest.raises(UnregisteredComponent):
        solve(line_instance, holder_pair(2.0), params, engine='no-such-engine')
    assert set(EngineFactory.get_available_types()) == {EngineKind.EXACT, EngineKind.SAMPLING}


# ==========================================
# 取樣引擎
# ==========================================
@pytest.fixture
def sampling_setup():
    rng = np.random.default_rng(12)
    mu = WeightedPointSet.uniform(rng.random((3, 2)))
    nu = WeightedPointSet.uniform(rng.random((3, 2)) + np.array([1.0, 0.0]))
    hp = holder_pair(2.0)
    params = derive_params(2.0, 0.25, 3, 3, overrides={'delta': 0.9, 'max_iters': 1})
    inst = preprocess(mu, nu, params)
    state = DualState(np.array([0.6, 0.4, 0.5]) * inst.r ** 2, np.array([0.1, 0.2, 0.0]))
    return inst, hp, params, state


def test_sampling_engine_tracks_exact(sampling_setup):
    inst, hp, params, state = sampling_setup
    exact = EngineFactory.create('exact', inst, hp, params)
    sampling = EngineFactory.create('sampling', inst, hp, params, seed=1)
    assert isinstance(sampling, SamplingEngine)
    assert sampling.objective(state) is None
    np.testing.assert_allclose(sampling.est_alpha(state, params.kde_eps, 0.0),
                               exact.est_alpha(state, params.kde_eps, 0.0), rtol=0.5)
    np.testing.assert_allclose(sampling.est_beta(state, params.kde_eps, 0.0),
                               exact.est_beta(state, params.kde_eps, 0.0), rtol=0.5)
    assert sampling.est_penalty(state, params.kde_eps, 0.0) == pytest.approx(
        exact.est_penalty(state, params.kde_eps, 0.0), rel=0.5)


def test_sampling_engine_is_reproducible(sampling_setup):
    inst, hp, params, state = sampling_setup
    first = EngineFactory.create('sampling', inst, hp, params, seed=3)
    second = EngineFactory.create('sampling', inst, hp, params, seed=3)
    np.testing.assert_array_equal(first.est_alpha(state, params.kde_eps, params.tau),
                                  second.est_alpha(state, params.kde_eps, params.tau))


def test_sampling_engine_floors_small_estimates(sampling_setup):
    inst, hp, params, state = sampling_setup
    engine = EngineFactory.create('sampling', inst, hp, params)
    np.testing.assert_array_equal(engine.est_beta(state, params.kde_eps, 1e9), 0.0)


def test_sampling_engine_reuses_trees(sampling_setup):
    inst, hp, params, state = sampling_setup
    engine = EngineFactory.create('sampling', inst, hp, params, seed=2)
    engine.est_beta(state, params.kde_eps, 0.0)
    assert engine.rebuilds == 1
    # 同一排序下平移 α，只更新節點統計
    shifted = DualState(state.alpha + 0.01, state.beta)
    engine.est_beta(shifted, params.kde_eps, 0.0)
    assert engine.rebuilds == 1
    reordered = DualState(state.alpha[::-1].copy(), state.beta)
    engine.est_beta(reordered, params.kde_eps, 0.0)
    assert engine.rebuilds == 2


def test_sampling_engine_honours_eps1(sampling_setup):
    inst, hp, params, state = sampling_setup
    engine = EngineFactory.create('sampling', inst, hp, params)
    engine.est_alpha(state, 0.5, 0.0)
    engine.est_alpha(state, 0.25, 0.0)
    assert sorted(eps for _, _, eps in engine._trees) == [0.25, 0.5]
    coarse = engine._trees[(int(StreamTag.EST_ALPHA), hp.s - 1.0, 0.5)]
    fine = engine._trees[(int(StreamTag.EST_ALPHA), hp.s - 1.0, 0.25)]
    assert coarse.repetitions < fine.repetitions


@pytest.mark.parametrize("k", range(3))
def test_sampling_engine_matches_oracle(k):
    rng = np.random.default_rng(400 + k)
    mu, nu = random_pair(rng, 4, 2)
    rho = float(rng.choice([1.5, 2.0]))
    eps = 0.25
    report, _ = estimate_rrho(mu, nu, rho, eps, engine='sampling', seed=k,
                              overrides=load_solver_profile('sampling'),
                              raise_on_max_iters=False)
    raw = make_instance(mu, nu)
    exact = exact_rrho(raw, holder_pair(rho)).value
    assert report.engine is EngineKind.SAMPLING
    assert abs(report.estimate - exact) <= eps * raw.r

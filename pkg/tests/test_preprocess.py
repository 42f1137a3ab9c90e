"""
點集、文件讀取與前處理測試
"""

import math

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from core.base.domain import WeightedPointSet
from core.base.errors import (
    DimensionMismatch,
    EmptyInput,
    PointSetParseError,
    WeightSumError,
)
from core.base.params import derive_params, holder_pair
from core.geometry import (
    default_jl_dim,
    jl_project,
    lift,
    make_instance,
    perturbation_bound_mu,
    perturbation_bound_nu,
    preprocess,
    prune_coupling,
    prune_low_mass,
)
from core.oracles import exact_rrho
from utils.file_io import load_point_set, parse_point_set, write_point_set


# ==========================================
# 加權點集
# ==========================================
class TestWeightedPointSet:

    def test_masses_must_sum_to_one(self):
        with pytest.raises(ValueError):
            WeightedPointSet([[0.0], [1.0]], [0.5, 0.6])

    def test_rejects_non_positive_mass(self):
        with pytest.raises(ValueError):
            WeightedPointSet([[0.0], [1.0]], [1.0, 0.0])

    def test_empty(self):
        with pytest.raises(EmptyInput):
            WeightedPointSet(np.zeros((0, 2)), np.zeros(0))

    def test_from_arrays_drops_zero_mass(self):
        w = WeightedPointSet.from_arrays([[0, 0], [1, 1], [2, 2]], [2.0, 0.0, 2.0])
        assert w.size == 2
        np.testing.assert_allclose(w.masses, [0.5, 0.5])

    def test_arrays_are_read_only(self):
        w = WeightedPointSet.uniform([[0.0, 1.0]])
        with pytest.raises(ValueError):
            w.points[0, 0] = 5.0

    def test_one_dimensional_points_are_columns(self):
        w = WeightedPointSet.uniform([0.0, 1.0, 2.0])
        assert w.dim == 1 and w.size == 3


# ==========================================
# 點集 CSV
# ==========================================
class TestPointSetCsv:

    def test_parse_crlf_and_zero_rows(self):
        text = "w,x1,x2\r\n0.5,0,0\r\n0,9,9\r\n0.5,1,2\r\n"
        w = parse_point_set(text)
        assert w.size == 2 and w.dim == 2
        np.testing.assert_allclose(w.points[1], [1.0, 2.0])

    def test_small_deviation_is_renormalised(self):
        w = parse_point_set("w,x1\n0.501,0\n0.5,1\n")
        assert w.masses.sum() == pytest.approx(1.0)

    def test_large_deviation_is_an_error(self):
        with pytest.raises(WeightSumError):
            parse_point_set("w,x1\n0.7,0\n0.7,1\n")

    @pytest.mark.parametrize("text", [
        "x1,w\n1,0\n",
        "w,x2\n1,0\n",
        "w\n1\n",
        "w,x1\n1,abc\n",
        "w,x1\n1,0,3\n",
        "w,x1\n-0.5,0\n1.5,1\n",
        "",
    ])
    def test_malformed(self, text):
        with pytest.raises(PointSetParseError):
            parse_point_set(text)

    def test_all_zero_weights(self):
        with pytest.raises(EmptyInput):
            parse_point_set("w,x1\n0,0\n0,1\n")

    def test_write_then_load(self, tmp_path):
        original = WeightedPointSet([[0.25, -1.0], [3.0, 0.5]], [0.25, 0.75])
        path = tmp_path / "nested" / "mu.csv"
        write_point_set(str(path), original)
        loaded = load_point_set(str(path))
        np.testing.assert_array_equal(loaded.points, original.points)
        np.testing.assert_array_equal(loaded.masses, original.masses)


# ==========================================
# 實例與前處理
# ==========================================
class TestInstance:

    def test_make_instance_radius(self, line_instance):
        assert line_instance.r == pytest.approx(2.0)
        assert line_instance.sigma_actual == pytest.approx(0.25)
        assert line_instance.aspect_ratio == pytest.approx(4.0)

    def test_coincident_points_use_unit_radius(self):
        w = WeightedPointSet.uniform([[1.0, 1.0]])
        inst = make_instance(w, w)
        assert inst.r == 1.0
        assert inst.sigma_actual == 0.0
        assert math.isinf(inst.aspect_ratio)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            make_instance(WeightedPointSet.uniform([[0.0]]),
                          WeightedPointSet.uniform([[0.0, 1.0]]))

    def test_swapped(self, random_instance):
        swapped = random_instance.swapped()
        assert swapped.n == random_instance.m
        np.testing.assert_allclose(swapped.cross_distances(),
                                   random_instance.cross_distances().T)

    def test_lift_separates_shared_points(self):
        w = WeightedPointSet.uniform([[0.0], [1.0]])
        x, y = lift(w, w, 0.1, 1.0)
        dist = make_instance(x, y).cross_distances()
        assert dist.min() == pytest.approx(0.1)
        assert dist.max() == pytest.approx(math.sqrt(1.0 + 0.01))

    def test_preprocess_distance_window(self):
        mu = WeightedPointSet.uniform([[0.0, 0.0], [1.0, 0.0]])
        nu = WeightedPointSet.uniform([[0.0, 1.0]])
        params = derive_params(2.0, 0.1, 2, 1, mode='paper')
        inst = preprocess(mu, nu, params)
        assert inst.lifted
        assert inst.r == pytest.approx(math.sqrt(2.0))
        assert inst.min_distance >= params.sigma * inst.r
        assert inst.diameter <= inst.r * math.sqrt(1.0 + params.sigma ** 2) + 1e-12

    def test_preprocess_prunes_light_points(self):
        mu = WeightedPointSet([[0.0], [1.0]], [0.001, 0.999])
        nu = WeightedPointSet.uniform([[2.0], [3.0]])
        params = derive_params(2.0, 0.1, 2, 2, mode='paper')
        inst = preprocess(mu, nu, params)
        assert inst.n == 1 and inst.m == 2
        assert inst.pruned_mass_mu == pytest.approx(0.001)
        assert inst.keep_mu.tolist() == [False, True]
        assert inst.mu.masses.sum() == pytest.approx(1.0)

    def test_prune_low_mass_noop(self):
        w = WeightedPointSet.uniform([[0.0], [1.0]])
        pruned, zeta = prune_low_mass(w, 0.5)
        assert pruned is w and zeta == 0.0

    def test_prune_low_mass_rejects_bad_floor(self):
        with pytest.raises(ValueError):
            prune_low_mass(WeightedPointSet.uniform([[0.0]]), 1.0)

    def test_prune_coupling_marginals(self):
        masses = np.array([0.05, 0.45, 0.5])
        keep = np.array([False, True, True])
        survivors = masses[keep] / masses[keep].sum()
        coupling = prune_coupling(masses, keep)
        assert coupling.marginal_residual(masses, survivors) < 1e-12

    def test_perturbation_bound(self):
        # n = 4, ρ = 2, σ = 0.01, σ_μ = 0.05: (4·0.01/0.05 + 0.05)^(1/2)
        assert perturbation_bound_mu(4, 2.0, 0.01, 0.05) == pytest.approx(math.sqrt(0.85))
        assert perturbation_bound_nu(2.0, 0.04) == pytest.approx(0.2)

    @pytest.mark.parametrize("rho", [1.5, 2.0])
    def test_nu_pruning_within_bound(self, rho):
        nu = WeightedPointSet([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
                              [0.004, 0.006, 0.49, 0.5])
        pruned, zeta = prune_low_mass(nu, 0.05)
        assert pruned.size == 2 and zeta == pytest.approx(0.01)
        inst = make_instance(nu, pruned)
        value = exact_rrho(inst, holder_pair(rho)).value
        assert value <= perturbation_bound_nu(rho, 0.05) * inst.r + 1e-6

    @pytest.mark.parametrize("rho", [1.5, 2.0])
    def test_mu_lift_and_prune_within_bound(self, rho):
        mu = WeightedPointSet([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 2.0]],
                              [0.005, 0.01, 0.3, 0.3, 0.385])
        sigma, sigma_mu = 0.05, 0.1
        r = make_instance(mu, mu).r
        lifted, flat = lift(mu, mu, sigma, r)
        pruned, _ = prune_low_mass(lifted, sigma_mu)
        assert pruned.size == 3
        inst = make_instance(flat, pruned)
        value = exact_rrho(inst, holder_pair(rho)).value
        assert value <= perturbation_bound_mu(mu.size, rho, sigma, sigma_mu) * inst.r + 1e-6


# ==========================================
# 隨機投影
# ==========================================
class TestProjection:

    def test_default_dimension(self):
        assert default_jl_dim(10, 10, 0.5, 3) == 3
        assert default_jl_dim(10, 10, 0.5, 10000) == math.ceil(32 * math.log(20))

    def test_no_projection_when_target_is_larger(self):
        x = np.ones((3, 2))
        px, py, projected = jl_project(x, x, 5)
        assert not projected
        np.testing.assert_array_equal(px, x)

    def test_projection_is_shared_and_seeded(self):
        rng = np.random.default_rng(0)
        x, y = rng.random((4, 50)), rng.random((3, 50))
        px, py, projected = jl_project(x, y, 10, seed=3)
        qx, qy, _ = jl_project(x, y, 10, seed=3)
        assert projected and px.shape == (4, 10) and py.shape == (3, 10)
        np.testing.assert_array_equal(px, qx)
        np.testing.assert_array_equal(py, qy)

    def test_preprocess_with_projection(self):
        rng = np.random.default_rng(1)
        mu = WeightedPointSet.uniform(rng.random((3, 40)))
        nu = WeightedPointSet.uniform(rng.random((3, 40)))
        params = derive_params(2.0, 0.25, 3, 3)
        inst = preprocess(mu, nu, params, jl_dim=5, seed=2)
        assert inst.dim_reduced
        assert inst.dim == 6

    def test_invalid_target(self):
        with pytest.raises(ValueError):
            jl_project(np.ones((1, 2)), np.ones((1, 2)), 0)

    def test_projection_preserves_distances(self):
        rng = np.random.default_rng(4)
        x, y = rng.normal(size=(6, 1000)), rng.normal(size=(6, 1000))
        px, py, projected = jl_project(x, y, 64, seed=9)
        assert projected
        ratio = pdist(np.vstack([px, py])) / pdist(np.vstack([x, y]))
        assert 0.5 <= ratio.min() and ratio.max() <= 1.5

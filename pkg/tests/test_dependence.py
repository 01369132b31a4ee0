import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evtgan.dependence import (
    ChiMatrix,
    PseudoGrid,
    chi_empirical,
    chi_l2_error,
    chi_matrix,
    frechet_transform,
    rank_transform,
    select_random_pairs,
    select_site_pairs,
    spectral_empirical,
)
from evtgan.errors import DataError, UndefinedEstimateError


class TestRankTransform:
    def test_hand_example(self):
        np.testing.assert_allclose(rank_transform([3.0, 1.0, 2.0]), [0.75, 0.25, 0.5])

    def test_midrank_ties(self):
        np.testing.assert_allclose(rank_transform([5.0, 5.0]), [0.5, 0.5])

    def test_needs_two_values(self):
        with pytest.raises(DataError):
            rank_transform([1.0])

    def test_no_ties_gives_uniform_lattice(self):
        out = np.sort(rank_transform(np.random.default_rng(0).normal(size=25)))
        np.testing.assert_allclose(out, np.arange(1, 26) / 26.0)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=2, max_size=40, unique=True))
    def test_invariant_under_increasing_transform(self, xs):
        xs = np.array(xs)
        np.testing.assert_allclose(rank_transform(xs), rank_transform(np.exp(xs / 60.0)))
        np.testing.assert_allclose(rank_transform(xs), rank_transform(3.0 * xs + 7.0))

    def test_strictly_increasing_maps_to_strictly_increasing(self):
        xs = np.sort(np.random.default_rng(1).normal(size=15))
        assert np.all(np.diff(rank_transform(xs)) > 0)


class TestChiEmpirical:
    def test_comonotone_is_one(self):
        u = rank_transform(np.random.default_rng(2).normal(size=200))
        assert chi_empirical(u, u, 0.9) == 1.0

    def test_countermonotone_is_zero(self):
        u = np.arange(1, 101) / 101.0
        assert chi_empirical(u, 1.0 - u, 0.9) == 0.0

    def test_hand_counted_pairs(self):
        # 4 exceedances of q=0.5 in v, of which 2 joint with u
        u = np.array([0.9, 0.8, 0.2, 0.1, 0.3, 0.4, 0.45, 0.35, 0.25, 0.15])
        v = np.array([0.9, 0.8, 0.7, 0.6, 0.1, 0.2, 0.30, 0.40, 0.45, 0.35])
        assert chi_empirical(u, v, 0.5) == pytest.approx(0.5)

    def test_no_exceedances_raises(self):
        u = np.linspace(0.05, 0.5, 20)
        with pytest.raises(UndefinedEstimateError):
            chi_empirical(u, u, 0.9)

    def test_domain_checks(self):
        u = np.array([0.1, 0.9])
        with pytest.raises(DataError):
            chi_empirical(u, u[:1], 0.5)
        with pytest.raises(DataError):
            chi_empirical(u, u, 1.5)


class TestChiMatrix:
    def test_self_pair_is_one(self):
        values = np.random.default_rng(3).uniform(0.01, 0.99, size=(100, 3, 3))
        grid = PseudoGrid(values)
        out = chi_matrix(grid, [((1, 1), (1, 1))], q=0.8)
        assert out.chi[0] == 1.0

    def test_independent_uniforms_match_analytic_rate(self):
        rng = np.random.default_rng(4)
        values = rng.uniform(1e-9, 1 - 1e-9, size=(10000, 2, 1))
        out = chi_matrix(PseudoGrid(values), [((0, 0), (1, 0))], q=0.95)
        assert out.chi[0] == pytest.approx(0.05, abs=0.02)

    def test_symmetric_on_rank_transformed_columns(self):
        rng = np.random.default_rng(5)
        raw = rng.normal(size=(200, 1, 2)) + 0.8 * rng.normal(size=(200, 1, 1))
        values = np.empty_like(raw)
        for c in range(2):
            values[:, 0, c] = rank_transform(raw[:, 0, c])
        grid = PseudoGrid(values)
        ab = chi_matrix(grid, [((0, 0), (0, 1))], q=0.9).chi[0]
        ba = chi_matrix(grid, [((0, 1), (0, 0))], q=0.9).chi[0]
        assert ab == ba

    def test_undefined_pairs_marked_not_fatal(self):
        values = np.full((50, 1, 2), 0.5)
        values[:, 0, 0] = np.linspace(0.01, 0.99, 50)
        grid = PseudoGrid(values)
        out = chi_matrix(grid, [((0, 0), (0, 1)), ((0, 0), (0, 0))], q=0.9)
        assert not out.defined[0] and np.isnan(out.chi[0])
        assert out.defined[1]
        assert out.n_undefined == 1

    def test_bad_site_raises(self):
        grid = PseudoGrid(np.random.default_rng(6).uniform(0.1, 0.9, size=(10, 2, 2)))
        with pytest.raises(DataError):
            chi_matrix(grid, [((0, 0), (5, 0))], q=0.5)


class TestFrechet:
    def test_known_points(self):
        assert frechet_transform(math.exp(-1.0)) == pytest.approx(1.0, abs=1e-12)
        assert frechet_transform(math.exp(-0.5)) == pytest.approx(2.0, abs=1e-12)

    def test_monotone(self):
        u = np.linspace(0.01, 0.99, 50)
        assert np.all(np.diff(frechet_transform(u)) > 0)

    def test_domain(self):
        for u in (0.0, 1.0, -0.1, 2.0):
            with pytest.raises(DataError):
                frechet_transform(u)


class TestSpectral:
    def test_equal_components_give_half_exactly(self):
        u = rank_transform(np.random.default_rng(7).normal(size=200))
        sample = spectral_empirical(u, u, 0.9)
        assert np.all(sample.angles == 0.5)

    def test_independent_mass_near_boundary(self):
        rng = np.random.default_rng(8)
        u = rank_transform(rng.normal(size=20000))
        v = rank_transform(rng.normal(size=20000))
        sample = spectral_empirical(u, v, 0.95)
        boundary = np.mean((sample.angles < 0.1) | (sample.angles > 0.9))
        assert boundary > 0.8

    def test_hand_case_keeps_largest_radius_angles(self):
        u = np.array([0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9])
        v = np.array([0.9, 0.8, 0.7, 0.6, 0.4, 0.3, 0.2, 0.1])
        x = -1.0 / np.log(u)
        y = -1.0 / np.log(v)
        r = x + y
        keep = r > np.quantile(r, 0.5)
        expected = np.sort((x / r)[keep])
        got = spectral_empirical(u, v, 0.5)
        assert got.angles.size == 4
        np.testing.assert_allclose(np.sort(got.angles), expected, atol=1e-12)

    def test_swap_reflects_angles(self):
        rng = np.random.default_rng(9)
        u = rank_transform(rng.normal(size=500))
        v = rank_transform(rng.normal(size=500) + 0.3 * rng.normal(size=500))
        a = spectral_empirical(u, v, 0.8).angles
        b = spectral_empirical(v, u, 0.8).angles
        np.testing.assert_allclose(np.sort(a), np.sort(1.0 - b), atol=1e-12)

    def test_insufficient_exceedances(self):
        u = rank_transform(np.arange(6.0))
        with pytest.raises(UndefinedEstimateError):
            spectral_empirical(u, u, 0.9)


def _chi(pairs, values, q=0.9):
    return ChiMatrix(pairs=pairs, chi=np.asarray(values, dtype=float), q=q)


class TestChiL2Error:
    PAIRS = [((0, 0), (0, 1)), ((0, 0), (1, 1))]

    def test_identical_is_zero(self):
        a = _chi(self.PAIRS, [0.3, 0.7])
        assert chi_l2_error(a, a) == 0.0

    def test_hand_norm(self):
        a = _chi(self.PAIRS, [1.0, 0.0])
        b = _chi(self.PAIRS, [0.0, 1.0])
        assert chi_l2_error(a, b) == pytest.approx(math.sqrt(2.0))

    def test_triangle_inequality(self):
        rng = np.random.default_rng(10)
        pairs = [((0, 0), (0, k)) for k in range(1, 9)]
        for _ in range(25):
            a, b, c = (_chi(pairs, rng.uniform(0, 1, 8)) for _ in range(3))
            assert chi_l2_error(a, c) <= chi_l2_error(a, b) + chi_l2_error(b, c) + 1e-12

    def test_undefined_pairs_skipped_and_reported(self):
        a = _chi(self.PAIRS, [np.nan, 0.4])
        b = _chi(self.PAIRS, [0.2, 0.9])
        err, skipped = chi_l2_error(a, b, return_skip_count=True)
        assert skipped == 1
        assert err == pytest.approx(0.5)

    def test_all_undefined_raises(self):
        a = _chi(self.PAIRS, [np.nan, np.nan])
        b = _chi(self.PAIRS, [0.2, 0.9])
        with pytest.raises(UndefinedEstimateError):
            chi_l2_error(a, b)

    def test_mismatched_inputs(self):
        a = _chi(self.PAIRS, [0.1, 0.2])
        b = _chi(list(reversed(self.PAIRS)), [0.1, 0.2])
        with pytest.raises(DataError):
            chi_l2_error(a, b)
        c = _chi(self.PAIRS, [0.1, 0.2], q=0.5)
        with pytest.raises(DataError):
            chi_l2_error(a, c)


class TestPairSelection:
    def test_random_pairs_distinct_and_seeded(self):
        pairs = select_random_pairs((4, 5), 30, seed=1)
        assert len(set(pairs)) == 30
        assert pairs == select_random_pairs((4, 5), 30, seed=1)
        assert pairs != select_random_pairs((4, 5), 30, seed=2)

    def test_site_pairs_count(self):
        pairs = select_site_pairs((10, 10), 10, seed=0)
        assert len(pairs) == 45

    def test_too_many_requested(self):
        with pytest.raises(DataError):
            select_random_pairs((2, 2), 10, seed=0)


class TestPseudoGrid:
    def test_rejects_boundary_values(self):
        with pytest.raises(DataError):
            PseudoGrid(np.array([[[0.0, 0.5]], [[0.3, 0.4]]]))

    def test_shape_check(self):
        with pytest.raises(DataError):
            PseudoGrid(np.array([0.5, 0.5]))

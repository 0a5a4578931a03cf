import numpy as np
import pytest

from elastica.alignment import (AlignConfig, align_to_target,
                                brute_force_distance, elastic_distance)
from elastica.basis import SplineBasis, SplineFunction
from elastica.curves import apply_warping, polygon_from_points
from elastica.errors import GridTooLargeError
from elastica.srv import PiecewiseConstantSrv, srv_inverse, srv_transform

# analytic values for the linear-target / constant-segment pair:
# target (1, 2t+1), observed segment with unit-speed SRV (0, 1)
RESIDUAL_PAPER_RULE = np.sqrt(16 / 3 + 1 - 1.6 * (1.5 ** 2.5 - 0.5 ** 2.5))
RESIDUAL_OPTIMAL_RULE = np.sqrt(16 / 3 + 1 - 2 * np.sqrt(13 / 3))


def linear_target():
    return SplineFunction(SplineBasis(1, 2),
                          np.array([[1.0, 1.0], [1.0, 3.0]]))


def vertical_segment():
    return polygon_from_points([(0.0, 0.0), (0.0, 1.0)])


class TestAnalyticWarpingOracle:
    def test_paper_profile_recovers_quadratic_warping(self):
        res = align_to_target(vertical_segment(), linear_target(),
                              AlignConfig(n_grid=200))
        assert abs(res.residual - RESIDUAL_PAPER_RULE) < 1e-3
        ts = np.linspace(0.0, 1.0, 1001)
        gamma_true = 0.5 * ts ** 2 + 0.5 * ts
        assert np.max(np.abs(res.warping(ts) - gamma_true)) < 1e-3

    def test_optimal_profile_beats_paper_profile(self):
        # the Cauchy-Schwarz profile attains a strictly smaller residual
        res = align_to_target(vertical_segment(), linear_target(),
                              AlignConfig(n_grid=200), profile="optimal")
        assert abs(res.residual - RESIDUAL_OPTIMAL_RULE) < 1e-4
        assert res.residual < RESIDUAL_PAPER_RULE


class TestAlignToTarget:
    def test_self_alignment_is_identity(self, rng):
        from conftest import random_polygon

        c = random_polygon(rng, 8)
        q = srv_transform(c)
        res = align_to_target(c, q, AlignConfig(n_grid=100))
        assert res.residual < 1e-8
        ts = np.linspace(0, 1, 101)
        assert np.max(np.abs(res.warping(ts) - ts)) < 1e-8

    def test_degenerate_target_flagged(self):
        target = SplineFunction(SplineBasis(1, 3), np.zeros((3, 2)))
        res = align_to_target(vertical_segment(), target)
        assert res.degenerate_target
        np.testing.assert_allclose(res.warping(np.array([0.3])), [0.3])

    def test_refinement_never_hurts(self, rng):
        from conftest import random_polygon

        for _ in range(10):
            a = random_polygon(rng, 6)
            b = random_polygon(rng, 9)
            qa = srv_transform(a)
            coarse = align_to_target(b, qa, AlignConfig(n_grid=60,
                                                        refine=False))
            fine = align_to_target(b, qa, AlignConfig(n_grid=60))
            assert fine.residual <= coarse.residual + 1e-12

    def test_residual_not_above_identity(self, rng):
        from conftest import random_polygon

        for _ in range(10):
            a = random_polygon(rng, 5)
            b = random_polygon(rng, 7)
            qa, qb = srv_transform(a), srv_transform(b)
            res = align_to_target(b, qa, AlignConfig(n_grid=100))
            bp = np.union1d(qa.breakpoints, qb.breakpoints)
            mids = 0.5 * (bp[1:] + bp[:-1])
            ident_sq = np.sum(np.sum((qa(mids) - qb(mids)) ** 2, axis=1)
                              * np.diff(bp))
            assert res.residual ** 2 <= ident_sq + 1e-10

    def test_warped_srv_energy_bookkeeping(self, rng):
        from conftest import random_polygon

        for _ in range(5):
            a = random_polygon(rng, 5)
            b = random_polygon(rng, 8)
            res = align_to_target(b, srv_transform(a), AlignConfig(n_grid=80))
            total = res.warped_srv.norm_sq() + res.lost_mass
            assert abs(total - srv_transform(b).norm_sq()) < 1e-10


class TestElasticDistance:
    def test_perpendicular_segments(self):
        y1 = polygon_from_points([(0, 0), (1, 0)])
        y2 = polygon_from_points([(0, 0), (0, 1)])
        assert abs(elastic_distance(y1, y2) - np.sqrt(2)) < 1e-8

    def test_self_distance_zero(self, rng):
        from conftest import random_polygon

        c = random_polygon(rng, 10)
        assert elastic_distance(c, c) < 1e-8

    def test_reparametrization_invariance(self, rng):
        from conftest import random_polygon, random_warping

        for _ in range(5):
            c = random_polygon(rng, 10)
            w = random_warping(rng)
            d = elastic_distance(c, apply_warping(c, w))
            assert d < 5e-3

    def test_symmetry_exact(self, rng):
        from conftest import random_polygon

        a = random_polygon(rng, 6)
        b = random_polygon(rng, 9)
        assert elastic_distance(a, b) == elastic_distance(b, a)

    def test_triangle_inequality_sample(self, rng):
        from conftest import random_polygon

        for _ in range(10):
            a = random_polygon(rng, 6)
            b = random_polygon(rng, 7)
            c = random_polygon(rng, 8)
            dab = elastic_distance(a, b)
            dbc = elastic_distance(b, c)
            dac = elastic_distance(a, c)
            assert dac <= dab + dbc + 1e-4


class TestBruteForceOracle:
    def test_grid_cap(self):
        a = polygon_from_points([(0, 0), (1, 0)])
        with pytest.raises(GridTooLargeError):
            brute_force_distance(a, a, n_grid=61)

    def test_self_distance(self, rng):
        from conftest import random_polygon

        c = random_polygon(rng, 5)
        assert brute_force_distance(c, c, n_grid=40) < 1e-8

    def test_matches_elastic_distance(self, rng):
        from conftest import random_polygon

        cfg = AlignConfig(n_grid=40)
        for _ in range(8):
            a = random_polygon(rng, 5)
            b = random_polygon(rng, 5)
            d_fast = elastic_distance(a, b, cfg)
            d_brute = brute_force_distance(a, b, n_grid=40)
            assert abs(d_fast - d_brute) < 1e-6


class TestGeodesicProperty:
    def test_constant_srv_interpolation_is_geodesic(self):
        # aligned constant SRVs with nonnegative inner product
        q1 = PiecewiseConstantSrv([0.0, 1.0], [[1.0, 0.2]])
        q2 = PiecewiseConstantSrv([0.0, 1.0], [[0.3, 1.1]])
        grid = np.arange(0.0, 1.01, 0.25)

        def curve_at(x):
            vals = (1 - x) * q1.values + x * q2.values
            return srv_inverse(PiecewiseConstantSrv([0.0, 1.0], vals))

        curves = [curve_at(x) for x in grid]
        d_full = elastic_distance(curves[0], curves[-1])
        for i, s in enumerate(grid):
            for j, t in enumerate(grid):
                if i == j:
                    continue
                d = elastic_distance(curves[i], curves[j])
                assert abs(d - abs(s - t) * d_full) < 1e-2

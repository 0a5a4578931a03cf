import numpy as np
import pytest

from elastica.curves import (Curve, Warping, apply_warping,
                             polygon_from_points)
from elastica.errors import AllPointsIdenticalError


class TestPolygonFromPoints:
    def test_equal_segments(self):
        c = polygon_from_points([(0, 0), (1, 0), (1, 1)])
        np.testing.assert_allclose(c.timestamps, [0.0, 0.5, 1.0])

    def test_arclength_proportional(self):
        # cumulative lengths 2 and 3, so the middle vertex sits at 2/3
        c = polygon_from_points([(0, 0), (2, 0), (2, 1)])
        np.testing.assert_allclose(c.timestamps, [0.0, 2.0 / 3.0, 1.0])

    def test_duplicates_merged(self):
        c = polygon_from_points([(0, 0), (0, 0), (1, 0)])
        assert c.n_points == 2
        np.testing.assert_allclose(c.timestamps, [0.0, 1.0])

    def test_all_identical_raises(self):
        with pytest.raises(AllPointsIdenticalError):
            polygon_from_points([(1, 1), (1, 1), (1, 1)])

    def test_closed_appends_start(self):
        c = polygon_from_points([(0, 0), (1, 0), (1, 1)], closed=True)
        assert c.closed
        np.testing.assert_array_equal(c.points[0], c.points[-1])
        assert c.n_points == 4


class TestCurve:
    def test_invalid_timestamps(self):
        with pytest.raises(ValueError):
            Curve([(0, 0), (1, 1)], [0.0, 0.5])
        with pytest.raises(ValueError):
            Curve([(0, 0), (1, 1), (2, 2)], [0.0, 0.6, 0.4])

    def test_immutable(self):
        c = polygon_from_points([(0, 0), (1, 0)])
        with pytest.raises(AttributeError):
            c.closed = True
        assert not c.points.flags.writeable

    def test_evaluation_interpolates(self):
        c = polygon_from_points([(0, 0), (2, 0)])
        np.testing.assert_allclose(c(0.25), [0.5, 0.0])

    def test_centroid_of_segment(self):
        c = polygon_from_points([(0, 0), (1, 0)])
        np.testing.assert_allclose(c.centroid(), [0.5, 0.0])


class TestWarping:
    def test_identity_roundtrip(self):
        w = Warping.identity()
        c = polygon_from_points([(0, 0), (1, 0), (1, 1)])
        c2 = apply_warping(c, w)
        np.testing.assert_allclose(c2.points, c.points)
        np.testing.assert_allclose(c2.timestamps, c.timestamps)

    def test_inverse_composition_restores_timestamps(self):
        # piecewise-linear surrogates of s^2 and sqrt(s) built as exact
        # inverses of each other
        u = np.linspace(0.0, 1.0, 9)
        w_sq = Warping(np.sqrt(u), u)       # like s -> s^2
        w_rt = w_sq.inverse()               # like s -> sqrt(s)
        c = polygon_from_points([(0, 0), (1, 0), (1.5, 1), (2, 3)])
        warped = apply_warping(apply_warping(c, w_sq), w_rt)
        for t in c.timestamps:
            assert np.min(np.abs(warped.timestamps - t)) < 1e-12
            np.testing.assert_allclose(warped(t), c(t), atol=1e-12)

    def test_image_preserved(self, rng):
        from conftest import random_polygon, random_warping

        c = random_polygon(rng, 8)
        w = random_warping(rng)
        warped = apply_warping(c, w)
        # every original vertex appears among the warped vertices
        for p in c.points:
            assert np.min(np.linalg.norm(warped.points - p, axis=1)) < 1e-12

    def test_compose_exact(self):
        w1 = Warping([0.0, 0.4, 1.0], [0.0, 0.7, 1.0])
        w2 = Warping([0.0, 0.6, 1.0], [0.0, 0.3, 1.0])
        comp = w1.compose(w2)
        ts = np.linspace(0.0, 1.0, 101)
        np.testing.assert_allclose(comp(ts), w1(w2(ts)), atol=1e-14)

    def test_invalid_warping(self):
        with pytest.raises(ValueError):
            Warping([0.0, 0.5, 1.0], [0.0, 0.0, 1.0])
        with pytest.raises(ValueError):
            Warping([0.0, 1.0], [0.1, 1.0])

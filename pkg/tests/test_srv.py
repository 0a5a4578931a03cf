import numpy as np
import pytest

from elastica.basis import SplineBasis, SplineFunction
from elastica.curves import apply_warping, polygon_from_points
from elastica.errors import DegeneratePredictionError
from elastica.srv import (ClosedPredictionSrv, PiecewiseConstantSrv,
                          close_prediction, integral_of_speed,
                          srv_convex_combination, srv_inverse, srv_transform)


class TestSrvTransform:
    def test_unit_line(self):
        c = polygon_from_points([(0, 0), (1, 0)])
        q = srv_transform(c)
        np.testing.assert_allclose(q.values, [[1.0, 0.0]])

    def test_constant_speed_L(self):
        # both segments traversed at speed 2, so values are v / sqrt(||v||)
        c = polygon_from_points([(0, 0), (1, 0), (1, 1)])
        q = srv_transform(c)
        s2 = np.sqrt(2.0)
        np.testing.assert_allclose(q.values, [[s2, 0.0], [0.0, s2]])

    def test_constant_norm_equals_sqrt_length(self, rng):
        from conftest import random_polygon

        c = random_polygon(rng, 7)
        q = srv_transform(c)
        norms = np.linalg.norm(q.values, axis=1)
        np.testing.assert_allclose(norms, np.sqrt(c.length()), rtol=1e-12)

    def test_group_action_formula(self, rng):
        # srv of (y o w) equals (q o w) sqrt(w') piecewise
        from conftest import random_polygon, random_warping

        c = random_polygon(rng, 4)
        w = random_warping(rng, 3)
        qw = srv_transform(apply_warping(c, w))
        q = srv_transform(c)
        mids = 0.5 * (qw.breakpoints[1:] + qw.breakpoints[:-1])
        eps = 1e-9
        slope = (w(mids + eps) - w(mids - eps)) / (2 * eps)
        expected = q(w(mids)) * np.sqrt(slope)[:, None]
        np.testing.assert_allclose(qw(mids), expected, atol=1e-5)

    def test_norm_sq_is_curve_length(self, rng):
        from conftest import random_polygon

        c = random_polygon(rng, 9)
        assert abs(srv_transform(c).norm_sq() - c.length()) < 1e-12


class TestSrvInverse:
    def test_constant_gives_line(self):
        q = PiecewiseConstantSrv([0.0, 1.0], [[1.0, 0.0]])
        c = srv_inverse(q)
        np.testing.assert_allclose(c.points, [[0.0, 0.0], [1.0, 0.0]])

    def test_round_trip_identity(self, rng):
        from conftest import random_polygon

        c = random_polygon(rng, 11).anchored()
        back = srv_inverse(srv_transform(c))
        assert np.max(np.abs(back.points - c.points)) < 1e-10
        np.testing.assert_allclose(back.timestamps, c.timestamps, atol=1e-12)

    def test_sqrt_speed_profile(self):
        # q(t) = (0,1) sqrt(t + 1/2) integrates to (0, (t+1/2)^2/2 - 1/8)
        class Target:
            dim = 2
            breakpoint_hints = np.array([0.0, 1.0])

            def __call__(self, t):
                t = np.atleast_1d(np.asarray(t, float))
                out = np.zeros(t.shape + (2,))
                out[..., 1] = np.sqrt(t + 0.5)
                return out

        c = srv_inverse(Target(), grid=101)
        ts = c.timestamps
        expected = np.column_stack([np.zeros_like(ts),
                                    (ts + 0.5) ** 2 / 2 - 0.125])
        np.testing.assert_allclose(c.points, expected, atol=1e-8)

    def test_spline_inverse_first_coordinate(self):
        basis = SplineBasis(1, 2)
        f = SplineFunction(basis, np.array([[1.0, 1.0], [1.0, 3.0]]))
        c = srv_inverse(f, grid=51)
        # first coordinate of q||q||: sqrt(1 + (2t+1)^2); check end point
        from scipy.integrate import quad

        x_end, _ = quad(lambda t: np.sqrt(1 + (2 * t + 1) ** 2), 0, 1)
        np.testing.assert_allclose(c.points[-1, 0], x_end, atol=1e-8)


class TestClosePrediction:
    def test_closed_srv_unchanged(self):
        square = polygon_from_points([(0, 0), (1, 0), (1, 1), (0, 1)],
                                     closed=True)
        q = srv_transform(square)
        np.testing.assert_allclose(integral_of_speed(q), [0.0, 0.0],
                                   atol=1e-12)
        closed = close_prediction(q, grid=81)
        plain = srv_inverse(q)
        np.testing.assert_allclose(closed(plain.timestamps), plain.points,
                                   atol=1e-8)

    def test_straight_line_degenerates(self):
        q = PiecewiseConstantSrv([0.0, 1.0], [[1.0, 0.0]])
        with pytest.raises(DegeneratePredictionError):
            close_prediction(q)

    def test_three_quarter_arc_closes(self):
        ts = np.linspace(0.0, 1.5 * np.pi, 120)
        arc = polygon_from_points(np.column_stack([np.cos(ts), np.sin(ts)]))
        q = srv_transform(arc)
        closed = close_prediction(q, grid=200)
        assert closed.closed
        np.testing.assert_array_equal(closed.points[0], closed.points[-1])
        # shoelace area of the closed outline
        x, y = closed.points[:, 0], closed.points[:, 1]
        area = 0.5 * abs(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))
        assert area > 0.1

    def test_closed_prediction_target_norm(self):
        basis = SplineBasis(1, 5, periodic=True)
        rng = np.random.default_rng(3)
        coef = rng.normal(size=(basis.size, 2)) + np.array([[2.0, 0.0]])
        target = ClosedPredictionSrv(SplineFunction(basis, coef))
        # ||v / sqrt(||v||)||^2 = integral ||v||; compare with dense Riemann
        ts = np.linspace(0, 1, 20001)
        p = SplineFunction(basis, coef)(ts)
        v = p * np.linalg.norm(p, axis=1, keepdims=True) - target.offset
        riemann = np.trapezoid(np.linalg.norm(v, axis=1), ts)
        np.testing.assert_allclose(target.norm_sq(), riemann, rtol=1e-6)


class TestConvexCombination:
    def test_endpoints(self, rng):
        from conftest import random_polygon

        qa = srv_transform(random_polygon(rng, 5))
        qb = srv_transform(random_polygon(rng, 7))
        mids = np.linspace(0.01, 0.99, 37)
        np.testing.assert_allclose(srv_convex_combination(qa, qb, 0.0)(mids),
                                   qa(mids), atol=1e-14)
        np.testing.assert_allclose(srv_convex_combination(qa, qb, 1.0)(mids),
                                   qb(mids), atol=1e-14)

    def test_midpoint_average(self, rng):
        from conftest import random_polygon

        qa = srv_transform(random_polygon(rng, 5))
        qb = srv_transform(random_polygon(rng, 6))
        mids = np.linspace(0.01, 0.99, 23)
        np.testing.assert_allclose(
            srv_convex_combination(qa, qb, 0.5)(mids),
            0.5 * (qa(mids) + qb(mids)), atol=1e-14)

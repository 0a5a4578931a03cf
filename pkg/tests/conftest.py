import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_polygon(rng, n_vertices, dim=2, scale=1.0):
    """Random polygon with no duplicate consecutive points."""
    steps = rng.normal(size=(n_vertices - 1, dim))
    steps /= np.linalg.norm(steps, axis=1, keepdims=True)
    steps *= scale * rng.uniform(0.3, 1.0, size=(n_vertices - 1, 1))
    pts = np.vstack([np.zeros(dim), np.cumsum(steps, axis=0)])
    from elastica.curves import polygon_from_points

    return polygon_from_points(pts)


def random_warping(rng, n_interior=4):
    """Random monotone piecewise-linear warping of [0, 1]."""
    from elastica.curves import Warping

    s = np.sort(rng.uniform(0.05, 0.95, size=n_interior))
    v = np.sort(rng.uniform(0.05, 0.95, size=n_interior))
    return Warping(np.concatenate(([0.0], s, [1.0])),
                   np.concatenate(([0.0], v, [1.0])))

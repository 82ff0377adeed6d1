"""Shared helpers for the test suite."""

import numpy as np
import pytest

from fieldxfer import ScalarField, StructuredGrid


def random_monotone_coords(rng, n, lo=0.0, hi=1.0):
    """Strictly increasing coordinates with non-uniform spacing."""
    steps = rng.uniform(0.2, 1.8, n - 1)
    coords = np.concatenate([[0.0], np.cumsum(steps)])
    return lo + (hi - lo) * coords / coords[-1]


def random_grid(rng, nx=None, ny=None, lo=(0.0, 0.0), hi=(1.0, 1.0)):
    nx = nx or rng.integers(2, 24)
    ny = ny or rng.integers(2, 24)
    return StructuredGrid(random_monotone_coords(rng, int(nx), lo[0], hi[0]),
                          random_monotone_coords(rng, int(ny), lo[1], hi[1]))


def random_field(rng, grid):
    return ScalarField(grid, rng.normal(size=(grid.ny, grid.nx)))


def random_convex_quad(rng, scale=1.0, margin=0.05):
    """Non-degenerate convex CCW quadrilateral near the unit square."""
    base = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    while True:
        q = (base + rng.uniform(-0.3, 0.3, (4, 2))) * scale
        v = np.roll(q, -1, axis=0) - q
        w = np.roll(v, -1, axis=0)
        cross = v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]
        if np.all(cross > margin * scale * scale):
            return q


def shoelace(poly):
    x, y = np.asarray(poly).T
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

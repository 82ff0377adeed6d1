import numpy as np
import pytest
from scipy.spatial import ConvexHull

from fieldxfer import (StructuredGrid, assemble_quadrature,
                       assemble_supermesh, build_supermesh, clip_to_cell,
                       lagrange_interpolator, rect_mesh, sample_field,
                       tessellate, trapezoid_integral)
from conftest import random_convex_quad, random_field, random_grid, shoelace


def bruteforce_box_clip(poly, bounds):
    """Independent oracle: candidate vertices + convex hull.

    Collects polygon vertices inside the box, box corners inside the
    polygon, and all polygon-edge/box-edge intersections, then hulls them.
    Returns an (m, 2) CCW vertex array (possibly empty).
    """
    xlo, xhi, ylo, yhi = bounds
    poly = np.asarray(poly, dtype=float)
    eps = 1e-12 * max(xhi - xlo, yhi - ylo, 1.0)
    pts = []
    for px, py in poly:
        if xlo - eps <= px <= xhi + eps and ylo - eps <= py <= yhi + eps:
            pts.append((px, py))
    corners = [(xlo, ylo), (xhi, ylo), (xhi, yhi), (xlo, yhi)]
    for cx, cy in corners:
        inside = True
        for k in range(len(poly)):
            ax, ay = poly[k]
            bx, by = poly[(k + 1) % len(poly)]
            if (bx - ax) * (cy - ay) - (by - ay) * (cx - ax) < -eps:
                inside = False
                break
        if inside:
            pts.append((cx, cy))
    box_edges = [((xlo, ylo), (xhi, ylo)), ((xhi, ylo), (xhi, yhi)),
                 ((xhi, yhi), (xlo, yhi)), ((xlo, yhi), (xlo, ylo))]
    for k in range(len(poly)):
        p0, p1 = poly[k], poly[(k + 1) % len(poly)]
        for (q0, q1) in box_edges:
            d1 = p1 - p0
            d2 = np.asarray(q1) - np.asarray(q0)
            denom = d1[0] * d2[1] - d1[1] * d2[0]
            if abs(denom) < 1e-300:
                continue
            r = np.asarray(q0) - p0
            t = (r[0] * d2[1] - r[1] * d2[0]) / denom
            u = (r[0] * d1[1] - r[1] * d1[0]) / denom
            if -eps <= t <= 1 + eps and -eps <= u <= 1 + eps:
                pts.append(tuple(p0 + t * d1))
    if len(pts) < 3:
        return np.zeros((0, 2))
    pts = np.array(pts)
    try:
        hull = ConvexHull(pts)
    except Exception:
        return np.zeros((0, 2))
    return pts[hull.vertices]


def match_vertex_sets(a, b, tol):
    """Vertex sets equal up to ordering and tolerance."""
    if len(a) != len(b):
        return False
    used = set()
    for pa in a:
        found = None
        for k, pb in enumerate(b):
            if k not in used and np.max(np.abs(pa - pb)) <= tol:
                found = k
                break
        if found is None:
            return False
        used.add(found)
    return True


class TestClipToCell:
    def test_square_half_overlap(self):
        square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        out = clip_to_cell(square, (0.5, 1.5, 0.5, 1.5))
        assert shoelace(out) == pytest.approx(0.25, rel=1e-14)

    def test_fully_inside_unchanged(self):
        square = np.array([[0.2, 0.2], [0.4, 0.2], [0.4, 0.4], [0.2, 0.4]])
        out = clip_to_cell(square, (0.0, 1.0, 0.0, 1.0))
        assert match_vertex_sets(out, square, 0.0)

    def test_diamond_corner(self):
        diamond = np.array([[0.5, 0.0], [1.0, 0.5], [0.5, 1.0], [0.0, 0.5]])
        out = clip_to_cell(diamond, (0.0, 0.5, 0.0, 0.5))
        expect = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
        assert match_vertex_sets(out, expect, 1e-15)
        assert shoelace(out) == pytest.approx(0.125, rel=1e-14)

    def test_disjoint_is_empty(self):
        square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        assert clip_to_cell(square, (2.0, 3.0, 2.0, 3.0)).shape == (0, 2)

    def test_edge_touch_is_empty(self):
        # zero-area contact is dropped by the area threshold
        square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        assert clip_to_cell(square, (1.0, 2.0, 0.0, 1.0)).shape == (0, 2)

    def test_result_is_ccw_convex(self, rng):
        for _ in range(50):
            poly = random_convex_quad(rng)
            box = (rng.uniform(-0.2, 0.4), rng.uniform(0.6, 1.2),
                   rng.uniform(-0.2, 0.4), rng.uniform(0.6, 1.2))
            out = clip_to_cell(poly, box)
            if len(out) == 0:
                continue
            assert shoelace(out) > 0
            v = np.roll(out, -1, axis=0) - out
            w = np.roll(v, -1, axis=0)
            cross = v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]
            assert np.all(cross >= -1e-12)

    def test_matches_bruteforce_oracle(self, rng):
        mismatch_area = 0.0
        cases = 0
        while cases < 1000:
            poly = random_convex_quad(rng)
            x = np.sort(rng.uniform(-0.3, 1.3, 2))
            y = np.sort(rng.uniform(-0.3, 1.3, 2))
            if x[1] - x[0] < 1e-3 or y[1] - y[0] < 1e-3:
                continue
            cases += 1
            bounds = (x[0], x[1], y[0], y[1])
            got = clip_to_cell(poly, bounds)
            want = bruteforce_box_clip(poly, bounds)
            a_got = shoelace(got) if len(got) else 0.0
            a_want = abs(shoelace(want)) if len(want) else 0.0
            assert a_got == pytest.approx(a_want, abs=1e-10)
            if len(got) and len(want):
                assert match_vertex_sets(got, want, 1e-9)
            mismatch_area = max(mismatch_area, abs(a_got - a_want))
        assert mismatch_area < 1e-10


class TestTessellate:
    def test_quad_fan(self):
        quad = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]])
        tris = tessellate(quad)
        assert tris.shape == (4, 3, 2)
        areas = [shoelace(t) for t in tris]
        assert sum(areas) == pytest.approx(2.0, rel=1e-13)

    def test_triangle_fan(self):
        tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        tris = tessellate(tri)
        assert tris.shape == (3, 3, 2)
        assert sum(shoelace(t) for t in tris) == pytest.approx(0.5, rel=1e-13)

    def test_hexagon_area(self):
        angles = np.linspace(0, 2 * np.pi, 7)[:-1]
        hexa = np.column_stack([np.cos(angles), np.sin(angles)])
        tris = tessellate(hexa)
        assert len(tris) == 6
        total = sum(shoelace(t) for t in tris)
        assert total == pytest.approx(3 * np.sqrt(3) / 2, rel=1e-12)

    def test_degenerate_empty(self):
        assert tessellate(np.array([[0.0, 0.0], [1.0, 1.0]])).shape == (0, 3, 2)
        nearly = np.array([[0.0, 0.0], [1e-16, 0.0], [0.0, 1e-16]])
        assert tessellate(nearly, dedup_tol=1e-12).shape == (0, 3, 2)


class TestBuildSupermesh:
    def test_single_element_on_2x2_patch(self):
        grid = StructuredGrid([0.0, 0.5, 1.0], [0.0, 0.5, 1.0])
        mesh = rect_mesh(0, 0, 1, 1, 1, 1)
        cache = build_supermesh(mesh, grid)
        assert cache.n_polygons == 4
        assert np.allclose(np.sort(cache.poly_areas), 0.25)

    def test_element_covering_one_cell(self):
        grid = StructuredGrid([0.0, 1.0], [0.0, 1.0])
        mesh = rect_mesh(0, 0, 1, 1, 1, 1)
        cache = build_supermesh(mesh, grid)
        assert cache.n_polygons == 1
        assert cache.poly_areas[0] == pytest.approx(1.0, rel=1e-14)

    def test_conforming_mesh_closure(self):
        # mesh nodes land exactly on grid lines
        grid = StructuredGrid(np.linspace(0, 1, 11), np.linspace(0, 1, 11))
        mesh = rect_mesh(0, 0, 1, 1, 10, 10)
        cache = build_supermesh(mesh, grid)
        covered = cache.covered_areas()
        areas = mesh.element_areas()
        assert np.max(np.abs(covered - areas) / areas) < 1e-12

    def test_closure_randomized(self, rng):
        # includes node-on-gridline degeneracies through conforming grids
        for case in range(60):
            nx_e, ny_e = int(rng.integers(2, 6)), int(rng.integers(2, 6))
            x0, y0 = rng.uniform(-1, 0, 2)
            x1, y1 = rng.uniform(0.5, 2, 2)
            mesh = rect_mesh(x0, y0, x1, y1, nx_e, ny_e)
            if case % 3 == 0:
                grid = StructuredGrid(np.linspace(x0, x1, 2 * nx_e + 1),
                                      np.linspace(y0, y1, ny_e + 1))
            else:
                grid = random_grid(rng, nx=rng.integers(3, 12),
                                   ny=rng.integers(3, 12),
                                   lo=(x0, y0), hi=(x1, y1))
            cache = build_supermesh(mesh, grid)
            covered = cache.covered_areas()
            areas = mesh.element_areas()
            assert np.max(np.abs(covered - areas) / areas) < 1e-12

    def test_outside_elements_warn_and_skip(self):
        grid = StructuredGrid([0.0, 1.0], [0.0, 1.0])
        mesh = rect_mesh(0, 0, 3, 1, 3, 1)  # two elements outside the grid
        with pytest.warns(UserWarning, match="outside"):
            cache = build_supermesh(mesh, grid)
        covered = cache.covered_areas()
        assert covered[0] == pytest.approx(1.0, rel=1e-12)
        assert covered[1] == covered[2] == 0.0

    def test_threads_match_serial(self, rng):
        grid = random_grid(rng, nx=15, ny=13)
        mesh = rect_mesh(0.1, 0.1, 0.9, 0.9, 6, 5)
        a = build_supermesh(mesh, grid)
        b = build_supermesh(mesh, grid, threads=4)
        assert np.array_equal(a.gauss_xy, b.gauss_xy)
        assert np.array_equal(a.gauss_w, b.gauss_w)
        assert np.array_equal(a.poly_areas, b.poly_areas)

    def test_dump_polygons(self, tmp_path):
        grid = StructuredGrid([0.0, 0.5, 1.0], [0.0, 1.0])
        mesh = rect_mesh(0, 0, 1, 1, 1, 1)
        cache = build_supermesh(mesh, grid)
        path = tmp_path / "soup.txt"
        cache.dump_polygons(path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == cache.n_polygons
        first = lines[0].split()
        e, i, j = int(first[0]), int(first[1]), int(first[2])
        coords = np.array(list(map(float, first[3:]))).reshape(-1, 2)
        assert shoelace(coords) > 0


def bilinear_cell_integral(field):
    """Exact integral of the piecewise-bilinear interpolant: per cell,
    area times the mean of the four corner samples."""
    g = field.grid
    dx = np.diff(g.xs)
    dy = np.diff(g.ys)
    v = field.values
    corner_mean = 0.25 * (v[:-1, :-1] + v[:-1, 1:] + v[1:, :-1] + v[1:, 1:])
    return float(np.sum(corner_mean * np.outer(dy, dx)))


class TestAssembleSupermesh:
    def test_constant_field_gives_mesh_area(self, rng):
        grid = random_grid(rng, nx=14, ny=11)
        f = sample_field(grid, lambda x, y: np.ones_like(x))
        mesh = rect_mesh(0.05, 0.1, 0.95, 0.9, 7, 6)
        cache = build_supermesh(mesh, grid)
        b = assemble_supermesh(cache, f)
        area = mesh.element_areas().sum()
        assert b.sum() == pytest.approx(area, rel=1e-12)

    def test_bilinear_conserves_trapezoid(self, rng):
        for _ in range(10):
            grid = random_grid(rng, nx=13, ny=9)
            f = random_field(rng, grid)
            mesh = rect_mesh(0, 0, 1, 1, int(rng.integers(3, 9)),
                             int(rng.integers(3, 9)))
            cache = build_supermesh(mesh, grid)
            total = assemble_supermesh(cache, f, "bilinear").sum()
            i_trap = trapezoid_integral(f)
            i_cells = bilinear_cell_integral(f)
            # trapezoid sum and per-cell bilinear integral agree by algebra
            assert i_cells == pytest.approx(i_trap, rel=1e-13, abs=1e-15)
            assert total == pytest.approx(i_trap, rel=1e-12, abs=1e-13)

    def test_sine_201_grid_conserves_discrete_not_analytic(self):
        grid = StructuredGrid(np.linspace(0, 1, 201), np.linspace(0, 1, 201))
        f = sample_field(grid, lambda x, y: np.sin(2.5 * np.pi * x) * np.sin(2.5 * np.pi * y))
        mesh = rect_mesh(0, 0, 1, 1, 40, 40)
        cache = build_supermesh(mesh, grid)
        total = assemble_supermesh(cache, f, "bilinear").sum()
        i_trap = trapezoid_integral(f)
        assert abs(total - i_trap) / abs(i_trap) < 1e-12
        analytic = 1.0 / (6.25 * np.pi ** 2)
        # conservation targets the discrete field, not the analytic value
        assert abs(i_trap - analytic) > 1e-7

    def test_nodewise_match_against_quadrature_when_conforming(self, rng):
        # one element per grid cell: the bilinear reconstruction is smooth
        # inside every element, so 2x2 Gauss assembly is exact too and the
        # two routes must agree node by node
        grid = StructuredGrid(np.linspace(0, 1, 7), np.linspace(0, 1, 6))
        f = random_field(rng, grid)
        mesh = rect_mesh(0, 0, 1, 1, 6, 5)
        cache = build_supermesh(mesh, grid)
        b_sm = assemble_supermesh(cache, f, "bilinear")
        b_quad = assemble_quadrature(mesh, lagrange_interpolator(f, 1), 2)
        scale = np.max(np.abs(b_quad))
        assert np.max(np.abs(b_sm - b_quad)) < 1e-13 * scale

    def test_bspline_reconstruction_runs(self, rng):
        grid = StructuredGrid(np.linspace(0, 1, 21), np.linspace(0, 1, 21))
        f = sample_field(grid, lambda x, y: np.sin(2.5 * np.pi * x) * np.sin(2.5 * np.pi * y))
        mesh = rect_mesh(0, 0, 1, 1, 5, 5)
        cache = build_supermesh(mesh, grid)
        total = assemble_supermesh(cache, f, "bspline:3").sum()
        # close to the analytic integral (reconstruction error only)
        assert total == pytest.approx(1.0 / (6.25 * np.pi ** 2), rel=1e-3)

    def test_prebuilt_interpolator_accepted(self, rng):
        grid = random_grid(rng, nx=8, ny=8)
        f = random_field(rng, grid)
        mesh = rect_mesh(0.1, 0.1, 0.9, 0.9, 3, 3)
        cache = build_supermesh(mesh, grid)
        interp = lagrange_interpolator(f, 1)
        a = assemble_supermesh(cache, f, interp)
        b = assemble_supermesh(cache, f, "bilinear")
        assert np.array_equal(a, b)

    def test_rejects_foreign_grid(self, rng):
        grid = StructuredGrid(np.linspace(0, 1, 5), np.linspace(0, 1, 5))
        other = StructuredGrid(np.linspace(0, 1, 6), np.linspace(0, 1, 6))
        f = random_field(rng, other)
        mesh = rect_mesh(0, 0, 1, 1, 2, 2)
        cache = build_supermesh(mesh, grid)
        with pytest.raises(ValueError, match="grid"):
            assemble_supermesh(cache, f)

    def test_threaded_reproducible_and_close_to_serial(self, rng):
        grid = StructuredGrid(np.linspace(0, 1, 61), np.linspace(0, 1, 61))
        f = random_field(rng, grid)
        mesh = rect_mesh(0, 0, 1, 1, 50, 50)  # above the threading threshold
        cache = build_supermesh(mesh, grid)
        serial = assemble_supermesh(cache, f, "bilinear")
        t1 = assemble_supermesh(cache, f, "bilinear", threads=4)
        t2 = assemble_supermesh(cache, f, "bilinear", threads=4)
        assert np.array_equal(t1, t2)
        scale = np.max(np.abs(serial))
        assert np.max(np.abs(serial - t1)) <= 1e-14 * scale

    def test_per_element_triangle_areas_close(self, rng):
        grid = random_grid(rng, nx=9, ny=9)
        mesh = rect_mesh(0.1, 0.1, 0.9, 0.9, 4, 4)
        cache = build_supermesh(mesh, grid)
        # per element, cached gauss weights sum to the element area
        # (weights are |T| * w_q with rule weights summing to one)
        for e in range(mesh.n_elements):
            lo = cache.element_gauss_offsets[e]
            hi = cache.element_gauss_offsets[e + 1]
            w_sum = cache.gauss_w[lo:hi].sum()
            area = mesh.element_areas()[e]
            assert w_sum == pytest.approx(area, rel=1e-12)

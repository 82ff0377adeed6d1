"""Cut-cell supermesh integration.

Setup phase (once per mesh/grid pair): every element is clipped against its
candidate grid cells, each intersection polygon is fan-tessellated around
its vertex centroid, triangle Gauss points are seeded in physical space,
and the element-reference coordinates plus shape-function values at every
Gauss point are precomputed by batched Newton inversion.

Execution phase (once per field/timestep): reconstruct the field at the
cached Gauss points and accumulate b_k = sum |T_m| w_q N_k(xi_q) f(x_q).
Integration happens directly in physical space, so no mapping Jacobian
enters the sum and the total integral of the (piecewise-bilinear)
reconstruction is preserved exactly.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels
from .errors import ConvergenceError
from .fem import QuadMesh, newton_inverse_batch, shape_functions, triangle_rule
from .grid import ScalarField, StructuredGrid
from .interp import Interpolator, make_interpolator

# polygons smaller than this fraction of their cell are discarded
REL_AREA_TOL = 1e-14
# consecutive clip vertices closer than this fraction of the domain
# diagonal are merged
REL_DEDUP_TOL = 1e-13


def clip_to_cell(poly, cell_bounds, dedup_tol: float | None = None) -> np.ndarray:
    """Intersection of a convex CCW polygon with an axis-aligned cell.

    cell_bounds: (xlo, xhi, ylo, yhi). Returns the clipped polygon as an
    (m, 2) CCW vertex array; an empty (0, 2) array signals no intersection
    (including degenerate slivers below 1e-14 of the cell area).
    """
    xlo, xhi, ylo, yhi = cell_bounds
    if dedup_tol is None:
        dedup_tol = REL_DEDUP_TOL * float(np.hypot(xhi - xlo, yhi - ylo))
    min_area = REL_AREA_TOL * (xhi - xlo) * (yhi - ylo)
    return _kernels.clip_polygon_box(np.asarray(poly, dtype=float),
                                     xlo, xhi, ylo, yhi, dedup_tol, min_area)


def polygon_area(poly) -> float:
    """Signed shoelace area (positive for CCW)."""
    poly = np.asarray(poly, dtype=float)
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def tessellate(poly, dedup_tol: float = 0.0) -> np.ndarray:
    """Fan triangulation of a convex polygon around its vertex centroid.

    Returns an (n, 3, 2) triangle array, one triangle per polygon edge, so
    the triangle areas sum to the polygon area. Degenerate input (< 3
    distinct vertices) gives an empty (0, 3, 2) array.
    """
    poly = np.asarray(poly, dtype=float)
    if dedup_tol > 0.0 and len(poly):
        keep = np.any(np.abs(poly - np.roll(poly, 1, axis=0)) > dedup_tol, axis=1)
        poly = poly[keep]
    if len(poly) < 3:
        return np.zeros((0, 3, 2))
    centroid = poly.mean(axis=0)
    nxt = np.roll(np.arange(len(poly)), -1)
    tris = np.empty((len(poly), 3, 2))
    tris[:, 0] = centroid
    tris[:, 1] = poly
    tris[:, 2] = poly[nxt]
    return tris


class SupermeshCache:
    """Precomputed intersection geometry and quadrature data.

    Immutable after :func:`build_supermesh`; holds flat per-polygon arrays
    (cell indices, vertices, areas) for inspection and flat per-Gauss-point
    arrays (physical position, weight |T_m| w_q, owning element, reference
    coordinates, shape values) for the execution phase.
    """

    def __init__(self, mesh, grid, poly_element, poly_cell, poly_offsets,
                 poly_verts, poly_areas, gauss_xy, gauss_w, gauss_element,
                 gauss_ref, gauss_shape, element_gauss_offsets):
        self.mesh = mesh
        self.grid = grid
        self.poly_element = poly_element
        self.poly_cell = poly_cell
        self.poly_offsets = poly_offsets
        self.poly_verts = poly_verts
        self.poly_areas = poly_areas
        self.gauss_xy = gauss_xy
        self.gauss_w = gauss_w
        self.gauss_element = gauss_element
        self.gauss_ref = gauss_ref
        self.gauss_shape = gauss_shape
        self.element_gauss_offsets = element_gauss_offsets

    @property
    def n_polygons(self) -> int:
        return len(self.poly_areas)

    @property
    def n_gauss(self) -> int:
        return len(self.gauss_w)

    def covered_areas(self) -> np.ndarray:
        """Per-element sum of intersection-polygon areas."""
        out = np.zeros(self.mesh.n_elements)
        np.add.at(out, self.poly_element, self.poly_areas)
        return out

    def polygon_vertices(self, k) -> np.ndarray:
        lo, hi = self.poly_offsets[k], self.poly_offsets[k + 1]
        return self.poly_verts[lo:hi]

    def dump_polygons(self, path) -> None:
        """Debug polygon soup: one line per polygon, ``e i j x0 y0 x1 y1 ...``."""
        with open(path, "w", encoding="utf-8") as fh:
            for k in range(self.n_polygons):
                verts = self.polygon_vertices(k)
                coords = " ".join(f"{v:.17g}" for v in verts.ravel())
                e = self.poly_element[k]
                i, j = self.poly_cell[k]
                fh.write(f"{e} {i} {j} {coords}\n")


def build_supermesh(mesh: QuadMesh, grid: StructuredGrid,
                    threads: int | None = None) -> SupermeshCache:
    """Setup phase: clip, tessellate and precompute quadrature data.

    Elements entirely outside the grid domain are skipped with a warning;
    their intersection is empty and they contribute nothing.
    """
    rule = triangle_rule()
    dedup_tol = REL_DEDUP_TOL * grid.diagonal
    aabbs = mesh.element_aabbs()
    coords = mesh.nodes[mesh.elements]

    def element_cut(e):
        i_lo, i_hi, j_lo, j_hi = grid.candidate_cells(aabbs[e])
        if i_lo > i_hi or j_lo > j_hi:
            return None
        return _kernels.cut_cell_quadrature(
            coords[e], grid.xs, grid.ys, i_lo, i_hi, j_lo, j_hi,
            dedup_tol, REL_AREA_TOL, rule.points, rule.weights)

    n_e = mesh.n_elements
    if threads and threads > 1 and n_e > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(element_cut, range(n_e)))
    else:
        results = [element_cut(e) for e in range(n_e)]

    outside = [e for e, r in enumerate(results) if r is None or len(r[0]) == 0]
    if outside:
        warnings.warn(
            f"{len(outside)} element(s) outside the grid domain were skipped "
            f"(first: element {outside[0]})", stacklevel=2)

    poly_element = []
    poly_cell = []
    poly_offsets = [np.zeros(1, dtype=np.int64)]
    poly_verts = []
    poly_areas = []
    gauss_xy = []
    gauss_w = []
    gauss_element = []
    element_gauss_offsets = np.zeros(n_e + 1, dtype=np.int64)
    vert_base = 0
    for e, r in enumerate(results):
        if r is None:
            element_gauss_offsets[e + 1] = element_gauss_offsets[e]
            continue
        cells, offsets, verts, areas, gxy, gw = r
        poly_element.append(np.full(len(cells), e, dtype=np.int64))
        poly_cell.append(cells)
        poly_offsets.append(offsets[1:] + vert_base)
        vert_base += len(verts)
        poly_verts.append(verts)
        poly_areas.append(areas)
        gauss_xy.append(gxy)
        gauss_w.append(gw)
        gauss_element.append(np.full(len(gw), e, dtype=np.int64))
        element_gauss_offsets[e + 1] = element_gauss_offsets[e] + len(gw)

    poly_element = _cat(poly_element, np.int64)
    poly_cell = _cat(poly_cell, np.int64, width=2)
    poly_offsets = np.concatenate(poly_offsets)
    poly_verts = _cat(poly_verts, float, width=2)
    poly_areas = _cat(poly_areas, float)
    gauss_xy = _cat(gauss_xy, float, width=2)
    gauss_w = _cat(gauss_w, float)
    gauss_element = _cat(gauss_element, np.int64)

    # one global Newton batch: each Gauss point inverts its own element map
    corner = coords[gauss_element]
    try:
        gauss_ref = newton_inverse_batch(corner[:, :, 0], corner[:, :, 1], gauss_xy)
    except ConvergenceError as exc:
        k = exc.point_index or 0
        raise ConvergenceError(
            f"supermesh setup: inverse mapping failed in element "
            f"{int(gauss_element[k])} at point {tuple(gauss_xy[k])} "
            f"(residual {exc.residual})",
            point_index=k, residual=exc.residual) from exc
    gauss_shape, _, _ = shape_functions(gauss_ref)

    return SupermeshCache(mesh, grid, poly_element, poly_cell, poly_offsets,
                          poly_verts, poly_areas, gauss_xy, gauss_w,
                          gauss_element, gauss_ref, gauss_shape,
                          element_gauss_offsets)


def _cat(chunks, dtype, width=None):
    if chunks:
        return np.ascontiguousarray(np.concatenate(chunks), dtype=dtype)
    shape = (0,) if width is None else (0, width)
    return np.zeros(shape, dtype=dtype)


def assemble_supermesh(cache: SupermeshCache, field: ScalarField,
                       reconstruction="bilinear",
                       threads: int | None = None) -> np.ndarray:
    """Execution phase: evaluate the reconstruction at the cached Gauss
    points and accumulate the load vector.

    reconstruction is a spec string (``"bilinear"``, ``"bspline:P"``,
    ``"lagrange:P"``) or a prebuilt :class:`Interpolator`. The field must
    live on the cache's grid.
    """
    if field.grid is not cache.grid and (
            not np.array_equal(field.grid.xs, cache.grid.xs)
            or not np.array_equal(field.grid.ys, cache.grid.ys)):
        raise ValueError("field grid does not match the supermesh cache grid")
    if isinstance(reconstruction, Interpolator):
        interp = reconstruction
    else:
        interp = make_interpolator(field, reconstruction)
    f = interp.evaluate(cache.gauss_xy)
    contrib = cache.gauss_w * f
    return _scatter_gauss(cache, contrib, threads)


def _scatter_gauss(cache, contrib, threads):
    mesh = cache.mesh
    n_nodes = mesh.n_nodes
    conn = mesh.elements

    def block(lo, hi):
        sl = slice(cache.element_gauss_offsets[lo], cache.element_gauss_offsets[hi])
        nodes = conn[cache.gauss_element[sl]]
        vals = cache.gauss_shape[sl] * contrib[sl, None]
        return np.bincount(nodes.ravel(), weights=vals.ravel(), minlength=n_nodes)

    if not threads or threads <= 1 or mesh.n_elements < 2048:
        return block(0, mesh.n_elements)
    edges = np.linspace(0, mesh.n_elements, threads + 1).astype(int)
    bounds = [(int(lo), int(hi)) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        partials = list(pool.map(lambda lohi: block(*lohi), bounds))
    b = partials[0]
    for part in partials[1:]:
        b += part
    return b

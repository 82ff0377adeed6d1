"""Pure-Python clipping/tessellation kernel.

Mirrors ``_core.pyx`` operation for operation so both implementations
produce identical floating-point results; used when the compiled extension
is unavailable or when ``FIELDXFER_PURE_PYTHON`` is set.
"""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "python"


def _clip_axis(xs, ys, n, axis, bound, keep_below):
    """Clip a polygon against one axis-aligned half-plane.

    axis 0 clips on x, axis 1 on y; keep_below keeps coord <= bound, else
    coord >= bound. Returns new vertex lists.
    """
    out_x = []
    out_y = []
    for k in range(n):
        x0 = xs[k - 1]
        y0 = ys[k - 1]
        x1 = xs[k]
        y1 = ys[k]
        c0 = x0 if axis == 0 else y0
        c1 = x1 if axis == 0 else y1
        if keep_below:
            in0 = c0 <= bound
            in1 = c1 <= bound
        else:
            in0 = c0 >= bound
            in1 = c1 >= bound
        if in1:
            if not in0:
                t = (bound - c0) / (c1 - c0)
                if axis == 0:
                    out_x.append(bound)
                    out_y.append(y0 + t * (y1 - y0))
                else:
                    out_x.append(x0 + t * (x1 - x0))
                    out_y.append(bound)
            out_x.append(x1)
            out_y.append(y1)
        elif in0:
            t = (bound - c0) / (c1 - c0)
            if axis == 0:
                out_x.append(bound)
                out_y.append(y0 + t * (y1 - y0))
            else:
                out_x.append(x0 + t * (x1 - x0))
                out_y.append(bound)
    return out_x, out_y


def _clip_box(px, py, xlo, xhi, ylo, yhi, dedup_tol):
    """Sutherland-Hodgman clip against a box, then deduplicate vertices.

    Returns (xs, ys, area); vertices stay counter-clockwise. Points exactly
    on a clip line count as inside.
    """
    xs = list(px)
    ys = list(py)
    for axis, bound, keep_below in ((0, xlo, False), (0, xhi, True),
                                    (1, ylo, False), (1, yhi, True)):
        xs, ys = _clip_axis(xs, ys, len(xs), axis, bound, keep_below)
        if not xs:
            return [], [], 0.0
    # drop consecutive duplicates (closed polygon)
    out_x = []
    out_y = []
    n = len(xs)
    for k in range(n):
        xp = xs[k - 1]
        yp = ys[k - 1]
        if abs(xs[k] - xp) > dedup_tol or abs(ys[k] - yp) > dedup_tol:
            out_x.append(xs[k])
            out_y.append(ys[k])
    if len(out_x) < 3:
        return [], [], 0.0
    area = 0.0
    n = len(out_x)
    for k in range(n):
        area += out_x[k - 1] * out_y[k] - out_x[k] * out_y[k - 1]
    area *= 0.5
    return out_x, out_y, area


def clip_polygon_box(verts, xlo, xhi, ylo, yhi, dedup_tol, min_area):
    """Clip a convex CCW polygon to a box.

    Returns an (m, 2) vertex array; empty (0, 2) when the intersection is
    empty, degenerate, or has area below min_area.
    """
    verts = np.asarray(verts, dtype=float)
    xs, ys, area = _clip_box(verts[:, 0].tolist(), verts[:, 1].tolist(),
                             xlo, xhi, ylo, yhi, dedup_tol)
    if not xs or area < min_area:
        return np.zeros((0, 2))
    return np.column_stack([np.asarray(xs), np.asarray(ys)])


def cut_cell_quadrature(poly, grid_xs, grid_ys, i_lo, i_hi, j_lo, j_hi,
                        dedup_tol, rel_area_tol, tri_bary, tri_w):
    """Clip one element polygon against a range of grid cells and seed
    triangle Gauss points on every intersection.

    Parameters
    ----------
    poly : (4, 2) CCW element corner coordinates
    grid_xs, grid_ys : grid coordinate arrays
    i_lo..j_hi : inclusive candidate cell ranges
    dedup_tol : absolute vertex deduplication tolerance
    rel_area_tol : polygons below rel_area_tol * cell_area are dropped
    tri_bary : (6, 3) barycentric triangle rule points
    tri_w : (6,) rule weights (summing to 1)

    Returns
    -------
    cells : (n_poly, 2) int64 cell indices (i, j)
    offsets : (n_poly + 1,) int64 vertex offsets into verts
    verts : (n_vert, 2) polygon vertices, CCW
    areas : (n_poly,) polygon areas (shoelace)
    gauss_xy : (n_gauss, 2) physical Gauss points (clamped into their cell)
    gauss_w : (n_gauss,) physical weights (triangle area times rule weight)

    Each polygon with m vertices contributes m fan triangles around the
    vertex centroid and 6 Gauss points per triangle, so n_gauss =
    6 * n_vert.
    """
    poly = np.asarray(poly, dtype=float)
    px = poly[:, 0].tolist()
    py = poly[:, 1].tolist()
    b0 = tri_bary[:, 0].tolist()
    b1 = tri_bary[:, 1].tolist()
    b2 = tri_bary[:, 2].tolist()
    ws = tri_w.tolist()
    cells = []
    offsets = [0]
    out_verts_x = []
    out_verts_y = []
    areas = []
    gx = []
    gy = []
    gw = []
    for j in range(j_lo, j_hi + 1):
        ylo = grid_ys[j]
        yhi = grid_ys[j + 1]
        for i in range(i_lo, i_hi + 1):
            xlo = grid_xs[i]
            xhi = grid_xs[i + 1]
            xs, ys, area = _clip_box(px, py, xlo, xhi, ylo, yhi, dedup_tol)
            if not xs:
                continue
            cell_area = (xhi - xlo) * (yhi - ylo)
            if area < rel_area_tol * cell_area:
                continue
            m = len(xs)
            cx = 0.0
            cy = 0.0
            for k in range(m):
                cx += xs[k]
                cy += ys[k]
            cx /= m
            cy /= m
            for k in range(m):
                ax = xs[k]
                ay = ys[k]
                bx = xs[(k + 1) % m]
                by = ys[(k + 1) % m]
                ta = 0.5 * ((ax - cx) * (by - cy) - (bx - cx) * (ay - cy))
                for q in range(6):
                    qx = b0[q] * cx + b1[q] * ax + b2[q] * bx
                    qy = b0[q] * cy + b1[q] * ay + b2[q] * by
                    # clamp into the cell so downstream interpolation never
                    # sees an out-of-domain point from roundoff
                    if qx < xlo:
                        qx = xlo
                    elif qx > xhi:
                        qx = xhi
                    if qy < ylo:
                        qy = ylo
                    elif qy > yhi:
                        qy = yhi
                    gx.append(qx)
                    gy.append(qy)
                    gw.append(ta * ws[q])
            cells.append((i, j))
            offsets.append(offsets[-1] + m)
            out_verts_x.extend(xs)
            out_verts_y.extend(ys)
            areas.append(area)
    return (np.asarray(cells, dtype=np.int64).reshape(-1, 2),
            np.asarray(offsets, dtype=np.int64),
            np.column_stack([out_verts_x, out_verts_y]) if out_verts_x
            else np.zeros((0, 2)),
            np.asarray(areas),
            np.column_stack([gx, gy]) if gx else np.zeros((0, 2)),
            np.asarray(gw))

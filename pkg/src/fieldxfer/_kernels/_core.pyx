# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled clipping/tessellation kernel.

Same contract and floating-point operation order as ``_fallback.py``; the
inner loops run without the GIL so element batches can be processed by a
thread pool.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

IMPLEMENTATION = "compiled"

# a convex quad clipped by 4 half-planes gains at most one vertex per plane
DEF MAX_VERTS = 16


cdef int _clip_axis(double* xs, double* ys, int n, double* ox, double* oy,
                    int axis, double bound, bint keep_below) nogil:
    """Clip polygon (xs, ys, n) against one half-plane into (ox, oy)."""
    cdef int k, prev, m = 0
    cdef double x0, y0, x1, y1, c0, c1, t
    cdef bint in0, in1
    for k in range(n):
        prev = k - 1 if k > 0 else n - 1
        x0 = xs[prev]
        y0 = ys[prev]
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
                    ox[m] = bound
                    oy[m] = y0 + t * (y1 - y0)
                else:
                    ox[m] = x0 + t * (x1 - x0)
                    oy[m] = bound
                m += 1
            ox[m] = x1
            oy[m] = y1
            m += 1
        elif in0:
            t = (bound - c0) / (c1 - c0)
            if axis == 0:
                ox[m] = bound
                oy[m] = y0 + t * (y1 - y0)
            else:
                ox[m] = x0 + t * (x1 - x0)
                oy[m] = bound
            m += 1
    return m


cdef int _clip_box(const double* px, const double* py, int n_in,
                   double xlo, double xhi, double ylo, double yhi,
                   double dedup_tol, double* rx, double* ry,
                   double* area_out) nogil:
    """Clip against a box, dedup, compute shoelace area.

    Returns the vertex count (0 when empty/degenerate).
    """
    cdef double ax[MAX_VERTS]
    cdef double ay[MAX_VERTS]
    cdef double bx[MAX_VERTS]
    cdef double by[MAX_VERTS]
    cdef int k, prev, n, m
    cdef double area, xp, yp
    for k in range(n_in):
        ax[k] = px[k]
        ay[k] = py[k]
    n = n_in
    n = _clip_axis(ax, ay, n, bx, by, 0, xlo, False)
    if n == 0:
        return 0
    n = _clip_axis(bx, by, n, ax, ay, 0, xhi, True)
    if n == 0:
        return 0
    n = _clip_axis(ax, ay, n, bx, by, 1, ylo, False)
    if n == 0:
        return 0
    n = _clip_axis(bx, by, n, ax, ay, 1, yhi, True)
    if n == 0:
        return 0
    m = 0
    for k in range(n):
        prev = k - 1 if k > 0 else n - 1
        xp = ax[prev]
        yp = ay[prev]
        if fabs(ax[k] - xp) > dedup_tol or fabs(ay[k] - yp) > dedup_tol:
            rx[m] = ax[k]
            ry[m] = ay[k]
            m += 1
    if m < 3:
        return 0
    area = 0.0
    for k in range(m):
        prev = k - 1 if k > 0 else m - 1
        area += rx[prev] * ry[k] - rx[k] * ry[prev]
    area_out[0] = 0.5 * area
    return m


def clip_polygon_box(verts, double xlo, double xhi, double ylo, double yhi,
                     double dedup_tol, double min_area):
    """Clip a convex CCW polygon to a box; empty (0, 2) result when the
    intersection is empty, degenerate, or below min_area."""
    cdef cnp.ndarray[double, ndim=2] v = np.ascontiguousarray(verts, dtype=np.float64)
    cdef double rx[MAX_VERTS]
    cdef double ry[MAX_VERTS]
    cdef double px[MAX_VERTS]
    cdef double py[MAX_VERTS]
    cdef int k, n_in = v.shape[0]
    cdef double area = 0.0
    if n_in > 12:
        raise ValueError("clip kernel supports input polygons up to 12 vertices")
    for k in range(n_in):
        px[k] = v[k, 0]
        py[k] = v[k, 1]
    cdef int m = _clip_box(px, py, n_in, xlo, xhi, ylo, yhi, dedup_tol, rx, ry, &area)
    if m == 0 or area < min_area:
        return np.zeros((0, 2))
    out = np.empty((m, 2))
    cdef cnp.ndarray[double, ndim=2] o = out
    for k in range(m):
        o[k, 0] = rx[k]
        o[k, 1] = ry[k]
    return out


def cut_cell_quadrature(poly, grid_xs, grid_ys, int i_lo, int i_hi,
                        int j_lo, int j_hi, double dedup_tol,
                        double rel_area_tol, tri_bary, tri_w):
    """Clip one element polygon against a cell range and seed triangle
    Gauss points; see the fallback implementation for the contract."""
    cdef cnp.ndarray[double, ndim=2] p = np.ascontiguousarray(poly, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] gxs = np.ascontiguousarray(grid_xs, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] gys = np.ascontiguousarray(grid_ys, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] bary = np.ascontiguousarray(tri_bary, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] w = np.ascontiguousarray(tri_w, dtype=np.float64)
    cdef int n_cells = (i_hi - i_lo + 1) * (j_hi - j_lo + 1)
    if n_cells < 0:
        n_cells = 0

    cdef cnp.ndarray[cnp.int64_t, ndim=2] cells = np.empty((n_cells, 2), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] offsets = np.empty(n_cells + 1, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=2] verts = np.empty((n_cells * MAX_VERTS, 2))
    cdef cnp.ndarray[double, ndim=1] areas = np.empty(n_cells)
    cdef cnp.ndarray[double, ndim=2] gauss_xy = np.empty((n_cells * MAX_VERTS * 6, 2))
    cdef cnp.ndarray[double, ndim=1] gauss_w = np.empty(n_cells * MAX_VERTS * 6)

    cdef double px[4]
    cdef double py[4]
    cdef double rx[MAX_VERTS]
    cdef double ry[MAX_VERTS]
    cdef int k, i, j, m, q, nxt
    cdef int n_poly = 0, n_vert = 0, n_gauss = 0
    cdef double xlo, xhi, ylo, yhi, area, cell_area, cx, cy
    cdef double vax, vay, vbx, vby, ta, qx, qy
    for k in range(4):
        px[k] = p[k, 0]
        py[k] = p[k, 1]
    offsets[0] = 0
    with nogil:
        for j in range(j_lo, j_hi + 1):
            ylo = gys[j]
            yhi = gys[j + 1]
            for i in range(i_lo, i_hi + 1):
                xlo = gxs[i]
                xhi = gxs[i + 1]
                area = 0.0
                m = _clip_box(px, py, 4, xlo, xhi, ylo, yhi, dedup_tol, rx, ry, &area)
                if m == 0:
                    continue
                cell_area = (xhi - xlo) * (yhi - ylo)
                if area < rel_area_tol * cell_area:
                    continue
                cx = 0.0
                cy = 0.0
                for k in range(m):
                    cx += rx[k]
                    cy += ry[k]
                cx /= m
                cy /= m
                for k in range(m):
                    vax = rx[k]
                    vay = ry[k]
                    nxt = k + 1 if k + 1 < m else 0
                    vbx = rx[nxt]
                    vby = ry[nxt]
                    ta = 0.5 * ((vax - cx) * (vby - cy) - (vbx - cx) * (vay - cy))
                    for q in range(6):
                        qx = bary[q, 0] * cx + bary[q, 1] * vax + bary[q, 2] * vbx
                        qy = bary[q, 0] * cy + bary[q, 1] * vay + bary[q, 2] * vby
                        if qx < xlo:
                            qx = xlo
                        elif qx > xhi:
                            qx = xhi
                        if qy < ylo:
                            qy = ylo
                        elif qy > yhi:
                            qy = yhi
                        gauss_xy[n_gauss, 0] = qx
                        gauss_xy[n_gauss, 1] = qy
                        gauss_w[n_gauss] = ta * w[q]
                        n_gauss += 1
                cells[n_poly, 0] = i
                cells[n_poly, 1] = j
                areas[n_poly] = area
                for k in range(m):
                    verts[n_vert + k, 0] = rx[k]
                    verts[n_vert + k, 1] = ry[k]
                n_vert += m
                n_poly += 1
                offsets[n_poly] = n_vert
    return (cells[:n_poly].copy(), offsets[:n_poly + 1].copy(),
            verts[:n_vert].copy(), areas[:n_poly].copy(),
            gauss_xy[:n_gauss].copy(), gauss_w[:n_gauss].copy())

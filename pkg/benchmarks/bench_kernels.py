#!/usr/bin/env python3
"""Benchmark the compiled clipping kernel against the pure-Python fallback.

Times the per-element cut-cell kernel (Sutherland-Hodgman clipping, fan
tessellation, Gauss-point seeding) over a full mesh/grid pair, verifies
that both implementations produce identical output, and reports the
end-to-end supermesh setup and execution phases with the selected kernel.

Usage: python benchmarks/bench_kernels.py [--elems N] [--grid N] [--repeat R]
"""

import argparse
import time

import numpy as np

import fieldxfer as fx
from fieldxfer._kernels import _fallback
from fieldxfer.fem import triangle_rule

try:
    from fieldxfer._kernels import _core
except ImportError:
    _core = None


def kernel_pass(impl, mesh, grid, rule):
    dedup = 1e-13 * grid.diagonal
    aabbs = mesh.element_aabbs()
    coords = mesh.nodes[mesh.elements]
    n_gauss = 0
    for e in range(mesh.n_elements):
        i_lo, i_hi, j_lo, j_hi = grid.candidate_cells(aabbs[e])
        out = impl.cut_cell_quadrature(coords[e], grid.xs, grid.ys,
                                       i_lo, i_hi, j_lo, j_hi,
                                       dedup, 1e-14, rule.points, rule.weights)
        n_gauss += len(out[5])
    return n_gauss


def median_time(fn, repeat):
    fn()  # warm-up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def verify_identical(mesh, grid, rule):
    dedup = 1e-13 * grid.diagonal
    aabbs = mesh.element_aabbs()
    coords = mesh.nodes[mesh.elements]
    for e in range(0, mesh.n_elements, max(1, mesh.n_elements // 50)):
        i_lo, i_hi, j_lo, j_hi = grid.candidate_cells(aabbs[e])
        args = (coords[e], grid.xs, grid.ys, i_lo, i_hi, j_lo, j_hi,
                dedup, 1e-14, rule.points, rule.weights)
        a = _core.cut_cell_quadrature(*args)
        b = _fallback.cut_cell_quadrature(*args)
        for x, y in zip(a, b):
            if not np.array_equal(x, y):
                raise AssertionError(f"kernel outputs differ on element {e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--elems", type=int, default=40, help="mesh elements per axis")
    ap.add_argument("--grid", type=int, default=101, help="grid points per axis")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    grid = fx.StructuredGrid(np.linspace(0, 1, args.grid),
                             np.linspace(0, 1, args.grid))
    mesh = fx.rect_mesh(0, 0, 1, 1, args.elems, args.elems)
    rule = triangle_rule()
    rng = np.random.default_rng(0)
    field = fx.ScalarField(grid, rng.normal(size=(grid.ny, grid.nx)))

    print(f"mesh {args.elems}x{args.elems} elements, grid {args.grid}x{args.grid} "
          f"points, median of {args.repeat}")
    print(f"selected kernel: {fx.KERNEL_IMPLEMENTATION}")

    n_gauss = kernel_pass(_fallback, mesh, grid, rule)
    t_py = median_time(lambda: kernel_pass(_fallback, mesh, grid, rule), args.repeat)
    print(f"cut-cell kernel [python]   {t_py * 1e3:9.2f} ms   "
          f"({n_gauss} Gauss points)")
    if _core is not None:
        verify_identical(mesh, grid, rule)
        t_c = median_time(lambda: kernel_pass(_core, mesh, grid, rule), args.repeat)
        print(f"cut-cell kernel [compiled] {t_c * 1e3:9.2f} ms   "
              f"(outputs identical, speedup x{t_py / t_c:.1f})")
    else:
        print("compiled kernel not available; skipping comparison")

    t_setup = median_time(lambda: fx.build_supermesh(mesh, grid), args.repeat)
    cache = fx.build_supermesh(mesh, grid)
    t_exec = median_time(lambda: fx.assemble_supermesh(cache, field, "bilinear"),
                         args.repeat)
    print(f"supermesh setup phase      {t_setup * 1e3:9.2f} ms   "
          f"(clip + tessellate + Newton, kernel: {fx.KERNEL_IMPLEMENTATION})")
    print(f"supermesh execution phase  {t_exec * 1e3:9.2f} ms   "
          f"(field evaluation + accumulation)")


if __name__ == "__main__":
    main()

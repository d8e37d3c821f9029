#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Builds the DG-P2 assembly tables for an n-by-n criss-cross mesh and times
the three hot kernels on both backends, checking that they agree.  Run as

    python3 benchmarks/bench_kernels.py [n]
"""

import sys
import time

import numpy as np
import scipy.sparse as sp_sparse

from interfem.assembly import DgParameters, _dg_face_data, assemble_dg
from interfem.coefficients import CoefficientField
from interfem.kernels import numba_backend, numpy_backend
from interfem.mesh import build_structured_square, layout_checkerboard
from interfem.quadrature import edge_rule, triangle_rule
from interfem.spaces import DG_P2, cell_tables, face_trace_tables


def timeit(fn, repeats=5):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def main(n=64):
    mesh = build_structured_square(n, layout_checkerboard())
    field = CoefficientField.from_subdomains(
        mesh, np.array([1e6, 1.0, 1.0, 1e6]))
    rule = triangle_rule(6)
    vals, grads, wdet, _ = cell_tables(DG_P2, mesh, rule)
    tab = face_trace_tables(DG_P2, mesh, edge_rule(6))
    _, cpen, cm, cp = _dg_face_data(mesh, field, DgParameters(20.0))

    system = assemble_dg(mesh, field, lambda x, y: np.ones_like(x), 2,
                         DgParameters(20.0))
    a = system.matrix
    x = np.linspace(0.0, 1.0, a.shape[0])

    cases = [
        ("cell_stiffness",
         lambda be: be.cell_stiffness(grads, wdet, field.element_alpha)),
        ("dg_face_blocks",
         lambda be: be.dg_face_blocks(tab["vals_m"], tab["vals_p"],
                                      tab["gn_m"], tab["gn_p"], tab["wq"],
                                      cpen, cm, cp)),
        ("csr_matvec", lambda be: be.matvec(a, x)),
    ]

    print(f"mesh: n={n}, {mesh.n_triangles} triangles, {mesh.n_faces} faces, "
          f"{a.shape[0]} DG-P2 dofs, {a.nnz} nonzeros")
    print(f"{'kernel':16s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s} "
          f"{'agree':>10s}")
    for name, call in cases:
        call(numba_backend)  # trigger JIT outside the timing
        res_np, t_np = timeit(lambda: call(numpy_backend))
        res_nb, t_nb = timeit(lambda: call(numba_backend))
        diff = np.abs(np.asarray(res_np) - np.asarray(res_nb)).max()
        scale = max(1.0, np.abs(np.asarray(res_np)).max())
        print(f"{name:16s} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms "
              f"{t_np / t_nb:7.2f}x {diff / scale:9.2e}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 64)

import numpy as np
import scipy.sparse as sps

from interfem.assembly import DgParameters, _dg_face_data
from interfem.coefficients import CoefficientField
from interfem.kernels import numba_backend, numpy_backend
from interfem.mesh import build_structured_square, layout_checkerboard
from interfem.quadrature import edge_rule, triangle_rule
from interfem.spaces import DG_P2, cell_tables, face_trace_tables

BACKENDS = (numpy_backend, numba_backend)


def make_tables():
    mesh = build_structured_square(8, layout_checkerboard())
    field = CoefficientField.from_subdomains(mesh,
                                             np.array([1e6, 1.0, 1.0, 1e6]))
    vals, grads, wdet, _ = cell_tables(DG_P2, mesh, triangle_rule(6))
    tab = face_trace_tables(DG_P2, mesh, edge_rule(6))
    _, cpen, cm, cp = _dg_face_data(mesh, field, DgParameters(20.0))
    return mesh, field, vals, grads, wdet, tab, cpen, cm, cp


def test_backends_agree():
    mesh, field, vals, grads, wdet, tab, cpen, cm, cp = make_tables()
    rng = np.random.default_rng(0)
    fq = rng.normal(size=wdet.shape)

    a_np = numpy_backend.cell_stiffness(grads, wdet, field.element_alpha)
    a_nb = numba_backend.cell_stiffness(grads, wdet, field.element_alpha)
    assert np.abs(a_np - a_nb).max() <= 1e-15 * np.abs(a_np).max()

    m_np = numpy_backend.cell_mass(vals, wdet)
    m_nb = numba_backend.cell_mass(vals, wdet)
    assert np.abs(m_np - m_nb).max() <= 1e-14 * np.abs(m_np).max()

    l_np = numpy_backend.cell_load(vals, wdet, fq)
    l_nb = numba_backend.cell_load(vals, wdet, fq)
    assert np.abs(l_np - l_nb).max() <= 1e-13 * max(1, np.abs(l_np).max())

    b_np = numpy_backend.dg_face_blocks(tab["vals_m"], tab["vals_p"],
                                        tab["gn_m"], tab["gn_p"], tab["wq"],
                                        cpen, cm, cp)
    b_nb = numba_backend.dg_face_blocks(tab["vals_m"], tab["vals_p"],
                                        tab["gn_m"], tab["gn_p"], tab["wq"],
                                        cpen, cm, cp)
    assert np.abs(b_np - b_nb).max() <= 1e-12 * np.abs(b_np).max()


def test_matvec_agrees_with_scipy():
    rng = np.random.default_rng(1)
    a = sps.random(300, 300, density=0.05, random_state=7, format="csr")
    a = a + sps.identity(300)
    x = rng.normal(size=300)
    y_ref = a @ x
    for be in BACKENDS:
        y = be.matvec(a.tocsr(), x)
        assert np.abs(y - y_ref).max() <= 1e-13 * np.abs(y_ref).max()


def test_kernels_deterministic():
    # repeated calls give bitwise identical results (parallel loops write
    # disjoint slots, so thread count cannot change the floating-point sums)
    mesh, field, vals, grads, wdet, tab, cpen, cm, cp = make_tables()
    for be in BACKENDS:
        a1 = be.cell_stiffness(grads, wdet, field.element_alpha)
        a2 = be.cell_stiffness(grads, wdet, field.element_alpha)
        assert np.array_equal(a1, a2)
        b1 = be.dg_face_blocks(tab["vals_m"], tab["vals_p"], tab["gn_m"],
                               tab["gn_p"], tab["wq"], cpen, cm, cp)
        b2 = be.dg_face_blocks(tab["vals_m"], tab["vals_p"], tab["gn_m"],
                               tab["gn_p"], tab["wq"], cpen, cm, cp)
        assert np.array_equal(b1, b2)

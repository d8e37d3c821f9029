import io

import numpy as np
import pytest

from interfem import spaces as sp
from interfem.assembly import (DgParameters, apply_dg_form,
                               assemble_conforming, assemble_cr, assemble_dg,
                               assemble_mixed, default_gamma, split_mixed)
from interfem.coefficients import CoefficientField, face_coefficients
from interfem.mesh import build_structured_square, read_mesh
from interfem.problems import problem_interface_1d, problem_smooth_unit
from interfem.solvers import solve_dense, solve_saddle, solve_spd

ZERO = lambda x, y: np.zeros_like(x)


def make_field(mesh, values=(1.0,)):
    return CoefficientField.from_subdomains(mesh, np.array(values))


def piecewise_linear_profile(jump):
    """u = psi(x), psi piecewise linear with alpha psi' continuous at 1/2."""
    def u(x, y):
        return np.where(x < 0.5, x, 0.5 + (x - 0.5) / jump)

    def grad(x, y):
        return np.where(x < 0.5, 1.0, 1.0 / jump) * np.ones_like(x), \
            np.zeros_like(y)

    return u, grad


def test_zero_source_gives_zero_solution():
    p = problem_interface_1d(100.0)
    mesh = build_structured_square(4, p.layout)
    field = p.coefficient_field(mesh)
    for system in (assemble_conforming(mesh, field, ZERO, 1),
                   assemble_conforming(mesh, field, ZERO, 2),
                   assemble_cr(mesh, field, ZERO),
                   assemble_dg(mesh, field, ZERO, 1, DgParameters(10.0))):
        x, rep = solve_spd(system)
        assert rep.converged
        assert np.abs(x).max() == 0.0
    msys = assemble_mixed(mesh, field, ZERO)
    x, rep = solve_saddle(msys)
    assert np.abs(x).max() == 0.0 and rep.iterations == 0


def test_conforming_exact_on_piecewise_linear_interface_profile():
    # Galerkin exactness: the exact solution lies in the trial space
    jump = 1e4
    u, grad = piecewise_linear_profile(jump)
    mesh = build_structured_square(8, problem_interface_1d(jump).layout)
    field = make_field(mesh, (1.0, jump))
    system = assemble_conforming(mesh, field, ZERO, 1, dirichlet=u)
    x = solve_dense(system)   # oracle solve: no iterative error
    uh = sp.FeFunction(sp.CONFORMING_P1, system.dofmap, system.expand(x))
    exact = u(mesh.vertices[:, 0], mesh.vertices[:, 1])
    assert np.abs(uh.coefficients - exact).max() < 1e-10


def test_cr_exact_on_piecewise_linear_interface_profile():
    jump = 100.0
    u, grad = piecewise_linear_profile(jump)
    mesh = build_structured_square(8, problem_interface_1d(jump).layout)
    field = make_field(mesh, (1.0, jump))
    system = assemble_cr(mesh, field, ZERO, dirichlet=u)
    x = solve_dense(system)
    uh = sp.FeFunction(sp.CR, system.dofmap, system.expand(x))
    mids = mesh.face_midpoints()
    assert np.abs(uh.coefficients - u(mids[:, 0], mids[:, 1])).max() < 1e-10


@pytest.mark.parametrize("gamma", [4.0, 10.0])
def test_dg_error_equation_reproduces_dg_member(gamma):
    # exact solution continuous piecewise linear with continuous flux: the
    # DG solution reproduces it for any gamma above the documented minimum
    jump = 50.0
    u, grad = piecewise_linear_profile(jump)
    mesh = build_structured_square(8, problem_interface_1d(jump).layout)
    field = make_field(mesh, (1.0, jump))
    system = assemble_dg(mesh, field, ZERO, 1, DgParameters(gamma),
                         dirichlet=u)
    x = solve_dense(system)
    exact = u(mesh.vertices[:, 0], mesh.vertices[:, 1])
    assert np.abs(x - exact[mesh.triangles].ravel()).max() < 1e-9


def test_dg_single_element_boundary_penalty_spd():
    mesh = read_mesh(io.StringIO("v 0 0\nv 1 0\nv 0 1\nt 0 1 2 0\n"))
    assert mesh.n_triangles == 1 and len(mesh.interior_faces()) == 0
    field = make_field(mesh)
    system = assemble_dg(mesh, field, ZERO, 1, DgParameters(10.0))
    a = system.matrix.toarray()
    assert np.abs(a - a.T).max() < 1e-14
    assert np.linalg.eigvalsh(a).min() > 0


def test_dg_rejects_nonpositive_gamma():
    with pytest.raises(ValueError):
        DgParameters(0.0)
    with pytest.raises(ValueError):
        DgParameters(-3.0)


def test_gamma_defaults():
    assert default_gamma(1) == 10.0
    assert default_gamma(2) == 20.0


def test_mixed_conservation_unit_source():
    mesh = build_structured_square(8)
    field = make_field(mesh)
    one = lambda x, y: np.ones_like(x)
    system = assemble_mixed(mesh, field, one)
    x, rep = solve_saddle(system, tol=1e-10)
    assert rep.converged
    sigma, u = split_mixed(mesh, system, x)
    div = (sigma.element_coeffs() * sigma.dofmap.rt_signs).sum(axis=1) \
        / mesh.tri_area
    assert np.abs(div - 1.0).max() < 1e-10


def test_mixed_block_structure():
    mesh = build_structured_square(4)
    system = assemble_mixed(mesh, make_field(mesh),
                            lambda x, y: np.ones_like(x))
    n_sigma, n_u = system.blocks
    assert n_sigma == mesh.n_faces and n_u == mesh.n_triangles
    a = system.matrix.toarray()
    assert np.abs(a - a.T).max() < 1e-14
    assert np.abs(a[n_sigma:, n_sigma:]).max() == 0.0   # zero (2,2) block
    # (1,1) block is SPD
    assert np.linalg.eigvalsh(a[:n_sigma, :n_sigma]).min() > 0


def test_all_systems_symmetric_with_jump():
    p = problem_interface_1d(1e6)
    mesh = build_structured_square(4, p.layout)
    field = p.coefficient_field(mesh)
    for system in (assemble_conforming(mesh, field, p.f, 1),
                   assemble_conforming(mesh, field, p.f, 2),
                   assemble_cr(mesh, field, p.f),
                   assemble_dg(mesh, field, p.f, 1, DgParameters(10.0)),
                   assemble_dg(mesh, field, p.f, 2, DgParameters(20.0)),
                   assemble_mixed(mesh, field, p.f)):
        assert system.symmetry_residual() <= 1e-12


def test_galerkin_residual_consistency():
    p = problem_smooth_unit()
    mesh = build_structured_square(8)
    field = p.coefficient_field(mesh)
    system = assemble_conforming(mesh, field, p.f, 1)
    x, rep = solve_spd(system, tol=1e-11)
    resid = np.abs(system.rhs - system.matrix @ x).max()
    assert resid <= 1e-11 * np.linalg.norm(system.rhs) * 10


def test_dg_form_matches_matrix_and_symmetry():
    p = problem_interface_1d(1e6)
    mesh = build_structured_square(4, p.layout)
    field = p.coefficient_field(mesh)
    params = DgParameters(10.0)
    system = assemble_dg(mesh, field, p.f, 1, params)
    rng = np.random.default_rng(0)
    for _ in range(5):
        u = sp.FeFunction(sp.DG_P1, system.dofmap, rng.normal(size=system.n))
        v = sp.FeFunction(sp.DG_P1, system.dofmap, rng.normal(size=system.n))
        auv = apply_dg_form(mesh, field, params, u, v)
        avu = apply_dg_form(mesh, field, params, v, u)
        mat = float(u.coefficients @ (system.matrix @ v.coefficients))
        scale = max(1.0, abs(mat))
        assert abs(auv - mat) / scale < 1e-11
        assert abs(auv - avu) / scale < 1e-11
        avv = apply_dg_form(mesh, field, params, v, v)
        assert avv > 0.0


def test_scaling_robustness():
    # alpha -> c alpha with f -> c f leaves every primal solution unchanged
    c = 1e6
    p = problem_interface_1d(100.0)
    mesh = build_structured_square(4, p.layout)
    field = p.coefficient_field(mesh)
    scaled = CoefficientField.from_elements(c * field.element_alpha)
    fc_scaled = lambda x, y: c * p.f(x, y)
    for assemble in (
        lambda fl, ff: assemble_conforming(mesh, fl, ff, 1),
        lambda fl, ff: assemble_cr(mesh, fl, ff),
        lambda fl, ff: assemble_dg(mesh, fl, ff, 1, DgParameters(10.0)),
    ):
        x1, _ = solve_spd(assemble(field, p.f))
        x2, _ = solve_spd(assemble(scaled, fc_scaled))
        assert np.abs(x1 - x2).max() <= 1e-9 * max(1.0, np.abs(x1).max())


def test_dense_oracle_agrees_with_cg():
    p = problem_smooth_unit()
    mesh = build_structured_square(4)
    field = p.coefficient_field(mesh)
    system = assemble_conforming(mesh, field, p.f, 2)
    x_it, rep = solve_spd(system, tol=1e-13)
    x_direct = solve_dense(system)
    assert np.abs(x_it - x_direct).max() < 1e-9 * max(1, np.abs(x_direct).max())

import numpy as np
import pytest

from interfem.mesh import build_structured_square
from interfem.problems import (ProblemConstructionError, build_problem,
                               perturb_source, problem_interface_1d,
                               problem_kellogg, problem_nonqma,
                               problem_smooth_unit, verify_problem)


def test_smooth_unit_verifies():
    p = problem_smooth_unit()
    rep = verify_problem(p, samples=200, seed=0)
    assert rep.ok
    assert rep.worst_strong_form <= 1e-8
    assert rep.worst_boundary <= 1e-12
    assert p.qma_satisfied


def test_corrupted_source_fails_verification():
    p = perturb_source(problem_smooth_unit(), 1.01)
    rep = verify_problem(p, samples=200, seed=0)
    assert not rep.ok
    assert "strong form" in rep.message


def test_interface_1d_reduces_to_smooth_at_unit_jump():
    p = problem_interface_1d(1.0)
    # with no jump the profile collapses to the single cubic x^3 - x
    x = np.linspace(0.0, 1.0, 11)
    psi = p.u_exact(x, np.full_like(x, 0.5))   # sin(pi/2) = 1
    assert np.abs(psi - (x ** 3 - x)).max() < 1e-14
    assert verify_problem(p, 200, 0).ok


@pytest.mark.parametrize("jump", [1.0, 1e2, 1e4, 1e6])
def test_interface_1d_verifies_across_jumps(jump):
    p = problem_interface_1d(jump)
    rep = verify_problem(p, samples=200, seed=0)
    assert rep.ok, rep.message
    assert rep.worst_interface_flux <= 1e-8


def test_interface_1d_boundary_and_continuity():
    p = problem_interface_1d(1e4)
    y = np.linspace(0, 1, 7)
    assert np.abs(p.u_exact(np.zeros_like(y), y)).max() < 1e-14
    assert np.abs(p.u_exact(np.ones_like(y), y)).max() < 1e-13
    # continuity at the interface
    left = p.u_exact(np.full_like(y, 0.5 - 1e-12), y)
    right = p.u_exact(np.full_like(y, 0.5 + 1e-12), y)
    assert np.abs(left - right).max() < 1e-10


def test_kellogg_half_exponent_parameters():
    # independent closed form at s = 1/2: the coefficient ratio is 3 + 2*sqrt(2)
    p = problem_kellogg(0.5)
    assert abs(p.jump - (3.0 + 2.0 * np.sqrt(2.0))) < 1e-10
    rep = verify_problem(p, samples=200, seed=0)
    assert rep.ok, rep.message


def test_kellogg_classical_exponent_parameters():
    # published parameters of the classical benchmark at s = 0.1
    p = problem_kellogg(0.1)
    assert abs(p.jump - 161.4476387975881) < 1e-9


def test_kellogg_homogeneity_and_origin():
    p = problem_kellogg(0.5)
    rng = np.random.default_rng(2)
    x = rng.uniform(-0.9, 0.9, 50)
    y = rng.uniform(-0.9, 0.9, 50)
    keep = np.hypot(x, y) > 0.05
    x, y = x[keep], y[keep]
    ratio = p.u_exact(0.5 * x, 0.5 * y) / p.u_exact(x, y)
    assert np.abs(ratio - 0.5 ** 0.5).max() < 1e-12
    assert p.u_exact(0.0, 0.0) == 0.0


def test_kellogg_flags_and_regularity_rule():
    p = problem_kellogg(0.5)
    assert not p.qma_satisfied
    mesh = build_structured_square(4, p.layout, p.domain)
    s = p.s_elements(mesh)
    touching = p.singular_elements(mesh)
    assert len(touching) == 6       # vertex degree of the cross point
    assert np.all(s[touching] == 0.5)
    others = np.setdiff1d(np.arange(mesh.n_triangles), touching)
    assert np.all(np.isinf(s[others]))


def test_kellogg_invalid_exponent():
    with pytest.raises(ProblemConstructionError):
        problem_kellogg(1.5)


@pytest.mark.parametrize("pattern,n_sub", [("checkerboard4", 4),
                                           ("checkerboard8", 8)])
def test_nonqma_layouts(pattern, n_sub):
    p = problem_nonqma(pattern, 1e4)
    assert not p.qma_satisfied
    assert p.layout.n_subdomains == n_sub
    assert p.u_exact is None
    mesh = build_structured_square(8, p.layout)
    assert mesh.subdomain_count == n_sub


def test_nonqma_systems_solvable():
    from interfem.assembly import assemble_cr
    from interfem.solvers import solve_spd
    p = problem_nonqma("checkerboard4", 1e4)
    mesh = build_structured_square(8, p.layout)
    field = p.coefficient_field(mesh)
    system = assemble_cr(mesh, field, p.f)
    x, rep = solve_spd(system)
    assert rep.converged


def test_verify_requires_exact_solution():
    p = problem_nonqma("checkerboard4", 10.0)
    with pytest.raises(ValueError):
        verify_problem(p)


def test_problem_registry():
    assert build_problem("smooth").name == "smooth"
    assert build_problem("interface1d", {"jump": 42.0}).jump == 42.0
    assert build_problem("kellogg", {"s": 0.5}).s_global == 0.5
    with pytest.raises(KeyError):
        build_problem("does_not_exist")


def test_sigma_exact_matches_flux():
    p = problem_interface_1d(100.0)
    x = np.array([0.2, 0.7])
    y = np.array([0.3, 0.6])
    gx, gy = p.grad_exact(x, y)
    sx, sy = p.sigma_exact(x, y)
    a = np.where(x < 0.5, 1.0, 100.0)
    assert np.allclose(sx, -a * gx)
    assert np.allclose(sy, -a * gy)

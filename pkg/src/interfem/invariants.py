"""Registry of cross-module invariant checks behind the verification runner.

Every check returns an InvariantResult with the worst observed residual, so
the runner can print one line per invariant family.  The underlying check
helpers take their data as arguments, which lets tests feed deliberately
corrupted inputs as negative controls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spaces as sp
from .assembly import (DgParameters, apply_dg_form, assemble_conforming,
                       assemble_cr, assemble_dg, assemble_mixed, split_mixed)
from .coefficients import (CoefficientField, face_coefficients,
                           jump_identity_residual, weight_bound_worst)
from .analysis import divergence_residual, energy_error, jump_seminorm
from .mesh import build_structured_square, layout_checkerboard
from .problems import problem_interface_1d, problem_nonqma
from .quadrature import (edge_rule, triangle_monomial_integral, triangle_rule)
from .solvers import solve_saddle, solve_spd


@dataclass(frozen=True)
class InvariantResult:
    name: str
    passed: bool
    worst: float
    bound: float
    detail: str = ""


def _result(name, worst, bound, detail="", larger_is_better=False):
    ok = worst >= bound if larger_is_better else worst <= bound
    return InvariantResult(name, bool(ok), float(worst), float(bound), detail)


def _jump_mesh(seed, n=4, jump=1e6):
    """Small checkerboard mesh with a per-element randomized coefficient."""
    rng = np.random.default_rng(seed)
    mesh = build_structured_square(n, layout_checkerboard())
    base = np.array([jump, 1.0, 1.0, jump])[mesh.subdomain]
    alpha = base * np.exp(rng.uniform(-0.5, 0.5, mesh.n_triangles))
    return mesh, CoefficientField.from_elements(alpha)


def check_weight_normalization(fc):
    worst = np.abs(fc.w_minus + fc.w_plus - 1.0).max()
    bnd = ~fc.interior
    if bnd.any():
        worst = max(worst, np.abs(fc.w_minus[bnd] - 1.0).max(),
                    np.abs(fc.w_plus[bnd]).max())
    return float(worst)


def check_average_bounds(am, ap):
    """Worst violation of the min/max comparability of the two face averages."""
    arod = 0.5 * (am + ap)
    harm = 2.0 * am * ap / (am + ap)
    amin = np.minimum(am, ap)
    amax = np.maximum(am, ap)
    viol = np.maximum.reduce([
        amin - harm,                 # harmonic >= min
        harm - 2.0 * amin,           # harmonic <= 2 min
        0.5 * amax - arod,           # arithmetic >= max/2
        arod - amax,                 # arithmetic <= max
        harm - arod,                 # harmonic <= arithmetic
    ])
    rel = viol / np.maximum(amax, 1e-300)
    return float(rel.max())


def inv_quadrature_exactness(seed):
    worst = 0.0
    for deg in range(1, 11):
        tri = triangle_rule(deg)
        x, y = tri.points[:, 1], tri.points[:, 2]
        for a in range(deg + 1):
            for b in range(deg + 1 - a):
                q = float((tri.weights * x ** a * y ** b).sum())
                worst = max(worst, abs(q - triangle_monomial_integral(a, b)))
        edge = edge_rule(deg)
        for a in range(deg + 1):
            q = float((edge.weights * edge.points ** a).sum())
            worst = max(worst, abs(q - 1.0 / (a + 1)))
    return _result("quadrature_exactness", worst, 1e-13)


def inv_face_average_bounds(seed):
    rng = np.random.default_rng(seed)
    am = 10.0 ** rng.uniform(-8, 8, 100_000)
    ap = 10.0 ** rng.uniform(-8, 8, 100_000)
    worst = check_average_bounds(am, ap)
    # symmetry under swapping the two sides
    harm1 = 2 * am * ap / (am + ap)
    harm2 = 2 * ap * am / (ap + am)
    sym = float(np.abs(harm1 - harm2).max() / harm1.max())
    return _result("face_average_bounds", max(worst, sym), 1e-13,
                   "min <= harmonic <= 2 min, max/2 <= arithmetic <= max")


def inv_weight_normalization(seed):
    mesh, field = _jump_mesh(seed)
    fc = face_coefficients(mesh, field)
    return _result("weight_normalization", check_weight_normalization(fc), 0.0)


def inv_weight_bound(seed):
    worst = 0.0
    for s in range(3):
        mesh, field = _jump_mesh(seed + s)
        fc = face_coefficients(mesh, field)
        worst = max(worst, weight_bound_worst(fc))
    return _result("weight_bound", worst, np.sqrt(2.0) / 2.0 + 1e-12,
                   "w sqrt(alpha/alpha_H) on interior faces")


def inv_jump_identity(seed):
    rng = np.random.default_rng(seed)
    um, up, vm, vp = rng.normal(size=(4, 100_000))
    wm = rng.uniform(0.0, 1.0, 100_000)
    worst = float(jump_identity_residual(um, up, vm, vp, wm, 1.0 - wm).max())
    return _result("jump_identity", worst, 1e-14)


def inv_rt0_commutativity(seed):
    rng = np.random.default_rng(seed)
    mesh = build_structured_square(4)
    worst = 0.0
    for _ in range(10):
        cx = rng.normal(size=10)
        cy = rng.normal(size=10)

        def poly(c, x, y):
            # full bivariate cubic
            return (c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y
                    + c[5] * y * y + c[6] * x ** 3 + c[7] * x * x * y
                    + c[8] * x * y * y + c[9] * y ** 3)

        def dpoly_dx(c, x, y):
            return (c[1] + 2 * c[3] * x + c[4] * y + 3 * c[6] * x * x
                    + 2 * c[7] * x * y + c[8] * y * y)

        def dpoly_dy(c, x, y):
            return (c[2] + c[4] * x + 2 * c[5] * y + c[7] * x * x
                    + 2 * c[8] * x * y + 3 * c[9] * y * y)

        tau = lambda x, y: (poly(cx, x, y), poly(cy, x, y))
        div = lambda x, y: dpoly_dx(cx, x, y) + dpoly_dy(cy, x, y)
        rt = sp.interpolate_rt0(tau, mesh, degree=8)
        div_rt = (rt.element_coeffs() * rt.dofmap.rt_signs).sum(axis=1) \
            / mesh.tri_area
        q0 = sp.project_l2(div, mesh, 0).coefficients
        scale = max(1.0, np.abs(q0).max())
        worst = max(worst, float(np.abs(div_rt - q0).max() / scale))
    return _result("rt0_commutativity", worst, 1e-11,
                   "div of RT0 interpolant equals P0 projection of div")


def inv_cr_weak_continuity(seed):
    rng = np.random.default_rng(seed)
    mesh = build_structured_square(5)
    dofmap = sp.build_dofmap(mesh, sp.CR)
    f = sp.FeFunction(sp.CR, dofmap, rng.normal(size=dofmap.n_dofs))
    tab = sp.face_trace_tables(sp.CR, mesh, edge_rule(6))
    ce = f.element_coeffs()
    km = mesh.face_kminus
    kp = np.where(tab["interior"], mesh.face_kplus, km)
    tm = np.einsum("fql,fl->fq", tab["vals_m"], ce[km])
    tp = np.einsum("fql,fl->fq", tab["vals_p"], ce[kp])
    means = ((tm - tp) * tab["wq"]).sum(axis=1)
    worst = float(np.abs(means[tab["interior"]]).max()
                  / max(1.0, np.abs(f.coefficients).max()))
    return _result("cr_face_mean_jump", worst, 1e-12)


def inv_rt0_normal_continuity(seed):
    rng = np.random.default_rng(seed)
    mesh = build_structured_square(5)
    dofmap = sp.build_dofmap(mesh, sp.RT0)
    coeffs = rng.normal(size=dofmap.n_dofs)
    rule = edge_rule(4)
    a = mesh.vertices[mesh.faces[:, 0]]
    b = mesh.vertices[mesh.faces[:, 1]]
    pts = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]

    def side_normal_trace(ks):
        verts = mesh.vertices[mesh.triangles[ks]]      # (F, 3, 2)
        local = coeffs[dofmap.element_dofs[ks]]
        scale = local * dofmap.rt_signs[ks] / (2.0 * mesh.tri_area[ks])[:, None]
        vec = np.einsum("fi,fqid->fqd", scale,
                        pts[:, :, None, :] - verts[:, None, :, :])
        return np.einsum("fqd,fd->fq", vec, mesh.face_normal)

    interior = mesh.interior_faces()
    tm = side_normal_trace(mesh.face_kminus)[interior]
    tp = side_normal_trace(np.where(mesh.face_kplus >= 0, mesh.face_kplus,
                                    mesh.face_kminus))[interior]
    worst = float(np.abs(tm - tp).max() / max(1.0, np.abs(tm).max()))
    return _result("rt0_normal_continuity", worst, 1e-11)


def inv_partition_of_unity(seed):
    rng = np.random.default_rng(seed)
    bary = rng.dirichlet(np.ones(3), size=200)
    worst = 0.0
    for space in (sp.CONFORMING_P1, sp.CR):
        s = sp.shape_values(space, bary).sum(axis=-1)
        worst = max(worst, float(np.abs(s - 1.0).max()))
    return _result("partition_of_unity", worst, 1e-14)


def inv_matrix_symmetry(seed):
    problem = problem_interface_1d(1e6)
    mesh = build_structured_square(4, problem.layout)
    field = problem.coefficient_field(mesh)
    worst = 0.0
    systems = [
        assemble_conforming(mesh, field, problem.f, 1),
        assemble_conforming(mesh, field, problem.f, 2),
        assemble_cr(mesh, field, problem.f),
        assemble_dg(mesh, field, problem.f, 1, DgParameters(10.0)),
        assemble_dg(mesh, field, problem.f, 2, DgParameters(20.0)),
        assemble_mixed(mesh, field, problem.f),
    ]
    for s in systems:
        worst = max(worst, s.symmetry_residual())
    return _result("matrix_symmetry", worst, 1e-12,
                   "all assembled systems, relative")


def inv_dg_form_consistency(seed):
    rng = np.random.default_rng(seed)
    mesh, field = _jump_mesh(seed)
    params = DgParameters(10.0)
    sys = assemble_dg(mesh, field, lambda x, y: np.zeros_like(x), 1, params)
    worst = 0.0
    for _ in range(5):
        u = sp.FeFunction(sp.DG_P1, sys.dofmap, rng.normal(size=sys.n))
        v = sp.FeFunction(sp.DG_P1, sys.dofmap, rng.normal(size=sys.n))
        a_free = apply_dg_form(mesh, field, params, u, v)
        a_mat = float(u.coefficients @ (sys.matrix @ v.coefficients))
        worst = max(worst, abs(a_free - a_mat) / max(1.0, abs(a_mat)))
    return _result("dg_form_matches_matrix", worst, 1e-11)


def inv_dg_coercivity(seed, n_samples=200):
    rng = np.random.default_rng(seed)
    problem = problem_nonqma("checkerboard4", 1e6)
    mesh = build_structured_square(8, problem.layout)
    field = problem.coefficient_field(mesh)
    fc = face_coefficients(mesh, field)
    sys = assemble_dg(mesh, field, problem.f, 1, DgParameters(10.0))
    zero_grad = lambda x, y: (np.zeros_like(x), np.zeros_like(x))
    worst = np.inf
    for _ in range(n_samples):
        v = sp.FeFunction(sp.DG_P1, sys.dofmap, rng.normal(size=sys.n))
        avv = float(v.coefficients @ (sys.matrix @ v.coefficients))
        e = energy_error(mesh, field, zero_grad, v, degree=4)
        j = jump_seminorm(mesh, fc, v, degree=4)
        worst = min(worst, avv / (e * e + j * j))
    return _result("dg_coercivity_sampled", worst, 0.05,
                   f"min a(v,v)/|||v|||^2 over {n_samples} samples, "
                   "jump 1e6 checkerboard, gamma 10", larger_is_better=True)


def inv_mixed_conservation(seed):
    problem = problem_interface_1d(1e4)
    mesh = build_structured_square(8, problem.layout)
    field = problem.coefficient_field(mesh)
    sys = assemble_mixed(mesh, field, problem.f)
    x, rep = solve_saddle(sys, tol=1e-10)
    sigma, _ = split_mixed(mesh, sys, x)
    worst = divergence_residual(mesh, field, problem.f, sigma)
    detail = f"solver iters {rep.iterations}, converged {rep.converged}"
    if not rep.converged:
        return InvariantResult("mixed_conservation", False, worst, 1e-8, detail)
    return _result("mixed_conservation", worst, 1e-8, detail)


def inv_scaling_invariance(seed, c=1e6):
    problem = problem_interface_1d(100.0)
    mesh = build_structured_square(4, problem.layout)
    field = problem.coefficient_field(mesh)
    scaled = CoefficientField.from_elements(c * field.element_alpha)
    f = problem.f
    fc_scaled = lambda x, y: c * f(x, y)
    worst = 0.0
    for assemble in (lambda fl, ff: assemble_conforming(mesh, fl, ff, 1),
                     lambda fl, ff: assemble_cr(mesh, fl, ff),
                     lambda fl, ff: assemble_dg(mesh, fl, ff, 1,
                                                DgParameters(10.0))):
        x1, _ = solve_spd(assemble(field, f))
        x2, _ = solve_spd(assemble(scaled, fc_scaled))
        scale = max(1.0, np.abs(x1).max())
        worst = max(worst, float(np.abs(x1 - x2).max() / scale))
    return _result("scaling_invariance", worst, 1e-9,
                   "alpha -> c alpha with f -> c f leaves solutions unchanged")


INVARIANTS = (
    inv_quadrature_exactness,
    inv_face_average_bounds,
    inv_weight_normalization,
    inv_weight_bound,
    inv_jump_identity,
    inv_rt0_commutativity,
    inv_cr_weak_continuity,
    inv_rt0_normal_continuity,
    inv_partition_of_unity,
    inv_matrix_symmetry,
    inv_dg_form_consistency,
    inv_dg_coercivity,
    inv_mixed_conservation,
    inv_scaling_invariance,
)


def run_all(seed=0):
    return [fn(seed) for fn in INVARIANTS]

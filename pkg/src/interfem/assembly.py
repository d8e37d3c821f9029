"""Assembly of the discrete systems: conforming, Crouzeix-Raviart,
Raviart-Thomas mixed saddle point, and weighted symmetric interior-penalty DG.

All four assemblies produce a symmetric sparse system; conforming and CR
systems are reduced to the free dofs by Dirichlet elimination, the DG system
imposes boundary data weakly through its boundary-face terms, and the mixed
system is the indefinite block form [[M, B^T], [B, 0]].
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .coefficients import face_coefficients
from .quadrature import edge_rule, triangle_rule
from . import spaces
from .spaces import (CONFORMING_P1, CONFORMING_P2, CR, DG_P0, DG_P1, DG_P2,
                     RT0, FeFunction, build_dofmap, cell_tables,
                     face_trace_tables, rt0_tables)

GAMMA_MIN = 4.0


def default_gamma(k):
    """Documented penalty defaults: 10 for P1, 20 for P2 faces."""
    return 10.0 if k <= 1 else 20.0


@dataclass(frozen=True)
class DgParameters:
    """Interior-penalty parameters.

    penalty_average/flux_weighting accept "arithmetic"/"plain" only as a
    negative-control mode for robustness experiments; production runs always
    use the harmonic pair.
    """

    gamma: float
    penalty_average: str = "harmonic"   # or "arithmetic" (test mode)
    flux_weighting: str = "harmonic"    # or "plain" (test mode)

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("penalty parameter gamma must be positive")


@dataclass(eq=False)
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    structure: str                      # "spd" | "saddle"
    blocks: tuple | None = None         # (n_sigma, n_u) for saddle systems
    dofmap: object = None
    free: np.ndarray | None = None      # free dof ids of an eliminated system
    fixed_values: np.ndarray | None = None

    @property
    def n(self):
        return self.matrix.shape[0]

    def expand(self, x):
        """Map a solution of the reduced system back to all coefficients."""
        if self.free is None:
            return x
        full = self.fixed_values.copy()
        full[self.free] = x
        return full

    def symmetry_residual(self):
        d = self.matrix - self.matrix.T
        scale = np.abs(self.matrix.data).max() if self.matrix.nnz else 1.0
        return float(np.abs(d.data).max() / scale) if d.nnz else 0.0


def _scatter(dofs, blocks, n):
    """Accumulate per-entity (N, L, L) blocks into an n-by-n CSR matrix."""
    n_ent, nl = dofs.shape
    rows = np.repeat(dofs, nl, axis=1).ravel()
    cols = np.tile(dofs, (1, nl)).ravel()
    return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _scatter_vector(dofs, locs, n):
    out = np.zeros(n)
    np.add.at(out, dofs.ravel(), locs.ravel())
    return out


def _dirichlet_values(dofmap, g):
    """Full-length vector with boundary data interpolated on constrained dofs."""
    mesh = dofmap.mesh
    full = np.zeros(dofmap.n_dofs)
    if g is None or len(dofmap.dirichlet_dofs) == 0:
        return full
    if dofmap.space in (CONFORMING_P1, CONFORMING_P2):
        bv = mesh.boundary_vertices()
        full[bv] = g(mesh.vertices[bv, 0], mesh.vertices[bv, 1])
        if dofmap.space is CONFORMING_P2:
            bf = mesh.boundary_faces()
            mid = mesh.face_midpoints()[bf]
            full[mesh.n_vertices + bf] = g(mid[:, 0], mid[:, 1])
        return full
    if dofmap.space is CR:
        bf = mesh.boundary_faces()
        rule = edge_rule(4)
        a = mesh.vertices[mesh.faces[bf, 0]]
        b = mesh.vertices[mesh.faces[bf, 1]]
        pts = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
        full[bf] = g(pts[..., 0], pts[..., 1]) @ rule.weights
        return full
    raise ValueError(f"no Dirichlet interpolation for {dofmap.space}")


def _reduce(a_full, rhs, dofmap, g):
    """Eliminate Dirichlet dofs; returns the SPD system on the free dofs."""
    fixed = _dirichlet_values(dofmap, g)
    free = dofmap.free_dofs
    diri = dofmap.dirichlet_dofs
    a_free = a_full[free][:, free]
    b = rhs[free]
    if len(diri):
        b = b - a_full[free][:, diri] @ fixed[diri]
    return SparseSystem(a_free.tocsr(), b, "spd", dofmap=dofmap,
                        free=free, fixed_values=fixed)


def _grad_system(mesh, field, f, space, dirichlet, quad_degree):
    rule = triangle_rule(quad_degree)
    vals, grads, wdet, phys = cell_tables(space, mesh, rule)
    a_loc = kernels.cell_stiffness(grads, wdet, field.element_alpha)
    b_loc = kernels.cell_load(vals, wdet, f(phys[..., 0], phys[..., 1]))
    dofmap = build_dofmap(mesh, space)
    a_full = _scatter(dofmap.element_dofs, a_loc, dofmap.n_dofs)
    rhs = _scatter_vector(dofmap.element_dofs, b_loc, dofmap.n_dofs)
    return a_full, rhs, dofmap


def assemble_conforming(mesh, field, f, k, dirichlet=None, quad_degree=None):
    """Continuous P_k system for the weighted Poisson bilinear form."""
    space = CONFORMING_P1 if k == 1 else CONFORMING_P2
    a_full, rhs, dofmap = _grad_system(mesh, field, f, space, dirichlet,
                                       quad_degree or 2 * k + 2)
    return _reduce(a_full, rhs, dofmap, dirichlet)


def assemble_cr(mesh, field, f, dirichlet=None, quad_degree=None):
    """Crouzeix-Raviart system with the element-wise (broken) gradient."""
    a_full, rhs, dofmap = _grad_system(mesh, field, f, CR, dirichlet,
                                       quad_degree or 4)
    return _reduce(a_full, rhs, dofmap, dirichlet)


def _dg_face_data(mesh, field, params):
    fc = face_coefficients(mesh, field)
    if params.penalty_average == "harmonic":
        pen_avg = fc.harmonic
    elif params.penalty_average == "arithmetic":
        pen_avg = fc.arithmetic
    else:
        raise ValueError(f"unknown penalty average {params.penalty_average!r}")
    if params.flux_weighting == "harmonic":
        wm, wp = fc.w_minus, fc.w_plus
    elif params.flux_weighting == "plain":
        wm = np.where(fc.interior, 0.5, 1.0)
        wp = np.where(fc.interior, 0.5, 0.0)
    else:
        raise ValueError(f"unknown flux weighting {params.flux_weighting!r}")
    cpen = params.gamma * pen_avg / mesh.face_h
    cm = wm * fc.alpha_minus
    cp = np.where(fc.interior, wp * fc.alpha_plus, 0.0)
    return fc, cpen, cm, cp


def assemble_dg(mesh, field, f, k, params, dirichlet=None, quad_degree=None):
    """Symmetric weighted interior-penalty system on discontinuous P_k.

    Boundary faces enter with the one-sided average and the full trace as the
    jump; Dirichlet data contributes the usual penalty/consistency terms on
    the right-hand side.
    """
    space = DG_P1 if k == 1 else DG_P2
    deg = quad_degree or 2 * k + 2
    a_full, rhs, dofmap = _grad_system(mesh, field, f, space, None, deg)

    tab = face_trace_tables(space, mesh, edge_rule(deg))
    _, cpen, cm, cp = _dg_face_data(mesh, field, params)
    blocks = kernels.dg_face_blocks(tab["vals_m"], tab["vals_p"],
                                    tab["gn_m"], tab["gn_p"],
                                    tab["wq"], cpen, cm, cp)
    dofs2 = np.hstack([tab["dofs_m"], tab["dofs_p"]])
    a_full = a_full + _scatter(dofs2, blocks, dofmap.n_dofs)

    if dirichlet is not None:
        bnd = np.flatnonzero(~tab["interior"])
        if len(bnd):
            phys = tab["phys"][bnd]
            gq = dirichlet(phys[..., 0], phys[..., 1])           # (B, Q)
            w = tab["wq"][bnd] * gq
            loc = np.einsum("fq,fqi->fi", w * cpen[bnd, None], tab["vals_m"][bnd]) \
                - np.einsum("fq,fqi->fi", w * cm[bnd, None], tab["gn_m"][bnd])
            rhs = rhs + _scatter_vector(tab["dofs_m"][bnd], loc, dofmap.n_dofs)

    return SparseSystem(a_full.tocsr(), rhs, "spd", dofmap=dofmap)


def assemble_mixed(mesh, field, f, quad_degree=None):
    """Raviart-Thomas(0) x P0 saddle-point system [[M, B^T], [B, 0]].

    M is the alpha^{-1}-weighted RT0 mass matrix and B the divergence
    coupling; the right-hand side is (0, (f, v)).  The scalar unknown of the
    block solution carries a flipped sign (see split_mixed).
    """
    rule = triangle_rule(quad_degree or 2)
    dofmap, vals, divs, wdet, phys = rt0_tables(mesh, rule)
    m_loc = kernels.cell_stiffness(vals, wdet, 1.0 / field.element_alpha)
    m = _scatter(dofmap.element_dofs, m_loc, dofmap.n_dofs)

    n_e = mesh.n_triangles
    rows = np.repeat(np.arange(n_e), 3)
    cols = dofmap.element_dofs.ravel()
    # div phi_i integrates to the orientation sign over the element
    b = sp.coo_matrix((dofmap.rt_signs.ravel(), (rows, cols)),
                      shape=(n_e, dofmap.n_dofs)).tocsr()

    rule_f = triangle_rule(4)  # must match divergence_residual's default
    p0_vals, _, wdet_f, phys_f = cell_tables(DG_P0, mesh, rule_f)
    f_u = kernels.cell_load(p0_vals, wdet_f, f(phys_f[..., 0], phys_f[..., 1]))

    a = sp.bmat([[m, b.T], [b, None]], format="csr")
    rhs = np.concatenate([np.zeros(dofmap.n_dofs), f_u.ravel()])
    return SparseSystem(a, rhs, "saddle", blocks=(dofmap.n_dofs, n_e),
                        dofmap=dofmap)


def split_mixed(mesh, system, x):
    """Split a mixed block solution into the flux and scalar FE functions."""
    n_sigma, n_u = system.blocks
    sigma = FeFunction(RT0, system.dofmap, x[:n_sigma].copy())
    # the assembled block system solves for the negated scalar unknown
    u = FeFunction(DG_P0, build_dofmap(mesh, DG_P0), -x[n_sigma:].copy())
    return sigma, u


def apply_dg_form(mesh, field, params, u, v, quad_degree=None):
    """Matrix-free evaluation of the interior-penalty bilinear form.

    Independent of the assembled matrix path (no global scatter); used to
    cross-check assemble_dg and for coercivity sampling.
    """
    if u.space is not v.space:
        raise ValueError("u and v must live in the same DG space")
    space = u.space
    deg = quad_degree or 2 * space.k + 2
    rule = triangle_rule(deg)
    _, grads, wdet, _ = cell_tables(space, mesh, rule)
    ue = u.element_coeffs()
    ve = v.element_coeffs()
    gu = np.einsum("eqld,el->eqd", grads, ue)
    gv = np.einsum("eqld,el->eqd", grads, ve)
    vol = np.einsum("eq,e,eqd,eqd->", wdet, field.element_alpha, gu, gv)

    tab = face_trace_tables(space, mesh, edge_rule(deg))
    _, cpen, cm, cp = _dg_face_data(mesh, field, params)
    km = mesh.face_kminus
    kp = np.where(tab["interior"], mesh.face_kplus, km)

    def traces(fn):
        ce = fn.element_coeffs()
        tm = np.einsum("fql,fl->fq", tab["vals_m"], ce[km])
        tp = np.einsum("fql,fl->fq", tab["vals_p"], ce[kp])
        gm = np.einsum("fql,fl->fq", tab["gn_m"], ce[km])
        gp = np.einsum("fql,fl->fq", tab["gn_p"], ce[kp])
        return tm - tp, cm[:, None] * gm + cp[:, None] * gp

    ju, flux_u = traces(u)
    jv, flux_v = traces(v)
    face = np.sum(tab["wq"] * (cpen[:, None] * ju * jv
                               - flux_u * jv - flux_v * ju))
    return float(vol + face)

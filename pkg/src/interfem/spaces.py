"""Finite element spaces: local bases, dof maps, interpolation, projection.

Scalar spaces (conforming P1/P2, Crouzeix-Raviart, discontinuous P1/P2) share
one barycentric basis-table machinery; the lowest-order Raviart-Thomas space
gets its own per-element vector representation with a global orientation sign
per (element, face).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .mesh import BOUNDARY
from .quadrature import edge_rule, triangle_rule


@dataclass(frozen=True)
class Space:
    tag: str
    k: int        # polynomial degree (RT0: degree of the contained P_k^2)
    n_local: int

    def __str__(self):
        return self.tag


CONFORMING_P1 = Space("conforming_p1", 1, 3)
CONFORMING_P2 = Space("conforming_p2", 2, 6)
CR = Space("crouzeix_raviart", 1, 3)
RT0 = Space("raviart_thomas_0", 0, 3)
DG_P0 = Space("dg_p0", 0, 1)
DG_P1 = Space("dg_p1", 1, 3)
DG_P2 = Space("dg_p2", 2, 6)

_SCALAR = {CONFORMING_P1, CONFORMING_P2, CR, DG_P0, DG_P1, DG_P2}


def shape_values(space, bary):
    """Local basis values at barycentric points; bary (..., 3) -> (..., L)."""
    l0, l1, l2 = bary[..., 0], bary[..., 1], bary[..., 2]
    if space is DG_P0:
        return np.ones(bary.shape[:-1] + (1,))
    if space in (CONFORMING_P1, DG_P1):
        return bary.copy()
    if space is CR:
        return 1.0 - 2.0 * bary
    if space in (CONFORMING_P2, DG_P2):
        return np.stack([
            l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
            4 * l1 * l2, 4 * l2 * l0, 4 * l0 * l1,
        ], axis=-1)
    raise ValueError(f"no scalar basis for {space}")


def shape_dlambda(space, bary):
    """Derivatives of the local basis w.r.t. barycentric coords: (..., L, 3)."""
    shape = bary.shape[:-1]
    if space is DG_P0:
        return np.zeros(shape + (1, 3))
    if space in (CONFORMING_P1, DG_P1):
        return np.broadcast_to(np.eye(3), shape + (3, 3)).copy()
    if space is CR:
        return np.broadcast_to(-2.0 * np.eye(3), shape + (3, 3)).copy()
    if space in (CONFORMING_P2, DG_P2):
        l0, l1, l2 = bary[..., 0], bary[..., 1], bary[..., 2]
        z = np.zeros_like(l0)
        d = np.empty(shape + (6, 3))
        d[..., 0, :] = np.stack([4 * l0 - 1, z, z], axis=-1)
        d[..., 1, :] = np.stack([z, 4 * l1 - 1, z], axis=-1)
        d[..., 2, :] = np.stack([z, z, 4 * l2 - 1], axis=-1)
        d[..., 3, :] = np.stack([z, 4 * l2, 4 * l1], axis=-1)
        d[..., 4, :] = np.stack([4 * l2, z, 4 * l0], axis=-1)
        d[..., 5, :] = np.stack([4 * l1, 4 * l0, z], axis=-1)
        return d
    raise ValueError(f"no scalar basis for {space}")


def lambda_gradients(mesh):
    """Gradients of the barycentric coordinates per element: (E, 3, 2)."""
    pts = mesh.vertices[mesh.triangles]
    area2 = 2.0 * mesh.tri_area
    grads = np.empty((mesh.n_triangles, 3, 2))
    for i in range(3):
        d = pts[:, (i + 2) % 3] - pts[:, (i + 1) % 3]
        grads[:, i, 0] = -d[:, 1] / area2
        grads[:, i, 1] = d[:, 0] / area2
    return grads


@dataclass(frozen=True, eq=False)
class DofMap:
    space: Space
    mesh: object
    n_dofs: int
    element_dofs: np.ndarray      # (E, L) global dof ids
    dirichlet_dofs: np.ndarray    # sorted constrained ids (may be empty)
    rt_signs: np.ndarray | None = None   # (E, 3) orientation signs, RT0 only

    @property
    def free_dofs(self):
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.dirichlet_dofs] = False
        return np.flatnonzero(mask)


def build_dofmap(mesh, space):
    if space is CONFORMING_P1:
        return DofMap(space, mesh, mesh.n_vertices, mesh.triangles,
                      mesh.boundary_vertices())
    if space is CONFORMING_P2:
        nv = mesh.n_vertices
        edofs = np.hstack([mesh.triangles, nv + mesh.tri_faces])
        diri = np.concatenate([mesh.boundary_vertices(),
                               nv + mesh.boundary_faces()])
        return DofMap(space, mesh, nv + mesh.n_faces, edofs, np.sort(diri))
    if space is CR:
        return DofMap(space, mesh, mesh.n_faces, mesh.tri_faces,
                      mesh.boundary_faces())
    if space is RT0:
        signs = np.where(
            mesh.face_kminus[mesh.tri_faces] == np.arange(mesh.n_triangles)[:, None],
            1.0, -1.0)
        return DofMap(space, mesh, mesh.n_faces, mesh.tri_faces,
                      np.empty(0, dtype=np.int64), rt_signs=signs)
    if space in (DG_P0, DG_P1, DG_P2):
        nl = space.n_local
        edofs = np.arange(mesh.n_triangles * nl).reshape(-1, nl)
        return DofMap(space, mesh, mesh.n_triangles * nl, edofs,
                      np.empty(0, dtype=np.int64))
    raise ValueError(f"unknown space {space}")


@dataclass(eq=False)
class FeFunction:
    space: Space
    dofmap: DofMap
    coefficients: np.ndarray

    def __post_init__(self):
        if len(self.coefficients) != self.dofmap.n_dofs:
            raise ValueError("coefficient vector length does not match dofmap")

    @property
    def mesh(self):
        return self.dofmap.mesh

    def element_coeffs(self):
        """Coefficients gathered per element: (E, L)."""
        return self.coefficients[self.dofmap.element_dofs]


def eval(f, k, bary):
    """Evaluate on triangle k at barycentric point(s): scalar or 2-vector (RT0)."""
    bary = np.asarray(bary, dtype=float)
    local = f.coefficients[f.dofmap.element_dofs[k]]
    if f.space is RT0:
        mesh = f.mesh
        pts = bary @ mesh.vertices[mesh.triangles[k]]
        verts = mesh.vertices[mesh.triangles[k]]
        signs = f.dofmap.rt_signs[k]
        val = np.zeros(bary.shape[:-1] + (2,))
        for i in range(3):
            val += (local[i] * signs[i] / (2.0 * mesh.tri_area[k])) \
                * (pts - verts[i])
        return val
    return shape_values(f.space, bary) @ local


def eval_at(f, x, y):
    """Evaluate a scalar FE function at physical points (structured meshes)."""
    mesh = f.mesh
    tri, bary = mesh.locate(x, y)
    vals = shape_values(f.space, bary)                 # (..., L)
    local = f.coefficients[f.dofmap.element_dofs[tri]]
    return np.einsum("...l,...l->...", vals, local)


def grad_at(f, x, y):
    """Element-local gradient of a scalar FE function at physical points."""
    mesh = f.mesh
    tri, bary = mesh.locate(x, y)
    dl = shape_dlambda(f.space, bary)                  # (..., L, 3)
    gl = lambda_gradients(mesh)[tri]                   # (..., 3, 2)
    local = f.coefficients[f.dofmap.element_dofs[tri]]
    g = np.einsum("...lk,...kd,...l->...d", dl, gl, local)
    return g[..., 0], g[..., 1]


def rt0_at(f, x, y):
    """Evaluate an RT0 field at physical points (structured meshes)."""
    mesh = f.mesh
    tri, _ = mesh.locate(x, y)
    verts = mesh.vertices[mesh.triangles[tri]]         # (..., 3, 2)
    local = f.coefficients[f.dofmap.element_dofs[tri]]
    scale = local * f.dofmap.rt_signs[tri] / (2.0 * mesh.tri_area[tri])[..., None]
    pts = np.stack([np.asarray(x, dtype=float), np.asarray(y, dtype=float)],
                   axis=-1)
    val = np.einsum("...i,...id->...d", scale, pts[..., None, :] - verts)
    return val[..., 0], val[..., 1]


def eval_grad(f, k, bary=None):
    """Element-local gradient (scalar spaces) or divergence (RT0)."""
    local = f.coefficients[f.dofmap.element_dofs[k]]
    if f.space is RT0:
        return float(np.sum(local * f.dofmap.rt_signs[k]) / f.mesh.tri_area[k])
    if bary is None:
        bary = np.full(3, 1.0 / 3.0)
    bary = np.asarray(bary, dtype=float)
    dl = shape_dlambda(f.space, bary)
    gl = lambda_gradients(f.mesh)[k]
    return np.einsum("...lk,kd,l->...d", dl, gl, local)


# ---------------------------------------------------------------------------
# batch tables used by assembly and error norms


def cell_tables(space, mesh, rule):
    """Reference values, physical gradients, scaled weights, physical points.

    returns vals (Q, L), grads (E, Q, L, 2), wdet (E, Q), phys (E, Q, 2)
    """
    bary = rule.points
    vals = shape_values(space, bary)
    dl = shape_dlambda(space, bary)                    # (Q, L, 3)
    gl = lambda_gradients(mesh)                        # (E, 3, 2)
    grads = np.einsum("qlk,ekd->eqld", dl, gl)
    wdet = np.outer(2.0 * mesh.tri_area, rule.weights)
    phys = np.einsum("qk,ekd->eqd", bary, mesh.vertices[mesh.triangles])
    return vals, grads, wdet, phys


def rt0_tables(mesh, rule):
    """RT0 basis values at quadrature points: (E, Q, 3, 2), plus signs/divs."""
    dofmap = build_dofmap(mesh, RT0)
    bary = rule.points
    verts = mesh.vertices[mesh.triangles]              # (E, 3, 2)
    phys = np.einsum("qk,ekd->eqd", bary, verts)
    scale = dofmap.rt_signs / (2.0 * mesh.tri_area)[:, None]   # (E, 3)
    vals = scale[:, None, :, None] * (phys[:, :, None, :] - verts[:, None, :, :])
    divs = 2.0 * scale                                  # div phi_i = s_i / |K|
    wdet = np.outer(2.0 * mesh.tri_area, rule.weights)
    return dofmap, vals, divs, wdet, phys


def face_trace_tables(space, mesh, rule):
    """Trace values and normal derivatives of the local basis on every face.

    Both sides are evaluated at the same physical points, parameterized from
    the smaller to the larger vertex id of the face.  Plus-side entries of
    boundary faces are zeroed and their dof columns aliased to the minus side.

    returns dict with vals_m/vals_p (F, Q, L), gn_m/gn_p (F, Q, L),
    dofs_m/dofs_p (F, L), wq (F, Q), phys (F, Q, 2), interior (F,) bool
    """
    t = rule.points
    nq = len(t)
    nf = mesh.n_faces
    km = mesh.face_kminus
    kp = mesh.face_kplus
    interior = kp != BOUNDARY
    kp_safe = np.where(interior, kp, km)

    dofmap = build_dofmap(mesh, space)
    gl = lambda_gradients(mesh)
    fidx = np.arange(nf)[:, None]
    qidx = np.arange(nq)[None, :]

    def side_tables(ks):
        tri = mesh.triangles[ks]                       # (F, 3)
        la = np.argmax(tri == mesh.faces[:, :1], axis=1)
        lb = np.argmax(tri == mesh.faces[:, 1:], axis=1)
        bary = np.zeros((nf, nq, 3))
        bary[fidx, qidx, la[:, None]] = 1.0 - t[None, :]
        bary[fidx, qidx, lb[:, None]] = t[None, :]
        vals = shape_values(space, bary)
        dl = shape_dlambda(space, bary)                # (F, Q, L, 3)
        pg = np.einsum("fqlk,fkd->fqld", dl, gl[ks])
        gn = np.einsum("fqld,fd->fql", pg, mesh.face_normal)
        return vals, gn

    vals_m, gn_m = side_tables(km)
    vals_p, gn_p = side_tables(kp_safe)
    vals_p[~interior] = 0.0
    gn_p[~interior] = 0.0

    a = mesh.vertices[mesh.faces[:, 0]]
    b = mesh.vertices[mesh.faces[:, 1]]
    phys = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    wq = np.outer(mesh.face_h, rule.weights)

    return {
        "vals_m": vals_m, "vals_p": vals_p,
        "gn_m": gn_m, "gn_p": gn_p,
        "dofs_m": dofmap.element_dofs[km],
        "dofs_p": dofmap.element_dofs[kp_safe],
        "wq": wq, "phys": phys, "interior": interior,
        "dofmap": dofmap,
    }


# ---------------------------------------------------------------------------
# interpolation and projection operators


def _face_means(v, mesh, degree):
    rule = edge_rule(degree)
    a = mesh.vertices[mesh.faces[:, 0]]
    b = mesh.vertices[mesh.faces[:, 1]]
    t = rule.points
    pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    vals = v(pts[..., 0], pts[..., 1])
    return vals @ rule.weights


def interpolate_cr(v, mesh, degree=4):
    """Face-mean interpolant: dof on F is the mean of v over F."""
    dofmap = build_dofmap(mesh, CR)
    return FeFunction(CR, dofmap, _face_means(v, mesh, degree))


def interpolate_rt0(tau, mesh, degree=4):
    """Normal-flux interpolant: dof on F is the integral of tau . n_F over F.

    tau(x, y) must return a pair of arrays (components of the field).
    """
    dofmap = build_dofmap(mesh, RT0)
    rule = edge_rule(degree)
    a = mesh.vertices[mesh.faces[:, 0]]
    b = mesh.vertices[mesh.faces[:, 1]]
    t = rule.points
    pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    tx, ty = tau(pts[..., 0], pts[..., 1])
    tn = tx * mesh.face_normal[:, None, 0] + ty * mesh.face_normal[:, None, 1]
    coeffs = (tn @ rule.weights) * mesh.face_h
    return FeFunction(RT0, dofmap, coeffs)


def project_l2(v, mesh, k, degree=None):
    """Element-wise L2 projection onto discontinuous P_k (k = 0, 1 or 2)."""
    space = {0: DG_P0, 1: DG_P1, 2: DG_P2}[k]
    rule = triangle_rule(degree or max(2 * k + 2, 4))
    vals, _, wdet, phys = cell_tables(space, mesh, rule)
    mass = kernels.cell_mass(vals, wdet)
    rhs = kernels.cell_load(vals, wdet, v(phys[..., 0], phys[..., 1]))
    local = np.linalg.solve(mass, rhs[:, :, None])[:, :, 0]
    dofmap = build_dofmap(mesh, space)
    return FeFunction(space, dofmap, local.ravel())


def interpolate_nodal(v, mesh, k):
    """Nodal interpolant into the conforming space (vertex/midpoint values)."""
    if k == 1:
        dofmap = build_dofmap(mesh, CONFORMING_P1)
        coeffs = v(mesh.vertices[:, 0], mesh.vertices[:, 1])
        return FeFunction(CONFORMING_P1, dofmap, np.asarray(coeffs, dtype=float))
    if k == 2:
        dofmap = build_dofmap(mesh, CONFORMING_P2)
        mid = mesh.face_midpoints()
        coeffs = np.concatenate([
            v(mesh.vertices[:, 0], mesh.vertices[:, 1]),
            v(mid[:, 0], mid[:, 1]),
        ])
        return FeFunction(CONFORMING_P2, dofmap, coeffs)
    raise ValueError("nodal interpolation supports k = 1 or 2")

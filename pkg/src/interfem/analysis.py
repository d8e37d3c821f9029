"""Weighted error norms, jump seminorms, data oscillation, convergence rates.

All norms are evaluated with an elevated-degree quadrature (default 10); for
problems with a point singularity the elements touching the singular point
can additionally be subdivided once for quadrature purposes only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import edge_rule, triangle_rule
from .spaces import (RT0, face_trace_tables, lambda_gradients, project_l2,
                     shape_dlambda, shape_values)

NORM_DEGREE = 10

# children of the midpoint subdivision, rows = child-vertex weights in the
# parent's barycentric coordinates
_CHILD_MAPS = np.array([
    [[1.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5]],
    [[0.5, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.5, 0.5]],
    [[0.5, 0.0, 0.5], [0.0, 0.5, 0.5], [0.0, 0.0, 1.0]],
    [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
])


@dataclass(eq=False)
class ErrorReport:
    level: int
    h_max: float
    energy_error: float = np.nan
    dg_error: float = np.nan
    flux_error: float = np.nan
    jump_seminorm: float = np.nan
    osc: float = np.nan
    per_element: np.ndarray | None = None


@dataclass(eq=False)
class RateTable:
    hs: np.ndarray
    errors: np.ndarray
    pairwise: np.ndarray   # rate between consecutive levels (nan for level 0)
    ls_rate: float         # least-squares slope over the last 3 levels


def _quad_groups(mesh, degree, subdivide=None):
    """(element ids, barycentric points, weights) groups for norm evaluation.

    Flagged elements get one level of quadrature subdivision: the rule is
    applied on each of the 4 midpoint children, mapped back to parent
    coordinates with quarter weights.
    """
    rule = triangle_rule(degree)
    all_ids = np.arange(mesh.n_triangles)
    if subdivide is None or len(subdivide) == 0:
        return [(all_ids, rule.points, rule.weights)]
    flagged = np.zeros(mesh.n_triangles, dtype=bool)
    flagged[subdivide] = True
    sub_bary = np.concatenate([rule.points @ c for c in _CHILD_MAPS])
    sub_w = np.tile(rule.weights / 4.0, 4)
    return [
        (all_ids[~flagged], rule.points, rule.weights),
        (all_ids[flagged], sub_bary, sub_w),
    ]


def _element_tables(mesh, elems, bary, weights, space=None):
    """Per-group tables: wdet (E, Q), physical points, optional basis data."""
    verts = mesh.vertices[mesh.triangles[elems]]
    phys = np.einsum("qk,ekd->eqd", bary, verts)
    wdet = np.outer(2.0 * mesh.tri_area[elems], weights)
    out = {"phys": phys, "wdet": wdet}
    if space is not None:
        out["vals"] = shape_values(space, bary)
        dl = shape_dlambda(space, bary)
        gl = lambda_gradients(mesh)[elems]
        out["grads"] = np.einsum("qlk,ekd->eqld", dl, gl)
    return out


def energy_error(mesh, field, grad_exact, u_h, degree=NORM_DEGREE,
                 subdivide=None, return_local=False):
    """Broken weighted H1 seminorm of the error: ||a^{1/2} grad_h(u - u_h)||."""
    local = np.zeros(mesh.n_triangles)
    ce = u_h.element_coeffs()
    for elems, bary, w in _quad_groups(mesh, degree, subdivide):
        if len(elems) == 0:
            continue
        tab = _element_tables(mesh, elems, bary, w, u_h.space)
        gh = np.einsum("eqld,el->eqd", tab["grads"], ce[elems])
        gx, gy = grad_exact(tab["phys"][..., 0], tab["phys"][..., 1])
        diff2 = (gx - gh[..., 0]) ** 2 + (gy - gh[..., 1]) ** 2
        local[elems] = field.element_alpha[elems] * (tab["wdet"] * diff2).sum(axis=1)
    total = float(np.sqrt(local.sum()))
    if return_local:
        return total, np.sqrt(local)
    return total


def jump_seminorm(mesh, fc, u_h, degree=NORM_DEGREE, dirichlet=None,
                  return_local=False):
    """Face jump seminorm: (sum_F (a_{F,H}/h_F) ||[u_h]||^2_{0,F})^{1/2}.

    Boundary faces use the full trace, minus the Dirichlet data when given.
    """
    tab = face_trace_tables(u_h.space, mesh, edge_rule(degree))
    ce = u_h.element_coeffs()
    km = mesh.face_kminus
    kp = np.where(tab["interior"], mesh.face_kplus, km)
    tm = np.einsum("fql,fl->fq", tab["vals_m"], ce[km])
    tp = np.einsum("fql,fl->fq", tab["vals_p"], ce[kp])
    jump = tm - tp
    if dirichlet is not None:
        bnd = ~tab["interior"]
        g = dirichlet(tab["phys"][bnd, :, 0], tab["phys"][bnd, :, 1])
        jump[bnd] -= g
    per_face = (tab["wq"] * jump ** 2).sum(axis=1) * fc.harmonic / mesh.face_h
    total = float(np.sqrt(per_face.sum()))
    if return_local:
        return total, np.sqrt(per_face)
    return total


def dg_norm_error(mesh, field, fc, grad_exact, u_h, degree=NORM_DEGREE,
                  dirichlet=None, subdivide=None):
    """DG-norm error and its jump part: (dg_error, jump_seminorm).

    The exact solution is continuous, so interior jumps come from u_h alone.
    """
    e = energy_error(mesh, field, grad_exact, u_h, degree, subdivide)
    j = jump_seminorm(mesh, fc, u_h, degree, dirichlet)
    return float(np.sqrt(e * e + j * j)), j


def flux_error(mesh, field, sigma_exact, sigma_h, degree=NORM_DEGREE,
               subdivide=None, return_local=False):
    """Weighted flux error ||a^{-1/2}(sigma - sigma_h)|| for an RT0 field."""
    if sigma_h.space is not RT0:
        raise ValueError("flux_error expects an RT0 function")
    local = np.zeros(mesh.n_triangles)
    ce = sigma_h.element_coeffs()
    signs = sigma_h.dofmap.rt_signs
    verts = mesh.vertices[mesh.triangles]
    for elems, bary, w in _quad_groups(mesh, degree, subdivide):
        if len(elems) == 0:
            continue
        tab = _element_tables(mesh, elems, bary, w)
        scale = (ce[elems] * signs[elems]) / (2.0 * mesh.tri_area[elems])[:, None]
        sh = np.einsum("ei,eqid->eqd",
                       scale,
                       tab["phys"][:, :, None, :] - verts[elems][:, None, :, :])
        sx, sy = sigma_exact(tab["phys"][..., 0], tab["phys"][..., 1])
        diff2 = (sx - sh[..., 0]) ** 2 + (sy - sh[..., 1]) ** 2
        local[elems] = (tab["wdet"] * diff2).sum(axis=1) / field.element_alpha[elems]
    total = float(np.sqrt(local.sum()))
    if return_local:
        return total, np.sqrt(local)
    return total


def divergence_residual(mesh, field, f, sigma_h, degree=4):
    """max_K |div sigma_h - mean_K f|: the element-wise conservation defect.

    The element mean of f must be evaluated with the quadrature degree used
    for the mixed right-hand side (default 4); the identity being checked is
    a property of the discrete system, solver residual aside.
    """
    rule = triangle_rule(degree)
    tab = _element_tables(mesh, np.arange(mesh.n_triangles), rule.points,
                          rule.weights)
    fmean = (tab["wdet"] * f(tab["phys"][..., 0], tab["phys"][..., 1])).sum(axis=1) \
        / mesh.tri_area
    div = (sigma_h.element_coeffs() * sigma_h.dofmap.rt_signs).sum(axis=1) \
        / mesh.tri_area
    return float(np.abs(div - fmean).max())


def oscillation(mesh, field, f, k, degree=NORM_DEGREE, return_local=False):
    """Weighted data oscillation (sum_K (h_K^2/a_K) ||f - f_{k-1}||^2_K)^{1/2}."""
    if k < 1:
        raise ValueError("oscillation requires k >= 1")
    proj = project_l2(f, mesh, k - 1)
    rule = triangle_rule(degree)
    tab = _element_tables(mesh, np.arange(mesh.n_triangles), rule.points,
                          rule.weights, proj.space)
    fq = f(tab["phys"][..., 0], tab["phys"][..., 1])
    pq = np.einsum("ql,el->eq", tab["vals"], proj.element_coeffs())
    l2sq = (tab["wdet"] * (fq - pq) ** 2).sum(axis=1)
    local = (mesh.tri_h ** 2 / field.element_alpha) * l2sq
    total = float(np.sqrt(local.sum()))
    if return_local:
        return total, np.sqrt(local)
    return total


def app_term(mesh, field, f, s_elements, degree=NORM_DEGREE):
    """Data-resolution term of the DG a priori bound.

    Computable only when every element sits in the low-regularity branch
    (s_K < 1), where it is the k=1 oscillation; otherwise the result would
    need fractional seminorms and None is returned (not available).
    """
    s = np.asarray(s_elements, dtype=float)
    if np.any(s >= 1.0):
        return None
    return oscillation(mesh, field, f, 1, degree)


def fit_rates(errors, hs):
    """Pairwise log2 rates plus a least-squares slope over the last 3 levels."""
    errors = np.asarray(errors, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if len(errors) < 3:
        raise ValueError("rate fitting needs at least 3 levels")
    if np.any(hs <= 0):
        raise ValueError("mesh sizes must be positive")
    pairwise = np.full(len(errors), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = errors[:-1] / errors[1:]
        pairwise[1:] = np.where(
            (errors[:-1] > 0) & (errors[1:] > 0),
            np.log(ratio) / np.log(hs[:-1] / hs[1:]),
            np.nan)
    tail = slice(-3, None)
    if np.all(errors[tail] > 0):
        ls = float(np.polyfit(np.log(hs[tail]), np.log(errors[tail]), 1)[0])
    else:
        ls = np.nan
    return RateTable(hs, errors, pairwise, ls)

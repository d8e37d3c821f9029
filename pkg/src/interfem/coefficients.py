"""Piecewise-constant diffusion coefficients and per-face averages/weights.

The face weights are the harmonic pair w^- = a^+/(a^- + a^+), w^+ = 1 - w^-,
and the penalty average is the harmonic mean 2 a^+ a^- / (a^+ + a^-); both
are comparable to min(a^-, a^+), which is what makes the interior-penalty
form robust to large coefficient jumps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import BOUNDARY


@dataclass(frozen=True, eq=False)
class CoefficientField:
    values: np.ndarray         # per-subdomain coefficients
    element_alpha: np.ndarray  # cached per-triangle coefficient

    @classmethod
    def from_subdomains(cls, mesh, values):
        values = np.asarray(values, dtype=float)
        if np.any(values <= 0):
            raise ValueError("diffusion coefficients must be positive")
        if len(values) < mesh.subdomain_count:
            raise ValueError("missing coefficient for some subdomain")
        return cls(values, values[mesh.subdomain])

    @classmethod
    def from_elements(cls, element_alpha):
        element_alpha = np.asarray(element_alpha, dtype=float)
        if np.any(element_alpha <= 0):
            raise ValueError("diffusion coefficients must be positive")
        return cls(np.unique(element_alpha), element_alpha)


@dataclass(frozen=True, eq=False)
class FaceCoefficients:
    alpha_minus: np.ndarray
    alpha_plus: np.ndarray     # equals alpha_minus on boundary faces
    arithmetic: np.ndarray
    harmonic: np.ndarray
    w_minus: np.ndarray
    w_plus: np.ndarray
    interior: np.ndarray       # bool mask


def face_coefficients(mesh, field):
    """Per-face traces, arithmetic/harmonic averages and harmonic weights.

    Boundary faces carry the one-sided value: both averages equal alpha^-,
    w^- = 1 and w^+ = 0.
    """
    alpha = field.element_alpha
    if np.any(alpha <= 0):
        raise ValueError("diffusion coefficients must be positive")
    am = alpha[mesh.face_kminus]
    interior = mesh.face_kplus != BOUNDARY
    ap = np.where(interior, alpha[np.where(interior, mesh.face_kplus, 0)], am)

    arod = 0.5 * (am + ap)
    harm = 2.0 * am * ap / (am + ap)
    wm = ap / (am + ap)
    wp = 1.0 - wm           # exact complement so w^- + w^+ == 1 exactly
    arod = np.where(interior, arod, am)
    harm = np.where(interior, harm, am)
    wm = np.where(interior, wm, 1.0)
    wp = np.where(interior, wp, 0.0)
    return FaceCoefficients(am, ap, arod, harm, wm, wp, interior)


def weight_bound_check(fc, tol=1e-12):
    """True iff w^k sqrt(a^k / a_H) <= sqrt(2)/2 + tol on every interior face."""
    return weight_bound_worst(fc) <= np.sqrt(2.0) / 2.0 + tol


def weight_bound_worst(fc):
    """Largest value of w^k sqrt(a^k / a_H) over interior faces and both sides."""
    idx = fc.interior
    vm = fc.w_minus[idx] * np.sqrt(fc.alpha_minus[idx] / fc.harmonic[idx])
    vp = fc.w_plus[idx] * np.sqrt(fc.alpha_plus[idx] / fc.harmonic[idx])
    if vm.size == 0:
        return 0.0
    return float(max(vm.max(), vp.max()))


def weighted_average(vals_minus, vals_plus, w_minus, w_plus, flavor):
    """The two weighted face averages of a two-sided quantity.

    flavor "own":   w^- v^- + w^+ v^+   (boundary: v^-)
    flavor "cross": w^+ v^- + w^- v^+   (boundary: 0)
    """
    if flavor == "own":
        return w_minus * vals_minus + w_plus * vals_plus
    if flavor == "cross":
        return w_plus * vals_minus + w_minus * vals_plus
    raise ValueError(f"unknown average flavor {flavor!r}")


def jump_identity_residual(um, up, vm, vp, wm, wp):
    """Residual of the product-jump identity; zero for any weights with sum 1.

    [u v] = {v}_cross [u] + {u}_own [v], with [q] = q^- - q^+.
    """
    lhs = um * vm - up * vp
    rhs = weighted_average(vm, vp, wm, wp, "cross") * (um - up) \
        + weighted_average(um, up, wm, wp, "own") * (vm - vp)
    return np.abs(lhs - rhs)


def cross_vertex_qma_violated(layout, values):
    """True if some interior 4-box corner has the high/low checker pattern.

    At such a vertex the two diagonal subdomains carry the strictly larger
    coefficient and only touch at that point, so no monotone path through
    edge-adjacent subdomains connects them.
    """
    values = np.asarray(values, dtype=float)
    eps = 1e-9 * max(layout.domain.width, layout.domain.height)
    for (x, y) in layout.interior_cross_points():
        quads = layout.subdomain_at(
            np.array([x - eps, x + eps, x - eps, x + eps]),
            np.array([y - eps, y - eps, y + eps, y + eps]))
        sw, se, nw, ne = values[quads]
        if min(sw, ne) > max(se, nw) or min(se, nw) > max(sw, ne):
            return True
    return False

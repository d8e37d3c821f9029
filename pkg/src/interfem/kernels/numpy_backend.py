"""Vectorized numpy implementations of the assembly and solver kernels."""

import numpy as np

NAME = "numpy"


def cell_stiffness(grads, wdet, alpha):
    """Per-element stiffness matrices for a scalar diffusion form.

    grads: (E, Q, L, 2) physical basis gradients at quadrature points
    wdet:  (E, Q) quadrature weights times the element Jacobian
    alpha: (E,) per-element diffusion coefficient
    returns (E, L, L)
    """
    w = wdet * alpha[:, None]
    return np.einsum("eq,eqik,eqjk->eij", w, grads, grads, optimize=True)


def cell_mass(vals, wdet):
    """Per-element mass matrices; vals (Q, L) shared reference values."""
    return np.einsum("eq,qi,qj->eij", wdet, vals, vals, optimize=True)


def cell_load(vals, wdet, fq):
    """Per-element load vectors; fq (E, Q) source values at physical points."""
    return np.einsum("eq,eq,qi->ei", wdet, fq, vals, optimize=True)


def dg_face_blocks(vm, vp, gm, gp, wq, cpen, cm, cp):
    """Per-face interior-penalty blocks over stacked (minus, plus) trace dofs.

    vm, vp: (F, Q, L) basis trace values from the minus/plus side
    gm, gp: (F, Q, L) basis normal derivatives (grad . n_F) from each side
    wq:     (F, Q) face quadrature weights times face length
    cpen:   (F,) penalty coefficient  gamma * alpha_pen / h_F
    cm, cp: (F,) flux-average weights  w^- alpha^-  and  w^+ alpha^+
    returns (F, 2L, 2L) blocks: penalty + symmetric consistency terms.

    Boundary faces are handled by passing vp = gp = 0 and cp = 0.
    """
    sv = np.concatenate([vm, -vp], axis=2)  # jump-signed traces
    flux = np.concatenate([cm[:, None, None] * gm, cp[:, None, None] * gp],
                          axis=2)
    pen = np.einsum("fq,fqi,fqj->fij", wq * cpen[:, None], sv, sv,
                    optimize=True)
    con = np.einsum("fq,fqi,fqj->fij", wq, sv, flux, optimize=True)
    return pen - con - con.transpose(0, 2, 1)


def matvec(a, x):
    """CSR matrix-vector product (scipy's compiled kernel)."""
    return a @ x

"""Numba-compiled loop implementations of the assembly and solver kernels.

Every kernel writes to disjoint per-element/per-face/per-row slots, so
parallel execution cannot change the floating-point result.  The thread
count is capped by INTERFACE_FEM_THREADS.
"""

import os

import numpy as np
from numba import njit, prange, set_num_threads
from numba import config as _numba_config

NAME = "numba"

_threads = os.environ.get("INTERFACE_FEM_THREADS")
if _threads:
    set_num_threads(max(1, min(int(_threads), _numba_config.NUMBA_NUM_THREADS)))


@njit(cache=True, parallel=True)
def _cell_stiffness(grads, wdet, alpha, out):
    ne, nq, nl = grads.shape[0], grads.shape[1], grads.shape[2]
    for e in prange(ne):
        for q in range(nq):
            w = wdet[e, q] * alpha[e]
            for i in range(nl):
                gx = grads[e, q, i, 0]
                gy = grads[e, q, i, 1]
                for j in range(nl):
                    out[e, i, j] += w * (gx * grads[e, q, j, 0]
                                         + gy * grads[e, q, j, 1])


def cell_stiffness(grads, wdet, alpha):
    out = np.zeros((grads.shape[0], grads.shape[2], grads.shape[2]))
    _cell_stiffness(grads, wdet, alpha, out)
    return out


@njit(cache=True, parallel=True)
def _cell_mass(vals, wdet, out):
    ne, nq, nl = wdet.shape[0], vals.shape[0], vals.shape[1]
    for e in prange(ne):
        for q in range(nq):
            w = wdet[e, q]
            for i in range(nl):
                for j in range(nl):
                    out[e, i, j] += w * vals[q, i] * vals[q, j]


def cell_mass(vals, wdet):
    out = np.zeros((wdet.shape[0], vals.shape[1], vals.shape[1]))
    _cell_mass(vals, wdet, out)
    return out


@njit(cache=True, parallel=True)
def _cell_load(vals, wdet, fq, out):
    ne, nq, nl = wdet.shape[0], vals.shape[0], vals.shape[1]
    for e in prange(ne):
        for q in range(nq):
            w = wdet[e, q] * fq[e, q]
            for i in range(nl):
                out[e, i] += w * vals[q, i]


def cell_load(vals, wdet, fq):
    out = np.zeros((wdet.shape[0], vals.shape[1]))
    _cell_load(vals, wdet, fq, out)
    return out


@njit(cache=True, parallel=True)
def _dg_face_blocks(vm, vp, gm, gp, wq, cpen, cm, cp, out):
    nf, nq, nl = vm.shape
    for f in prange(nf):
        for q in range(nq):
            w = wq[f, q]
            for i in range(2 * nl):
                if i < nl:
                    vi = vm[f, q, i]
                    wi = cm[f] * gm[f, q, i]
                else:
                    vi = -vp[f, q, i - nl]
                    wi = cp[f] * gp[f, q, i - nl]
                for j in range(2 * nl):
                    if j < nl:
                        vj = vm[f, q, j]
                        wj = cm[f] * gm[f, q, j]
                    else:
                        vj = -vp[f, q, j - nl]
                        wj = cp[f] * gp[f, q, j - nl]
                    out[f, i, j] += w * (cpen[f] * vi * vj - vi * wj - wi * vj)


def dg_face_blocks(vm, vp, gm, gp, wq, cpen, cm, cp):
    nf, _, nl = vm.shape
    out = np.zeros((nf, 2 * nl, 2 * nl))
    _dg_face_blocks(vm, vp, gm, gp, wq, cpen, cm, cp, out)
    return out


@njit(cache=True, parallel=True)
def _csr_matvec(indptr, indices, data, x, out):
    n = out.shape[0]
    for row in prange(n):
        acc = 0.0
        for k in range(indptr[row], indptr[row + 1]):
            acc += data[k] * x[indices[k]]
        out[row] = acc


def matvec(a, x):
    """CSR matrix-vector product."""
    out = np.empty(a.shape[0])
    _csr_matvec(a.indptr, a.indices, a.data, x, out)
    return out

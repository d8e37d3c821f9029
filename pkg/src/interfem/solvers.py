"""Iterative solvers for the assembled systems.

SPD systems are solved with Jacobi-preconditioned conjugate gradients;
saddle-point systems with MINRES under a block-diagonal preconditioner
(mass diagonal, diagonal Schur-complement estimate).  A dense direct solve
is provided as an independent oracle for small systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_residual: float
    converged: bool


def _true_residual(a, b, x, normb):
    return float(np.linalg.norm(b - kernels.matvec(a, x)) / normb)


def solve_spd(system, tol=1e-10, max_iter=None):
    """Jacobi-preconditioned CG with x0 = 0 and an explicit residual check."""
    if system.structure != "spd":
        raise ValueError("solve_spd expects an SPD system")
    a, b = system.matrix, system.rhs
    n = len(b)
    max_iter = max_iter or 20 * n
    normb = float(np.linalg.norm(b))
    if normb == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True)

    diag = a.diagonal()
    if np.any(diag <= 0):
        raise ValueError("matrix diagonal not positive; system is not SPD")

    x = np.zeros(n)
    it = 0
    while it < max_iter:
        r = b - kernels.matvec(a, x)   # fresh residual guards recurrence drift
        if np.linalg.norm(r) / normb <= tol:
            break
        z = r / diag
        p = z.copy()
        rz = float(r @ z)
        spd_ok = True
        while it < max_iter:
            ap = kernels.matvec(a, p)
            pap = float(p @ ap)
            if pap <= 0.0:
                spd_ok = False
                break
            alpha = rz / pap
            x += alpha * p
            r -= alpha * ap
            it += 1
            if np.linalg.norm(r) / normb <= tol:
                break
            z = r / diag
            rz_new = float(r @ z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        if not spd_ok:
            break

    res = _true_residual(a, b, x, normb)
    return x, SolveReport(it, res, res <= tol)


def saddle_preconditioner_diagonal(system):
    """diag(M) on the flux block, diag(B diag(M)^{-1} B^T) on the scalar block."""
    n_sigma, n_u = system.blocks
    a = system.matrix
    dm = a.diagonal()[:n_sigma]
    b = a[n_sigma:, :n_sigma].tocsr()
    b2 = b.copy()
    b2.data = b2.data ** 2 / dm[b2.indices]
    ds = np.asarray(b2.sum(axis=1)).ravel()
    return np.concatenate([dm, ds])


def solve_saddle(system, tol=1e-10, max_iter=None):
    """Preconditioned MINRES (monotone nonincreasing residual estimate).

    Iterates until the recomputed true relative residual meets tol; the
    Lanczos recursion is never restarted, the internal target is tightened
    instead whenever the residual estimate proves optimistic.
    """
    if system.structure != "saddle":
        raise ValueError("solve_saddle expects a saddle-point system")
    a, b = system.matrix, system.rhs
    n = len(b)
    max_iter = max_iter or 20 * n
    normb = float(np.linalg.norm(b))
    if normb == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True)

    pdiag = saddle_preconditioner_diagonal(system)
    if np.any(pdiag <= 0):
        raise ValueError("saddle preconditioner diagonal not positive")

    x = np.zeros(n)
    r1 = b.copy()
    y = r1 / pdiag
    beta1 = float(np.sqrt(r1 @ y))
    oldb = 0.0
    beta = beta1
    dbar = 0.0
    epsln = 0.0
    phibar = beta1
    cs = -1.0
    sn = 0.0
    w = np.zeros(n)
    w2 = np.zeros(n)
    r2 = r1.copy()
    it = 0
    target = 0.5 * tol
    res = _true_residual(a, b, x, normb)
    tiny = np.finfo(float).eps

    while it < max_iter and res > tol:
        s = 1.0 / beta
        v = s * y
        y = kernels.matvec(a, v)
        if it >= 1:
            y -= (beta / oldb) * r1
        alfa = float(v @ y)
        y -= (alfa / beta) * r2
        r1 = r2
        r2 = y
        y = r2 / pdiag
        oldb = beta
        beta2 = float(r2 @ y)
        if beta2 < 0:
            raise ValueError("preconditioner lost positive definiteness")
        beta = np.sqrt(beta2)

        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(np.sqrt(gbar * gbar + beta * beta), tiny)
        cs = gbar / gamma
        sn = beta / gamma
        phi = cs * phibar
        phibar = sn * phibar

        w1 = w2
        w2 = w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w
        it += 1

        if phibar <= target * beta1 or beta < tiny * beta1:
            res = _true_residual(a, b, x, normb)
            if res <= tol or beta < tiny * beta1:
                break
            target *= 0.1

    res = _true_residual(a, b, x, normb)
    return x, SolveReport(it, res, res <= tol)


def solve_dense(system):
    """Direct dense solve; independent oracle for n <= 2000."""
    if system.n > 2000:
        raise ValueError("dense oracle limited to n <= 2000")
    return np.linalg.solve(system.matrix.toarray(), system.rhs)

"""Benchmark problems with exact solutions and known regularity exponents.

Each problem carries vectorized evaluables (solution, gradient, source,
optional boundary data), a coefficient layout, and the per-element regularity
exponent rule used by the rate studies.  verify_problem checks the strong
form, boundary values and interface flux continuity by sampling, using the
analytic gradient plus one central difference, so a miswired source or
coefficient is caught at construction time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .coefficients import CoefficientField, cross_vertex_qma_violated
from .mesh import (Rect, UNIT_SQUARE, layout_checkerboard, layout_single,
                   layout_stripes)


class ProblemConstructionError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    name: str
    domain: Rect
    layout: object
    alpha_values: np.ndarray
    f: object                      # f(x, y) -> array
    u_exact: object | None = None  # u(x, y) -> array
    grad_exact: object | None = None   # (x, y) -> (ux, uy)
    dirichlet: object | None = None    # boundary data; None = homogeneous
    s_global: float = np.inf
    qma_satisfied: bool = True
    singular_points: tuple = ()
    jump: float = 1.0

    def coefficient_field(self, mesh):
        return CoefficientField.from_subdomains(mesh, self.alpha_values)

    def alpha_at(self, x, y):
        return self.alpha_values[self.layout.subdomain_at(x, y)]

    def sigma_exact(self, x, y):
        """Exact flux -a grad(u); only valid away from interfaces."""
        gx, gy = self.grad_exact(x, y)
        a = self.alpha_at(x, y)
        return -a * gx, -a * gy

    def s_elements(self, mesh):
        """Per-element regularity exponents (inf marks smooth restriction)."""
        s = np.full(mesh.n_triangles, np.inf)
        for (px, py) in self.singular_points:
            d = np.abs(mesh.vertices[mesh.triangles]
                       - np.array([px, py])).max(axis=2).min(axis=1)
            s[d < 1e-12] = self.s_global
        return s

    def singular_elements(self, mesh):
        """Elements touching a singular point (flagged for quadrature split)."""
        flagged = []
        for (px, py) in self.singular_points:
            d = np.abs(mesh.vertices[mesh.triangles]
                       - np.array([px, py])).max(axis=2).min(axis=1)
            flagged.append(np.flatnonzero(d < 1e-12))
        if not flagged:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(flagged))


def problem_smooth_unit():
    """Unit-coefficient baseline: u = sin(pi x) sin(pi y) on the unit square."""
    pi = np.pi

    def u(x, y):
        return np.sin(pi * x) * np.sin(pi * y)

    def grad(x, y):
        return (pi * np.cos(pi * x) * np.sin(pi * y),
                pi * np.sin(pi * x) * np.cos(pi * y))

    def f(x, y):
        return 2.0 * pi ** 2 * np.sin(pi * x) * np.sin(pi * y)

    return ProblemSpec("smooth", UNIT_SQUARE, layout_single(), np.array([1.0]),
                       f, u, grad)


def problem_interface_1d(jump):
    """Vertical-interface solution u = psi(x) sin(pi y), flux-matched at x=1/2.

    The 1D profile is built from a globally smooth flux q(x) = 1 + beta x^2:
    psi' = -q / alpha makes alpha psi' continuous for free, psi(0) = 0 by
    integration from 0, and beta is fixed by psi(1) = 0.  psi is piecewise
    cubic and the construction degenerates to one global cubic at jump = 1.
    """
    if jump <= 0:
        raise ValueError("jump must be positive")
    a1, a2 = 1.0, float(jump)
    beta = -(0.5 / a1 + 0.5 / a2) / (1.0 / (24 * a1) + 7.0 / (24 * a2))

    def q_int(x):   # antiderivative of q
        return x + beta * x ** 3 / 3.0

    psi_mid = -q_int(0.5) / a1

    def psi(x):
        return np.where(x < 0.5,
                        -q_int(x) / a1,
                        psi_mid - (q_int(x) - q_int(0.5)) / a2)

    def dpsi(x):
        return -(1.0 + beta * x ** 2) / np.where(x < 0.5, a1, a2)

    pi = np.pi

    def u(x, y):
        return psi(x) * np.sin(pi * y)

    def grad(x, y):
        return dpsi(x) * np.sin(pi * y), pi * psi(x) * np.cos(pi * y)

    def f(x, y):
        alpha = np.where(x < 0.5, a1, a2)
        return (pi ** 2 * alpha * psi(x) + 2.0 * beta * x) * np.sin(pi * y)

    return ProblemSpec("interface1d", UNIT_SQUARE, layout_stripes(),
                       np.array([a1, a2]), f, u, grad, jump=float(jump))


def _kellogg_parameters(s):
    """Solve the quadrant matching system for (R, rho, sigma) at exponent s.

    The ansatz u = r^s mu(theta) with one cosine per quadrant is continuous
    by construction; the four flux-matching conditions at the quadrant
    boundaries determine the coefficient ratio R and the phase parameters.
    """
    g = float(s)
    if not 0.0 < g < 1.0:
        raise ProblemConstructionError("singularity exponent must be in (0, 1)")

    def flux_residuals(params):
        r, rho, sig = params
        return np.array([
            r * np.cos((np.pi / 2 - sig) * g) * np.sin(rho * g)
            + np.cos(rho * g) * np.sin((np.pi / 2 - sig) * g),
            r * np.cos(sig * g) * np.sin(rho * g)
            + np.sin(sig * g) * np.cos(rho * g),
            r * np.cos(sig * g) * np.sin((np.pi / 2 - rho) * g)
            + np.sin(sig * g) * np.cos((np.pi / 2 - rho) * g),
            r * np.cos((np.pi / 2 - sig) * g) * np.sin((np.pi / 2 - rho) * g)
            + np.sin((np.pi / 2 - sig) * g) * np.cos((np.pi / 2 - rho) * g),
        ])

    rho0 = np.pi / 4
    sig0 = np.pi / 4 - np.pi / (2 * g)
    r0 = -np.tan((np.pi / 2 - sig0) * g) / np.tan(rho0 * g)
    sol = optimize.root(lambda p: flux_residuals(p)[:3],
                        np.array([r0, rho0, sig0]), method="hybr",
                        options={"xtol": 1e-14})
    res = np.abs(flux_residuals(sol.x)).max()
    r, rho, sig = sol.x
    if not sol.success or res > 1e-10 * (1 + abs(r)) or r <= 0:
        raise ProblemConstructionError(
            f"quadrant matching failed for s={s}: residual={res:.3e}, "
            f"R={r:.6g}, rho={rho:.6g}, sigma={sig:.6g}")
    return float(r), float(rho), float(sig)


def problem_kellogg(gamma_exponent=0.5):
    """Checkerboard cross-point problem with exact solution r^s mu(theta).

    Domain (-1, 1)^2 with coefficient R on the first/third quadrants and 1
    elsewhere; f = 0 and inhomogeneous Dirichlet data from the exact
    solution.  R and the four (amplitude, phase) pairs of mu are derived by
    root-finding from the flux matching conditions, parameterized by the
    singularity exponent so that desk-scale rates are observable.
    """
    g = float(gamma_exponent)
    r_coef, rho, sig = _kellogg_parameters(g)

    # quadrant order: [0, pi/2), [pi/2, pi), [pi, 3pi/2), [3pi/2, 2pi)
    amp = np.array([np.cos((np.pi / 2 - sig) * g), np.cos(rho * g),
                    np.cos(sig * g), np.cos((np.pi / 2 - rho) * g)])
    phase = np.array([np.pi / 2 - rho, np.pi - sig, np.pi + rho,
                      3 * np.pi / 2 + sig])
    two_pi = 2 * np.pi

    def mu_and_dmu(theta):
        quad = np.minimum((theta // (np.pi / 2)).astype(np.int64), 3)
        arg = (theta - phase[quad]) * g
        return amp[quad] * np.cos(arg), -amp[quad] * g * np.sin(arg)

    def u(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        theta = np.mod(np.arctan2(y, x), two_pi)
        mu, _ = mu_and_dmu(theta)
        return np.where(r > 0, r ** g, 0.0) * mu

    def grad(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        theta = np.mod(np.arctan2(y, x), two_pi)
        mu, dmu = mu_and_dmu(theta)
        rad = np.where(r > 0, r ** (g - 1.0), 0.0)
        ct, st = np.cos(theta), np.sin(theta)
        return (rad * (g * mu * ct - dmu * st),
                rad * (g * mu * st + dmu * ct))

    def f(x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    domain = Rect(-1.0, -1.0, 1.0, 1.0)
    layout = layout_checkerboard(domain, 2, 2)
    # subdomains SW, SE, NW, NE: coefficient R on the diagonal pair
    values = np.array([r_coef, 1.0, 1.0, r_coef])
    return ProblemSpec("kellogg", domain, layout, values, f, u, grad,
                       dirichlet=u, s_global=g, qma_satisfied=False,
                       singular_points=((0.0, 0.0),), jump=r_coef)


def problem_nonqma(pattern="checkerboard4", jump=1e4):
    """Checkerboard layouts violating quasi-monotonicity; f = 1, no exact u."""
    if jump <= 0:
        raise ValueError("jump must be positive")
    if pattern == "checkerboard4":
        layout = layout_checkerboard(UNIT_SQUARE, 2, 2)
        values = np.array([jump, 1.0, 1.0, jump])
    elif pattern == "checkerboard8":
        layout = layout_checkerboard(UNIT_SQUARE, 4, 2)
        values = np.where((np.arange(8) % 4 + np.arange(8) // 4) % 2 == 0,
                          jump, 1.0)
    else:
        raise ValueError(f"unknown non-QMA pattern {pattern!r}")
    qma = not cross_vertex_qma_violated(layout, values)

    def f(x, y):
        return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    return ProblemSpec(f"nonqma_{pattern}", UNIT_SQUARE, layout, values, f,
                       qma_satisfied=qma, jump=float(jump))


def perturb_source(problem, factor=1.01):
    """Negative-control copy of a problem with a scaled source term."""
    base_f = problem.f
    return replace(problem, f=lambda x, y: factor * base_f(x, y))


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerifyReport:
    ok: bool
    worst_strong_form: float
    worst_boundary: float
    worst_interface_flux: float
    message: str = ""

    def __bool__(self):
        return self.ok


def _fd_step(problem, x, y):
    base = 1e-5 * max(problem.domain.width, problem.domain.height)
    if not problem.singular_points:
        return np.full(np.shape(x), base)
    d = np.full(np.shape(x), np.inf)
    for (px, py) in problem.singular_points:
        d = np.minimum(d, np.hypot(x - px, y - py))
    return base * np.clip(d, 1e-3, 1.0)


def strong_form_residual(problem, x, y):
    """Relative residual of f + div(a grad u) via one central difference."""
    h = _fd_step(problem, x, y)
    gxp, _ = problem.grad_exact(x + h, y)
    gxm, _ = problem.grad_exact(x - h, y)
    _, gyp = problem.grad_exact(x, y + h)
    _, gym = problem.grad_exact(x, y - h)
    dgx = (gxp - gxm) / (2 * h)
    dgy = (gyp - gym) / (2 * h)
    a = problem.alpha_at(x, y)
    fv = problem.f(x, y)
    res = np.abs(fv + a * (dgx + dgy))
    scale = 1.0 + np.abs(fv) + a * (np.abs(dgx) + np.abs(dgy))
    return res / scale


def verify_problem(problem, samples=200, seed=0, tol=1e-8):
    """Sampled strong-form, boundary and interface-flux checks."""
    if problem.u_exact is None:
        raise ValueError("verify_problem needs an exact solution")
    rng = np.random.default_rng(seed)
    dom = problem.domain
    message = ""

    # interior samples per subdomain box, keeping a margin from box edges
    worst_sf = 0.0
    for rect, _ in problem.layout.boxes:
        mx = 0.05 * rect.width
        my = 0.05 * rect.height
        x = rng.uniform(rect.x0 + mx, rect.x1 - mx, samples)
        y = rng.uniform(rect.y0 + my, rect.y1 - my, samples)
        res = strong_form_residual(problem, x, y)
        i = int(np.argmax(res))
        if res[i] > worst_sf:
            worst_sf = float(res[i])
            if worst_sf > tol:
                message = (f"strong form residual {worst_sf:.3e} "
                           f"at ({x[i]:.4f}, {y[i]:.4f})")

    # boundary values
    t = rng.uniform(0.0, 1.0, samples)
    bx = np.concatenate([dom.x0 + t * dom.width, dom.x0 + t * dom.width,
                         np.full(samples, dom.x0), np.full(samples, dom.x1)])
    by = np.concatenate([np.full(samples, dom.y0), np.full(samples, dom.y1),
                         dom.y0 + t * dom.height, dom.y0 + t * dom.height])
    ub = problem.u_exact(bx, by)
    if problem.dirichlet is not None:
        ub = ub - problem.dirichlet(bx, by)
    worst_bc = float(np.abs(ub).max())
    if worst_bc > 1e-12 and not message:
        message = f"boundary value residual {worst_bc:.3e}"

    # interface flux continuity
    worst_if = 0.0
    eps = 1e-10 * max(dom.width, dom.height)
    for (p0, p1) in problem.layout.interface_segments():
        p0 = np.asarray(p0)
        p1 = np.asarray(p1)
        tang = p1 - p0
        nrm = np.array([tang[1], -tang[0]]) / np.linalg.norm(tang)
        t = rng.uniform(0.05, 0.95, samples)
        pts = p0 + t[:, None] * tang
        if problem.singular_points:
            keep = np.ones(len(pts), dtype=bool)
            for (px, py) in problem.singular_points:
                keep &= np.hypot(pts[:, 0] - px, pts[:, 1] - py) > 0.05
            pts = pts[keep]
        if len(pts) == 0:
            continue
        xm = pts[:, 0] - eps * nrm[0]
        ym = pts[:, 1] - eps * nrm[1]
        xp = pts[:, 0] + eps * nrm[0]
        yp = pts[:, 1] + eps * nrm[1]
        gmx, gmy = problem.grad_exact(xm, ym)
        gpx, gpy = problem.grad_exact(xp, yp)
        am = problem.alpha_at(xm, ym)
        ap = problem.alpha_at(xp, yp)
        fm = am * (gmx * nrm[0] + gmy * nrm[1])
        fp = ap * (gpx * nrm[0] + gpy * nrm[1])
        res = np.abs(fm - fp) / (1.0 + np.abs(fm) + np.abs(fp))
        i = int(np.argmax(res))
        if res[i] > worst_if:
            worst_if = float(res[i])
            if worst_if > tol and not message:
                message = (f"interface flux residual {worst_if:.3e} "
                           f"at ({pts[i, 0]:.4f}, {pts[i, 1]:.4f})")

    ok = worst_sf <= tol and worst_bc <= 1e-12 and worst_if <= tol
    return VerifyReport(ok, worst_sf, worst_bc, worst_if, message)


PROBLEM_BUILDERS = {
    "smooth": lambda params: problem_smooth_unit(),
    "interface1d": lambda params: problem_interface_1d(params.get("jump", 100.0)),
    "kellogg": lambda params: problem_kellogg(params.get("s", 0.5)),
    "nonqma_checkerboard4": lambda params: problem_nonqma(
        "checkerboard4", params.get("jump", 1e4)),
    "nonqma_checkerboard8": lambda params: problem_nonqma(
        "checkerboard8", params.get("jump", 1e4)),
}


def build_problem(name, params=None):
    if name not in PROBLEM_BUILDERS:
        raise KeyError(f"unknown problem {name!r}")
    return PROBLEM_BUILDERS[name](params or {})

"""Study driver: convergence runs, jump sweeps, verification, file output.

One flat row schema serves every method; fields that do not apply to a method
stay empty.  Output is deterministic for a fixed config and seed (timings are
opt-in because they can never be reproducible byte for byte).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import spaces as sp
from .analysis import (divergence_residual, dg_norm_error, energy_error,
                       fit_rates, flux_error, jump_seminorm, oscillation)
from .assembly import (DgParameters, assemble_conforming, assemble_cr,
                       assemble_dg, assemble_mixed, default_gamma, split_mixed)
from .coefficients import face_coefficients
from .invariants import run_all
from .mesh import build_structured_square, refine_uniform
from .problems import build_problem
from .solvers import solve_saddle, solve_spd

METHODS = ("conforming1", "conforming2", "cr", "mixed0", "dg1", "dg2")

CSV_COLUMNS = ("problem", "method", "level", "h_max", "n_dofs", "energy_err",
               "jump_seminorm", "dg_err", "flux_err", "osc", "rate_energy",
               "rate_flux", "solver_iters", "solve_seconds")

SWEEP_COLUMNS = ("problem", "method", "jump", "h_max", "n_dofs", "energy_err",
                 "jump_seminorm", "dg_err", "flux_err", "osc",
                 "ratio_quasiopt", "ratio_cr_conf", "solver_iters",
                 "solve_seconds")


class ConfigError(ValueError):
    pass


class SolverFailure(RuntimeError):
    pass


@dataclass
class StudyConfig:
    problem: str = "smooth"
    problem_params: dict = dc_field(default_factory=dict)
    methods: tuple = ("conforming1",)
    levels: int = 4
    base_n: int = 8
    gamma: float | None = None
    jump_sweep: tuple = ()
    out: str | None = None
    format: str = "csv"
    seed: int = 0
    timings: bool = False
    tol: float = 1e-10

    def validate(self):
        if self.levels < 3:
            raise ConfigError("levels must be >= 3 for rate fitting")
        if not self.methods:
            raise ConfigError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.gamma is not None and self.gamma <= 0:
            raise ConfigError("gamma must be positive")
        return self


def _method_k(method):
    return {"conforming1": 1, "conforming2": 2, "cr": 1, "mixed0": 1,
            "dg1": 1, "dg2": 2}[method]


@dataclass
class MethodRun:
    n_dofs: int
    iterations: int
    seconds: float
    energy_err: float | None = None
    jump_seminorm: float | None = None
    dg_err: float | None = None
    flux_err: float | None = None
    osc: float | None = None
    fe_function: object = None
    sigma: object = None


def run_method(problem, mesh, method, gamma=None, tol=1e-10):
    """Assemble, solve and measure one method on one mesh."""
    field = problem.coefficient_field(mesh)
    k = _method_k(method)
    subdiv = problem.singular_elements(mesh)
    if method == "mixed0" and problem.dirichlet is not None:
        raise ConfigError(
            "mixed0 supports homogeneous Dirichlet data only")

    t0 = time.perf_counter()
    if method in ("conforming1", "conforming2"):
        system = assemble_conforming(mesh, field, problem.f, k,
                                     dirichlet=problem.dirichlet)
        x, rep = solve_spd(system, tol=tol)
        fe = sp.FeFunction(system.dofmap.space, system.dofmap,
                           system.expand(x))
    elif method == "cr":
        system = assemble_cr(mesh, field, problem.f,
                             dirichlet=problem.dirichlet)
        x, rep = solve_spd(system, tol=tol)
        fe = sp.FeFunction(sp.CR, system.dofmap, system.expand(x))
    elif method in ("dg1", "dg2"):
        params = DgParameters(gamma if gamma is not None else default_gamma(k))
        system = assemble_dg(mesh, field, problem.f, k, params,
                             dirichlet=problem.dirichlet)
        x, rep = solve_spd(system, tol=tol)
        fe = sp.FeFunction(system.dofmap.space, system.dofmap, x)
    elif method == "mixed0":
        system = assemble_mixed(mesh, field, problem.f)
        x, rep = solve_saddle(system, tol=tol)
        fe = None
    else:
        raise ConfigError(f"unknown method {method!r}")
    seconds = time.perf_counter() - t0
    if not rep.converged:
        raise SolverFailure(
            f"{method} solve did not converge (n={system.n}, "
            f"residual={rep.final_residual:.3e})")

    run = MethodRun(n_dofs=system.n, iterations=rep.iterations,
                    seconds=seconds)
    run.osc = oscillation(mesh, field, problem.f, k)

    if method == "mixed0":
        sigma, _ = split_mixed(mesh, system, x)
        run.sigma = sigma
        if problem.u_exact is not None:
            run.flux_err = flux_error(mesh, field, problem.sigma_exact, sigma,
                                      subdivide=subdiv)
        return run

    run.fe_function = fe
    if problem.u_exact is not None:
        run.energy_err = energy_error(mesh, field, problem.grad_exact, fe,
                                      subdivide=subdiv)
        if method in ("dg1", "dg2"):
            fc = face_coefficients(mesh, field)
            run.dg_err, run.jump_seminorm = dg_norm_error(
                mesh, field, fc, problem.grad_exact, fe,
                dirichlet=problem.dirichlet, subdivide=subdiv)
    return run


def reference_errors(problem, mesh, run, method, gamma=None, tol=1e-10,
                     extra_levels=2):
    """Errors against a same-method solution two uniform levels finer.

    Used for problems without an exact solution; the reference gradient (or
    flux) is evaluated on the coarse quadrature points via point location.
    """
    fine = mesh
    for _ in range(extra_levels):
        fine = refine_uniform(fine)
    fine_run = run_method(problem, fine, method, gamma, tol)
    field = problem.coefficient_field(mesh)

    if method == "mixed0":
        ref_flux = lambda x, y: sp.rt0_at(fine_run.sigma, x, y)
        return {"flux_err": flux_error(mesh, field, ref_flux, run.sigma)}
    ref_grad = lambda x, y: sp.grad_at(fine_run.fe_function, x, y)
    out = {"energy_err": energy_error(mesh, field, ref_grad,
                                      run.fe_function)}
    if method in ("dg1", "dg2"):
        fc = face_coefficients(mesh, field)
        out["dg_err"], out["jump_seminorm"] = dg_norm_error(
            mesh, field, fc, ref_grad, run.fe_function,
            dirichlet=problem.dirichlet)
    return out


def _meshes(problem, base_n, levels):
    out = []
    mesh = build_structured_square(base_n, problem.layout, problem.domain)
    out.append(mesh)
    for _ in range(levels - 1):
        mesh = refine_uniform(mesh)
        out.append(mesh)
    return out


@dataclass
class StudyResult:
    rows: list
    rates: dict          # method -> {"energy": RateTable|None, "flux": ...}
    columns: tuple = CSV_COLUMNS


def run_convergence(cfg):
    """One row per (method, level) plus a fitted-rate row per method."""
    cfg.validate()
    problem = build_problem(cfg.problem, cfg.problem_params)
    meshes = _meshes(problem, cfg.base_n, cfg.levels)
    rows = []
    rates = {}
    for method in cfg.methods:
        runs = []
        for level, mesh in enumerate(meshes):
            run = run_method(problem, mesh, method, cfg.gamma, cfg.tol)
            runs.append((level, mesh, run))
        if problem.u_exact is None:
            for level, mesh, run in runs:
                run_updates = reference_errors(problem, mesh, run, method,
                                               cfg.gamma, cfg.tol)
                for key, val in run_updates.items():
                    setattr(run, key, val)

        err_key = "flux_err" if method == "mixed0" else "energy_err"
        errs = [getattr(r, err_key) for _, _, r in runs]
        hs = [m.h_max for _, m, _ in runs]
        table = fit_rates(errs, hs) if all(e is not None for e in errs) else None
        rates[method] = table

        for level, mesh, run in runs:
            row = {c: None for c in CSV_COLUMNS}
            row.update(problem=problem.name, method=method, level=level,
                       h_max=mesh.h_max, n_dofs=run.n_dofs,
                       energy_err=run.energy_err,
                       jump_seminorm=run.jump_seminorm, dg_err=run.dg_err,
                       flux_err=run.flux_err, osc=run.osc,
                       solver_iters=run.iterations,
                       solve_seconds=run.seconds if cfg.timings else None)
            if table is not None and level > 0:
                key = "rate_flux" if method == "mixed0" else "rate_energy"
                row[key] = float(table.pairwise[level])
            rows.append(row)
        if table is not None:
            fit_row = {c: None for c in CSV_COLUMNS}
            fit_row.update(problem=problem.name, method=method, level="fit")
            key = "rate_flux" if method == "mixed0" else "rate_energy"
            fit_row[key] = table.ls_rate
            rows.append(fit_row)

    result = StudyResult(rows, rates)
    if cfg.out:
        write_output(result, cfg)
    return result


def sweep_ratios(problem, mesh, method, run, tol=1e-10):
    """Quasi-optimality diagnostics for one solved method.

    conforming: error / interpolant error (Galerkin optimality)
    cr:         error / (CR interpolant error + osc), plus the comparison
                ratio against the conforming P1 solution
    mixed0:     flux error / RT0-interpolant flux error (the sandwich)
    dg:         dg error / (nodal interpolant energy error + osc)
    """
    field = problem.coefficient_field(mesh)
    subdiv = problem.singular_elements(mesh)
    out = {"ratio_quasiopt": None, "ratio_cr_conf": None}
    if problem.u_exact is None:
        return out
    if method == "mixed0":
        interp = sp.interpolate_rt0(problem.sigma_exact, mesh, degree=8)
        e_int = flux_error(mesh, field, problem.sigma_exact, interp,
                           subdivide=subdiv)
        out["ratio_quasiopt"] = run.flux_err / e_int
        return out
    if method in ("conforming1", "conforming2"):
        interp = sp.interpolate_nodal(problem.u_exact, mesh, _method_k(method))
        e_int = energy_error(mesh, field, problem.grad_exact, interp,
                             subdivide=subdiv)
        out["ratio_quasiopt"] = run.energy_err / e_int
        return out
    if method == "cr":
        interp = sp.interpolate_cr(problem.u_exact, mesh, degree=8)
        e_int = energy_error(mesh, field, problem.grad_exact, interp,
                             subdivide=subdiv)
        out["ratio_quasiopt"] = run.energy_err / (e_int + run.osc)
        conf = run_method(problem, mesh, "conforming1", tol=tol)
        out["ratio_cr_conf"] = run.energy_err / (conf.energy_err + run.osc)
        return out
    # dg1 / dg2: the continuous nodal interpolant is jump-free, so its
    # dg-norm distance equals its energy error
    interp = sp.interpolate_nodal(problem.u_exact, mesh, _method_k(method))
    e_int = energy_error(mesh, field, problem.grad_exact, interp,
                         subdivide=subdiv)
    out["ratio_quasiopt"] = run.dg_err / (e_int + run.osc)
    return out


def run_jump_sweep(cfg):
    """Fixed finest level, one row per (method, jump), ratio diagnostics."""
    cfg.validate()
    if not cfg.jump_sweep:
        raise ConfigError("jump sweep requires at least one jump value")
    if cfg.problem not in ("interface1d", "nonqma_checkerboard4",
                           "nonqma_checkerboard8"):
        raise ConfigError(f"problem {cfg.problem!r} has no jump parameter")
    n = cfg.base_n * 2 ** (cfg.levels - 1)
    rows = []
    for method in cfg.methods:
        for jump in cfg.jump_sweep:
            params = dict(cfg.problem_params)
            params["jump"] = float(jump)
            problem = build_problem(cfg.problem, params)
            mesh = build_structured_square(n, problem.layout, problem.domain)
            run = run_method(problem, mesh, method, cfg.gamma, cfg.tol)
            if problem.u_exact is None:
                for key, val in reference_errors(problem, mesh, run, method,
                                                 cfg.gamma, cfg.tol).items():
                    setattr(run, key, val)
            ratios = sweep_ratios(problem, mesh, method, run, cfg.tol)
            row = {c: None for c in SWEEP_COLUMNS}
            row.update(problem=problem.name, method=method, jump=float(jump),
                       h_max=mesh.h_max, n_dofs=run.n_dofs,
                       energy_err=run.energy_err,
                       jump_seminorm=run.jump_seminorm, dg_err=run.dg_err,
                       flux_err=run.flux_err, osc=run.osc,
                       solver_iters=run.iterations,
                       solve_seconds=run.seconds if cfg.timings else None,
                       **ratios)
            rows.append(row)
    result = StudyResult(rows, {}, columns=SWEEP_COLUMNS)
    if cfg.out:
        write_output(result, cfg)
    return result


@dataclass
class VerifyResult:
    results: list
    passed: bool


def run_verify(cfg, stream=None):
    """Run every registered invariant; failures are results, not errors."""
    cfg.validate()
    results = run_all(cfg.seed)
    ok = all(r.passed for r in results)
    if stream is not None:
        for r in results:
            status = "PASS" if r.passed else "FAIL"
            stream.write(f"{status} {r.name:28s} worst={r.worst:.3e} "
                         f"bound={r.bound:g} {r.detail}\n".rstrip() + "\n")
        stream.write(f"{'OK' if ok else 'FAILED'}: "
                     f"{sum(r.passed for r in results)}/{len(results)} "
                     "invariants passed\n")
    return VerifyResult(results, ok)


# ---------------------------------------------------------------------------
# output writers


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        if np.isnan(value):
            return ""
        return repr(float(value))
    return str(value)


def write_csv(result, path):
    with open(path, "w") as fh:
        fh.write(",".join(result.columns) + "\n")
        for row in result.rows:
            fh.write(",".join(_cell(row[c]) for c in result.columns) + "\n")


def write_json(result, path):
    rows = []
    for row in result.rows:
        clean = {}
        for c in result.columns:
            v = row[c]
            if isinstance(v, float) and np.isnan(v):
                v = None
            clean[c] = v
        rows.append(clean)
    with open(path, "w") as fh:
        json.dump({"columns": list(result.columns), "rows": rows}, fh,
                  indent=1)
        fh.write("\n")


def write_gnuplot(result, path):
    """Whitespace table per method block, ready for gnuplot's `plot ... index`."""
    with open(path, "w") as fh:
        key = "level" if "level" in result.columns else "jump"
        err_cols = ("h_max", "energy_err", "dg_err", "flux_err")
        for method in sorted({r["method"] for r in result.rows}):
            fh.write(f"# method: {method}\n")
            fh.write("# " + " ".join((key,) + err_cols) + "\n")
            for row in result.rows:
                if row["method"] != method or row[key] == "fit":
                    continue
                vals = [row[key]] + [row[c] for c in err_cols]
                fh.write(" ".join(
                    "nan" if v is None else _cell(v) for v in vals) + "\n")
            fh.write("\n\n")


def write_output(result, cfg):
    if cfg.format == "csv":
        write_csv(result, cfg.out)
    else:
        write_json(result, cfg.out)
    stem = cfg.out.rsplit(".", 1)[0]
    write_gnuplot(result, stem + ".dat")

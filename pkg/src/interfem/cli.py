"""Command-line driver for convergence studies, jump sweeps and verification.

Exit codes: 0 success, 1 invariant/acceptance failure, 2 configuration
error, 3 solver failure.  INTERFACE_FEM_THREADS caps kernel parallelism and
INTERFACE_FEM_NUMBA selects the kernel backend (both read at import time).
"""

from __future__ import annotations

import argparse
import configparser
import sys

from .harness import (ConfigError, METHODS, SolverFailure, StudyConfig,
                      run_convergence, run_jump_sweep, run_verify)

EXIT_OK = 0
EXIT_FAILED_CHECK = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _parse_floats(text):
    return tuple(float(tok) for tok in text.replace(" ", "").split(",") if tok)


def load_config_file(path):
    """Flat key=value file with [study] and optional [problem] sections."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    out = {}
    if parser.has_section("study"):
        s = parser["study"]
        for key in ("problem", "out", "format"):
            if key in s:
                out[key] = s[key]
        if "method" in s:
            out["methods"] = tuple(s["method"].replace(" ", "").split(","))
        if "levels" in s:
            out["levels"] = s.getint("levels")
        if "gamma" in s:
            out["gamma"] = s.getfloat("gamma")
        if "seed" in s:
            out["seed"] = s.getint("seed")
        if "jump" in s:
            out.setdefault("problem_params", {})["jump"] = s.getfloat("jump")
        if "sweep" in s:
            out["jump_sweep"] = _parse_floats(s["sweep"])
        if "timings" in s:
            out["timings"] = s.getboolean("timings")
    if parser.has_section("problem"):
        p = parser["problem"]
        params = out.setdefault("problem_params", {})
        for key in p:
            params[key] = float(p[key])
    return out


def build_parser():
    ap = argparse.ArgumentParser(
        prog="interfem",
        description="Convergence and robustness studies for finite element "
                    "methods on diffusion problems with discontinuous "
                    "coefficients.")
    ap.add_argument("-c", "--config", help="key=value config file; command "
                    "line flags override file values")
    ap.add_argument("--problem", help="problem name (smooth, interface1d, "
                    "kellogg, nonqma_checkerboard4, nonqma_checkerboard8)")
    ap.add_argument("--method", help="comma-separated subset of "
                    + ",".join(METHODS))
    ap.add_argument("--levels", type=int, help="number of uniform refinement "
                    "levels (>= 3)")
    ap.add_argument("--gamma", type=float, help="interior penalty constant")
    ap.add_argument("--jump", type=float, help="coefficient jump parameter")
    ap.add_argument("--sweep", help="comma-separated jump values; runs the "
                    "robustness sweep at the finest level")
    ap.add_argument("--out", help="output file path")
    ap.add_argument("--format", choices=("csv", "json"), help="output format")
    ap.add_argument("--seed", type=int, help="seed for sampled checks")
    ap.add_argument("--verify", action="store_true",
                    help="run the invariant suite and exit")
    ap.add_argument("--timings", action="store_true",
                    help="include wall-clock timings in output (makes output "
                    "non-reproducible)")
    return ap


def config_from_args(args):
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    if args.problem:
        values["problem"] = args.problem
    if args.method:
        values["methods"] = tuple(args.method.replace(" ", "").split(","))
    if args.levels is not None:
        values["levels"] = args.levels
    if args.gamma is not None:
        values["gamma"] = args.gamma
    if args.jump is not None:
        values.setdefault("problem_params", {})["jump"] = args.jump
    if args.sweep:
        values["jump_sweep"] = _parse_floats(args.sweep)
    if args.out:
        values["out"] = args.out
    if args.format:
        values["format"] = args.format
    if args.seed is not None:
        values["seed"] = args.seed
    if args.timings:
        values["timings"] = True
    return StudyConfig(**values)


def _print_rows(result, stream):
    stream.write(",".join(result.columns) + "\n")
    from .harness import _cell
    for row in result.rows:
        stream.write(",".join(_cell(row[c]) for c in result.columns) + "\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, TypeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.verify:
            verdict = run_verify(cfg, stream=sys.stdout)
            return EXIT_OK if verdict.passed else EXIT_FAILED_CHECK
        if cfg.jump_sweep:
            result = run_jump_sweep(cfg)
        else:
            result = run_convergence(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    if not cfg.out:
        _print_rows(result, sys.stdout)
    else:
        print(f"wrote {cfg.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

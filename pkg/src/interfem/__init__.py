"""Finite element convergence harness for diffusion problems with
piecewise-constant discontinuous coefficients."""

__version__ = "0.1.0"

from .kernels import BACKEND as kernel_backend  # noqa: F401

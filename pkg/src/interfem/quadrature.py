"""Triangle and edge quadrature rules exact to a requested polynomial degree.

Triangle rules come from a collapsed Gauss-Legendre x Gauss-Jacobi tensor
product on the reference triangle {x, y >= 0, x + y <= 1}; all weights are
positive and sum to the reference measure 1/2.  Edge rules are Gauss-Legendre
on [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 10


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray    # (n, 3) barycentric for triangles, (n,) for edges
    weights: np.ndarray   # (n,)
    exact_degree: int

    def __len__(self):
        return len(self.weights)


def _check_degree(degree):
    if not 1 <= degree <= MAX_DEGREE:
        raise ValueError(f"quadrature degree {degree} outside 1..{MAX_DEGREE}")


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Rule integrating all bivariate polynomials of total degree <= degree."""
    _check_degree(degree)
    m = (degree + 2) // 2  # m-point Gauss exact to 2m-1 >= degree
    xi, wx = roots_legendre(m)
    xi = 0.5 * (xi + 1.0)
    wx = 0.5 * wx
    eta, we = roots_jacobi(m, 1.0, 0.0)  # weight (1-t) on [-1, 1]
    eta = 0.5 * (eta + 1.0)
    we = 0.25 * we                       # (1-t) folded in, mapped to [0, 1]

    x = np.outer(xi, 1.0 - eta).ravel()
    y = np.tile(eta, m)
    w = np.outer(wx, we).ravel()
    bary = np.column_stack([1.0 - x - y, x, y])
    bary.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(points=bary, weights=w, exact_degree=degree)


@lru_cache(maxsize=None)
def edge_rule(degree):
    """Gauss rule on [0, 1] exact to the given degree."""
    _check_degree(degree)
    m = (degree + 2) // 2
    t, w = roots_legendre(m)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    t.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(points=t, weights=w, exact_degree=degree)


def triangle_monomial_integral(a, b):
    """Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!."""
    from math import factorial

    return factorial(a) * factorial(b) / factorial(a + b + 2)

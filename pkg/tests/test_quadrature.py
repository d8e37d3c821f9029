import numpy as np
import pytest

from interfem.quadrature import (edge_rule, triangle_monomial_integral,
                                 triangle_rule)


def test_degree1_centroid_integrates_constant():
    r = triangle_rule(1)
    assert abs((r.weights * 1.0).sum() - 0.5) < 1e-15


def test_degree2_x_squared():
    # int x^2 over {x, y >= 0, x + y <= 1} = 1/12 (symbolic oracle)
    r = triangle_rule(2)
    q = (r.weights * r.points[:, 1] ** 2).sum()
    assert abs(q - 1.0 / 12.0) < 1e-15


def test_degree4_x2y2():
    # int x^2 y^2 = 1/180 (symbolic oracle)
    r = triangle_rule(4)
    q = (r.weights * r.points[:, 1] ** 2 * r.points[:, 2] ** 2).sum()
    assert abs(q - 1.0 / 180.0) < 1e-15


@pytest.mark.parametrize("degree,moment,expected", [
    (1, 1, 0.5),    # midpoint rule
    (3, 3, 0.25),   # 2-point Gauss
    (5, 5, 1.0 / 6.0),  # 3-point Gauss
])
def test_edge_rules(degree, moment, expected):
    r = edge_rule(degree)
    assert abs((r.weights * r.points ** moment).sum() - expected) < 1e-15


def test_edge_rule_point_counts():
    assert len(edge_rule(1)) == 1
    assert len(edge_rule(3)) == 2
    assert len(edge_rule(5)) == 3


@pytest.mark.parametrize("degree", range(1, 11))
def test_triangle_exactness_sweep(degree):
    r = triangle_rule(degree)
    x, y = r.points[:, 1], r.points[:, 2]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            q = (r.weights * x ** a * y ** b).sum()
            assert abs(q - triangle_monomial_integral(a, b)) < 1e-13


@pytest.mark.parametrize("degree", range(1, 11))
def test_edge_exactness_sweep(degree):
    r = edge_rule(degree)
    for a in range(degree + 1):
        assert abs((r.weights * r.points ** a).sum() - 1.0 / (a + 1)) < 1e-13


@pytest.mark.parametrize("degree", range(1, 11))
def test_weights_positive_and_summing(degree):
    tri = triangle_rule(degree)
    assert np.all(tri.weights > 0)
    assert abs(tri.weights.sum() - 0.5) < 1e-14
    assert np.abs(tri.points.sum(axis=1) - 1.0).max() < 1e-14
    edge = edge_rule(degree)
    assert np.all(edge.weights > 0)
    assert abs(edge.weights.sum() - 1.0) < 1e-14


@pytest.mark.parametrize("degree", [0, 11, -3])
def test_degree_out_of_range(degree):
    with pytest.raises(ValueError):
        triangle_rule(degree)
    with pytest.raises(ValueError):
        edge_rule(degree)

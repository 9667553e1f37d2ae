"""Every rule must integrate all monomials up to its stated degree.

The oracle is the closed form for barycentric monomials on the reference
triangle {x >= 0, y >= 0, x + y <= 1}:

    integral of l1^a l2^b l3^c  =  a! b! c! / (a + b + c + 2)!

(e.g. a=b=2, c=0 gives 4/720 = 1/180), which is independent of how any
particular rule was constructed.
"""

import math

import numpy as np
import pytest

from natconv.quadrature import quadrature


def exact_barycentric_moment(a: int, b: int, c: int = 0) -> float:
    return (
        math.factorial(a) * math.factorial(b) * math.factorial(c)
        / math.factorial(a + b + c + 2)
    )


@pytest.mark.parametrize("degree", range(1, 11))
def test_monomial_exactness(degree):
    rule = quadrature(degree)
    lam = rule.barycentric
    for total in range(degree + 1):
        for a in range(total + 1):
            b = total - a
            approx = float(rule.weights @ (lam[:, 0] ** a * lam[:, 1] ** b))
            exact = exact_barycentric_moment(a, b)
            assert approx == pytest.approx(exact, rel=5e-14, abs=1e-15), (
                f"degree {degree} fails l1^{a} l2^{b}"
            )


@pytest.mark.parametrize("degree", range(1, 11))
def test_weights_positive_and_sum_to_area(degree):
    rule = quadrature(degree)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(0.5, rel=1e-14)


@pytest.mark.parametrize("degree", range(1, 11))
def test_points_inside_reference_triangle(degree):
    rule = quadrature(degree)
    x, y = rule.points[:, 0], rule.points[:, 1]
    assert np.all(x >= 0) and np.all(y >= 0)
    assert np.all(x + y <= 1 + 1e-14)


def test_requested_degree_is_a_floor():
    # asking for 3 or 7 returns the next tabulated rule
    assert quadrature(3).degree >= 3
    assert quadrature(7).degree >= 7


@pytest.mark.parametrize("degree", [0, -1, 11])
def test_out_of_range_degree_rejected(degree):
    with pytest.raises(ValueError):
        quadrature(degree)


def test_rules_are_cached():
    assert quadrature(4) is quadrature(4)

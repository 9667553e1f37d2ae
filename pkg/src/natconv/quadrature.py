"""Quadrature rules on the reference triangle {x, y >= 0, x + y <= 1}.

Bundled symmetric rules cover exactness degrees up to 6; higher degrees
fall back to a Gauss-Jacobi conical product, which is machine-exact by
construction.  Weights always sum to the reference area 1/2.  Exactness
of every rule is pinned by tests against the closed-form integrals of
barycentric monomials.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 10


@dataclass(frozen=True, eq=False)
class QuadRule:
    degree: int  # polynomial exactness
    points: np.ndarray  # (nq, 2) reference coordinates
    weights: np.ndarray  # (nq,), sums to 1/2

    @property
    def num_points(self) -> int:
        return self.weights.shape[0]

    @property
    def barycentric(self) -> np.ndarray:
        """(nq, 3) barycentric coordinates of the quadrature points."""
        x, y = self.points[:, 0], self.points[:, 1]
        return np.column_stack([1.0 - x - y, x, y])


def _from_orbits(degree, orbits):
    """Build a rule from (weight, barycentric point) symmetric orbits.

    Weights are Dunavant-normalized (they sum to 1); points are expanded to
    every distinct permutation of the barycentric triple.
    """
    pts, wts = [], []
    for w, bary in orbits:
        seen = []
        for perm in [
            (0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)
        ]:
            p = tuple(bary[k] for k in perm)
            if any(abs(p[0] - q[0]) + abs(p[1] - q[1]) < 1e-12 for q in seen):
                continue
            seen.append(p)
            pts.append([p[1], p[2]])  # reference coords (x, y) = (l1, l2)
            wts.append(0.5 * w)
    return QuadRule(
        degree=degree,
        points=np.array(pts, dtype=np.float64),
        weights=np.array(wts, dtype=np.float64),
    )


_THIRD = 1.0 / 3.0

_TABLES = {
    1: [(1.0, (_THIRD, _THIRD, _THIRD))],
    2: [(_THIRD, (2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0))],
    4: [
        (0.223381589678011, (0.108103018168070, 0.445948490915965, 0.445948490915965)),
        (0.109951743655322, (0.816847572980459, 0.091576213509771, 0.091576213509771)),
    ],
    5: [
        (0.225, (_THIRD, _THIRD, _THIRD)),
        (0.132394152788506, (0.059715871789770, 0.470142064105115, 0.470142064105115)),
        (0.125939180544827, (0.797426985353087, 0.101286507323456, 0.101286507323456)),
    ],
    6: [
        (0.116786275726379, (0.501426509658179, 0.249286745170910, 0.249286745170910)),
        (0.050844906370207, (0.873821971016996, 0.063089014491502, 0.063089014491502)),
        (0.082851075618374, (0.053145049844817, 0.310352451033784, 0.636502499121399)),
    ],
}


def _conical_product(degree: int) -> QuadRule:
    """Gauss-Jacobi x Gauss-Legendre rule via the Duffy map, exact to 2m-1."""
    m = (degree + 2) // 2  # smallest m with 2m - 1 >= degree
    xj, wj = roots_jacobi(m, 1.0, 0.0)
    xl, wl = roots_legendre(m)
    u = 0.5 * (xj + 1.0)
    wu = 0.25 * wj
    v = 0.5 * (xl + 1.0)
    wv = 0.5 * wl
    U, V = np.meshgrid(u, v, indexing="ij")
    WU, WV = np.meshgrid(wu, wv, indexing="ij")
    x = U.ravel()
    y = (V * (1.0 - U)).ravel()
    w = (WU * WV).ravel()
    return QuadRule(degree=degree, points=np.column_stack([x, y]), weights=w)


@lru_cache(maxsize=None)
def quadrature(exactness: int) -> QuadRule:
    """Smallest bundled rule integrating all polynomials of the given degree."""
    if not 1 <= exactness <= MAX_DEGREE:
        raise ValueError(
            f"unsupported quadrature exactness {exactness}; "
            f"bundled rules cover 1..{MAX_DEGREE}"
        )
    for deg in sorted(_TABLES):
        if deg >= exactness:
            return _from_orbits(deg, _TABLES[deg])
    return _conical_product(exactness)

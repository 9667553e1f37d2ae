"""Lagrange finite element spaces on triangulated squares.

Supports piecewise constants (degree 0), linears (degree 1) and quadratics
(degree 2), scalar or two-component.  Scalar dofs are numbered vertices
first, then edge midpoints (degree 2) in mesh edge order; degree 0 dofs sit
at triangle centroids in triangle order.  A two-component space stacks the
x-component block before the y-component block.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import Mesh, SideTag


class OutOfDomainError(ValueError):
    """A point handed to evaluate() lies outside the closed unit square."""


_LOCAL_NDOF = {0: 1, 1: 3, 2: 6}


def basis_values(degree: int, points: np.ndarray) -> np.ndarray:
    """Reference shape function values, shape (npts, nloc)."""
    x, y = points[:, 0], points[:, 1]
    l0, l1, l2 = 1.0 - x - y, x, y
    if degree == 0:
        return np.ones((points.shape[0], 1))
    if degree == 1:
        return np.column_stack([l0, l1, l2])
    if degree == 2:
        return np.column_stack([
            l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
            4 * l1 * l2, 4 * l2 * l0, 4 * l0 * l1,
        ])
    raise ValueError(f"unsupported element degree {degree}")


def basis_ref_grads(degree: int, points: np.ndarray) -> np.ndarray:
    """Reference shape function gradients, shape (npts, nloc, 2)."""
    npts = points.shape[0]
    x, y = points[:, 0], points[:, 1]
    l0, l1, l2 = 1.0 - x - y, x, y
    if degree == 0:
        return np.zeros((npts, 1, 2))
    if degree == 1:
        g = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        return np.broadcast_to(g, (npts, 3, 2)).copy()
    if degree == 2:
        dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        g = np.empty((npts, 6, 2))
        lam = (l0, l1, l2)
        for k in range(3):
            g[:, k, :] = (4 * lam[k] - 1)[:, None] * dl[k]
        pairs = [(1, 2), (2, 0), (0, 1)]
        for k, (a, b) in enumerate(pairs):
            g[:, 3 + k, :] = 4 * (lam[a][:, None] * dl[b] + lam[b][:, None] * dl[a])
        return g
    raise ValueError(f"unsupported element degree {degree}")


@dataclass(frozen=True, eq=False)
class FunctionSpace:
    mesh: Mesh
    degree: int
    components: int = 1

    def __post_init__(self):
        if self.degree not in _LOCAL_NDOF:
            raise ValueError(f"unsupported element degree {self.degree}")
        if self.components not in (1, 2):
            raise ValueError(f"components must be 1 or 2, got {self.components}")

    @property
    def num_scalar_dofs(self) -> int:
        m = self.mesh
        if self.degree == 0:
            return m.num_triangles
        if self.degree == 1:
            return m.num_vertices
        return m.num_vertices + m.num_edges

    @property
    def num_dofs(self) -> int:
        return self.components * self.num_scalar_dofs

    @property
    def local_ndof(self) -> int:
        return _LOCAL_NDOF[self.degree]

    def dof_map(self) -> np.ndarray:
        """(T, nloc) global scalar dof per triangle and local shape function."""
        m = self.mesh
        if self.degree == 0:
            return np.arange(m.num_triangles, dtype=np.int64)[:, None]
        if self.degree == 1:
            return m.triangles
        return np.hstack([m.triangles, m.num_vertices + m.triangle_edges])

    def dof_coords(self) -> np.ndarray:
        """(num_scalar_dofs, 2) coordinates of the scalar nodal points."""
        m = self.mesh
        if self.degree == 0:
            return m.triangle_coords().mean(axis=1)
        if self.degree == 1:
            return m.vertices
        mids = 0.5 * (m.vertices[m.edges[:, 0]] + m.vertices[m.edges[:, 1]])
        return np.vstack([m.vertices, mids])

    def side_dofs(self, side: SideTag) -> np.ndarray:
        """Scalar dof indices whose nodes lie on the given side."""
        m = self.mesh
        if self.degree == 0:
            return np.empty(0, dtype=np.int64)
        dofs = [m.side_vertices(side)]
        if self.degree == 2:
            dofs.append(m.num_vertices + m.side_edges(side))
        return np.sort(np.concatenate(dofs))

    def boundary_dofs(self) -> np.ndarray:
        """Scalar dof indices on the whole outer boundary."""
        sides = [self.side_dofs(s) for s in SideTag]
        return np.unique(np.concatenate(sides))

    def expand_dofs(self, scalar_dofs: np.ndarray) -> np.ndarray:
        """All-component dof indices for the given scalar dof indices."""
        ns = self.num_scalar_dofs
        return np.concatenate(
            [scalar_dofs + c * ns for c in range(self.components)]
        )


@dataclass(eq=False)
class FEFunction:
    space: FunctionSpace
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.space.num_dofs,):
            raise ValueError(
                f"coefficient vector has shape {self.coeffs.shape}, "
                f"expected ({self.space.num_dofs},)"
            )

    def component(self, c: int) -> np.ndarray:
        ns = self.space.num_scalar_dofs
        return self.coeffs[c * ns:(c + 1) * ns]

    def copy(self) -> "FEFunction":
        return FEFunction(self.space, self.coeffs.copy())


def zero_function(space: FunctionSpace) -> FEFunction:
    return FEFunction(space, np.zeros(space.num_dofs))


def interpolate(func, space: FunctionSpace) -> FEFunction:
    """Nodal interpolant of a callable f(x, y) -> (npts,) or (npts, components)."""
    xy = space.dof_coords()
    vals = np.asarray(func(xy[:, 0], xy[:, 1]))
    if space.components == 1:
        if vals.shape != (xy.shape[0],):
            raise ValueError(f"scalar callable returned shape {vals.shape}")
        return FEFunction(space, vals.astype(np.float64))
    if vals.shape != (xy.shape[0], 2):
        raise ValueError(f"vector callable returned shape {vals.shape}")
    return FEFunction(space, vals.T.reshape(-1).astype(np.float64))


def _locate(mesh: Mesh, points: np.ndarray, tol: float = 1e-10):
    """Triangle index and reference coordinates for each query point."""
    x, y = points[:, 0], points[:, 1]
    if np.any(x < -tol) or np.any(x > 1 + tol) or np.any(y < -tol) or np.any(y > 1 + tol):
        bad = points[(x < -tol) | (x > 1 + tol) | (y < -tol) | (y > 1 + tol)][0]
        raise OutOfDomainError(f"point {tuple(bad)} lies outside the unit square")
    n = mesh.n
    gx = np.clip(x, 0.0, 1.0) * n
    gy = np.clip(y, 0.0, 1.0) * n
    i = np.minimum(gx.astype(np.int64), n - 1)
    j = np.minimum(gy.astype(np.int64), n - 1)
    xi = gx - i
    eta = gy - j
    lower = eta <= xi
    tri = 2 * (j * n + i) + (~lower).astype(np.int64)
    ref = np.empty_like(points)
    ref[lower, 0] = xi[lower] - eta[lower]
    ref[lower, 1] = eta[lower]
    ref[~lower, 0] = xi[~lower]
    ref[~lower, 1] = eta[~lower] - xi[~lower]
    return tri, ref


def evaluate(f: FEFunction, points: np.ndarray) -> np.ndarray:
    """Point values of a finite element function.

    points has shape (npts, 2); the result has shape (npts,) for scalar
    spaces and (npts, 2) for two-component spaces.  Points outside the
    closed unit square raise OutOfDomainError.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    space = f.space
    tri, ref = _locate(space.mesh, points)
    dmap = space.dof_map()[tri]  # (npts, nloc)
    # evaluate shape functions point by point (each point has its own ref coords)
    N = _shape_at(space.degree, ref)  # (npts, nloc)
    out = np.empty((points.shape[0], space.components))
    for c in range(space.components):
        comp = f.component(c)
        out[:, c] = np.sum(comp[dmap] * N, axis=1)
    return out[:, 0] if space.components == 1 else out


def evaluate_gradient(f: FEFunction, points: np.ndarray) -> np.ndarray:
    """Point gradients: (npts, 2) for scalars, (npts, 2, 2) with [i, c, d] =
    d u_c / d x_d for two-component spaces."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    space = f.space
    mesh = space.mesh
    tri, ref = _locate(mesh, points)
    dmap = space.dof_map()[tri]
    dN = _shape_grad_at(space.degree, ref)  # (npts, nloc, 2)
    xy = mesh.triangle_coords()[tri]  # (npts, 3, 2)
    J = np.stack([xy[:, 1] - xy[:, 0], xy[:, 2] - xy[:, 0]], axis=2)  # (npts,2,2) columns
    invJ = np.linalg.inv(J)
    # dN/dx_i = sum_d dN/dxi_d * dxi_d/dx_i, with invJ[p, d, i] = dxi_d/dx_i
    g = np.einsum("pld,pdi->pli", dN, invJ)
    out = np.empty((points.shape[0], space.components, 2))
    for c in range(space.components):
        comp = f.component(c)
        out[:, c, :] = np.einsum("pl,pld->pd", comp[dmap], g)
    return out[:, 0, :] if space.components == 1 else out


def _shape_at(degree: int, ref: np.ndarray) -> np.ndarray:
    return basis_values(degree, ref)


def _shape_grad_at(degree: int, ref: np.ndarray) -> np.ndarray:
    return basis_ref_grads(degree, ref)

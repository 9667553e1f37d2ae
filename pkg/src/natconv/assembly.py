"""Matrix and vector assembly for the coupled flow and heat forms.

All forms are integrated on the reference triangle and pushed forward with
the affine map of each element.  Bilinear forms default to a degree 4 rule,
convection and load terms to degree 6.  The convection forms use the
skew-symmetrized transport operator

    c(w; v, z) = 1/2 (w . grad v, z) - 1/2 (w . grad z, v)

so that c(w; v, v) = 0 for every discrete v, without requiring w to be
divergence free.

Element loops are vectorized over triangles in fixed-size chunks to keep
peak memory bounded on fine meshes.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .fem import FEFunction, FunctionSpace, basis_ref_grads, basis_values
from .quadrature import quadrature

_CHUNK = 1 << 15

BILINEAR_KINDS = (
    "velocity_stiffness",
    "temperature_stiffness",
    "mass",
    "divergence",
    "pressure_mass",
)


def geometry(mesh):
    """Per-triangle affine data: detJ (T,), invJ (T, 2, 2), cached on the mesh."""
    cache = mesh._edge_cache
    if "geom" not in cache:
        xy = mesh.triangle_coords()
        J = np.stack([xy[:, 1] - xy[:, 0], xy[:, 2] - xy[:, 0]], axis=2)
        detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        if np.any(detJ <= 0):
            raise ValueError("mesh contains a non counter-clockwise triangle")
        invJ = np.empty_like(J)
        invJ[:, 0, 0] = J[:, 1, 1]
        invJ[:, 0, 1] = -J[:, 0, 1]
        invJ[:, 1, 0] = -J[:, 1, 0]
        invJ[:, 1, 1] = J[:, 0, 0]
        invJ /= detJ[:, None, None]
        cache["geom"] = (detJ, invJ)
    return cache["geom"]


def physical_points(mesh, rule):
    """(T, nq, 2) quadrature point locations in physical coordinates."""
    bary = rule.barycentric  # (nq, 3)
    xy = mesh.triangle_coords()  # (T, 3, 2)
    return np.einsum("qv,tvd->tqd", bary, xy)


def _phys_grads(invJ_chunk, dN):
    # dN: (nq, nloc, 2) reference grads -> (Tc, nq, nloc, 2) physical grads
    return np.einsum("qld,tdi->tqli", dN, invJ_chunk)


def _scatter(rows, cols, data, shape):
    A = sp.coo_matrix(
        (np.concatenate(data),
         (np.concatenate(rows), np.concatenate(cols))),
        shape=shape,
    ).tocsr()
    A.sort_indices()
    return A


def _accumulate(rows, cols, data, dof_test, dof_trial, elem):
    nt, nloc_i, nloc_j = elem.shape
    r = np.repeat(dof_test, nloc_j, axis=1)
    c = np.tile(dof_trial, (1, nloc_i))
    rows.append(r.ravel())
    cols.append(c.ravel())
    data.append(elem.reshape(nt, -1).ravel())


def _scalar_mass(trial: FunctionSpace, test: FunctionSpace, quad_degree: int):
    mesh = trial.mesh
    rule = quadrature(quad_degree)
    detJ, _ = geometry(mesh)
    Na = basis_values(trial.degree, rule.points)
    Nb = basis_values(test.degree, rule.points)
    M0 = np.einsum("q,qi,qj->ij", rule.weights, Nb, Na)
    elem = detJ[:, None, None] * M0[None, :, :]
    rows, cols, data = [], [], []
    _accumulate(rows, cols, data, test.dof_map(), trial.dof_map(), elem)
    return _scatter(rows, cols, data, (test.num_scalar_dofs, trial.num_scalar_dofs))


def _scalar_stiffness(space: FunctionSpace, quad_degree: int):
    mesh = space.mesh
    rule = quadrature(quad_degree)
    detJ, invJ = geometry(mesh)
    dN = basis_ref_grads(space.degree, rule.points)
    dmap = space.dof_map()
    rows, cols, data = [], [], []
    for s in _chunks(mesh.num_triangles):
        G = _phys_grads(invJ[s], dN)
        elem = np.einsum("q,tqia,tqja,t->tij", rule.weights, G, G, detJ[s])
        _accumulate(rows, cols, data, dmap[s], dmap[s], elem)
    nd = space.num_scalar_dofs
    return _scatter(rows, cols, data, (nd, nd))


def _divergence(trial: FunctionSpace, test: FunctionSpace, quad_degree: int):
    """B with B[q_i, u_j] = -(div phi_j, psi_i)."""
    mesh = trial.mesh
    rule = quadrature(quad_degree)
    detJ, invJ = geometry(mesh)
    dNv = basis_ref_grads(trial.degree, rule.points)
    Np = basis_values(test.degree, rule.points)
    dmap_v = trial.dof_map()
    dmap_p = test.dof_map()
    ns_v = trial.num_scalar_dofs
    rows, cols, data = [], [], []
    for s in _chunks(mesh.num_triangles):
        G = _phys_grads(invJ[s], dNv)
        for c in range(2):
            elem = -np.einsum(
                "q,qi,tqj,t->tij", rule.weights, Np, G[..., c], detJ[s]
            )
            _accumulate(rows, cols, data, dmap_p[s], dmap_v[s] + c * ns_v, elem)
    return _scatter(
        rows, cols, data, (test.num_scalar_dofs, trial.num_dofs)
    )


def _chunks(nt):
    for start in range(0, nt, _CHUNK):
        yield slice(start, min(start + _CHUNK, nt))


def assemble_bilinear(kind: str, trial: FunctionSpace, test: FunctionSpace = None,
                      quad_degree: int = 4) -> sp.csr_matrix:
    """Assemble one of the named bilinear forms as a CSR matrix.

    velocity_stiffness   (grad u, grad v) on a two-component space
    temperature_stiffness(grad th, grad ps) on a scalar space
    mass                 (u, v), scalar or two-component
    divergence           b(u, q) = -(div u, q); trial two-component, test scalar
    pressure_mass        (p, q) on a scalar space
    """
    if test is None:
        test = trial
    if kind == "velocity_stiffness":
        if trial.components != 2:
            raise ValueError("velocity_stiffness expects a two-component space")
        K = _scalar_stiffness(trial, quad_degree)
        return sp.block_diag([K, K], format="csr")
    if kind == "temperature_stiffness":
        return _scalar_stiffness(trial, quad_degree)
    if kind == "mass":
        M = _scalar_mass(trial, test, quad_degree)
        if trial.components == 2:
            return sp.block_diag([M, M], format="csr")
        return M
    if kind == "divergence":
        if trial.components != 2 or test.components != 1:
            raise ValueError("divergence expects two-component trial, scalar test")
        return _divergence(trial, test, quad_degree)
    if kind == "pressure_mass":
        return _scalar_mass(trial, test, quad_degree)
    raise ValueError(f"unknown bilinear form kind {kind!r}")


def _state_at_quad(state: FEFunction, rule):
    """Values of a state field at all quadrature points: (T, nq, m)."""
    space = state.space
    N = basis_values(space.degree, rule.points)
    dmap = space.dof_map()
    out = np.empty(
        (space.mesh.num_triangles, rule.num_points, space.components)
    )
    for c in range(space.components):
        out[:, :, c] = np.einsum("tl,ql->tq", state.component(c)[dmap], N)
    return out


def _state_grad_at_quad(state: FEFunction, rule, s, invJ):
    """Gradients of a state field on one triangle chunk: (Tc, nq, m, 2)."""
    space = state.space
    dN = basis_ref_grads(space.degree, rule.points)
    G = _phys_grads(invJ[s], dN)
    dmap = space.dof_map()[s]
    m = space.components
    out = np.empty((dmap.shape[0], rule.num_points, m, 2))
    for c in range(m):
        out[:, :, c, :] = np.einsum("tl,tqld->tqd", state.component(c)[dmap], G)
    return out


def assemble_convection(wind: FEFunction, trial: FunctionSpace,
                        test: FunctionSpace = None,
                        quad_degree: int = 6) -> sp.csr_matrix:
    """Skew-symmetric transport matrix C with z^T C v = c(wind; v, z).

    trial and test share a scalar basis; for two-component spaces the
    operator acts componentwise, so the matrix is block diagonal.
    """
    if test is None:
        test = trial
    if wind.space.components != 2:
        raise ValueError("transporting wind must be a two-component field")
    if trial.degree != test.degree or trial.components != test.components:
        raise ValueError("convection expects matching trial and test spaces")
    mesh = trial.mesh
    rule = quadrature(quad_degree)
    detJ, invJ = geometry(mesh)
    N = basis_values(trial.degree, rule.points)
    dN = basis_ref_grads(trial.degree, rule.points)
    dmap = trial.dof_map()
    wq = _state_at_quad(wind, rule)
    rows, cols, data = [], [], []
    for s in _chunks(mesh.num_triangles):
        G = _phys_grads(invJ[s], dN)
        # D[i, j] = (wind . grad phi_j, phi_i)
        adv = np.einsum("tqc,tqjc->tqj", wq[s], G)
        D = np.einsum("q,qi,tqj,t->tij", rule.weights, N, adv, detJ[s])
        elem = 0.5 * (D - D.transpose(0, 2, 1))
        _accumulate(rows, cols, data, dmap[s], dmap[s], elem)
    nd = trial.num_scalar_dofs
    C = _scatter(rows, cols, data, (nd, nd))
    if trial.components == 2:
        return sp.block_diag([C, C], format="csr")
    return C


def assemble_convection_linearization(state: FEFunction,
                                      trial: FunctionSpace,
                                      test: FunctionSpace = None,
                                      quad_degree: int = 6) -> sp.csr_matrix:
    """Derivative of the transport term with respect to the wind.

    Returns L with z^T L du = c(du; state, z), where du lives in the
    two-component trial space and state (the transported field, scalar or
    two-component) lives in the test space.
    """
    if test is None:
        test = state.space
    if trial.components != 2:
        raise ValueError("wind perturbation must be two-component")
    if state.space is not test and (
        state.space.degree != test.degree
        or state.space.components != test.components
    ):
        raise ValueError("state must live in the test space")
    mesh = trial.mesh
    rule = quadrature(quad_degree)
    detJ, invJ = geometry(mesh)
    Nv = basis_values(trial.degree, rule.points)
    Nt = basis_values(test.degree, rule.points)
    dNt = basis_ref_grads(test.degree, rule.points)
    dmap_v = trial.dof_map()
    dmap_t = test.dof_map()
    ns_v = trial.num_scalar_dofs
    ns_t = test.num_scalar_dofs
    m = test.components
    sq = _state_at_quad(state, rule)
    rows, cols, data = [], [], []
    for s in _chunks(mesh.num_triangles):
        Gt = _phys_grads(invJ[s], dNt)
        gsq = _state_grad_at_quad(state, rule, s, invJ)
        for c in range(m):
            for cp in range(2):
                # 1/2 (phi_j d_cp state_c, t_i) - 1/2 (phi_j d_cp t_i, state_c)
                a1 = np.einsum(
                    "q,qi,qj,tq,t->tij", rule.weights, Nt, Nv,
                    gsq[:, :, c, cp], detJ[s]
                )
                a2 = np.einsum(
                    "q,tqi,qj,tq,t->tij", rule.weights, Gt[:, :, :, cp], Nv,
                    sq[s][:, :, c], detJ[s]
                )
                elem = 0.5 * (a1 - a2)
                _accumulate(
                    rows, cols, data,
                    dmap_t[s] + c * ns_t, dmap_v[s] + cp * ns_v, elem,
                )
    return _scatter(rows, cols, data, (test.num_dofs, trial.num_dofs))


def assemble_source(func, space: FunctionSpace, quad_degree: int = 6) -> np.ndarray:
    """Load vector of (f, v) for a callable f(x, y) -> (npts,) or (npts, m)."""
    mesh = space.mesh
    rule = quadrature(quad_degree)
    detJ, _ = geometry(mesh)
    N = basis_values(space.degree, rule.points)
    dmap = space.dof_map()
    pts = physical_points(mesh, rule)
    vals = np.asarray(func(pts[..., 0].ravel(), pts[..., 1].ravel()))
    out = np.zeros(space.num_dofs)
    ns = space.num_scalar_dofs
    if space.components == 1:
        vals = vals.reshape(mesh.num_triangles, rule.num_points)
        elem = np.einsum("q,qi,tq,t->ti", rule.weights, N, vals, detJ)
        np.add.at(out, dmap, elem)
        return out
    vals = vals.reshape(mesh.num_triangles, rule.num_points, 2)
    for c in range(2):
        elem = np.einsum("q,qi,tq,t->ti", rule.weights, N, vals[..., c], detJ)
        np.add.at(out, dmap + c * ns, elem)
    return out


def assemble_grad_test_load(func, space: FunctionSpace,
                            quad_degree: int = 6) -> np.ndarray:
    """Load vector of (G, grad v) for a tensor callable G(x, y) -> (npts, m, 2).

    Component c of the result tests G[:, c, :] against grad of the c-th
    test component; with G = (1/Re) grad(u) - p I this produces the weak
    Stokes action (1/Re) a(u, v) + b(v, p) evaluated on exact fields.
    """
    mesh = space.mesh
    rule = quadrature(quad_degree)
    detJ, invJ = geometry(mesh)
    dN = basis_ref_grads(space.degree, rule.points)
    dmap = space.dof_map()
    pts = physical_points(mesh, rule)
    vals = np.asarray(func(pts[..., 0].ravel(), pts[..., 1].ravel()))
    m = space.components
    vals = vals.reshape(mesh.num_triangles, rule.num_points, m, 2)
    out = np.zeros(space.num_dofs)
    ns = space.num_scalar_dofs
    for s in _chunks(mesh.num_triangles):
        G = _phys_grads(invJ[s], dN)
        for c in range(m):
            elem = np.einsum(
                "q,tqid,tqd,t->ti", rule.weights, G, vals[s][:, :, c, :], detJ[s]
            )
            np.add.at(out, dmap[s] + c * ns, elem)
    return out


def apply_dirichlet(A: sp.csr_matrix, b: np.ndarray, dofs: np.ndarray,
                    values: np.ndarray):
    """Impose x[dofs] = values by symmetric row and column elimination.

    Returns the modified (A, b); boundary columns are moved to the right
    hand side so the reduced operator stays symmetric whenever A is.
    """
    n = A.shape[0]
    if dofs.size == 0:
        return A.tocsr(), b
    x0 = np.zeros(n)
    x0[dofs] = values
    b = b - A @ x0
    keep = np.ones(n)
    keep[dofs] = 0.0
    Z = sp.diags(keep)
    pin = sp.diags((keep == 0).astype(float))
    A = (Z @ A @ Z + pin).tocsr()
    A.sort_indices()
    b[dofs] = values
    return A, b

"""Assembled operators checked against a hand-worked single-cell mesh and
against calculus identities that P1 interpolation leaves exact.  The n=1
square fixes every sign convention (diagonal direction, divergence sign,
component block order) with numbers computed on paper.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from natconv.assembly import (
    apply_dirichlet,
    assemble_bilinear,
    assemble_convection,
    assemble_convection_linearization,
    assemble_grad_test_load,
    assemble_source,
)
from natconv.fem import FEFunction, FunctionSpace, interpolate
from natconv.mesh import build_uniform_square_mesh

RNG = np.random.default_rng(2417)

# The n=1 mesh: vertices (0,0),(1,0),(0,1),(1,1), triangles (0,1,3) and
# (0,3,2).  Barycentric gradients worked out by hand from the affine maps
# lambda = a + b.x on each cell.
LOWER = dict(dofs=[0, 1, 3], grads=np.array([[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]]))
UPPER = dict(dofs=[0, 3, 2], grads=np.array([[0.0, -1.0], [1.0, 0.0], [-1.0, 1.0]]))
AREA = 0.5


def test_hand_assembled_stiffness_n1():
    mesh = build_uniform_square_mesh(1)
    K = assemble_bilinear("temperature_stiffness", FunctionSpace(mesh, 1)).toarray()
    expected = np.zeros((4, 4))
    for cell in (LOWER, UPPER):
        for a, i in enumerate(cell["dofs"]):
            for b, j in enumerate(cell["dofs"]):
                expected[i, j] += AREA * cell["grads"][a] @ cell["grads"][b]
    assert np.allclose(K, expected, atol=1e-15)
    # spot value: the K_00 entry sums 1/2 from each cell
    assert K[0, 0] == pytest.approx(1.0)


def test_hand_assembled_mass_n1():
    mesh = build_uniform_square_mesh(1)
    M = assemble_bilinear("mass", FunctionSpace(mesh, 1)).toarray()
    local = (AREA / 12.0) * np.array([[2.0, 1, 1], [1, 2, 1], [1, 1, 2]])
    expected = np.zeros((4, 4))
    for cell in (LOWER, UPPER):
        d = cell["dofs"]
        expected[np.ix_(d, d)] += local
    assert np.allclose(M, expected, atol=1e-15)
    assert M.sum() == pytest.approx(1.0)  # integral of 1 over the unit square


def test_hand_assembled_divergence_n1():
    # B[i, j + c*ns] = -(d_c phi_j, psi_i); on P1/P1 the integrand is
    # grad_j[c] * psi_i with integral grad_j[c] * area/3.
    mesh = build_uniform_square_mesh(1)
    vspace = FunctionSpace(mesh, 1, 2)
    pspace = FunctionSpace(mesh, 1)
    B = assemble_bilinear("divergence", vspace, pspace).toarray()
    expected = np.zeros((4, 8))
    for cell in (LOWER, UPPER):
        for i in cell["dofs"]:
            for b, j in enumerate(cell["dofs"]):
                for c in range(2):
                    expected[i, j + 4 * c] += -cell["grads"][b, c] * AREA / 3.0
    assert np.allclose(B, expected, atol=1e-15)


def test_stiffness_energy_of_affine_fields():
    mesh = build_uniform_square_mesh(6)
    space = FunctionSpace(mesh, 1)
    K = assemble_bilinear("temperature_stiffness", space)
    u = interpolate(lambda x, y: x + 2 * y, space)
    v = interpolate(lambda x, y: 3 * x - y, space)
    # integral of (1,2).(3,-1) over the unit square
    assert v.coeffs @ (K @ u.coeffs) == pytest.approx(1.0, abs=1e-13)
    assert abs(K @ interpolate(lambda x, y: np.ones_like(x), space).coeffs).max() < 1e-13


def test_divergence_against_calculus():
    mesh = build_uniform_square_mesh(5)
    vspace = FunctionSpace(mesh, 1, 2)
    pspace = FunctionSpace(mesh, 1)
    B = assemble_bilinear("divergence", vspace, pspace)
    u = interpolate(lambda x, y: np.column_stack([x, y]), vspace)
    q = interpolate(lambda x, y: x, pspace)
    # -(div u, q) = -(2, x) = -1
    assert q.coeffs @ (B @ u.coeffs) == pytest.approx(-1.0, abs=1e-13)
    # a divergence-free rotational field is annihilated weakly
    w = interpolate(lambda x, y: np.column_stack([-y, x]), vspace)
    assert abs(B @ w.coeffs).max() < 1e-13


def test_vector_mass_is_block_diagonal():
    mesh = build_uniform_square_mesh(3)
    vspace = FunctionSpace(mesh, 1, 2)
    M = assemble_bilinear("mass", vspace).toarray()
    ns = vspace.num_scalar_dofs
    assert np.allclose(M[:ns, ns:], 0.0)
    assert np.allclose(M[:ns, :ns], M[ns:, ns:])


def test_mixed_degree_mass():
    # (p, q) with P1 trial against P0 test: integral of each hat over a cell
    # is area/3, so the row sum per cell dof is the cell area.
    mesh = build_uniform_square_mesh(2)
    M = assemble_bilinear(
        "mass", FunctionSpace(mesh, 1), FunctionSpace(mesh, 0)
    ).toarray()
    assert M.shape == (8, 9)
    assert np.allclose(M.sum(axis=1), mesh.signed_areas())
    assert M.sum() == pytest.approx(1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 31 - 1))
def test_convection_matrix_is_skew(n, seed):
    rng = np.random.default_rng(seed)
    mesh = build_uniform_square_mesh(n)
    vspace = FunctionSpace(mesh, 1, 2)
    wind = FEFunction(vspace, rng.standard_normal(vspace.num_dofs))
    C = assemble_convection(wind, vspace)
    scale = max(abs(C).max(), 1e-30)
    assert abs(C + C.T).max() / scale < 1e-12


def test_convection_constant_wind_oracle():
    # c(w; v, z) with w=(1,2), v=x, z=y on the unit square:
    # 0.5 (w.grad v, z) - 0.5 (w.grad z, v) = 0.5*(1, y) - 0.5*(2, x) = -0.25.
    mesh = build_uniform_square_mesh(4)
    vspace = FunctionSpace(mesh, 1, 2)
    sspace = FunctionSpace(mesh, 1)
    wind = interpolate(
        lambda x, y: np.column_stack([np.ones_like(x), 2 * np.ones_like(x)]), vspace
    )
    C = assemble_convection(wind, sspace)
    v = interpolate(lambda x, y: x, sspace)
    z = interpolate(lambda x, y: y, sspace)
    assert z.coeffs @ (C @ v.coeffs) == pytest.approx(-0.25, abs=1e-14)


def test_convection_vector_blocks_match_scalar():
    mesh = build_uniform_square_mesh(3)
    vspace = FunctionSpace(mesh, 1, 2)
    sspace = FunctionSpace(mesh, 1)
    wind = FEFunction(vspace, RNG.standard_normal(vspace.num_dofs))
    Cs = assemble_convection(wind, sspace).toarray()
    Cv = assemble_convection(wind, vspace).toarray()
    ns = sspace.num_scalar_dofs
    assert np.allclose(Cv[:ns, :ns], Cs)
    assert np.allclose(Cv[ns:, ns:], Cs)
    assert np.allclose(Cv[:ns, ns:], 0.0)


@pytest.mark.parametrize("components", [1, 2])
def test_linearization_matches_frozen_transport(components):
    # z^T L du must equal c(du; state, z), i.e. the transport matrix
    # reassembled with the perturbation as wind and applied to the state.
    mesh = build_uniform_square_mesh(4)
    vspace = FunctionSpace(mesh, 1, 2)
    tspace = vspace if components == 2 else FunctionSpace(mesh, 1)
    state = FEFunction(tspace, RNG.standard_normal(tspace.num_dofs))
    du = FEFunction(vspace, RNG.standard_normal(vspace.num_dofs))
    z = RNG.standard_normal(tspace.num_dofs)
    L = assemble_convection_linearization(state, vspace, tspace)
    lhs = z @ (L @ du.coeffs)
    rhs = z @ (assemble_convection(du, tspace) @ state.coeffs)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-13)


def test_source_load_totals():
    mesh = build_uniform_square_mesh(6)
    sspace = FunctionSpace(mesh, 1)
    vspace = FunctionSpace(mesh, 1, 2)
    f = assemble_source(lambda x, y: np.ones_like(x), sspace)
    assert f.sum() == pytest.approx(1.0, abs=1e-14)
    g = assemble_source(lambda x, y: np.column_stack([x, y]), vspace)
    ns = vspace.num_scalar_dofs
    assert g[:ns].sum() == pytest.approx(0.5, abs=1e-14)
    assert g[ns:].sum() == pytest.approx(0.5, abs=1e-14)


def test_grad_test_load_identity_tensor_matches_divergence():
    # (I, grad v) = (div v, 1), which is minus the column sums of B.
    mesh = build_uniform_square_mesh(4)
    vspace = FunctionSpace(mesh, 1, 2)
    pspace = FunctionSpace(mesh, 1)
    B = assemble_bilinear("divergence", vspace, pspace)

    def ident(x, y):
        out = np.zeros((x.size, 2, 2))
        out[:, 0, 0] = 1.0
        out[:, 1, 1] = 1.0
        return out

    load = assemble_grad_test_load(ident, vspace)
    assert np.allclose(load, -np.asarray(B.sum(axis=0)).ravel(), atol=1e-13)


def test_apply_dirichlet_keeps_symmetry_and_solution():
    mesh = build_uniform_square_mesh(4)
    space = FunctionSpace(mesh, 1)
    K = assemble_bilinear("temperature_stiffness", space)
    M = assemble_bilinear("mass", space)
    A = (K + M).tocsr()
    exact = interpolate(lambda x, y: 1.0 + x - 2 * y, space)
    b = A @ exact.coeffs
    dofs = space.boundary_dofs()
    Ad, bd = apply_dirichlet(A.copy(), b.copy(), dofs, exact.coeffs[dofs])
    assert abs(Ad - Ad.T).max() < 1e-14
    x = np.linalg.solve(Ad.toarray(), bd)
    assert np.allclose(x, exact.coeffs, atol=1e-12)


def test_unknown_form_kind_rejected():
    mesh = build_uniform_square_mesh(2)
    with pytest.raises(ValueError):
        assemble_bilinear("biharmonic", FunctionSpace(mesh, 1))

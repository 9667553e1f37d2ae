"""Penalized Stokes projection onto an equal-order velocity-pressure pair.

The projection of a pair (u, p) is the discrete pair (u_h, p_h) whose
penalized Stokes action agrees with the unpenalized action of (u, p) on
every discrete test pair:

    (1/Re) a(u_h, v) + b(v, p_h) - b(u_h, q) + gamma (p_h, q)
        = (1/Re) a(u, v) + b(v, p) - b(u, q)   for all (v, q).

The right hand side is integrated with a degree 6 rule directly from the
analytic velocity gradient and pressure; the exact fields are never
interpolated.  Velocity boundary values are imposed from the exact trace
by symmetric elimination, so the identity above holds for test velocities
vanishing on the boundary.  Subtracting the two sides for such tests gives
the residual identity

    a_gamma((u - u_h, p - p_h), (v, q)) = gamma (p, q)

which is checked, with random probes, by the test suite.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import (
    apply_dirichlet,
    assemble_bilinear,
    assemble_grad_test_load,
    assemble_source,
)
from .fem import FEFunction, FunctionSpace
from .linalg import SolveReport, SolverOptions, linear_solve


@dataclass(frozen=True)
class PenaltyForm:
    """Reynolds number and pressure penalty weight of the bilinear form."""

    Re: float
    gamma: float

    def __post_init__(self):
        if self.Re <= 0:
            raise ValueError(f"Reynolds number must be positive, got {self.Re}")
        if self.gamma < 0:
            raise ValueError(f"penalty must be non-negative, got {self.gamma}")
        if self.Re < 1:
            warnings.warn(
                f"Re = {self.Re} is outside the Re >= 1 regime the error "
                "analysis assumes", stacklevel=2,
            )
        if self.gamma >= 1:
            warnings.warn(
                f"penalty gamma = {self.gamma:.3g} >= 1 is outside the "
                "analyzed range", stacklevel=2,
            )


@dataclass
class ProjectedPair:
    u: FEFunction
    p: FEFunction
    report: SolveReport


def assemble_a_gamma(velocity_space: FunctionSpace, pressure_space: FunctionSpace,
                     form: PenaltyForm) -> sp.csr_matrix:
    """Block matrix of the penalized form: [[A/Re, B^T], [-B, gamma M_p]]."""
    A = assemble_bilinear("velocity_stiffness", velocity_space)
    B = assemble_bilinear("divergence", velocity_space, pressure_space)
    Mp = assemble_bilinear("pressure_mass", pressure_space)
    return sp.bmat(
        [[A / form.Re, B.T], [-B, form.gamma * Mp]], format="csr"
    )


def stokes_rhs(u_grad, p_exact, velocity_space: FunctionSpace,
               pressure_space: FunctionSpace, form: PenaltyForm) -> np.ndarray:
    """Unpenalized action of exact fields on all test pairs, degree 6 rule."""

    def flux(x, y):
        g = np.asarray(u_grad(x, y))  # (npts, 2, 2)
        p = np.asarray(p_exact(x, y))
        out = g / form.Re
        out[:, 0, 0] -= p
        out[:, 1, 1] -= p
        return out

    f_v = assemble_grad_test_load(flux, velocity_space)

    def div_u(x, y):
        g = np.asarray(u_grad(x, y))
        return g[:, 0, 0] + g[:, 1, 1]

    f_q = assemble_source(div_u, pressure_space)
    return np.concatenate([f_v, f_q])


def modified_projection(u_exact, u_grad, p_exact,
                        velocity_space: FunctionSpace,
                        pressure_space: FunctionSpace,
                        form: PenaltyForm,
                        options: SolverOptions = SolverOptions()) -> ProjectedPair:
    """Project an exact pair onto the discrete pair through the penalized form.

    u_exact(x, y) -> (npts, 2), u_grad(x, y) -> (npts, 2, 2) with
    [i, c, d] = d u_c / d x_d, p_exact(x, y) -> (npts,).  The velocity
    trace is imposed on the whole boundary from u_exact.
    """
    if form.gamma == 0:
        raise ValueError("projection needs gamma > 0; the penalty-free pair "
                         "is reserved for the reference solver")
    K = assemble_a_gamma(velocity_space, pressure_space, form)
    rhs = stokes_rhs(u_grad, p_exact, velocity_space, pressure_space, form)

    bdofs = velocity_space.boundary_dofs()
    xy = velocity_space.dof_coords()[bdofs]
    uvals = np.asarray(u_exact(xy[:, 0], xy[:, 1]))
    ns = velocity_space.num_scalar_dofs
    dofs = np.concatenate([bdofs, bdofs + ns])
    values = np.concatenate([uvals[:, 0], uvals[:, 1]])

    K, rhs = apply_dirichlet(K, rhs, dofs, values)
    x, report = linear_solve(K, rhs, options)
    nu = velocity_space.num_dofs
    u_h = FEFunction(velocity_space, x[:nu])
    p_h = FEFunction(pressure_space, x[nu:])
    return ProjectedPair(u_h, p_h, report)


def galerkin_residual(u_grad, p_exact, pair: ProjectedPair,
                      form: PenaltyForm, probe) -> float:
    """Residual of the projection identity for one discrete test pair.

    probe is a coefficient vector over (velocity, pressure) dofs; its
    velocity part is zeroed on the boundary, then the normalized residual
    | probe . (rhs_a0 - K_gamma x_h) | / ||probe|| is returned.
    """
    vspace, pspace = pair.u.space, pair.p.space
    K = assemble_a_gamma(vspace, pspace, form)
    rhs = stokes_rhs(u_grad, p_exact, vspace, pspace, form)
    probe = np.array(probe, dtype=np.float64)
    nu = vspace.num_dofs
    if probe.shape != (nu + pspace.num_scalar_dofs,):
        raise ValueError("probe has the wrong length")
    probe[vspace.expand_dofs(vspace.boundary_dofs())] = 0.0
    x = np.concatenate([pair.u.coeffs, pair.p.coeffs])
    scale = np.linalg.norm(probe)
    if scale == 0:
        return 0.0
    return float(abs(probe @ (rhs - K @ x))) / scale

"""Implicit time stepping for the coupled convection system.

Each step solves, with exact-Jacobian Newton, the penalized fully coupled
system for (u, p, theta) at the new time level:

    (d_t u, v) + (1/Re) a(u, v) + c(u; u, v) + b(v, p)
                                 - kappa (theta e_y, v) = (F, v)
    -b(u, q) + gamma (p, q) = 0
    (d_t theta, ps) + (1/(Re Pr)) a(theta, ps) + c(u; theta, ps) = (g, ps)

with kappa = Ra / (Pr Re^2) and d_t the BDF1 or BDF2 difference quotient.
The BDF2 start-up step falls back to BDF1, which keeps the second-order
global accuracy at the final time.

With gamma = 0 the pressure is only determined up to a constant; the
penalty-free configuration (used for reference runs on an inf-sup stable
pair) therefore appends a single scalar multiplier pinning the pressure
mean to zero.

Steady states can be reached either by the plain fixed-step march or, much
faster, by growing the step geometrically once Newton keeps converging;
both terminate on the same increment criterion and share the same fixed
point, since every BDF fixed point solves the steady system exactly.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .assembly import (
    apply_dirichlet,
    assemble_bilinear,
    assemble_convection,
    assemble_convection_linearization,
    assemble_source,
)
from .cases import Case
from .fem import FEFunction, FunctionSpace, interpolate, zero_function
from .linalg import SingularMatrixError, SolverOptions, linear_solve
from .projection import PenaltyForm, modified_projection

log = logging.getLogger(__name__)


class TimeScheme(enum.Enum):
    BDF1 = "bdf1"
    BDF2 = "bdf2"


@dataclass(frozen=True)
class NewtonOptions:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_iter: int = 20


class NewtonDivergenceError(RuntimeError):
    """Newton failed to converge within the iteration budget."""


@dataclass(eq=False)
class SystemState:
    u: FEFunction
    p: FEFunction
    theta: FEFunction
    t: float

    def vector(self) -> np.ndarray:
        return np.concatenate([self.u.coeffs, self.p.coeffs, self.theta.coeffs])

    def copy(self) -> "SystemState":
        return SystemState(self.u.copy(), self.p.copy(), self.theta.copy(), self.t)


@dataclass
class StepInfo:
    t: float
    dt: float
    newton_iters: int
    residual: float
    wall: float


@dataclass
class RunDiagnostics:
    steps: list = dc_field(default_factory=list)
    status: str = "completed"
    message: str = ""

    @property
    def num_steps(self) -> int:
        return len(self.steps)


class ConvectionSystem:
    """Assembled operators for one mesh, element triple and penalty value."""

    def __init__(self, velocity_space: FunctionSpace,
                 pressure_space: FunctionSpace,
                 temperature_space: FunctionSpace,
                 case: Case, gamma: float,
                 newton: NewtonOptions = NewtonOptions(),
                 solver: SolverOptions = SolverOptions(),
                 pin_pressure_mean: bool = False):
        if pin_pressure_mean and gamma != 0.0:
            raise ValueError("the pressure-mean multiplier is only for gamma = 0")
        if gamma == 0.0 and not pin_pressure_mean:
            raise ValueError("gamma = 0 requires pin_pressure_mean=True")
        self.vspace = velocity_space
        self.pspace = pressure_space
        self.thspace = temperature_space
        self.case = case
        self.gamma = float(gamma)
        self.newton = newton
        self.solver = solver
        self.pin = pin_pressure_mean

        mesh = velocity_space.mesh
        self.vel_scalar = FunctionSpace(mesh, velocity_space.degree, 1)
        params = case.params
        self.kappa = params.buoyancy_coefficient

        self.A_u = assemble_bilinear("velocity_stiffness", velocity_space)
        self.M_us = assemble_bilinear("mass", self.vel_scalar)
        self.M_u = sp.block_diag([self.M_us, self.M_us], format="csr")
        self.B = assemble_bilinear("divergence", velocity_space, pressure_space)
        self.M_p = assemble_bilinear("pressure_mass", pressure_space)
        self.A_th = assemble_bilinear("temperature_stiffness", temperature_space)
        self.M_th = assemble_bilinear("mass", temperature_space)
        # buoyancy couples the temperature into the y momentum block
        G = assemble_bilinear("mass", temperature_space, self.vel_scalar)
        ns = velocity_space.num_scalar_dofs
        self.G_buoy = sp.vstack(
            [sp.csr_matrix((ns, temperature_space.num_scalar_dofs)), G],
            format="csr",
        )

        self.nu = velocity_space.num_dofs
        self.np = pressure_space.num_scalar_dofs
        self.nth = temperature_space.num_scalar_dofs
        self.ntot = self.nu + self.np + self.nth + (1 if self.pin else 0)

        self._bc_dofs, self._bc_eval = self._collect_bc()
        self._const_blocks = None

    # ---------------------------------------------------------------- dofs

    @property
    def num_dofs(self) -> int:
        """Field unknowns (multiplier excluded)."""
        return self.nu + self.np + self.nth

    def split(self, x: np.ndarray, t: float) -> SystemState:
        nu, npp = self.nu, self.np
        return SystemState(
            FEFunction(self.vspace, x[:nu].copy()),
            FEFunction(self.pspace, x[nu:nu + npp].copy()),
            FEFunction(self.thspace, x[nu + npp:nu + npp + self.nth].copy()),
            t,
        )

    def _collect_bc(self):
        """Global dof indices carrying Dirichlet data, with evaluators."""
        case, vspace, thspace = self.case, self.vspace, self.thspace
        ns = vspace.num_scalar_dofs
        entries = []
        if case.velocity_bc is not None:
            sides = set()
            for s in case.velocity_bc.sides:
                sides.update(vspace.side_dofs(s).tolist())
            vdofs = np.array(sorted(sides), dtype=np.int64)
            xy = vspace.dof_coords()[vdofs]
            fn = case.velocity_bc.value
            entries.append((
                np.concatenate([vdofs, vdofs + ns]),
                lambda t, xy=xy, fn=fn: np.asarray(
                    fn(xy[:, 0], xy[:, 1], t)).T.reshape(-1),
            ))
        off = self.nu + self.np
        for bc in case.temperature_bc:
            sides = set()
            for s in bc.sides:
                sides.update(thspace.side_dofs(s).tolist())
            tdofs = np.array(sorted(sides), dtype=np.int64)
            xy = thspace.dof_coords()[tdofs]
            entries.append((
                tdofs + off,
                lambda t, xy=xy, fn=bc.value: np.asarray(fn(xy[:, 0], xy[:, 1], t)),
            ))
        dofs = np.concatenate([e[0] for e in entries]) if entries else np.empty(0, np.int64)
        if np.unique(dofs).size != dofs.size:
            raise ValueError("overlapping Dirichlet specifications")
        return dofs, entries

    def bc_values(self, t: float) -> np.ndarray:
        if not self._bc_eval:
            return np.empty(0)
        return np.concatenate([fn(t) for _, fn in self._bc_eval])

    # ------------------------------------------------------------- operators

    def _constants(self, dt: float, c0: float):
        key = (dt, c0)
        if self._const_blocks is not None and self._const_blocks[0] == key:
            return self._const_blocks[1]
        Auu = (c0 / dt) * self.M_u + (1.0 / self.case.params.Re) * self.A_u
        Athth = (c0 / dt) * self.M_th + self.case.params.diffusivity * self.A_th
        rows = [
            [Auu, self.B.T, -self.kappa * self.G_buoy],
            [-self.B, self.gamma * self.M_p, None],
            [None, None, Athth],
        ]
        if self.pin:
            m = np.asarray(self.M_p @ np.ones(self.np)).reshape(-1, 1)
            rows[0].append(None)
            rows[1].append(sp.csr_matrix(m))
            rows[2].append(None)
            rows.append([None, sp.csr_matrix(m.T), None, None])
        K = sp.bmat(rows, format="csr")
        self._const_blocks = (key, K)
        return K

    def _convection(self, state_vec: np.ndarray):
        u = FEFunction(self.vspace, state_vec[:self.nu])
        th = FEFunction(
            self.thspace, state_vec[self.nu + self.np:self.nu + self.np + self.nth]
        )
        Cs = assemble_convection(u, self.vel_scalar)
        C_mom = sp.block_diag([Cs, Cs], format="csr")
        if self.thspace.degree == self.vspace.degree:
            C_th = Cs
        else:
            C_th = assemble_convection(u, self.thspace)
        return u, th, C_mom, C_th

    def loads(self, t: float) -> np.ndarray:
        case = self.case
        f = np.zeros(self.ntot)
        if case.momentum_source is not None:
            f[:self.nu] = assemble_source(
                lambda x, y: case.momentum_source(x, y, t), self.vspace
            )
        if case.heat_source is not None:
            off = self.nu + self.np
            f[off:off + self.nth] = assemble_source(
                lambda x, y: case.heat_source(x, y, t), self.thspace
            )
        return f

    def assemble_residual(self, x: np.ndarray, hist: np.ndarray, dt: float,
                          c0: float, loads: np.ndarray) -> np.ndarray:
        """Discrete residual; hist holds the BDF combination of old states."""
        K = self._constants(dt, c0)
        u, th, C_mom, C_th = self._convection(x)
        r = K @ x - loads
        r[:self.nu] += C_mom @ u.coeffs - (1.0 / dt) * (self.M_u @ hist[:self.nu])
        off = self.nu + self.np
        r[off:off + self.nth] += C_th @ th.coeffs \
            - (1.0 / dt) * (self.M_th @ hist[off:off + self.nth])
        return r

    def assemble_jacobian(self, x: np.ndarray, dt: float, c0: float) -> sp.csr_matrix:
        """Exact derivative of the residual at x."""
        K = self._constants(dt, c0)
        u, th, C_mom, C_th = self._convection(x)
        L_u = assemble_convection_linearization(u, self.vspace, self.vspace)
        L_th = assemble_convection_linearization(th, self.vspace, self.thspace)
        Zp = sp.csr_matrix((self.np, self.np))
        rows = [
            [C_mom + L_u, None, None],
            [None, Zp, None],
            [L_th, None, C_th],
        ]
        if self.pin:
            for r in rows:
                r.append(None)
            rows.append([None, None, None, sp.csr_matrix((1, 1))])
        return K + sp.bmat(rows, format="csr")

    # ---------------------------------------------------------------- newton

    def solve_timestep(self, guess: np.ndarray, hist: np.ndarray, dt: float,
                       c0: float, t_next: float) -> tuple[np.ndarray, StepInfo]:
        x = guess.copy()
        x[self._bc_dofs] = self.bc_values(t_next)
        loads = self.loads(t_next)
        zero_bc = np.zeros(self._bc_dofs.size)
        norm0 = None
        t0 = time.perf_counter()
        for it in range(self.newton.max_iter + 1):
            r = self.assemble_residual(x, hist, dt, c0, loads)
            r[self._bc_dofs] = 0.0
            norm = float(np.linalg.norm(r))
            if norm0 is None:
                norm0 = norm if norm > 0 else 1.0
            if norm <= max(self.newton.abs_tol, self.newton.rel_tol * norm0):
                return x, StepInfo(t_next, dt, it, norm, time.perf_counter() - t0)
            if it == self.newton.max_iter:
                break
            J = self.assemble_jacobian(x, dt, c0)
            J, rhs = apply_dirichlet(J, -r, self._bc_dofs, zero_bc)
            delta, report = linear_solve(J, rhs, self.solver)
            if not report.converged:
                raise NewtonDivergenceError(
                    f"linear solve stalled at t = {t_next:.6g} "
                    f"(residual {report.residual:.3e})"
                )
            x += delta
        raise NewtonDivergenceError(
            f"Newton did not reach tolerance at t = {t_next:.6g}: "
            f"residual {norm:.3e} after {self.newton.max_iter} iterations"
        )


def initial_state(system: ConvectionSystem, t0: float = 0.0,
                  solver: SolverOptions = SolverOptions()) -> SystemState:
    """Discrete initial data.

    Cases with exact fields start from the penalized projection of the
    exact pair (so the velocity-pressure error starts orthogonal to the
    discrete Stokes operator) and the nodal interpolant of the
    temperature.  The cavity starts at rest with its conduction profile.
    """
    case = system.case
    if case.has_exact:
        form = PenaltyForm(Re=case.params.Re, gamma=system.gamma)
        pair = modified_projection(
            lambda x, y: case.velocity(x, y, t0),
            lambda x, y: case.velocity_grad(x, y, t0),
            lambda x, y: case.pressure(x, y, t0),
            system.vspace, system.pspace, form, solver,
        )
        theta = interpolate(lambda x, y: case.temperature(x, y, t0), system.thspace)
        return SystemState(pair.u, pair.p, theta, t0)
    u = zero_function(system.vspace)
    p = zero_function(system.pspace)
    theta = interpolate(case.initial_temperature, system.thspace)
    return SystemState(u, p, theta, t0)


def _scheme_coefficients(scheme: TimeScheme, have_two: bool, omega: float = 1.0):
    """BDF difference-quotient weights; omega = dt_new / dt_old for BDF2."""
    if scheme is TimeScheme.BDF1 or not have_two:
        return 1.0, (1.0, 0.0)
    w = omega
    return (1 + 2 * w) / (1 + w), (1 + w, -w * w / (1 + w))


def run_transient(system: ConvectionSystem, state0: SystemState, dt: float,
                  scheme: TimeScheme = TimeScheme.BDF2,
                  t_final: Optional[float] = None,
                  steady_tol: Optional[float] = None,
                  dt_growth: float = 1.0,
                  dt_max: float = 1e6,
                  max_steps: int = 100_000,
                  predictor: bool = True):
    """March in time; returns (final SystemState, RunDiagnostics).

    Stops at t_final when given, or on the steady increment criterion
    || u_new - u_old ||_L2 / dt <= steady_tol (and the same for the
    temperature).  dt_growth > 1 accelerates steady-seeking runs by
    growing the step after every converged step; that mode steps with
    BDF1, whose fixed point is the same steady solution.
    """
    if (t_final is None) == (steady_tol is None):
        raise ValueError("exactly one of t_final and steady_tol must be set")
    if dt_growth != 1.0 and t_final is not None:
        raise ValueError("step growth is only for steady-seeking runs")
    diag = RunDiagnostics()
    x_prev = state0.vector()
    if system.pin:
        x_prev = np.concatenate([x_prev, [0.0]])
    x_prev2 = None
    dt_prev = None
    t = state0.t
    step_scheme = TimeScheme.BDF1 if dt_growth != 1.0 else scheme
    for k in range(max_steps):
        if t_final is not None:
            if t >= t_final - 1e-12:
                break
            dt_k = min(dt, t_final - t)
        else:
            dt_k = dt
        omega = dt_k / dt_prev if dt_prev else 1.0
        c0, (a1, a2) = _scheme_coefficients(step_scheme, x_prev2 is not None, omega)
        hist = a1 * x_prev + (a2 * x_prev2 if x_prev2 is not None else 0.0)
        guess = x_prev.copy()
        if predictor and x_prev2 is not None:
            guess = (1.0 + omega) * x_prev - omega * x_prev2
        try:
            x_new, info = system.solve_timestep(guess, hist, dt_k, c0, t + dt_k)
        except (NewtonDivergenceError, SingularMatrixError) as exc:
            if steady_tol is not None and dt_k > 1e-6:
                # steady-seeking runs back off the step and try again
                dt = 0.25 * dt_k
                log.info("step rejected at dt = %.3g, retrying with %.3g", dt_k, dt)
                continue
            diag.status = "failed"
            diag.message = str(exc)
            log.warning("run aborted: %s", exc)
            return system.split(x_prev, t), diag
        diag.steps.append(info)
        t += dt_k
        if steady_tol is not None:
            du = x_new[:system.nu] - x_prev[:system.nu]
            off = system.nu + system.np
            dth = x_new[off:off + system.nth] - x_prev[off:off + system.nth]
            rate_u = _l2(system.M_u, du) / dt_k
            rate_th = _l2(system.M_th, dth) / dt_k
            small = max(_l2(system.M_u, du), _l2(system.M_th, dth))
            if rate_u <= steady_tol and rate_th <= steady_tol and small <= 1e-6:
                diag.status = "steady"
                return system.split(x_new, t), diag
            dt = min(dt * dt_growth, dt_max)
        x_prev2 = None if dt_growth != 1.0 else x_prev
        x_prev = x_new
        dt_prev = dt_k
    if steady_tol is not None:
        diag.status = "failed"
        diag.message = f"no steady state within {max_steps} steps"
        return system.split(x_prev, t), diag
    return system.split(x_prev, t), diag


def _l2(M, v):
    return float(np.sqrt(max(v @ (M @ v), 0.0)))

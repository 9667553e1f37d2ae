"""Fine-grid steady cavity solutions used as reference data.

The heated-cavity benchmark has no closed-form solution, so coarse runs
are measured against a stored fine-grid solve on an inf-sup stable
quadratic-linear-quadratic triple with zero penalty.  The pressure mean is
pinned to zero through a scalar multiplier.  The same stored fields also
drive the projection study on that geometry.

References are written as compressed npz bundles; the mesh is rebuilt
from its subdivision count on load, which is cheap and bit-reproducible.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import numpy as np

from .analysis import centerline_profile, mean_value
from .cases import cavity_case
from .fem import FEFunction, FunctionSpace, evaluate, evaluate_gradient
from .mesh import build_uniform_square_mesh
from .solver import ConvectionSystem, RunDiagnostics, initial_state, run_transient

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass(eq=False)
class ReferenceSolution:
    n: int
    degrees: tuple[int, int, int]
    Ra: float
    Pr: float
    Re: float
    u: FEFunction
    p: FEFunction
    theta: FEFunction

    # callables usable as "exact" fields by the error norms and projection
    def velocity(self, x, y, t=None):
        return evaluate(self.u, np.column_stack([x, y]))

    def velocity_grad(self, x, y, t=None):
        return evaluate_gradient(self.u, np.column_stack([x, y]))

    def pressure(self, x, y, t=None):
        return evaluate(self.p, np.column_stack([x, y]))

    def temperature(self, x, y, t=None):
        return evaluate(self.theta, np.column_stack([x, y]))

    def profile(self, num_samples: int = 513) -> np.ndarray:
        return centerline_profile(self.u, num_samples)


def generate_reference(n: int = 128, Ra: float = 1e4, Pr: float = 0.71,
                       degrees: tuple[int, int, int] = (2, 1, 2),
                       steady_tol: float = 1e-8, dt0: float = 0.05,
                       growth: float = 2.0):
    """Drive the cavity to steady state on a fine mesh; returns
    (ReferenceSolution, RunDiagnostics)."""
    case = cavity_case(Ra=Ra, Pr=Pr)
    mesh = build_uniform_square_mesh(n)
    vspace = FunctionSpace(mesh, degrees[0], 2)
    pspace = FunctionSpace(mesh, degrees[1], 1)
    thspace = FunctionSpace(mesh, degrees[2], 1)
    system = ConvectionSystem(vspace, pspace, thspace, case, gamma=0.0,
                              pin_pressure_mean=True)
    log.info("reference run: n=%d, %d unknowns", n, system.ntot)
    state0 = initial_state(system)
    state, diag = run_transient(
        system, state0, dt=dt0, steady_tol=steady_tol, dt_growth=growth,
    )
    if diag.status != "steady":
        raise RuntimeError(f"reference run did not reach steady state: "
                           f"{diag.status} {diag.message}")
    # the multiplier already pins the mean; remove the residual offset anyway
    state.p.coeffs -= mean_value(state.p)
    ref = ReferenceSolution(
        n=n, degrees=tuple(degrees), Ra=Ra, Pr=Pr, Re=case.params.Re,
        u=state.u, p=state.p, theta=state.theta,
    )
    return ref, diag


def save_reference(ref: ReferenceSolution, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    np.savez_compressed(
        path,
        version=FORMAT_VERSION,
        n=ref.n,
        degrees=np.asarray(ref.degrees),
        Ra=ref.Ra, Pr=ref.Pr, Re=ref.Re,
        u=ref.u.coeffs, p=ref.p.coeffs, theta=ref.theta.coeffs,
    )


def load_reference(path: str) -> ReferenceSolution:
    with np.load(path) as z:
        if int(z["version"]) != FORMAT_VERSION:
            raise ValueError(f"unsupported reference format in {path}")
        n = int(z["n"])
        degrees = tuple(int(d) for d in z["degrees"])
        mesh = build_uniform_square_mesh(n)
        vspace = FunctionSpace(mesh, degrees[0], 2)
        pspace = FunctionSpace(mesh, degrees[1], 1)
        thspace = FunctionSpace(mesh, degrees[2], 1)
        return ReferenceSolution(
            n=n, degrees=degrees,
            Ra=float(z["Ra"]), Pr=float(z["Pr"]), Re=float(z["Re"]),
            u=FEFunction(vspace, z["u"].copy()),
            p=FEFunction(pspace, z["p"].copy()),
            theta=FEFunction(thspace, z["theta"].copy()),
        )


def default_reference_path(n: int = 128, root: str | None = None) -> str:
    if root is None:
        root = os.environ.get(
            "NATCONV_DATA",
            os.path.join(os.path.dirname(__file__), "..", "..", "data"),
        )
    return os.path.join(root, "reference", f"nc-sq-n{n}-p2p1p2.npz")


def ensure_reference(n: int = 128, path: str | None = None, **kwargs) -> ReferenceSolution:
    """Load the cached reference, generating and saving it if absent."""
    path = path or default_reference_path(n)
    if os.path.exists(path):
        return load_reference(path)
    log.warning("reference %s missing; generating (this is the slow path)", path)
    ref, _ = generate_reference(n=n, **kwargs)
    save_reference(ref, path)
    return ref

"""Convergence studies: sweep mesh sizes and penalty policies for one case.

A study cell is one (mesh size, penalty policy) combination.  Projection
cases solve the penalized Stokes projection of the exact pair; transient
cases march the coupled system to the final time (manufactured solutions)
or to steady state (heated cavity), then measure errors against the exact
or stored reference fields.  A failed cell is recorded with empty error
entries; the study always completes.

Cells are independent, so they can optionally run in separate processes;
results are identical regardless of worker count.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

from .analysis import ConvergenceTable, ErrorRecord, convergence_rates, error_norm
from .cases import GAMMA_POLICIES, Case, gamma_value, make_case
from .fem import FunctionSpace
from .linalg import SingularMatrixError, SolverOptions
from .mesh import build_uniform_square_mesh
from .projection import PenaltyForm, modified_projection
from .reference import ReferenceSolution, default_reference_path, load_reference
from .solver import (
    ConvectionSystem,
    NewtonDivergenceError,
    TimeScheme,
    initial_state,
    run_transient,
)

log = logging.getLogger(__name__)

PROJECTION_NORMS = ("L2_u", "H1_u", "L2_p", "L2_p0")
MANUFACTURED_NORMS = ("L2_u", "H1_u", "L2_theta", "L2_p", "L2_p0")
CAVITY_NORMS = ("L2_u", "L2_theta", "L2_p")


@dataclass(frozen=True)
class StudyConfig:
    case: str = "mp-bur"
    elements: str = ""  # defaults per case when empty
    mesh_sizes: tuple = (20, 40, 80, 160)
    gamma_policies: tuple = ("1e-7", "re13-h23", "re12-h", "re-h2")
    scheme: str = "bdf2"
    dt_rule: str = "h"
    norms: tuple = ()
    steady_tol: float = 1e-8
    steady_growth: float = 1.8
    reference_path: str = ""
    reference_n: int = 128
    jobs: int = 1
    deep: bool = False

    def resolved(self) -> "StudyConfig":
        out = self
        if not out.elements:
            case = make_case(out.case)
            default = "p1-p1" if case.study == "projection" else "p1-p1-p1"
            out = replace(out, elements=default)
        if not out.norms:
            case = make_case(out.case)
            if case.study == "projection":
                norms = PROJECTION_NORMS
            elif case.has_exact:
                norms = MANUFACTURED_NORMS
            else:
                norms = CAVITY_NORMS
            out = replace(out, norms=norms)
        if out.deep and 320 not in out.mesh_sizes:
            out = replace(out, mesh_sizes=tuple(out.mesh_sizes) + (320,))
        return out


def parse_elements(spec: str) -> tuple[int, ...]:
    parts = spec.lower().split("-")
    if len(parts) not in (2, 3):
        raise ValueError(f"element spec {spec!r} must name 2 or 3 fields")
    degs = []
    for p in parts:
        if not p.startswith("p") or not p[1:].isdigit():
            raise ValueError(f"bad element token {p!r} in {spec!r}")
        degs.append(int(p[1:]))
    if degs[0] == 0:
        raise ValueError("velocity requires degree >= 1")
    return tuple(degs)


def parse_dt_rule(rule: str, h: float, t_final: float | None = None) -> float:
    r = rule.strip().lower()
    if r == "h":
        return h
    if r.startswith("tf/"):
        if t_final is None:
            raise ValueError("tf-based step rule needs a final time")
        return t_final / float(r[3:])
    if r.startswith("h/"):
        return h / float(r[2:])
    if r.endswith("h"):
        coef = r[:-1].rstrip("*")
        return (float(coef) if coef else 1.0) * h
    return float(r)


def count_dofs(n: int, degrees: tuple[int, ...]) -> int:
    """Total unknowns of a velocity-pressure(-temperature) triple at size n."""
    mesh = build_uniform_square_mesh(n)
    comps = [2] + [1] * (len(degrees) - 1)
    return sum(
        FunctionSpace(mesh, d, c).num_dofs for d, c in zip(degrees, comps)
    )


_REF_CACHE: dict = {}


def _reference(config: StudyConfig) -> ReferenceSolution:
    path = config.reference_path or default_reference_path(config.reference_n)
    if path not in _REF_CACHE:
        _REF_CACHE[path] = load_reference(path)
    return _REF_CACHE[path]


def _exact_fields(case: Case, config: StudyConfig, t: float):
    """(velocity, velocity_grad, pressure, temperature) callables of (x, y)."""
    if case.has_exact:
        return (
            lambda x, y: case.velocity(x, y, t),
            lambda x, y: case.velocity_grad(x, y, t),
            lambda x, y: case.pressure(x, y, t),
            (lambda x, y: case.temperature(x, y, t)) if case.temperature else None,
        )
    ref = _reference(config)
    return ref.velocity, ref.velocity_grad, ref.pressure, ref.temperature


def _measure(norms, u_h, p_h, th_h, fields) -> dict:
    vel, velg, pres, temp = fields
    out = {}
    for nk in norms:
        if nk == "L2_u":
            out[nk] = error_norm(u_h, vel, "L2")
        elif nk == "H1_u":
            out[nk] = error_norm(u_h, vel, "H1", exact_grad=velg)
        elif nk == "L2_p":
            out[nk] = error_norm(p_h, pres, "L2")
        elif nk == "L2_p0":
            out[nk] = error_norm(p_h, pres, "L2", center=True)
        elif nk == "L2_theta":
            if th_h is None or temp is None:
                continue
            out[nk] = error_norm(th_h, temp, "L2")
        else:
            raise ValueError(f"unknown norm {nk!r}")
    return out


def run_cell(config: StudyConfig, n: int, policy_name: str) -> list[ErrorRecord]:
    """One (mesh size, policy) cell; failures yield empty-error records."""
    config = config.resolved()
    case = make_case(config.case)
    degrees = parse_elements(config.elements)
    mesh = build_uniform_square_mesh(n)
    h = mesh.h
    gamma = gamma_value(GAMMA_POLICIES[policy_name], h, case.params.Re)
    t0 = time.perf_counter()
    errors: dict | None
    if case.study == "projection":
        if len(degrees) != 2:
            raise ValueError("projection studies use velocity-pressure pairs")
        vspace = FunctionSpace(mesh, degrees[0], 2)
        pspace = FunctionSpace(mesh, degrees[1], 1)
        dofs = vspace.num_dofs + pspace.num_dofs
        fields = _exact_fields(case, config, 0.0)
        vel, velg, pres, _ = fields
        form = PenaltyForm(Re=case.params.Re, gamma=gamma)
        try:
            pair = modified_projection(vel, velg, pres, vspace, pspace, form)
            errors = _measure(config.norms, pair.u, pair.p, None, fields)
        except SingularMatrixError as exc:
            log.warning("cell n=%d %s failed: %s", n, policy_name, exc)
            errors = None
    else:
        if len(degrees) != 3:
            raise ValueError("transient studies use u-p-theta triples")
        vspace = FunctionSpace(mesh, degrees[0], 2)
        pspace = FunctionSpace(mesh, degrees[1], 1)
        thspace = FunctionSpace(mesh, degrees[2], 1)
        system = ConvectionSystem(vspace, pspace, thspace, case, gamma)
        dofs = system.num_dofs
        scheme = TimeScheme(config.scheme)
        try:
            state0 = initial_state(system)
            dt = parse_dt_rule(config.dt_rule, h, case.t_final)
            if case.steady:
                state, diag = run_transient(
                    system, state0, dt=dt, scheme=scheme,
                    steady_tol=config.steady_tol,
                    dt_growth=config.steady_growth,
                )
                ok = diag.status == "steady"
            else:
                state, diag = run_transient(
                    system, state0, dt=dt, scheme=scheme, t_final=case.t_final,
                )
                ok = diag.status == "completed"
            if ok:
                fields = _exact_fields(case, config, state.t)
                errors = _measure(config.norms, state.u, state.p, state.theta, fields)
            else:
                log.warning("cell n=%d %s: %s", n, policy_name, diag.message)
                errors = None
        except (NewtonDivergenceError, SingularMatrixError) as exc:
            log.warning("cell n=%d %s failed: %s", n, policy_name, exc)
            errors = None
    seconds = time.perf_counter() - t0
    return [
        ErrorRecord(
            case=case.name, n=n, h=h, policy=policy_name, norm=nk,
            error=None if errors is None else errors.get(nk),
            dofs=dofs, seconds=seconds,
        )
        for nk in config.norms
    ]


def temporal_orders(case_name: str = "nc-nour", n: int = 160,
                    dts: tuple = (0.1, 0.05, 0.025),
                    schemes: tuple = (TimeScheme.BDF2, TimeScheme.BDF1),
                    policy: str = "re-h2",
                    baseline_dt: float | None = None) -> dict:
    """Time-discretization error of theta at the final time, mesh fixed.

    Against the exact solution the spatial error floor of the fixed mesh
    contaminates the finest steps, so the temporal part is isolated by
    comparing every run to a small-step second-order run on the same mesh
    and penalty; the baseline is shared across schemes.  The penalty must
    sit in the small-gamma regime here: gamma of order one couples the
    sloshing compressible component it admits into the step error and
    visibly depresses the measured order, so the quadratic-in-h policy is
    the default.  Returns {scheme value: (dts, errors, rates)}.
    """
    case = make_case(case_name)
    if not case.has_exact or case.t_final is None:
        raise ValueError("temporal studies need a manufactured transient case")
    mesh = build_uniform_square_mesh(n)
    vspace = FunctionSpace(mesh, 1, 2)
    pspace = FunctionSpace(mesh, 1, 1)
    thspace = FunctionSpace(mesh, 1, 1)
    gamma = gamma_value(GAMMA_POLICIES[policy], mesh.h, case.params.Re)
    system = ConvectionSystem(vspace, pspace, thspace, case, gamma)
    state0 = initial_state(system)
    if baseline_dt is None:
        baseline_dt = min(dts) / 4.0
    base, diag = run_transient(system, state0, dt=baseline_dt,
                               scheme=TimeScheme.BDF2, t_final=case.t_final)
    if diag.status != "completed":
        raise RuntimeError(f"baseline run failed: {diag.message}")
    out = {}
    for scheme in schemes:
        errors = []
        for dt in dts:
            state, diag = run_transient(system, state0, dt=dt, scheme=scheme,
                                        t_final=case.t_final)
            if diag.status != "completed":
                raise RuntimeError(f"dt={dt} run failed: {diag.message}")
            d = state.theta.coeffs - base.theta.coeffs
            errors.append(float((d @ (system.M_th @ d)) ** 0.5))
            log.info("%s dt=%.4g: theta step error %.3E",
                     scheme.value, dt, errors[-1])
        out[scheme.value] = (list(dts), errors, convergence_rates(list(dts), errors))
    return out


def temporal_study(case_name: str = "nc-nour", n: int = 160,
                   dts: tuple = (0.1, 0.05, 0.025),
                   scheme: TimeScheme = TimeScheme.BDF2,
                   policy: str = "re-h2",
                   baseline_dt: float | None = None):
    """Single-scheme variant of temporal_orders; returns (dts, errors, rates)."""
    result = temporal_orders(case_name, n, dts, (scheme,), policy, baseline_dt)
    return result[scheme.value]


def _cell_worker(cfg_dict: dict, n: int, policy: str):
    cfg = StudyConfig(**cfg_dict)
    return run_cell(cfg, n, policy)


def run_study(config: StudyConfig) -> ConvergenceTable:
    """Sweep the whole (mesh, policy) grid and return the assembled table."""
    config = config.resolved()
    table = ConvergenceTable(case=config.case, elements=config.elements)
    cells = [(p, n) for p in config.gamma_policies for n in config.mesh_sizes]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futs = {
                (p, n): pool.submit(_cell_worker, asdict(config), n, p)
                for p, n in cells
            }
            for p, n in cells:
                table.records.extend(futs[(p, n)].result())
    else:
        for p, n in cells:
            recs = run_cell(config, n, p)
            table.records.extend(recs)
            done = [f"{r.norm}={r.error:.3E}" for r in recs if r.error is not None]
            log.info("cell %s n=%d: %s (%.1fs)", p, n,
                     " ".join(done) or "failed", recs[0].seconds if recs else 0.0)
    return table

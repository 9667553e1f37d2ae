"""Error norms, convergence tables and their text renderings.

Errors are integrated with a degree 8 rule, evaluating the exact field at
the quadrature points; discrete functions are never compared through an
intermediate interpolant.  Pressure errors come in two flavours: the raw
L2 distance, which exposes the unconstrained pressure mode of weakly
penalized runs, and a centered variant with both means subtracted, which
compares shapes only.

Table cells hold 3 significant digits in scientific notation; rates are
logarithmic ratios between consecutive mesh sizes within one penalty
policy.  A failed solve leaves its cells empty rather than aborting the
study.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .assembly import geometry, physical_points, _chunks, _phys_grads
from .fem import FEFunction, basis_ref_grads, basis_values
from .quadrature import quadrature

NORM_KINDS = ("L2_u", "H1_u", "L2_p", "L2_p0", "L2_theta")


def mean_value(f: FEFunction, quad_degree: int = 8) -> float:
    """Integral mean over the unit square (whose area is one)."""
    mesh = f.space.mesh
    rule = quadrature(quad_degree)
    detJ, _ = geometry(mesh)
    N = basis_values(f.space.degree, rule.points)
    dmap = f.space.dof_map()
    if f.space.components != 1:
        raise ValueError("mean_value expects a scalar field")
    vals = np.einsum("tl,ql->tq", f.coeffs[dmap], N)
    return float(np.einsum("q,tq,t->", rule.weights, vals, detJ))


def error_norm(f_h: FEFunction, exact, kind: str = "L2", exact_grad=None,
               quad_degree: int = 8, center: bool = False) -> float:
    """|| f_h - exact || in L2 or H1 over the mesh of f_h.

    exact(x, y) -> (npts,) or (npts, 2); exact_grad(x, y) -> (npts, 2) or
    (npts, 2, 2), required for H1.  center=True subtracts the mean of each
    argument first (scalar fields only).
    """
    if kind not in ("L2", "H1"):
        raise ValueError(f"unknown norm kind {kind!r}")
    if kind == "H1" and exact_grad is None:
        raise ValueError("H1 norm needs the exact gradient")
    space = f_h.space
    mesh = space.mesh
    m = space.components
    rule = quadrature(quad_degree)
    detJ, invJ = geometry(mesh)
    N = basis_values(space.degree, rule.points)
    dN = basis_ref_grads(space.degree, rule.points)
    dmap = space.dof_map()
    pts = physical_points(mesh, rule)
    x, y = pts[..., 0].ravel(), pts[..., 1].ravel()
    ex = np.asarray(exact(x, y)).reshape(mesh.num_triangles, rule.num_points, m)

    shift = 0.0
    if center:
        if m != 1:
            raise ValueError("centered errors are for scalar fields")
        fh_mean = mean_value(f_h, quad_degree)
        ex_mean = float(np.einsum(
            "q,tq,t->", rule.weights, ex[..., 0], detJ))
        shift = fh_mean - ex_mean

    total = 0.0
    if kind == "H1":
        gex = np.asarray(exact_grad(x, y)).reshape(
            mesh.num_triangles, rule.num_points, m, 2)
    for s in _chunks(mesh.num_triangles):
        diff = np.empty((dmap[s].shape[0], rule.num_points, m))
        for c in range(m):
            vals = np.einsum("tl,ql->tq", f_h.component(c)[dmap[s]], N)
            diff[:, :, c] = vals - ex[s][:, :, c]
        diff -= shift
        total += np.einsum("q,tqc,tqc,t->", rule.weights, diff, diff, detJ[s])
        if kind == "H1":
            G = _phys_grads(invJ[s], dN)
            for c in range(m):
                gh = np.einsum("tl,tqld->tqd", f_h.component(c)[dmap[s]], G)
                gd = gh - gex[s][:, :, c, :]
                total += np.einsum("q,tqd,tqd,t->", rule.weights, gd, gd, detJ[s])
    return math.sqrt(max(total, 0.0))


def convergence_rates(hs, errors) -> list[Optional[float]]:
    """rate_i = log(e_{i-1}/e_i) / log(h_{i-1}/h_i); None where undefined."""
    out: list[Optional[float]] = [None]
    for i in range(1, len(hs)):
        e0, e1 = errors[i - 1], errors[i]
        if e0 is None or e1 is None or e0 <= 0 or e1 <= 0:
            out.append(None)
        else:
            out.append(math.log(e0 / e1) / math.log(hs[i - 1] / hs[i]))
    return out


@dataclass
class ErrorRecord:
    case: str
    n: int
    h: float
    policy: str
    norm: str
    error: Optional[float]  # None marks a failed solve
    dofs: int = 0
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.error is not None


@dataclass
class ConvergenceTable:
    case: str
    elements: str
    records: list = field(default_factory=list)

    def norms(self) -> list[str]:
        seen = []
        for r in self.records:
            if r.norm not in seen:
                seen.append(r.norm)
        return seen

    def policies(self) -> list[str]:
        seen = []
        for r in self.records:
            if r.policy not in seen:
                seen.append(r.policy)
        return seen

    def mesh_sizes(self) -> list[int]:
        seen = []
        for r in self.records:
            if r.n not in seen:
                seen.append(r.n)
        return sorted(seen)

    def cell(self, n: int, policy: str, norm: str) -> Optional[ErrorRecord]:
        for r in self.records:
            if r.n == n and r.policy == policy and r.norm == norm:
                return r
        return None

    def errors(self, policy: str, norm: str):
        ns = self.mesh_sizes()
        recs = [self.cell(n, policy, norm) for n in ns]
        hs = [1.0 / n for n in ns]
        errs = [r.error if r is not None else None for r in recs]
        return hs, errs

    def rates(self, policy: str, norm: str):
        hs, errs = self.errors(policy, norm)
        return convergence_rates(hs, errs)


def _fmt_err(e: Optional[float]) -> str:
    return "" if e is None else f"{e:.2E}"


def _fmt_rate(r: Optional[float]) -> str:
    return "" if r is None else f"{r:.2f}"


def emit_table(table: ConvergenceTable, fmt: str = "csv",
               norm: Optional[str] = None) -> str:
    """Render a table; one block per norm, policies side by side."""
    norms = [norm] if norm else table.norms()
    if fmt == "csv":
        return _emit_csv(table, norms)
    if fmt == "markdown":
        return _emit_markdown(table, norms)
    raise ValueError(f"unknown table format {fmt!r}")


def _emit_csv(table: ConvergenceTable, norms) -> str:
    out = io.StringIO()
    out.write(f"# case: {table.case}\n# elements: {table.elements}\n")
    for nk in norms:
        out.write(f"# norm: {nk}\n")
        pols = table.policies()
        header = ["h"]
        for p in pols:
            header += [f"{p}_err", f"{p}_rate"]
        out.write(",".join(header) + "\n")
        ns = table.mesh_sizes()
        rates = {p: table.rates(p, nk) for p in pols}
        for i, n in enumerate(ns):
            row = [repr(1.0 / n)]
            for p in pols:
                rec = table.cell(n, p, nk)
                err = rec.error if rec else None
                row += [_fmt_err(err), _fmt_rate(rates[p][i])]
            out.write(",".join(row) + "\n")
    return out.getvalue()


def _emit_markdown(table: ConvergenceTable, norms) -> str:
    out = io.StringIO()
    out.write(f"case `{table.case}`, elements {table.elements}\n")
    for nk in norms:
        out.write(f"\nnorm {nk}\n\n")
        pols = table.policies()
        head = ["h"] + [h for p in pols for h in (f"{p}", "rate")]
        out.write("| " + " | ".join(head) + " |\n")
        out.write("|" + "---|" * len(head) + "\n")
        ns = table.mesh_sizes()
        rates = {p: table.rates(p, nk) for p in pols}
        for i, n in enumerate(ns):
            row = [f"1/{n}"]
            for p in pols:
                rec = table.cell(n, p, nk)
                err = rec.error if rec else None
                row += [_fmt_err(err) or "--", _fmt_rate(rates[p][i]) or "--"]
            out.write("| " + " | ".join(row) + " |\n")
    return out.getvalue()


def parse_table(text: str) -> ConvergenceTable:
    """Inverse of emit_table(fmt="csv"), for round-trip checks and tooling."""
    case, elements, norm = "", "", None
    table = None
    pols: list[str] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            key, val = key.strip(), val.strip()
            if key == "case":
                case = val
            elif key == "elements":
                elements = val
            elif key == "norm":
                norm = val
            if table is None and case and elements:
                table = ConvergenceTable(case=case, elements=elements)
            continue
        cells = line.split(",")
        if cells[0] == "h":
            pols = [c[:-4] for c in cells[1::2]]  # strip _err
            continue
        h = float(cells[0])
        n = round(1.0 / h)
        for k, p in enumerate(pols):
            raw = cells[1 + 2 * k]
            err = float(raw) if raw else None
            table.records.append(ErrorRecord(
                case=case, n=n, h=h, policy=p, norm=norm, error=err,
            ))
    if table is None:
        raise ValueError("not a convergence table")
    return table


def centerline_profile(u: FEFunction, num_samples: int = 513) -> np.ndarray:
    """Vertical velocity along the horizontal midline y = 1/2.

    Returns an array of shape (num_samples, 2) holding x and u_y(x, 1/2).
    """
    from .fem import evaluate

    x = np.linspace(0.0, 1.0, num_samples)
    pts = np.column_stack([x, np.full_like(x, 0.5)])
    uy = evaluate(u, pts)[:, 1]
    return np.column_stack([x, uy])


def profile_l2_difference(profile_a: np.ndarray, profile_b: np.ndarray) -> float:
    """L2 distance along the midline of two sampled profiles (trapezoid)."""
    if profile_a.shape != profile_b.shape or not np.allclose(
            profile_a[:, 0], profile_b[:, 0]):
        raise ValueError("profiles must share their sample grid")
    d = profile_a[:, 1] - profile_b[:, 1]
    return float(np.sqrt(np.trapezoid(d * d, profile_a[:, 0])))

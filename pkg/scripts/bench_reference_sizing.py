"""Measure factorization cost of the fine-grid reference Jacobian.

Sizes the zero-penalty quadratic-linear-quadratic cavity system at a few
subdivision counts so the reference resolution can be chosen to fit the
machine; prints wall time per factorization and peak RSS after each.
"""

import resource
import time

import numpy as np

from natconv.cases import make_case
from natconv.fem import FunctionSpace
from natconv.mesh import build_uniform_square_mesh
import scipy.sparse.linalg as spla
from natconv.solver import ConvectionSystem, initial_state


def peak_rss_mb() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def main() -> None:
    case = make_case("nc-sq")
    for n in (96, 128, 192):
        t0 = time.perf_counter()
        mesh = build_uniform_square_mesh(n)
        V = FunctionSpace(mesh, 2, 2)
        Q = FunctionSpace(mesh, 1, 1)
        W = FunctionSpace(mesh, 2, 1)
        system = ConvectionSystem(V, Q, W, case, gamma=0.0,
                                  pin_pressure_mean=True)
        state0 = initial_state(system)
        x = np.concatenate([state0.vector(), [0.0]])
        build = time.perf_counter() - t0

        t0 = time.perf_counter()
        J = system.assemble_jacobian(x, 0.05, 1.0)
        asm = time.perf_counter() - t0

        t0 = time.perf_counter()
        lu = spla.splu(J.tocsc(), permc_spec="COLAMD")
        fact = time.perf_counter() - t0

        t0 = time.perf_counter()
        lu.solve(np.ones(J.shape[0]))
        back = time.perf_counter() - t0

        fill = (lu.L.nnz + lu.U.nnz) * 16 / 1e9
        print(f"n={n}: dofs={system.ntot} nnz={J.nnz} "
              f"build={build:.1f}s asm={asm:.1f}s factor={fact:.1f}s "
              f"solve={back:.2f}s LUfill={fill:.2f}GB peakRSS={peak_rss_mb():.0f}MB",
              flush=True)


if __name__ == "__main__":
    main()

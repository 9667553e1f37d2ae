"""Thin wrapper around the sparse direct and iterative solvers.

Systems in this project are modest (up to roughly a million unknowns) and
nonsymmetric, so the default path is a sparse LU factorization.  A GMRES
path exists for experiments; its defaults are restart 200, up to 500
iterations, incomplete LU preconditioning with fill factor 10 and relative
tolerance 1e-10.  Iterative non-convergence is reported, not raised.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularMatrixError(RuntimeError):
    """Direct factorization hit an exactly or numerically singular matrix."""


@dataclass(frozen=True)
class SolverOptions:
    method: str = "direct_lu"  # or "gmres"
    tol: float = 1e-10
    restart: int = 200
    maxiter: int = 500
    ilu_fill_factor: float = 10.0
    permc_spec: str = "COLAMD"


@dataclass(frozen=True)
class SolveReport:
    converged: bool
    iterations: int
    residual: float
    method: str


def linear_solve(A: sp.spmatrix, b: np.ndarray,
                 options: SolverOptions = SolverOptions()):
    """Solve A x = b, returning (x, SolveReport)."""
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible system shapes {A.shape} and {b.shape}")
    if options.method == "direct_lu":
        return _solve_lu(A, b, options)
    if options.method == "gmres":
        return _solve_gmres(A, b, options)
    raise ValueError(f"unknown solver method {options.method!r}")


def factorize(A: sp.spmatrix, options: SolverOptions = SolverOptions()):
    """LU-factor A once; returns a solve closure for repeated right sides."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            lu = spla.splu(A.tocsc(), permc_spec=options.permc_spec)
    except (RuntimeError, spla.MatrixRankWarning) as exc:
        raise SingularMatrixError(str(exc)) from exc
    return lu.solve


def _solve_lu(A, b, options):
    solve = factorize(A, options)
    x = solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("factorization produced non-finite entries")
    bnorm = np.linalg.norm(b)
    res = np.linalg.norm(A @ x - b) / (bnorm if bnorm > 0 else 1.0)
    return x, SolveReport(True, 1, float(res), "direct_lu")


def _solve_gmres(A, b, options):
    A = A.tocsc()
    M = None
    try:
        ilu = spla.spilu(A, fill_factor=options.ilu_fill_factor)
        M = spla.LinearOperator(A.shape, ilu.solve)
    except RuntimeError:
        M = None  # fall through unpreconditioned
    iters = 0

    def count(_):
        nonlocal iters
        iters += 1

    x, info = spla.gmres(
        A, b, rtol=options.tol, restart=options.restart,
        maxiter=options.maxiter, M=M, callback=count,
        callback_type="pr_norm",
    )
    bnorm = np.linalg.norm(b)
    res = np.linalg.norm(A @ x - b) / (bnorm if bnorm > 0 else 1.0)
    return x, SolveReport(info == 0, iters, float(res), "gmres")

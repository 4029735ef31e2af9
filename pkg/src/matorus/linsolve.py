"""Bordered Krylov solver for elliptic operators with a one-dimensional
constant kernel.

Solves, for a scalar field eta and an auxiliary scalar beta,

    apply_op(eta) - beta = rhs,        <c, eta> = constraint_rhs,

where apply_op is a canonical Laplacian-type operator (kernel: constants)
and c is a positive weight vector with <c, 1> = 1. The beta column
absorbs the cokernel of the operator so the bordered system is square and
nonsingular. Preconditioned LGMRES; the preconditioner is the exact
inverse of the bordered system with coefficients frozen at the mean
inverse metric, applied spectrally.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse.linalg as spla

from .errors import LinearSolverStalled
from .grid import GridSpec, _fftn, _ifftn, hessian_symbol


def frozen_symbol(grid: GridSpec, inv_metric_mean: np.ndarray) -> np.ndarray:
    """Spectral symbol of the frozen-coefficient Laplacian (real, <= 0,
    vanishing only at the zero mode); matches ``complex_hessian``."""
    n = grid.complex_dim
    symbol = np.zeros(grid.shape)
    for i in range(n):
        for j in range(n):
            symbol = symbol + (hessian_symbol(grid, i, j) * inv_metric_mean[j, i]).real
    return symbol


def solve_constrained(
    apply_op,
    rhs: np.ndarray,
    weights: np.ndarray,
    constraint_rhs: float,
    grid: GridSpec,
    inv_metric_mean: np.ndarray,
    rtol: float = 1e-12,
    maxiter: int = 400,
) -> tuple:
    """Returns (eta, beta) for the bordered system described above."""
    shape = grid.shape
    npts = grid.npoints
    symbol = frozen_symbol(grid, inv_metric_mean)
    # The zero mode is handled explicitly through beta and the constraint row.
    safe = symbol.copy()
    safe[(0,) * len(shape)] = 1.0
    w = weights
    w_total = float(w.sum())

    def matvec(x):
        eta = x[:npts].reshape(shape)
        beta = x[npts]
        out_field = apply_op(eta) - beta
        out_c = float((w * eta).sum())
        return np.concatenate([out_field.ravel(), [out_c]])

    def precond(x):
        r = x[:npts].reshape(shape)
        s = x[npts]
        spec = _fftn(r)
        mean_r = spec[(0,) * len(shape)].real / npts
        spec = spec / safe
        spec[(0,) * len(shape)] = 0.0
        eta = _ifftn(spec).real
        alpha = (s - float((w * eta).sum())) / w_total
        return np.concatenate([(eta + alpha).ravel(), [-mean_r]])

    A = spla.LinearOperator((npts + 1, npts + 1), matvec=matvec, dtype=np.float64)
    M = spla.LinearOperator((npts + 1, npts + 1), matvec=precond, dtype=np.float64)
    b = np.concatenate([rhs.ravel(), [constraint_rhs]])
    x, info = spla.lgmres(A, b, M=M, rtol=rtol, atol=0.0, maxiter=maxiter)
    if info != 0:
        raise LinearSolverStalled(f"constrained linear solve did not converge (info={info})")
    return x[:npts].reshape(shape), float(x[npts])

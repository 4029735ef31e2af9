"""Tensor calculus of the canonical Hermitian (Chern) connection.

Conventions, with G the coefficient matrix g_{ij-bar} of the metric form:

    laplacian f   = g^{ij-bar} d_i d_jbar f      = trace(G^-1 Hess f)
    tr_g g'       = g^{ij-bar} g'_{ij-bar}       = trace(G^-1 G')
    torsion       T^k_ij = g^{kl-bar} (d_i g_{jl-bar} - d_j g_{il-bar})
    Ricci form    R_{kl-bar} = -(1/2pi) d_k d_lbar log det g

The conformal weight solve finds v > 0 with d dbar (v omega^{n-1}) = 0,
the distinguished representative in the conformal class; the kernel is
obtained by regularized inverse power iteration on the discretized
operator (shift 0), preconditioned by a frozen-coefficient spectral
symbol. For n=2 wedge pairings of (1,1)-forms reduce to the mixed
determinant ``pair_density``; ``wedge_integral`` shares the volume
normalization of ``grid.integrate`` (flat identity metric has volume 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import (
    GauduchonKernelError,
    GridMismatchError,
    LinearSolverStalled,
)
from .grid import (
    GridSpec,
    HermitianField,
    ScalarField,
    _fftn,
    _holo_symbols,
    _ifftn,
    complex_hessian,
    d_antiholo,
    d_holo,
    det,
    hessian_symbol,
    integrate,
    inverse,
)


def _levi_civita(n: int) -> np.ndarray:
    eps = np.zeros((n,) * n)
    if n == 2:
        eps[0, 1], eps[1, 0] = 1.0, -1.0
    else:
        from itertools import permutations

        def sign(p):
            s, p = 1, list(p)
            for i in range(len(p)):
                while p[i] != i:
                    j = p[i]
                    p[i], p[j] = p[j], p[i]
                    s = -s
            return s

        for p in permutations(range(n)):
            eps[p] = sign(p)
    return eps


def metric_derivatives(g: HermitianField) -> np.ndarray:
    """Holomorphic derivatives d_k g_{ij-bar}, shape grid + (k, i, j)."""
    grid = g.grid
    n = grid.complex_dim
    out = np.empty(grid.shape + (n, n, n), dtype=np.complex128)
    if grid.diff_scheme == "fourier_collocation":
        sig = _holo_symbols(grid)
        for i in range(n):
            for j in range(n):
                spec = _fftn(g.values[..., i, j])
                for k in range(n):
                    out[..., k, i, j] = _ifftn(sig[k] * spec)
        return out
    for i in range(n):
        for j in range(n):
            entry = ScalarField(grid, g.values[..., i, j])
            for k in range(n):
                out[..., k, i, j] = d_holo(entry, k).values
    return out


@dataclass(frozen=True)
class TorsionField:
    """Components T^k_ij per grid point, antisymmetric in (i, j)."""

    grid: GridSpec
    values: np.ndarray

    def trace(self) -> np.ndarray:
        """sum_j T^j_ji as a vector over i, shape grid + (n,)."""
        return np.einsum("...jji->...i", self.values)


def torsion(g: HermitianField) -> TorsionField:
    if not g.metric:
        g = g.as_metric()
    dg = metric_derivatives(g)
    antisym = dg - np.swapaxes(dg, -3, -2)
    ginv = inverse(g)
    t = np.einsum("...lk,...ijl->...kij", ginv, antisym)
    return TorsionField(g.grid, t)


@dataclass(frozen=True)
class MetricDefects:
    """Sup-norms of the structural defect tensors of a Hermitian metric.

    kaehler_defect bounds the coefficients of d(omega), balanced_defect
    those of the torsion trace, gauduchon_defect those of
    d dbar (omega^{n-1}). Kahler implies balanced implies Gauduchon.
    """

    kaehler_defect: float
    balanced_defect: float
    gauduchon_defect: float


def _weight_coefficient_fields(g: HermitianField) -> np.ndarray:
    """Fields C[p, m] with d dbar (v omega^{n-1}) ~ sum_pm d_p d_mbar (v C[p,m])."""
    n = g.grid.complex_dim
    eps = _levi_civita(n)
    if n == 2:
        return np.einsum("pk,ml,...kl->...pm", eps, eps, g.values)
    return np.einsum(
        "pac,mbd,...ab,...cd->...pm", eps, eps, g.values, g.values
    )


def _apply_weight_operator(vvals: np.ndarray, cfields: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Coefficient of d dbar (v omega^{n-1}) for grid values v (real output)."""
    n = grid.complex_dim
    if grid.diff_scheme == "fourier_collocation":
        acc = None
        for p in range(n):
            for m in range(n):
                spec = _fftn(vvals * cfields[..., p, m])
                term = hessian_symbol(grid, p, m) * spec
                acc = term if acc is None else acc + term
        return _ifftn(acc).real
    out = np.zeros(grid.shape)
    for p in range(n):
        for m in range(n):
            entry = ScalarField(grid, vvals * cfields[..., p, m])
            out += d_antiholo(d_holo(entry, p), m).values.real
    return out


def gauduchon_residual(g: HermitianField, v: ScalarField) -> float:
    """sup |d dbar (v omega^{n-1}) coefficient| / sup |v|."""
    c = _weight_coefficient_fields(g)
    r = _apply_weight_operator(v.values, c, g.grid)
    return float(np.max(np.abs(r)) / np.max(np.abs(v.values)))


def defects(g: HermitianField) -> MetricDefects:
    dg = metric_derivatives(g)
    kaehler = float(np.max(np.abs(dg - np.swapaxes(dg, -3, -2))))
    balanced = float(np.max(np.abs(torsion(g).trace())))
    ones = np.ones(g.grid.shape)
    gaud = float(np.max(np.abs(_apply_weight_operator(ones, _weight_coefficient_fields(g), g.grid))))
    return MetricDefects(kaehler, balanced, gaud)


def canonical_laplacian(g: HermitianField, f: ScalarField) -> ScalarField:
    """Laplace operator of the canonical connection, trace(G^-1 Hess f)."""
    if f.grid != g.grid:
        raise GridMismatchError("field and metric live on different grids")
    h = complex_hessian(f.values, f.grid)
    lap = np.einsum("...ij,...ji->...", inverse(g), h)
    return ScalarField(f.grid, lap.real if f.is_real else lap)


def trace_pair(g: HermitianField, gprime: HermitianField) -> tuple:
    """(tr_g g', tr_g' g) as real scalar fields."""
    a = np.einsum("...ij,...ji->...", inverse(g), gprime.values).real
    b = np.einsum("...ij,...ji->...", inverse(gprime), g.values).real
    return ScalarField(g.grid, a), ScalarField(g.grid, b)


def ricci_form(g: HermitianField) -> HermitianField:
    """First Chern form coefficients of the canonical connection."""
    logdet = np.log(det(g.as_metric()))
    h = complex_hessian(logdet, g.grid)
    return HermitianField(g.grid, -h / (2.0 * np.pi))


def gauduchon_weight(
    g: HermitianField,
    contract_tol: float = 1e-8,
    inner_rtol: float = 1e-13,
    inner_maxiter: int = 60,
) -> tuple:
    """Conformal weight (u, v) with d dbar (v omega^{n-1}) = 0, v > 0.

    v is normalized so the conformal metric has unit volume,
    ``integrate(v, g) == 1``, and u = log(v) / (n-1) so that e^u omega is
    the distinguished representative. Raises GauduchonKernelError when the
    computed kernel vector is not strictly positive (a sign the grid is
    too coarse: the continuum kernel contains a positive element).

    The discretized operator M(v) annihilates the flat grid mean exactly,
    so it has an exact one-dimensional kernel with a representative of
    nonzero mean. The kernel is found by one deflated solve in the
    mean-zero complement, v = 1 + xi with M(xi) = -M(1): the right-hand
    side lies in the range of M by construction and both the operator and
    the spectral preconditioner preserve the mean-zero subspace, on which
    M is nonsingular and well-conditioned after preconditioning.
    """
    g = g.as_metric()
    grid = g.grid
    if grid.diff_scheme != "fourier_collocation":
        raise GridMismatchError(
            "the conformal-weight solve requires the spectral scheme; "
            "finite differences are kept for differentiation cross-checks only"
        )
    n, shape = grid.complex_dim, grid.shape
    npts = grid.npoints
    cfields = _weight_coefficient_fields(g)

    def op(vvals):
        return _apply_weight_operator(vvals, cfields, grid)

    rhs = -op(np.ones(shape))
    if float(np.max(np.abs(rhs))) <= 1e-14:
        return _finish_weight(g, np.ones(shape))

    # Frozen-coefficient symbol for the preconditioner; real and <= 0,
    # vanishing only at the zero mode (passed through as zero).
    cmean = cfields.reshape(-1, n, n).mean(axis=0)
    symbol = np.zeros(shape)
    for p in range(n):
        for m in range(n):
            symbol = symbol + (hessian_symbol(grid, p, m) * cmean[p, m]).real
    zero = (0,) * len(shape)
    safe = symbol.copy()
    safe[zero] = 1.0

    def precond(x):
        spec = _fftn(x.reshape(shape)) / safe
        spec[zero] = 0.0
        return _ifftn(spec).real.ravel()

    A = spla.LinearOperator((npts, npts), matvec=lambda x: op(x.reshape(shape)).ravel(),
                            dtype=np.float64)
    M = spla.LinearOperator((npts, npts), matvec=precond, dtype=np.float64)
    xi, info = spla.lgmres(A, rhs.ravel(), M=M, rtol=inner_rtol, atol=0.0,
                           maxiter=inner_maxiter)
    if info != 0:
        raise LinearSolverStalled(
            f"conformal-weight kernel solve did not converge (info={info})"
        )
    v = 1.0 + xi.reshape(shape)
    resid = float(np.max(np.abs(op(v))) / np.max(np.abs(v)))
    if resid > contract_tol:
        raise LinearSolverStalled(
            f"conformal-weight solve stalled at relative residual {resid:.3e}"
        )
    return _finish_weight(g, v)


def _finish_weight(g: HermitianField, v: np.ndarray) -> tuple:
    n = g.grid.complex_dim
    vmin = float(v.min())
    if vmin <= 0.0:
        raise GauduchonKernelError(
            f"conformal-weight kernel vector has minimum {vmin:.3e} <= 0; "
            "refine the grid"
        )
    vfield = ScalarField(g.grid, v)
    v = v / integrate(vfield, g)
    vfield = ScalarField(g.grid, v)
    u = ScalarField(g.grid, np.log(v) / (n - 1))
    return u, vfield


def gauduchon_metric(g: HermitianField) -> tuple:
    """(omega_G, u, v): the distinguished conformal metric e^u g and its weight."""
    u, v = gauduchon_weight(g)
    g_g = g.scaled(ScalarField(g.grid, np.exp(u.values))).as_metric()
    return g_g, u, v


def pair_density(a: HermitianField, b: HermitianField) -> np.ndarray:
    """Mixed determinant of two (1,1)-form coefficient fields (n=2 only).

    pair_density(a, a) = 2 det a, and a wedge b = (pair_density / 2) of
    the volume normalization used by ``wedge_integral``.
    """
    if a.grid.complex_dim != 2:
        raise GridMismatchError("pair_density is defined for n=2 only")
    av, bv = a.values, b.values
    d = (
        av[..., 0, 0] * bv[..., 1, 1]
        + av[..., 1, 1] * bv[..., 0, 0]
        - av[..., 0, 1] * bv[..., 1, 0]
        - av[..., 1, 0] * bv[..., 0, 1]
    )
    return d.real


def wedge_integral(a: HermitianField, b: HermitianField) -> float:
    """Integral of a wedge b for real (1,1)-forms, n=2.

    Normalized consistently with ``integrate``: for a metric g,
    wedge_integral(g, g) == integrate(1, g).
    """
    if a.grid != b.grid:
        raise GridMismatchError("forms live on different grids")
    return float(np.mean(pair_density(a, b)) / 2.0)


def form_norm_sq(a: HermitianField, g: HermitianField) -> ScalarField:
    """Pointwise squared norm of a (1,1)-form in the metric g."""
    ginv = inverse(g)
    m = np.einsum("...ij,...jk->...ik", ginv, a.values)
    val = np.einsum("...ij,...ji->...", m, m).real
    return ScalarField(g.grid, val)

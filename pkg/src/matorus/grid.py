"""Periodic collocation grid on the complex torus C^n/(Z+iZ)^n.

A grid point carries 2n real coordinates (x^1, y^1, ..., x^n, y^n), each
sampled at {0, 1/N, ..., (N-1)/N} with period 1, so z^j = x^j + i y^j.
Array axis 2j holds x^{j+1} and axis 2j+1 holds y^{j+1}.

Holomorphic derivatives are Wirtinger operators

    d_j     = (d/dx^j - i d/dy^j) / 2,
    d_jbar  = (d/dx^j + i d/dy^j) / 2.

The default scheme is Fourier collocation, which differentiates
trigonometric polynomials of degree < N/2 exactly; central differences of
order k are kept for cross-validation. First-derivative Fourier
multipliers vanish at the Nyquist frequency (exact for the symmetric mode
interpretation, and keeps real fields real); same-axis second derivatives
keep the full Nyquist symbol, so the discrete Laplacian's kernel is
exactly the constants.

Integration fixes all volume-form constants (n!, powers of i/2) into a
single convention: ``integrate(f, g) = mean over grid points of
f * det(g)``, so that ``integrate(1, flat identity metric) == 1``.

Fields are immutable after construction; all pointwise kernels are pure.
The FFT backend (scipy.fft) keeps an internal plan cache that is safe for
concurrent read-only use; the worker count is taken from the MA_THREADS
environment variable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as _sfft

from .errors import GridMismatchError, NotPositiveError

HERMITIAN_RTOL = 1e-13

_CD_COEFFS = {
    2: [1.0 / 2.0],
    4: [2.0 / 3.0, -1.0 / 12.0],
    6: [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
    8: [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0],
}

_SCHEMES = ("fourier_collocation",) + tuple(f"central_difference_{k}" for k in _CD_COEFFS)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("MA_THREADS", "1")))
    except ValueError:
        return 1


def _fftn(a):
    return _sfft.fftn(a, workers=_workers())


def _ifftn(a):
    return _sfft.ifftn(a, workers=_workers())


@dataclass(frozen=True)
class GridSpec:
    """Collocation grid: n complex dimensions, N points per real axis."""

    complex_dim: int
    points_per_axis: int
    diff_scheme: str = "fourier_collocation"

    def __post_init__(self):
        if self.complex_dim not in (2, 3):
            raise GridMismatchError(f"complex_dim must be 2 or 3, got {self.complex_dim}")
        N = self.points_per_axis
        if N < 8 or N % 2 != 0:
            raise GridMismatchError(f"points_per_axis must be even and >= 8, got {N}")
        if self.diff_scheme not in _SCHEMES:
            raise GridMismatchError(
                f"unknown diff_scheme {self.diff_scheme!r}; one of {_SCHEMES}"
            )

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * (2 * self.complex_dim)

    @property
    def npoints(self) -> int:
        return self.points_per_axis ** (2 * self.complex_dim)

    def axis_coordinate(self, real_axis: int) -> np.ndarray:
        """1-d coordinate array for a real axis, broadcastable to the grid."""
        N = self.points_per_axis
        c = np.arange(N) / N
        shape = [1] * (2 * self.complex_dim)
        shape[real_axis] = N
        return c.reshape(shape)

    def coordinates(self) -> dict:
        """Broadcastable coordinate arrays keyed 'x1', 'y1', ..."""
        out = {}
        for j in range(self.complex_dim):
            out[f"x{j + 1}"] = self.axis_coordinate(2 * j)
            out[f"y{j + 1}"] = self.axis_coordinate(2 * j + 1)
        return out


@lru_cache(maxsize=32)
def _frequencies(N: int) -> np.ndarray:
    """Integer frequencies with the Nyquist mode zeroed (N even)."""
    m = np.fft.fftfreq(N, d=1.0 / N)
    m[N // 2] = 0.0
    return m


@lru_cache(maxsize=32)
def _holo_symbols(grid: GridSpec) -> tuple:
    """Fourier symbols sigma_j of d_j, broadcast over the spectral grid.

    On the mode exp(2 pi i (m.x + l.y)) the operator d_j acts as
    multiplication by pi * (l_j + i m_j); d_jbar acts by -conj(sigma_j).
    """
    n, N = grid.complex_dim, grid.points_per_axis
    m = _frequencies(N)
    sigmas = []
    for j in range(n):
        shape_x = [1] * (2 * n)
        shape_x[2 * j] = N
        shape_y = [1] * (2 * n)
        shape_y[2 * j + 1] = N
        mx = m.reshape(shape_x)
        ly = m.reshape(shape_y)
        sigmas.append(np.pi * (ly + 1j * mx))
    return tuple(sigmas)


@lru_cache(maxsize=32)
def _diag_second_symbols(grid: GridSpec) -> tuple:
    """Symbols of d_j d_jbar = (d^2/dx^2 + d^2/dy^2)/4 per complex axis.

    Unlike the first-derivative symbols, the Nyquist frequency is kept:
    the second derivative of the Nyquist cosine mode is nonzero at the
    nodes, and keeping it makes the discrete Laplacian's kernel exactly
    the constants (no spurious checkerboard null modes).
    """
    n, N = grid.complex_dim, grid.points_per_axis
    m = np.fft.fftfreq(N, d=1.0 / N)
    msq = m * m
    out = []
    for j in range(n):
        shape_x = [1] * (2 * n)
        shape_x[2 * j] = N
        shape_y = [1] * (2 * n)
        shape_y[2 * j + 1] = N
        out.append(
            -np.pi**2 * (msq.reshape(shape_x) + msq.reshape(shape_y))
        )
    return tuple(out)


def hessian_symbol(grid: GridSpec, i: int, j: int) -> np.ndarray:
    """Spectral multiplier of the Hessian entry d_i d_jbar."""
    if i == j:
        return _diag_second_symbols(grid)[i]
    sig = _holo_symbols(grid)
    return -sig[i] * np.conj(sig[j])


def _real_axis_derivative(values: np.ndarray, grid: GridSpec, real_axis: int):
    """d/d(coordinate) along one real axis, scheme taken from the grid."""
    N = grid.points_per_axis
    if grid.diff_scheme == "fourier_collocation":
        spec = _sfft.fft(values, axis=real_axis, workers=_workers())
        m = _frequencies(N)
        shape = [1] * values.ndim
        shape[real_axis] = N
        out = _sfft.ifft(spec * (2j * np.pi * m.reshape(shape)), axis=real_axis, workers=_workers())
        return out if np.iscomplexobj(values) else out.real
    k = int(grid.diff_scheme.rsplit("_", 1)[1])
    acc = np.zeros_like(values, dtype=np.result_type(values, float))
    for offset, c in enumerate(_CD_COEFFS[k], start=1):
        acc += c * N * (
            np.roll(values, -offset, axis=real_axis) - np.roll(values, offset, axis=real_axis)
        )
    return acc


@dataclass(frozen=True)
class ScalarField:
    """Real or complex function sampled on the grid."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise GridMismatchError(
                f"values shape {v.shape} does not match grid shape {self.grid.shape}"
            )
        if v.dtype not in (np.float64, np.complex128):
            v = v.astype(np.complex128 if np.iscomplexobj(v) else np.float64)
        v = np.ascontiguousarray(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def sup(self) -> float:
        return float(np.max(self.values.real))

    def inf(self) -> float:
        return float(np.min(self.values.real))


def constant_field(grid: GridSpec, value: float = 0.0) -> ScalarField:
    return ScalarField(grid, np.full(grid.shape, value, dtype=np.float64))


def from_function(grid: GridSpec, fn) -> ScalarField:
    """Sample fn(coords) on the grid; fn gets the coordinates() dict."""
    vals = np.broadcast_to(fn(grid.coordinates()), grid.shape).copy()
    return ScalarField(grid, vals)


@dataclass(frozen=True)
class HermitianField:
    """Field of n x n Hermitian matrices (metrics and real (1,1)-forms).

    Entry [i, j] holds the coefficient on dz^{i+1} wedge dzbar^{j+1}; a
    metric g corresponds to the form omega = i * sum g_ij dz^i dzbar^j.
    Matrices are symmetrized on construction after checking Hermiticity to
    1e-13 relative; ``metric=True`` additionally validates positivity.
    """

    grid: GridSpec
    values: np.ndarray = field(repr=False)
    metric: bool = False

    def __post_init__(self):
        n = self.grid.complex_dim
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != self.grid.shape + (n, n):
            raise GridMismatchError(
                f"values shape {v.shape} does not match {self.grid.shape + (n, n)}"
            )
        vh = np.conj(np.swapaxes(v, -1, -2))
        scale = max(float(np.max(np.abs(v))), 1.0)
        dev = float(np.max(np.abs(v - vh)))
        if dev > HERMITIAN_RTOL * scale:
            raise GridMismatchError(
                f"matrices deviate from Hermitian by {dev:.3e} (relative tolerance {HERMITIAN_RTOL})"
            )
        v = np.ascontiguousarray(0.5 * (v + vh))
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.metric:
            emin, point = min_eigenvalue(self)
            if emin <= 0.0:
                raise NotPositiveError(
                    f"metric has non-positive eigenvalue {emin:.6e} at grid point {point}",
                    worst_point=point,
                    worst_eigenvalue=emin,
                )

    def as_metric(self) -> "HermitianField":
        return self if self.metric else HermitianField(self.grid, self.values, metric=True)

    def __add__(self, other):
        if isinstance(other, HermitianField):
            return HermitianField(self.grid, self.values + other.values)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, HermitianField):
            return HermitianField(self.grid, self.values - other.values)
        return NotImplemented

    def scaled(self, factor) -> "HermitianField":
        """Scale by a real constant or real ScalarField."""
        f = factor.values if isinstance(factor, ScalarField) else factor
        f = np.asarray(f)[..., None, None]
        return HermitianField(self.grid, self.values * f)


def identity_metric(grid: GridSpec) -> HermitianField:
    n = grid.complex_dim
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), grid.shape + (n, n)).copy()
    return HermitianField(grid, v, metric=True)


def _det2(m):
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def _det3(m):
    return (
        m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
        - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
        + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0])
    )


def det(h: HermitianField) -> np.ndarray:
    """Pointwise determinant (real for Hermitian matrices)."""
    m = h.values
    d = _det2(m) if h.grid.complex_dim == 2 else _det3(m)
    return d.real


def inverse(h: HermitianField) -> np.ndarray:
    """Pointwise closed-form inverse (n <= 3), returned as a raw array."""
    m = h.values
    if h.grid.complex_dim == 2:
        d = _det2(m)
        inv = np.empty_like(m)
        inv[..., 0, 0] = m[..., 1, 1]
        inv[..., 1, 1] = m[..., 0, 0]
        inv[..., 0, 1] = -m[..., 0, 1]
        inv[..., 1, 0] = -m[..., 1, 0]
        return inv / d[..., None, None]
    d = _det3(m)
    inv = np.empty_like(m)
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != j]
            c = [k for k in range(3) if k != i]
            minor = (
                m[..., r[0], c[0]] * m[..., r[1], c[1]]
                - m[..., r[0], c[1]] * m[..., r[1], c[0]]
            )
            inv[..., i, j] = (-1) ** (i + j) * minor
    return inv / d[..., None, None]


def min_eigenvalue(h: HermitianField) -> tuple:
    """Smallest eigenvalue over the grid and the point where it occurs."""
    m = h.values
    if h.grid.complex_dim == 2:
        tr = (m[..., 0, 0] + m[..., 1, 1]).real
        disc = (m[..., 0, 0] - m[..., 1, 1]).real ** 2 + 4.0 * np.abs(m[..., 0, 1]) ** 2
        emin = 0.5 * (tr - np.sqrt(np.maximum(disc, 0.0)))
    else:
        emin = np.linalg.eigvalsh(m)[..., 0]
    flat = int(np.argmin(emin))
    point = np.unravel_index(flat, h.grid.shape)
    return float(emin.reshape(-1)[flat]), point


def d_holo(f: ScalarField, axis: int) -> ScalarField:
    """Holomorphic Wirtinger derivative d_axis f (axis in 0..n-1)."""
    n = f.grid.complex_dim
    if not 0 <= axis < n:
        raise GridMismatchError(f"holomorphic axis {axis} out of range for n={n}")
    dx = _real_axis_derivative(f.values, f.grid, 2 * axis)
    dy = _real_axis_derivative(f.values, f.grid, 2 * axis + 1)
    return ScalarField(f.grid, 0.5 * (dx - 1j * dy))


def d_antiholo(f: ScalarField, axis: int) -> ScalarField:
    """Anti-holomorphic Wirtinger derivative d_axisbar f."""
    n = f.grid.complex_dim
    if not 0 <= axis < n:
        raise GridMismatchError(f"holomorphic axis {axis} out of range for n={n}")
    dx = _real_axis_derivative(f.values, f.grid, 2 * axis)
    dy = _real_axis_derivative(f.values, f.grid, 2 * axis + 1)
    return ScalarField(f.grid, 0.5 * (dx + 1j * dy))


def d_real(f: ScalarField, real_axis: int) -> ScalarField:
    """Derivative along a single real axis (0..2n-1)."""
    return ScalarField(f.grid, _real_axis_derivative(f.values, f.grid, real_axis))


def complex_hessian(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """All entries d_i d_jbar f as an array of shape grid.shape + (n, n).

    Fast path for Fourier collocation: one forward transform, one inverse
    per independent entry. For real input the result is exactly Hermitian
    (the lower triangle is filled by conjugation).
    """
    n = grid.complex_dim
    out = np.empty(grid.shape + (n, n), dtype=np.complex128)
    real_input = not np.iscomplexobj(values)
    if grid.diff_scheme == "fourier_collocation":
        spec = _fftn(values)
        for i in range(n):
            for j in range(i, n):
                ent = _ifftn(spec * hessian_symbol(grid, i, j))
                out[..., i, j] = ent
                if j > i:
                    out[..., j, i] = (
                        np.conj(ent) if real_input
                        else _ifftn(spec * hessian_symbol(grid, j, i))
                    )
        if real_input:
            for i in range(n):
                out[..., i, i] = out[..., i, i].real
        return out
    f = ScalarField(grid, np.asarray(values))
    for i in range(n):
        dif = d_holo(f, i)
        for j in range(n):
            out[..., i, j] = d_antiholo(dif, j).values
    if real_input:
        out = 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))
    return out


def ddbar(f: ScalarField) -> HermitianField:
    """Complex Hessian of a real field as a Hermitian coefficient field.

    Entry (i, j) is d_i d_jbar f, the coefficient matrix of the real
    (1,1)-form i d dbar f.
    """
    if not f.is_real:
        raise GridMismatchError("ddbar expects a real field")
    return HermitianField(f.grid, complex_hessian(f.values, f.grid))


def integrate(f: ScalarField, g: HermitianField) -> float:
    """Normalized integral of f against the volume form of the metric g.

    Equals ``mean over grid points of f * det(g)``; the form-factor
    constants are absorbed so the flat identity metric has total volume 1.
    """
    if not g.metric:
        raise NotPositiveError("integrate requires a metric field (construct with metric=True)")
    if not f.is_real:
        raise GridMismatchError("integrate expects a real field")
    if f.grid != g.grid:
        raise GridMismatchError("field and metric live on different grids")
    return float(np.mean(f.values * det(g)))


def measure_weights(g: HermitianField) -> np.ndarray:
    """Probability weights of the measure d(mu) = omega^n / int omega^n."""
    if not g.metric:
        raise NotPositiveError("measure_weights requires a metric field")
    d = det(g)
    return d / d.sum()

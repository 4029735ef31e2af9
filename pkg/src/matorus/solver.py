"""Complex Monge-Ampere operator, Newton iteration, and the continuity
method on the torus.

The equation solved for a pair (phi, b), b a scalar coupled to phi, is

    log det(g + Hess phi) - log det g = F + b,
    g + Hess phi > 0 at every grid point,

with Hess the complex Hessian. Newton's method linearizes the left side
to the canonical Laplacian of the current solution metric; each step
solves the bordered system [laplacian, -1; constraint-row, 0] where the
constraint pins the conformal-weight-weighted mean of phi to zero. On
output phi is re-normalized to sup phi = 0 (the equation is invariant
under constant shifts of phi, so b is unchanged by the shift).

The continuity driver marches t from 0 to 1 on the right-hand sides t*F,
warm-starting each Newton solve from the previous step and halving the
step on failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    ContinuationStalled,
    LinearSolverStalled,
    MaxItersExceeded,
    NotPositiveError,
    PositivityLost,
)
from .geometry import gauduchon_weight
from .grid import (
    HermitianField,
    ScalarField,
    complex_hessian,
    det,
    inverse,
)
from .linsolve import solve_constrained

_MIN_LINE_SEARCH_STEP = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-10
    max_newton_iters: int = 30
    t_step_initial: float = 0.1
    t_step_min: float = 1e-3
    damping: float = 0.5
    linear_tol: float = 1e-12
    linear_maxiter: int = 30

    def __post_init__(self):
        for name in ("newton_tol", "t_step_initial", "t_step_min", "damping", "linear_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"solver config field {name} must be > 0")
        if not (self.t_step_min <= self.t_step_initial <= 1.0):
            raise ConfigError("need t_step_min <= t_step_initial <= 1")
        if self.damping >= 1.0:
            raise ConfigError("damping factor must be < 1")


@dataclass(frozen=True)
class SolveResult:
    """Converged solution: phi with sup phi = 0, the constant b, and the
    continuation/Newton diagnostics."""

    phi: ScalarField
    b: float
    t_trace: list = field(default_factory=list)
    min_eigen_gprime: float = 0.0
    residual_history: list = field(default_factory=list)

    def __post_init__(self):
        if abs(self.phi.sup()) > 1e-13:
            raise ConfigError(f"phi is not sup-normalized: sup = {self.phi.sup():.3e}")
        if self.min_eigen_gprime <= 0.0:
            raise NotPositiveError(
                f"solution metric not positive: min eigenvalue {self.min_eigen_gprime:.3e}"
            )

    @property
    def newton_iters(self) -> int:
        return max(len(self.residual_history) - 1, 0)


def _eigmin_grid(mats: np.ndarray, n: int) -> np.ndarray:
    if n == 2:
        tr = (mats[..., 0, 0] + mats[..., 1, 1]).real
        disc = (mats[..., 0, 0] - mats[..., 1, 1]).real ** 2 + 4.0 * np.abs(mats[..., 0, 1]) ** 2
        return 0.5 * (tr - np.sqrt(np.maximum(disc, 0.0)))
    return np.linalg.eigvalsh(mats)[..., 0]


def _log_det(mats: np.ndarray, grid) -> np.ndarray:
    h = HermitianField(grid, mats)
    return np.log(det(h))


def ma_log_residual(g: HermitianField, phi: ScalarField, F: ScalarField, b: float) -> ScalarField:
    """log det(g + Hess phi) - log det g - F - b, pointwise."""
    grid = g.grid
    gp = g.values + complex_hessian(phi.values, grid)
    emin = _eigmin_grid(gp, grid.complex_dim)
    worst = int(np.argmin(emin))
    worst_val = float(emin.reshape(-1)[worst])
    if worst_val <= 0.0:
        point = np.unravel_index(worst, grid.shape)
        raise NotPositiveError(
            f"g + Hess(phi) has eigenvalue {worst_val:.6e} <= 0 at grid point {point}",
            worst_point=point,
            worst_eigenvalue=worst_val,
        )
    vals = _log_det(gp, grid) - _log_det(g.values, grid) - F.values - b
    return ScalarField(grid, vals)


def linearized_apply(gprime: HermitianField, eta: ScalarField) -> ScalarField:
    """Derivative of phi -> log det(g + Hess phi): the canonical Laplacian
    of the solution metric applied to eta."""
    h = complex_hessian(eta.values, eta.grid)
    lap = np.einsum("...ij,...ji->...", inverse(gprime), h)
    return ScalarField(eta.grid, lap.real if eta.is_real else lap)


def _constraint_weights(g: HermitianField, vweight: ScalarField) -> np.ndarray:
    w = vweight.values * det(g)
    return w / w.sum()


def newton_solve(
    g: HermitianField,
    F_target: ScalarField,
    config: SolverConfig | None = None,
    initial: tuple | None = None,
    constraint_weights: np.ndarray | None = None,
    t_label: float = 1.0,
) -> SolveResult:
    """Newton iteration for (phi, b) at a fixed right-hand side.

    The linear constraint pins the weighted mean of phi; the returned phi
    is shifted to sup phi = 0, which leaves the equation and b unchanged.
    """
    config = config or SolverConfig()
    grid = g.grid
    if grid.diff_scheme != "fourier_collocation":
        raise ConfigError(
            "solving requires the spectral scheme; finite differences are "
            "kept for differentiation cross-checks only"
        )
    n = grid.complex_dim
    g = g.as_metric()
    if constraint_weights is None:
        _, v = gauduchon_weight(g)
        constraint_weights = _constraint_weights(g, v)
    w = constraint_weights

    if initial is None:
        phi = np.zeros(grid.shape)
        b = 0.0
    else:
        phi0, b = initial
        phi = np.array(phi0.values if isinstance(phi0, ScalarField) else phi0, dtype=np.float64)

    logdet_g = _log_det(g.values, grid)
    gp = g.values + complex_hessian(phi, grid)
    emin = _eigmin_grid(gp, n)
    emin_cur = float(emin.min())
    if emin_cur <= 0.0:
        raise NotPositiveError(
            f"initial iterate is not positive-admissible: min eigenvalue {emin_cur:.3e}"
        )

    history = []
    for _ in range(config.max_newton_iters):
        residual = _log_det(gp, grid) - logdet_g - F_target.values - float(b)
        res_norm = float(np.max(np.abs(residual)))
        history.append(res_norm)
        if res_norm <= config.newton_tol:
            shift = float(phi.max())
            phi_out = ScalarField(grid, phi - shift)
            return SolveResult(
                phi=phi_out,
                b=float(b),
                t_trace=[(t_label, len(history) - 1, res_norm)],
                min_eigen_gprime=emin_cur,
                residual_history=history,
            )

        ginv_p = inverse(HermitianField(grid, gp))
        inv_mean = ginv_p.reshape(-1, n, n).mean(axis=0)

        def apply_op(eta, _ginv=ginv_p):
            h = complex_hessian(eta, grid)
            return np.einsum("...ij,...ji->...", _ginv, h).real

        eta, db = solve_constrained(
            apply_op,
            rhs=-residual,
            weights=w,
            constraint_rhs=-float((w * phi).sum()),
            grid=grid,
            inv_metric_mean=inv_mean,
            rtol=config.linear_tol,
            maxiter=config.linear_maxiter,
        )

        h_eta = complex_hessian(eta, grid)
        alpha = 1.0
        while True:
            emin_trial = float(_eigmin_grid(gp + alpha * h_eta, n).min())
            if emin_trial > 0.1 * emin_cur:
                break
            alpha *= config.damping
            if alpha < _MIN_LINE_SEARCH_STEP:
                raise PositivityLost(
                    "line search cannot keep the solution metric positive "
                    f"(min eigenvalue {emin_trial:.3e} at step {alpha:.1e})"
                )
        phi = phi + alpha * eta
        b = float(b) + alpha * db
        gp = gp + alpha * h_eta
        emin_cur = emin_trial

    raise MaxItersExceeded(
        f"Newton did not reach tolerance {config.newton_tol:.1e} in "
        f"{config.max_newton_iters} iterations (last residual {history[-1]:.3e})"
    )


def continuity_solve(
    g: HermitianField,
    F: ScalarField,
    config: SolverConfig | None = None,
    initial: tuple | None = None,
) -> SolveResult:
    """March the family log det(g + Hess phi_t) - log det g = t F + b_t
    from t = 0 to t = 1 with adaptive steps and warm starts."""
    config = config or SolverConfig()
    grid = g.grid
    g = g.as_metric()
    _, v = gauduchon_weight(g)
    w = _constraint_weights(g, v)

    if initial is None:
        phi, b = np.zeros(grid.shape), 0.0
    else:
        phi0, b = initial
        phi = np.array(phi0.values if isinstance(phi0, ScalarField) else phi0, dtype=np.float64)
        emin0 = float(_eigmin_grid(g.values + complex_hessian(phi, grid), grid.complex_dim).min())
        if emin0 <= 0.0:
            raise NotPositiveError(
                f"initial iterate is not positive-admissible: min eigenvalue {emin0:.3e}"
            )

    trace = []
    last = None
    t, step = 0.0, config.t_step_initial
    while t < 1.0:
        t_next = 1.0 if t + step >= 1.0 - 1e-12 else t + step
        target = ScalarField(grid, t_next * F.values)
        try:
            last = newton_solve(
                g, target, config,
                initial=(phi, b),
                constraint_weights=w,
                t_label=t_next,
            )
        except (MaxItersExceeded, PositivityLost, LinearSolverStalled, NotPositiveError) as exc:
            step *= 0.5
            if step < config.t_step_min:
                raise ContinuationStalled(
                    f"continuation step fell below {config.t_step_min:.1e} at t={t_next:.4f}: {exc}"
                ) from exc
            continue
        phi, b = last.phi.values, last.b
        trace.extend(last.t_trace)
        t = t_next
        step = min(config.t_step_initial, 2.0 * step)

    return SolveResult(
        phi=last.phi,
        b=last.b,
        t_trace=trace,
        min_eigen_gprime=last.min_eigen_gprime,
        residual_history=last.residual_history,
    )

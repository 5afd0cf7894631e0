"""Axisymmetric relaxation for the comparison equation of the w-function.

The unknown is u = w - w^(m) on a (t, rho = |z|) grid.  It solves

    -(u_tt + u_rr + u_r / rho) + (e^{4u} - 1) P_m + 4 s = 0,
    P_m(t, rho) = |phi^(m)|^2 = sinh_ratio(m, Theta)^2 / (2 t^2),

with s >= 0 a source standing in for |beta|^2 + |bhat|^2.  Rows t = t_min,
t = t_max and the column rho = rho_max carry Dirichlet data u = 0; the column
rho = 0 is the symmetry axis (even reflection).  Each sweep visits every free
node once and takes a damped pointwise Newton step.  Because the nonlinearity
is increasing in u, the discrete operator obeys a maximum principle: with
s = 0 the only solution is u = 0, and s >= 0 forces u <= 0.
"""

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import BadParam, NoConvergence, ShapeMismatch
from .models import sinh_ratio, theta_x

SCHEMES = ("gauss_seidel_newton", "jacobi_newton")


@dataclass(frozen=True)
class AxiGrid:
    """Uniform nodes t_i in [t_min, t_max] and rho_j in [0, rho_max]."""

    t_min: float = 0.2
    t_max: float = 5.0
    rho_max: float = 10.0
    n_t: int = 129
    n_rho: int = 129

    def __post_init__(self):
        if not 0 < self.t_min < self.t_max:
            raise BadParam("need 0 < t_min < t_max")
        if not self.rho_max > 0:
            raise BadParam("rho_max must be positive")
        if self.n_t < 3 or self.n_rho < 3:
            raise BadParam("need at least 3 nodes per axis")

    @property
    def h_t(self):
        return (self.t_max - self.t_min) / (self.n_t - 1)

    @property
    def h_rho(self):
        return self.rho_max / (self.n_rho - 1)

    @property
    def t(self):
        return np.linspace(self.t_min, self.t_max, self.n_t)

    @property
    def rho(self):
        return np.linspace(0.0, self.rho_max, self.n_rho)

    @property
    def shape(self):
        return (self.n_t, self.n_rho)

    def mesh(self):
        return np.meshgrid(self.t, self.rho, indexing="ij")

    def free_mask(self):
        """Nodes updated by the solver (everything except the Dirichlet ring)."""
        m = np.zeros(self.shape, dtype=bool)
        m[1:-1, :-1] = True
        return m


@dataclass(frozen=True)
class ScalarGrid2D:
    grid: AxiGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ShapeMismatch(f"values {self.values.shape} vs grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    def sup(self):
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-11
    max_sweeps: int = 200_000
    damping: float = 0.8
    scheme: str = "gauss_seidel_newton"
    log_every: int = 0
    use_numba: object = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise BadParam("tolerance must be positive")
        if self.max_sweeps < 1:
            raise BadParam("max_sweeps must be at least 1")
        if not 0 < self.damping <= 1:
            raise BadParam("damping must lie in (0, 1]")
        if self.scheme not in SCHEMES:
            raise BadParam(f"scheme must be one of {SCHEMES}")


@dataclass(frozen=True)
class SolveResult:
    u: ScalarGrid2D
    sweeps: int
    update_norm: float
    log: list = field(default_factory=list, repr=False)


def phi_model_sq(m, t, rho):
    """|phi^(m)|^2 = sinh_ratio(m, Theta)^2 / (2 t^2) at (t, |z| = rho)."""
    t = np.asarray(t, dtype=float)
    theta, _ = theta_x(t, rho)
    return sinh_ratio(m, theta) ** 2 / (2.0 * t * t)


def model_weight(m, grid):
    tt, rr = grid.mesh()
    return phi_model_sq(m, tt, rr)


def _values(arr, grid, name):
    if isinstance(arr, ScalarGrid2D):
        if arr.grid != grid:
            raise ShapeMismatch(f"{name} lives on a different grid")
        return arr.values
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.shape, float(arr))
    if arr.shape != grid.shape:
        raise ShapeMismatch(f"{name} has shape {arr.shape}, expected {grid.shape}")
    return arr


def u_residual(u, m, s=0.0):
    """Discrete residual of the comparison equation (zero on Dirichlet nodes)."""
    grid = u.grid
    P = model_weight(m, grid)
    sv = _values(s, grid, "source")
    r = _kernels.residual(np.ascontiguousarray(u.values, dtype=float), P,
                          np.ascontiguousarray(sv), grid.h_t, grid.h_rho)
    return ScalarGrid2D(grid, r)


def newton_residual(u, m, s=0.0):
    """Residual divided by its pointwise slope: the size of the next Newton step.

    The raw residual carries the 1/h^2 diagonal, so a field whose updates
    have dropped below tolerance still shows a raw residual of order
    tolerance * 4/h^2.  This scaled form is the one comparable to the
    solver tolerance.
    """
    grid = u.grid
    P = model_weight(m, grid)
    sv = _values(s, grid, "source")
    f, df = _kernels._residual_and_slope_np(np.asarray(u.values, dtype=float), P,
                                            np.broadcast_to(sv, grid.shape), grid.h_t, grid.h_rho)
    return ScalarGrid2D(grid, np.divide(f, df, out=np.zeros_like(f), where=df != 0))


def solve_u(m, s, grid, u0=None, cfg=None):
    """Relax to the solution with zero Dirichlet data.

    Parameters
    ----------
    m : int
        Degree of the model weight.
    s : float, array or ScalarGrid2D
        Non-negative source.
    grid : AxiGrid
    u0 : array or ScalarGrid2D, optional
        Initial guess; its Dirichlet ring is overwritten with zeros.
    cfg : SolverConfig

    Returns
    -------
    SolveResult

    Raises
    ------
    NoConvergence
        When the update max-norm is still above tolerance after max_sweeps.
    """
    cfg = cfg or SolverConfig()
    P = model_weight(m, grid)
    sv = np.ascontiguousarray(_values(s, grid, "source"))
    u = np.zeros(grid.shape) if u0 is None else _values(u0, grid, "initial guess").copy()
    u = np.ascontiguousarray(u, dtype=float)
    u[0, :] = 0.0
    u[-1, :] = 0.0
    u[:, -1] = 0.0
    sweep = _kernels.gs_sweep if cfg.scheme == "gauss_seidel_newton" else _kernels.jacobi_sweep
    ht, hr = grid.h_t, grid.h_rho
    log = []
    upd = np.inf
    for k in range(1, cfg.max_sweeps + 1):
        upd = sweep(u, P, sv, ht, hr, cfg.damping, use_numba=cfg.use_numba)
        if not np.isfinite(upd):
            raise NoConvergence(k, u, upd)
        if cfg.log_every and (k % cfg.log_every == 0 or upd < cfg.tolerance or k == 1):
            res = _kernels.residual(u, P, sv, ht, hr, use_numba=cfg.use_numba)
            log.append((k, float(upd), float(np.max(np.abs(res)))))
        if upd < cfg.tolerance:
            return SolveResult(ScalarGrid2D(grid, u), k, float(upd), log)
    raise NoConvergence(cfg.max_sweeps, ScalarGrid2D(grid, u), float(upd))


def random_initial(grid, seed, amplitude=0.5):
    """Uniform noise in [-amplitude, amplitude] on free nodes, zero on the ring."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(-amplitude, amplitude, grid.shape)
    return np.where(grid.free_mask(), u, 0.0)


def uniqueness_experiment(m, grid, seed=0, cfg=None, amplitude=0.5, init=None):
    """sup |u| after relaxing a random (or given) initial field with no source."""
    u0 = random_initial(grid, seed, amplitude) if init is None else init
    return solve_u(m, 0.0, grid, u0, cfg).u.sup()


def centered_bump(grid, amplitude=1.0, width=1.0):
    """a exp(-((t - t_c)^2 + rho^2)/width^2), centred on the axis at mid-box time."""
    tt, rr = grid.mesh()
    tc = 0.5 * (grid.t_min + grid.t_max)
    return amplitude * np.exp(-((tt - tc) ** 2 + rr ** 2) / width ** 2)


def source_response(m, grid, amplitude, cfg=None, width=1.0):
    """Converged u for the source amplitude * centered_bump."""
    if amplitude < 0:
        raise BadParam("source amplitude must be non-negative")
    return solve_u(m, centered_bump(grid, amplitude, width), grid, None, cfg).u


def comparison_experiment(m, grid, amplitude, cfg=None, width=1.0):
    """(max u, min u) of the converged field driven by a non-negative bump source."""
    u = source_response(m, grid, amplitude, cfg, width).values
    return float(np.max(u)), float(np.min(u))


def extended_grid(grid, factor=2):
    """Same t nodes and rho spacing, with rho_max multiplied by ``factor``."""
    return replace(grid, rho_max=grid.rho_max * factor, n_rho=factor * (grid.n_rho - 1) + 1)


def write_solution_csv(path, u):
    tt, rr = u.grid.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "rho", "u"])
        for row in zip(tt.ravel(), rr.ravel(), u.values.ravel()):
            w.writerow([f"{v:.17g}" for v in row])


def write_convergence_log(path, log):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sweep", "update_maxnorm", "residual_maxnorm"])
        for k, upd, res in log:
            w.writerow([k, f"{upd:.17g}", f"{res:.17g}"])

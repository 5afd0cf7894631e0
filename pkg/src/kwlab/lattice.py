"""Gauge pairs sampled on (t, x1, x2) boxes and their finite-difference calculus.

Arrays are laid out as (n_t, n_x, n_x, 3) with t along the slow axis.  All
derivatives are second order: central in the interior and one-sided
(second-order) on the box faces, as provided by ``numpy.gradient`` with
``edge_order=2``.  A gauge transformation by g = exp(xi) acts by push-forward,

    a -> Ad(g) a,      A -> Ad(g) A - (dg) g^-1,

so that the covariant derivative d + [A, .] transforms covariantly.
"""

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels, su2
from .errors import GridTooSmall, PhiZeroEverywhere, ZeroOnCircle
from .models import Family

DIRS = ("t", "1", "2")
_AXIS = {"t": 0, "1": 1, "2": 2}


@dataclass(frozen=True)
class GridSpec:
    """Uniform box [t_min, t_max] x [-x_half, x_half]^2, optionally shifted in the plane."""

    t_min: float
    t_max: float
    x_half: float
    n_t: int
    n_x: int
    x_shift: float = 0.0

    def __post_init__(self):
        if not self.t_min > 0:
            raise ValueError("t_min must be positive")
        if not self.t_max > self.t_min:
            raise ValueError("t_max must exceed t_min")
        if not self.x_half > 0:
            raise ValueError("x_half must be positive")
        if self.n_t < 8 or self.n_x < 8:
            raise GridTooSmall("need at least 8 nodes per axis")

    @property
    def h_t(self):
        return (self.t_max - self.t_min) / (self.n_t - 1)

    @property
    def h_x(self):
        return 2.0 * self.x_half / (self.n_x - 1)

    @property
    def t(self):
        return np.linspace(self.t_min, self.t_max, self.n_t)

    @property
    def x(self):
        return np.linspace(-self.x_half, self.x_half, self.n_x) + self.x_shift

    @property
    def shape(self):
        return (self.n_t, self.n_x, self.n_x)

    @property
    def cell_volume(self):
        return self.h_t * self.h_x * self.h_x

    def mesh(self):
        return np.meshgrid(self.t, self.x, self.x, indexing="ij")

    def refined(self):
        """Same box with every spacing halved."""
        return replace(self, n_t=2 * self.n_t - 1, n_x=2 * self.n_x - 1)

    def nested(self, levels=3):
        grids = [self]
        for _ in range(levels - 1):
            grids.append(grids[-1].refined())
        return grids

    def describe(self):
        return (f"t=[{self.t_min:g},{self.t_max:g}] x_half={self.x_half:g} "
                f"n_t={self.n_t} n_x={self.n_x} x_shift={self.x_shift:g}")


@dataclass(frozen=True)
class GaugeConfig:
    """Connection (A_t, A_1, A_2) and Higgs field (a_1, a_2, a_3) on a grid."""

    grid: GridSpec
    A_t: np.ndarray
    A_1: np.ndarray
    A_2: np.ndarray
    a_1: np.ndarray
    a_2: np.ndarray
    a_3: np.ndarray
    label: str = ""

    def __post_init__(self):
        shape = self.grid.shape + (3,)
        for name in ("A_t", "A_1", "A_2", "a_1", "a_2", "a_3"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")

    @property
    def phi(self):
        return self.a_1 - 1j * self.a_2

    def connection(self, direction):
        return {"t": self.A_t, "1": self.A_1, "2": self.A_2}[direction]

    def higgs(self):
        return (self.a_1, self.a_2, self.a_3)


def sample_family(family, grid, label=None):
    """Evaluate a closed-form family node-wise on ``grid``."""
    if not isinstance(family, Family):
        family = Family(**family)
    tt, xx1, xx2 = grid.mesh()
    f = family.sample(tt, xx1, xx2)

    def full(a):
        return np.ascontiguousarray(np.broadcast_to(a, grid.shape + (3,)), dtype=float)

    return GaugeConfig(grid, full(f.A_t), full(f.A_1), full(f.A_2),
                       full(f.a_1), full(f.a_2), full(f.a_3),
                       label=label or family.label)


def derivative(field, grid, direction):
    """Second-order partial derivative of a node array along t, x1 or x2."""
    axis = _AXIS[direction]
    n = field.shape[axis]
    if n < 3:
        raise GridTooSmall(f"need >= 3 nodes along {direction}, have {n}")
    h = grid.h_t if direction == "t" else grid.h_x
    return _kernels.diff(field, h, axis)


def covariant_derivative(cfg, field, direction):
    """d_dir field + [A_dir, field]."""
    return derivative(field, cfg.grid, direction) + su2.bracket(cfg.connection(direction), field)


def curvature_of(grid, A_t, A_1, A_2):
    """(E_1, E_2, B_3) of an arbitrary connection on ``grid``."""
    d = lambda f, k: derivative(f, grid, k)  # noqa: E731
    e1 = d(A_1, "t") - d(A_t, "1") + su2.bracket(A_t, A_1)
    e2 = d(A_2, "t") - d(A_t, "2") + su2.bracket(A_t, A_2)
    b3 = d(A_2, "1") - d(A_1, "2") + su2.bracket(A_1, A_2)
    return e1, e2, b3


def curvature(cfg):
    return curvature_of(cfg.grid, cfg.A_t, cfg.A_1, cfg.A_2)


def gauge_transform(cfg, generator, generator_grad=None):
    """Push ``cfg`` forward by g = exp(generator).

    ``generator_grad`` may supply (d_t xi, d_1 xi, d_2 xi) exactly; otherwise
    they are taken by finite differences.
    """
    xi = np.asarray(generator, dtype=float)
    if xi.shape != cfg.grid.shape + (3,):
        xi = np.broadcast_to(xi, cfg.grid.shape + (3,))
    if not np.all(np.isfinite(xi)):
        raise ValueError("generator must be finite")
    if generator_grad is None:
        generator_grad = [derivative(xi, cfg.grid, k) for k in DIRS]
    rot = lambda v: su2.adjoint_exp(xi, v)  # noqa: E731
    new_conn = []
    for k, dxi in zip(DIRS, generator_grad):
        new_conn.append(rot(cfg.connection(k)) - su2.exp_right_differential(xi, dxi))
    return GaugeConfig(cfg.grid, *new_conn, rot(cfg.a_1), rot(cfg.a_2), rot(cfg.a_3),
                       label=cfg.label)


# -- decomposition ---------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    """Split of a gauge pair along sigma and its +-1 eigenlines.

    a_3 = alpha sigma + beta + star(beta) and A = A_hat + b with
    b = (1/4)[sigma, nabla_A sigma] and b_hat = (b_1 + i b_2)/2.
    """

    cfg: GaugeConfig
    sigma: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    bhat: np.ndarray
    phi: np.ndarray
    b_t: np.ndarray
    b_1: np.ndarray
    b_2: np.ndarray
    flagged: np.ndarray = field(repr=False)

    @property
    def grid(self):
        return self.cfg.grid

    @property
    def Ahat_t(self):
        return self.cfg.A_t - self.b_t

    @property
    def Ahat_1(self):
        return self.cfg.A_1 - self.b_1

    @property
    def Ahat_2(self):
        return self.cfg.A_2 - self.b_2

    def hat_connection(self, direction):
        return {"t": self.Ahat_t, "1": self.Ahat_1, "2": self.Ahat_2}[direction]


def phi_zero_tolerance(grid):
    return 1e-8 / grid.t_min


def _fill_flagged(sigma, flagged):
    """Replace sigma at flagged nodes by the normalized mean of in-plane neighbours."""
    sigma = sigma.copy()
    good = ~flagged
    for _ in range(max(flagged.shape[1], flagged.shape[2])):
        todo = np.argwhere(~good)
        if todo.size == 0:
            break
        newly = []
        for i, j, k in todo:
            acc = np.zeros(3)
            cnt = 0
            for dj, dk in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                jj, kk = j + dj, k + dk
                if 0 <= jj < good.shape[1] and 0 <= kk < good.shape[2] and good[i, jj, kk]:
                    acc += sigma[i, jj, kk]
                    cnt += 1
            if cnt:
                sigma[i, j, k] = acc / np.linalg.norm(acc)
                newly.append((i, j, k))
        if not newly:
            break
        for idx in newly:
            good[idx] = True
    if not np.all(good):
        sigma[~good] = su2.SIGMA3
    return sigma


def decompose(cfg):
    phi = cfg.phi
    mag = su2.norm(phi)
    flagged = mag < phi_zero_tolerance(cfg.grid)
    if np.all(flagged):
        raise PhiZeroEverywhere("|phi| is below tolerance on every node")
    safe = np.where(flagged, 1.0, mag * mag)
    with np.errstate(invalid="ignore", divide="ignore"):
        raw = (0.5j * su2.bracket(phi, su2.star(phi)) / safe[..., None]).real
    raw_norm = su2.norm(raw)
    sigma = raw / np.where(raw_norm > 0, raw_norm, 1.0)[..., None]
    sigma[flagged] = 0.0
    if np.any(flagged):
        sigma = _fill_flagged(sigma, flagged)

    alpha = su2.inner(sigma, cfg.a_3)
    beta = su2.plus_part(sigma, cfg.a_3)
    b = []
    for k in DIRS:
        b.append(0.25 * su2.bracket(sigma, covariant_derivative(cfg, sigma, k)))
    bhat = 0.5 * (b[1] + 1j * b[2])
    return Decomposition(cfg, sigma, alpha, beta, bhat, phi, b[0], b[1], b[2], flagged)


def recompose(d):
    """Return (a_3, A_t, A_1, A_2) rebuilt from the decomposition fields."""
    a3 = d.alpha[..., None] * d.sigma + d.beta + su2.star(d.beta)
    return a3.real, d.Ahat_t + d.b_t, d.Ahat_1 + d.b_1, d.Ahat_2 + d.b_2


# -- winding ---------------------------------------------------------------


@dataclass(frozen=True)
class Winding:
    degree: int
    radius: float


def vanishing_degree(phi_slice, x, radius, center=0.0 + 0.0j, samples=256, tol=1e-12):
    """Winding number of the (s1 - i s2) coefficient of phi around a circle.

    ``phi_slice`` has shape (n_x, n_x, 3) on the in-plane nodes ``x`` and is
    interpolated bilinearly onto ``samples`` points of the circle.
    """
    from scipy.interpolate import RegularGridInterpolator

    if samples < 64:
        raise ValueError("need at least 64 samples on the circle")
    coeff = 0.5 * su2.inner(phi_slice, su2.star(su2.E_PLUS))
    ang = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    pts = np.column_stack([center.real + radius * np.cos(ang), center.imag + radius * np.sin(ang)])
    re = RegularGridInterpolator((x, x), coeff.real)(pts)
    im = RegularGridInterpolator((x, x), coeff.imag)(pts)
    vals = re + 1j * im
    if np.min(np.abs(vals)) < tol:
        raise ZeroOnCircle(f"min |phi| on circle is {np.min(np.abs(vals)):.3e}")
    phase = np.unwrap(np.angle(np.append(vals, vals[0])))
    turns = (phase[-1] - phase[0]) / (2.0 * np.pi)
    degree = int(round(turns))
    if abs(turns - degree) > 0.25:
        raise ValueError(f"accumulated phase {turns:.3f} turns is not near an integer")
    return Winding(degree, radius)


# -- output ----------------------------------------------------------------


def write_field_csv(path, grid, name, values):
    """One row per node: t,x1,x2 and coefficients (re/im pairs if complex)."""
    values = np.asarray(values)
    is_complex = np.iscomplexobj(values)
    tt, xx1, xx2 = grid.mesh()
    with open(path, "w", newline="") as fh:
        fh.write(f"# field={name} {grid.describe()}\n")
        w = csv.writer(fh)
        if is_complex:
            w.writerow(["t", "x1", "x2", "c1_re", "c1_im", "c2_re", "c2_im", "c3_re", "c3_im"])
        else:
            w.writerow(["t", "x1", "x2", "c1", "c2", "c3"])
        flat = values.reshape(-1, 3)
        for t, a, b, c in zip(tt.ravel(), xx1.ravel(), xx2.ravel(), flat):
            if is_complex:
                row = [t, a, b] + [v for z in c for v in (z.real, z.imag)]
            else:
                row = [t, a, b, *c]
            w.writerow([repr(float(v)) for v in row])

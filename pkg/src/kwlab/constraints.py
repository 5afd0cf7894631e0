"""Curvature flux outside a disk and the growth and decay constraint diagnostics.

The flux f(R) is the integral of |B_3|^2 + |E_1|^2 + |E_2|^2 over t > 0 and
|z| > R.  Here it is truncated to t in [t_min, t_max] and to the annulus
R <= |z| <= outer_ratio * R.  Solutions with finite energy away from the
axis have R f(R) roughly constant; z-independent curvature makes f grow like
the annulus area instead.
"""

from dataclasses import dataclass, field

import numpy as np

from . import su2
from .errors import BadParam
from .lattice import GaugeConfig, curvature, phi_zero_tolerance
from .models import Family

# Gauss-Legendre panels in (ln t, ln rho); each panel spans at most this width
_PANEL = 0.5
_NODES = 12


@dataclass(frozen=True)
class FluxCurve:
    radii: tuple
    values: tuple
    t_min: float
    t_max: float
    outer_ratio: float
    source: str = ""

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if np.any(np.diff(r) <= 0):
            raise BadParam("radii must be strictly increasing")
        if np.any(np.asarray(self.values) < 0):
            raise BadParam("flux values must be non-negative")

    @property
    def scaled(self):
        """R f(R) for each radius."""
        return tuple(float(r * v) for r, v in zip(self.radii, self.values))

    @property
    def spread(self):
        """max(R f) / min(R f); 1 for a perfect 1/R law."""
        s = np.asarray(self.scaled)
        if np.all(s == 0):
            return 1.0
        return float(s.max() / s.min()) if s.min() > 0 else float("inf")

    @property
    def growth(self):
        """Largest ratio of R f between consecutive radii."""
        s = np.asarray(self.scaled)
        if np.all(s == 0):
            return 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            return float(np.max(s[1:] / s[:-1]))


def _panels(lo, hi):
    n = max(1, int(np.ceil((hi - lo) / _PANEL)))
    edges = np.linspace(lo, hi, n + 1)
    x, w = np.polynomial.legendre.leggauss(_NODES)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _family_flux(family, R, t_min, t_max, outer):
    u, wu = _panels(np.log(t_min), np.log(t_max))
    v, wv = _panels(np.log(R), np.log(outer))
    t = np.exp(u)[:, None]
    rho = np.exp(v)[None, :]
    dens = family.curvature_sq(t, rho) * 2.0 * np.pi * rho * rho * t
    return float(wu @ dens @ wv)


def _lattice_flux(cfg, R, outer, t_min, t_max):
    e1, e2, b3 = curvature(cfg)
    dens = su2.norm2(e1) + su2.norm2(e2) + su2.norm2(b3)
    g = cfg.grid
    x = g.x
    rho = np.sqrt(x[:, None] ** 2 + x[None, :] ** 2)
    ring = (rho >= R) & (rho <= outer)
    # trapezoid weights in t over the slab, plain node sum over the ring
    tol = 1e-9 * g.h_t
    slab = (g.t >= t_min - tol) & (g.t <= t_max + tol)
    wt = slab.astype(float)
    idx = np.nonzero(slab)[0]
    if idx.size:
        wt[idx[0]] = wt[idx[-1]] = 0.5
    per_t = np.sum(np.where(ring[None, :, :], dens, 0.0), axis=(1, 2))
    return float(np.sum(wt * per_t) * g.cell_volume)


def constraint_flux(source, radii, t_min=None, t_max=None, outer_ratio=4.0):
    """Truncated curvature flux outside the disks of the given radii.

    Parameters
    ----------
    source : Family or GaugeConfig
        A closed-form family (integrated by tensor Gauss-Legendre quadrature
        in log variables) or a sampled configuration (node sum of the
        finite-difference curvature).
    radii : sequence of float
        Strictly increasing disk radii R.
    t_min, t_max : float
        Time truncation.  Required for families; defaults to the grid range.
    outer_ratio : float
        The annulus runs from R to outer_ratio * R.

    Returns
    -------
    FluxCurve
    """
    radii = tuple(float(r) for r in radii)
    if outer_ratio <= 1:
        raise BadParam("outer_ratio must exceed 1")
    if isinstance(source, GaugeConfig):
        g = source.grid
        t_min = g.t_min if t_min is None else t_min
        t_max = g.t_max if t_max is None else t_max
        vals = [_lattice_flux(source, R, outer_ratio * R, t_min, t_max) for R in radii]
        label = source.label
    else:
        if not isinstance(source, Family):
            source = Family(**source)
        if t_min is None or t_max is None:
            raise BadParam("a family flux needs t_min and t_max")
        if source.kind == "abelian":
            raise BadParam("no closed-form curvature for the abelian family")
        vals = [_family_flux(source, R, t_min, t_max, outer_ratio * R) for R in radii]
        label = source.label
    if not 0 < t_min < t_max:
        raise BadParam("need 0 < t_min < t_max")
    return FluxCurve(radii, tuple(vals), float(t_min), float(t_max), float(outer_ratio), label)


# -- constraint diagnostics -------------------------------------------------

EPS_FLOOR = 0.25
FLUX_GROWTH_MAX = 2.0


@dataclass(frozen=True)
class Bullet:
    name: str
    passed: bool
    value: float
    threshold: float
    note: str = ""


@dataclass(frozen=True)
class ConstraintReport:
    zeta: float
    set1: tuple
    set2: tuple
    details: dict = field(default_factory=dict)

    @property
    def set1_ok(self):
        return all(b.passed for b in self.set1)

    @property
    def set2_ok(self):
        return all(b.passed for b in self.set2)

    def failures(self):
        return [f"set1.{b.name}" for b in self.set1 if not b.passed] + \
               [f"set2.{b.name}" for b in self.set2 if not b.passed]


def constraint_diagnostics(cfg, t0=None, r=1.0, eps_floor=EPS_FLOOR,
                           flux_growth_max=FLUX_GROWTH_MAX):
    """Empirical check of both constraint sets on a sampled configuration.

    The asymptotic statements are replaced by measured constants on the box:

    * bounded t|a|: the constant zeta = max t|a| (always finite on a grid).
    * lower bound as t -> 0: min t|a_3| (set 1), or min t|a| over |z| >= r t
      (set 2), over the slab t <= t0, compared with ``eps_floor``.
    * phi not identically zero; <a_3 phi> identically zero (relative 1e-10).
    * flux decay: R f(R) on the two radii x_half/4 and x_half/2 (annulus out
      to twice R) may grow by at most ``flux_growth_max``.

    Parameters
    ----------
    cfg : GaugeConfig
    t0 : float, optional
        Upper end of the small-t slab; defaults to the lowest quarter of the box.
    """
    g = cfg.grid
    t = g.t[:, None, None]
    if t0 is None:
        t0 = g.t_min + 0.25 * (g.t_max - g.t_min)
    slab = np.broadcast_to(t <= t0, g.shape)

    a_sq = su2.norm2(cfg.a_1) + su2.norm2(cfg.a_2) + su2.norm2(cfg.a_3)
    ta = t * np.sqrt(a_sq)
    ta3 = t * su2.norm(cfg.a_3)
    zeta = float(np.max(ta))
    phi_abs = su2.norm(cfg.phi)
    phi_max = float(np.max(phi_abs))
    pairing = np.abs(su2.inner(cfg.a_3, cfg.phi))
    scale = float(np.max(su2.norm(cfg.a_3) * phi_abs))
    pairing_rel = float(np.max(pairing)) / scale if scale > 0 else 0.0

    x = g.x
    rho = np.sqrt(x[:, None] ** 2 + x[None, :] ** 2)[None, :, :]
    away = slab & (rho >= r * t)

    eps1 = float(np.min(ta3[slab]))
    eps2 = float(np.min(ta[away])) if np.any(away) else float("nan")

    radii = (0.25 * g.x_half, 0.5 * g.x_half)
    curve = constraint_flux(cfg, radii, outer_ratio=2.0)
    growth = curve.growth

    bounded = Bullet("bounded_ta", bool(np.isfinite(zeta)), zeta, float("inf"),
                     "zeta = max t|a|")
    set1 = (
        bounded,
        Bullet("small_t_lower_bound", eps1 >= eps_floor, eps1, eps_floor, "min t|a_3| for t <= t0"),
        Bullet("phi_nonzero", phi_max > phi_zero_tolerance(g), phi_max, phi_zero_tolerance(g),
               "max |phi|"),
        Bullet("a3_phi_orthogonal", pairing_rel <= 1e-10, pairing_rel, 1e-10,
               "max |<a_3 phi>| relative to max |a_3||phi|"),
    )
    set2 = (
        bounded,
        Bullet("small_t_lower_bound_away", bool(eps2 >= eps_floor), eps2, eps_floor,
               f"min t|a| for t <= t0, |z| >= {r:g} t"),
        Bullet("flux_decay", growth <= flux_growth_max, growth, flux_growth_max,
               "growth of R f(R) between R = x_half/4 and x_half/2"),
    )
    details = {"t0": float(t0), "r": float(r), "flux": curve,
               "min_ta3": eps1, "max_ta3": float(np.max(ta3))}
    return ConstraintReport(zeta, set1, set2, details)

"""Node-wise residuals of the field equations and of the identities they imply.

Each ``*_fields`` function returns a dict mapping an equation id to a node
array (Lie-valued arrays keep their trailing axis of 3).  The public checks
wrap those in :class:`ResidualReport` statistics taken over interior nodes:
a two-node margin on every box face is dropped, as are nodes flagged by the
decomposition (where |phi| vanishes) and, for checks built on log|phi|, a
fixed physical disk around z = 0.

``CHECKS`` records which ids are consequences of the equations (``solution``)
and which hold for any decomposable configuration (``identity``).
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import su2
from .lattice import (DIRS, curvature, curvature_of, derivative)
from .models import model_curvature_arrays

MARGIN = 2

CHECKS = {
    # first-order system
    "phi_t_transport": ("solution", "nabla_t phi = i [a_3, phi]"),
    "phi_holomorphic": ("solution", "(nabla_1 + i nabla_2) phi = 0"),
    "a3_t_flow": ("solution", "nabla_t a_3 = B_3 + (i/2) [phi, phi*]"),
    "electric_1": ("solution", "E_1 = nabla_2 a_3"),
    "electric_2": ("solution", "E_2 = -nabla_1 a_3"),
    # second-order consequence
    "higgs_laplace_1": ("solution", "-nabla^2 a_1 + sum_i [a_i, [a_1, a_i]] = 0"),
    "higgs_laplace_2": ("solution", "-nabla^2 a_2 + sum_i [a_i, [a_2, a_i]] = 0"),
    "higgs_laplace_3": ("solution", "-nabla^2 a_3 + sum_i [a_i, [a_3, a_i]] = 0"),
    # projected system for the decomposition fields
    "phi_t_hat": ("solution", "nabla_hat_t phi = 2 alpha phi"),
    "phi_holomorphic_hat": ("solution", "(nabla_hat_1 + i nabla_hat_2) phi = 0"),
    "sigma_magnetic": ("solution", "<sigma B_hat_3> = d_t alpha - |phi|^2 - 4|bhat|^2 - 4|beta|^2"),
    "sigma_electric": ("solution", "<sigma (E_hat_1 + i E_hat_2)> = -i (d_1 + i d_2) alpha"),
    "beta_t_flow": ("solution", "nabla_hat_t beta + 2 alpha beta = -i (nabla_hat_1 - i nabla_hat_2) bhat"),
    "bhat_t_flow": ("solution", "nabla_hat_t bhat - 2 alpha bhat = -i (nabla_hat_1 + i nabla_hat_2) beta"),
    "b_t_constraint": ("solution", "b_t = -i (beta - beta*)"),
    "bhat_in_plus": ("solution", "bhat lies in the +1 eigenline"),
    # curvature projections (identities given the two constraints above)
    "magnetic_split": ("identity", "<sigma B_3> = <sigma B_hat_3> + 4|bhat|^2"),
    "electric_split": ("identity", "<sigma (E_1 + i E_2)> = <sigma (E_hat_1 + i E_hat_2)> - 4 <beta* bhat>"),
    "magnetic_plus": ("identity", "B_3^+ = -i (nabla_hat_1 - i nabla_hat_2) bhat"),
    "electric_plus_1": ("identity", "E_1^+ = i nabla_hat_1 beta + nabla_hat_t bhat"),
    "electric_plus_2": ("identity", "E_2^+ = i nabla_hat_2 beta - i nabla_hat_t bhat"),
    # scalar flows
    "pairing_bhat": ("solution", "d_t <phi* bhat> = <phi* (E_1^+ + i E_2^+)>"),
    "pairing_beta": ("solution", "d_t <phi* beta> = <phi* B_3^+>"),
    "beta_bhat_balance": ("solution", "d_t(|beta|^2 - |bhat|^2) + divergence terms = -4 alpha (|beta|^2 + |bhat|^2)"),
    "bochner_beta": ("solution", "nabla_hat^2 beta in terms of alpha, <sigma B_hat_3>, bhat"),
    "bochner_bhat": ("solution", "nabla_hat^2 bhat in terms of alpha, <sigma B_hat_3>, beta"),
    "alpha_elliptic": ("solution", "-Laplacian alpha + 4 |phi|^2 alpha = 0 when beta = bhat = 0"),
    # w-calculus
    "w_elliptic": ("solution", "-Laplacian w + (e^{4w} - 1)/(2t^2) + 4(|beta|^2 + |bhat|^2) = 0"),
    "alpha_from_w": ("solution", "alpha = -1/(2t) + d_t w"),
    "magnetic_from_w": ("solution", "<sigma B_hat_3> = -(d_1^2 + d_2^2) w"),
    "w_divergence": ("solution", "time derivative of the w energy density equals a planar divergence"),
    # closed forms
    "curvature_closed_form": ("solution", "finite-difference curvature equals the closed form"),
}


@dataclass(frozen=True)
class ResidualReport:
    equation: str
    max_abs: float
    l2: float
    excluded: int
    grid: object

    @property
    def grid_h(self):
        return self.grid.h_x


def interior_mask(grid, margin=MARGIN, reference=None):
    """Nodes at least ``margin`` spacings from every face.

    With a coarser ``reference`` grid the margin is measured in its spacings
    and only nodes shared with it are kept, so every level of a refinement
    study is compared on the same physical points.
    """
    ref = grid if reference is None else reference
    mt = margin * ref.h_t * (1.0 - 1e-9)
    mx = margin * ref.h_x * (1.0 - 1e-9)
    t = grid.t
    x = grid.x - grid.x_shift
    ok_t = (t >= grid.t_min + mt) & (t <= grid.t_max - mt)
    ok_x = (x >= -grid.x_half + mx) & (x <= grid.x_half - mx)
    if reference is not None:
        ok_t &= _on_reference(grid.n_t, ref.n_t)
        ok_x &= _on_reference(grid.n_x, ref.n_x)
    return ok_t[:, None, None] & ok_x[None, :, None] & ok_x[None, None, :]


def _on_reference(n, n_ref):
    stride, rem = divmod(n - 1, n_ref - 1)
    if rem or stride < 1:
        raise ValueError("reference grid must be nested in the grid")
    return np.arange(n) % stride == 0


def axis_distance(grid):
    x = grid.x
    r = np.sqrt(x[:, None] ** 2 + x[None, :] ** 2)
    return np.broadcast_to(r, grid.shape)


def _magnitude(values):
    values = np.asarray(values)
    if values.ndim == 4:
        return su2.norm(values)
    return np.abs(values)


def summarize(fields, grid, mask=None, reference=None):
    """Turn node residual arrays into reports (max norm and discrete L2 norm).

    The L2 norm weights each kept node by the cell volume of ``reference``
    (the grid whose nodes the mask keeps), defaulting to ``grid``.
    """
    if mask is None:
        mask = interior_mask(grid, reference=reference)
    dv = (grid if reference is None else reference).cell_volume
    reports = []
    for name, values in fields.items():
        mag = _magnitude(values)
        use = mask & np.isfinite(mag)
        sel = mag[use]
        max_abs = float(np.max(sel)) if sel.size else 0.0
        l2 = float(np.sqrt(np.sum(sel * sel) * dv))
        reports.append(ResidualReport(name, max_abs, l2, int(mag.size - sel.size), grid))
    return reports


# -- first and second order systems ---------------------------------------


def _cd(cfg, f, k):
    return derivative(f, cfg.grid, k) + su2.bracket(cfg.connection(k), f)


def kw_fields(cfg):
    phi = cfg.phi
    e1, e2, b3 = curvature(cfg)
    return {
        "phi_t_transport": _cd(cfg, phi, "t") - 1j * su2.bracket(cfg.a_3, phi),
        "phi_holomorphic": _cd(cfg, phi, "1") + 1j * _cd(cfg, phi, "2"),
        "a3_t_flow": _cd(cfg, cfg.a_3, "t") - b3 - (0.5j * su2.bracket(phi, su2.star(phi))).real,
        "electric_1": e1 - _cd(cfg, cfg.a_3, "2"),
        "electric_2": e2 + _cd(cfg, cfg.a_3, "1"),
    }


def kw_residual(cfg, mask=None, reference=None):
    return summarize(kw_fields(cfg), cfg.grid, mask, reference)


def second_order_fields(cfg):
    higgs = cfg.higgs()
    out = {}
    for j, aj in enumerate(higgs, start=1):
        lap = sum(_cd(cfg, _cd(cfg, aj, k), k) for k in DIRS)
        pot = sum(su2.bracket(ai, su2.bracket(aj, ai)) for i, ai in enumerate(higgs, start=1)
                  if i != j)
        out[f"higgs_laplace_{j}"] = -lap + pot
    return out


def second_order_residual(cfg, mask=None, reference=None):
    return summarize(second_order_fields(cfg), cfg.grid, mask, reference)


def closed_form_curvature_fields(cfg, m):
    tt, xx1, xx2 = cfg.grid.mesh()
    b3, e1, e2 = model_curvature_arrays(m, tt, xx1, xx2)
    fe1, fe2, fb3 = curvature(cfg)
    err = np.sqrt(su2.norm2(fe1 - e1) + su2.norm2(fe2 - e2) + su2.norm2(fb3 - b3))
    return {"curvature_closed_form": err}


# -- decomposition-based checks ---------------------------------------------


class _Hat:
    """Cached derivative helpers for a decomposition."""

    def __init__(self, d):
        self.d = d
        self.grid = d.grid
        self._hat_curv = None

    def D(self, f, k):
        return derivative(f, self.grid, k)

    def Dh(self, f, k):
        return self.D(f, k) + su2.bracket(self.d.hat_connection(k), f)

    def hat_curvature(self):
        if self._hat_curv is None:
            d = self.d
            self._hat_curv = curvature_of(self.grid, d.Ahat_t, d.Ahat_1, d.Ahat_2)
        return self._hat_curv

    def sigma_b_hat(self):
        return su2.inner(self.d.sigma, self.hat_curvature()[2])


def _pair(a, b):
    """<a* b> with the Hermitian star on the first slot."""
    return su2.inner(su2.star(a), b)


def projected_fields(d):
    h = _Hat(d)
    phi, alpha, beta, bhat = d.phi, d.alpha, d.beta, d.bhat
    eh1, eh2, _ = h.hat_curvature()
    a = alpha[..., None]
    da = {k: h.D(alpha, k) for k in DIRS}
    return {
        "phi_t_hat": h.Dh(phi, "t") - 2.0 * a * phi,
        "phi_holomorphic_hat": h.Dh(phi, "1") + 1j * h.Dh(phi, "2"),
        "sigma_magnetic": h.sigma_b_hat() - da["t"] + su2.norm2(phi)
        + 4.0 * su2.norm2(bhat) + 4.0 * su2.norm2(beta),
        "sigma_electric": su2.inner(d.sigma, eh1 + 1j * eh2) + 1j * (da["1"] + 1j * da["2"]),
        "beta_t_flow": h.Dh(beta, "t") + 2.0 * a * beta
        + 1j * (h.Dh(bhat, "1") - 1j * h.Dh(bhat, "2")),
        "bhat_t_flow": h.Dh(bhat, "t") - 2.0 * a * bhat
        + 1j * (h.Dh(beta, "1") + 1j * h.Dh(beta, "2")),
        "b_t_constraint": d.b_t + 1j * (beta - su2.star(beta)),
        "bhat_in_plus": bhat - su2.plus_part(d.sigma, bhat),
    }


def curvature_projection_fields(d):
    h = _Hat(d)
    sigma, beta, bhat = d.sigma, d.beta, d.bhat
    e1, e2, b3 = curvature(d.cfg)
    eh1, eh2, bh3 = h.hat_curvature()
    plus = lambda v: su2.plus_part(sigma, v)  # noqa: E731
    return {
        "magnetic_split": su2.inner(sigma, b3) - su2.inner(sigma, bh3) - 4.0 * su2.norm2(bhat),
        "electric_split": su2.inner(sigma, e1 + 1j * e2) - su2.inner(sigma, eh1 + 1j * eh2)
        + 4.0 * _pair(beta, bhat),
        "magnetic_plus": plus(b3) + 1j * (h.Dh(bhat, "1") - 1j * h.Dh(bhat, "2")),
        "electric_plus_1": plus(e1) - (1j * h.Dh(beta, "1") + h.Dh(bhat, "t")),
        "electric_plus_2": plus(e2) - (1j * h.Dh(beta, "2") - 1j * h.Dh(bhat, "t")),
    }


def pairing_flow_fields(d):
    h = _Hat(d)
    e1, e2, b3 = curvature(d.cfg)
    plus = lambda v: su2.plus_part(d.sigma, v)  # noqa: E731
    phi = d.phi
    return {
        "pairing_bhat": h.D(_pair(phi, d.bhat), "t") - _pair(phi, plus(e1) + 1j * plus(e2)),
        "pairing_beta": h.D(_pair(phi, d.beta), "t") - _pair(phi, plus(b3)),
    }


def balance_fields(d):
    h = _Hat(d)
    nb = su2.norm2(d.beta)
    nh = su2.norm2(d.bhat)
    cross = _pair(d.beta, d.bhat)   # <beta* bhat>
    cross_c = _pair(d.bhat, d.beta)  # <bhat* beta>
    lhs = (h.D(nb - nh, "t")
           + 1j * (h.D(cross, "1") - 1j * h.D(cross, "2"))
           - 1j * (h.D(cross_c, "1") + 1j * h.D(cross_c, "2")))
    return {"beta_bhat_balance": lhs + 4.0 * d.alpha * (nb + nh)}


def bochner_fields(d):
    h = _Hat(d)
    alpha, beta, bhat = d.alpha, d.beta, d.bhat
    sb = h.sigma_b_hat()
    da = {k: h.D(alpha, k) for k in DIRS}
    lap_beta = sum(h.Dh(h.Dh(beta, k), k) for k in DIRS)
    lap_bhat = sum(h.Dh(h.Dh(bhat, k), k) for k in DIRS)
    c_beta = (-2.0 * sb - 2.0 * da["t"] + 4.0 * alpha * alpha)[..., None]
    c_bhat = (2.0 * sb + 2.0 * da["t"] + 4.0 * alpha * alpha)[..., None]
    return {
        "bochner_beta": lap_beta - c_beta * beta
        + 4j * (da["1"] - 1j * da["2"])[..., None] * bhat,
        "bochner_bhat": lap_bhat - c_bhat * bhat
        - 4j * (da["1"] + 1j * da["2"])[..., None] * beta,
    }


def alpha_equation_fields(d):
    h = _Hat(d)
    lap = sum(h.D(h.D(d.alpha, k), k) for k in DIRS)
    return {"alpha_elliptic": -lap + 4.0 * su2.norm2(d.phi) * d.alpha}


def _t_nodes(grid):
    return grid.t[:, None, None]


def w_function(d):
    """w = (1/2) ln(sqrt(2) t |phi|); -inf where phi vanishes."""
    with np.errstate(divide="ignore"):
        return 0.5 * np.log(np.sqrt(2.0) * _t_nodes(d.grid) * su2.norm(d.phi))


def w_equation_fields(d):
    h = _Hat(d)
    t = _t_nodes(d.grid)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = w_function(d)
        wt = h.D(w, "t")
        w11 = h.D(h.D(w, "1"), "1")
        w22 = h.D(h.D(w, "2"), "2")
        wtt = h.D(wt, "t")
        e4w = 2.0 * t * t * su2.norm2(d.phi)
        return {
            "w_elliptic": -(wtt + w11 + w22) + (e4w - 1.0) / (2.0 * t * t)
            + 4.0 * (su2.norm2(d.beta) + su2.norm2(d.bhat)),
            "alpha_from_w": d.alpha + 0.5 / t - wt,
            "magnetic_from_w": h.sigma_b_hat() + w11 + w22,
        }


def divergence_fields(d, m):
    """Residual of the divergence identity written with the regular part of w.

    With w = w_reg + (m/2) ln(|z|/t) and w_t = d_t w_reg - m/(2t), the density

        Q = -w_t/(2t) - (e^{4w} - 1)/(8t^2) + w_t^2/2 - |grad w_reg|^2/2 + |beta|^2 - |bhat|^2

    obeys d_t Q = (m+1)/(2t) lap w_reg - div(d_t w_reg grad w_reg)
                  - i (d_1 - i d_2) <beta* bhat> + i (d_1 + i d_2) <bhat* beta>.
    """
    h = _Hat(d)
    grid = d.grid
    t = _t_nodes(grid)
    x = grid.x
    rho = np.sqrt(x[:, None] ** 2 + x[None, :] ** 2)[None, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        wreg = w_function(d) - 0.5 * m * np.log(rho / t)
        wr_t = h.D(wreg, "t")
        wr_1 = h.D(wreg, "1")
        wr_2 = h.D(wreg, "2")
        w_t = wr_t - 0.5 * m / t
        e4w = 2.0 * t * t * su2.norm2(d.phi)
        nb = su2.norm2(d.beta)
        nh = su2.norm2(d.bhat)
        q = (-w_t / (2.0 * t) - (e4w - 1.0) / (8.0 * t * t) + 0.5 * w_t * w_t
             - 0.5 * (wr_1 * wr_1 + wr_2 * wr_2) + nb - nh)
        cross = _pair(d.beta, d.bhat)
        cross_c = _pair(d.bhat, d.beta)
        rhs = ((m + 1) / (2.0 * t) * (h.D(wr_1, "1") + h.D(wr_2, "2"))
               - h.D(wr_t * wr_1, "1") - h.D(wr_t * wr_2, "2")
               - 1j * (h.D(cross, "1") - 1j * h.D(cross, "2"))
               + 1j * (h.D(cross_c, "1") + 1j * h.D(cross_c, "2")))
        return {"w_divergence": h.D(q, "t") - rhs}


def decomposition_mask(d, margin=MARGIN, exclude_radius=0.0, reference=None):
    """Interior nodes that are neither near a flagged node nor within ``exclude_radius`` of z = 0.

    Every node within ``margin`` spacings of the reference grid (box metric)
    of a flagged node is dropped, so stencils never touch filled sigma values
    and the dropped region is the same on every refinement level.
    """
    grid = d.grid
    ref = grid if reference is None else reference
    mask = interior_mask(grid, margin, reference)
    flagged = d.flagged
    if np.any(flagged):
        kt = int(round(margin * ref.h_t / grid.h_t))
        kx = int(round(margin * ref.h_x / grid.h_x))
        grown = ndimage.binary_dilation(flagged, structure=np.ones((2 * kt + 1, 2 * kx + 1, 2 * kx + 1)))
        mask &= ~grown
    if exclude_radius > 0:
        mask &= axis_distance(grid) >= exclude_radius
    return mask


def _decomposition_report(fields, d, mask, reference):
    if mask is None:
        mask = decomposition_mask(d, reference=reference)
    return summarize(fields, d.grid, mask, reference)


def projected_residuals(d, mask=None, reference=None):
    return _decomposition_report(projected_fields(d), d, mask, reference)


def curvature_projection_residuals(d, mask=None, reference=None):
    return _decomposition_report(curvature_projection_fields(d), d, mask, reference)


def pairing_flow_residuals(d, mask=None, reference=None):
    return _decomposition_report(pairing_flow_fields(d), d, mask, reference)


def balance_residual(d, mask=None, reference=None):
    return _decomposition_report(balance_fields(d), d, mask, reference)


def bochner_residuals(d, mask=None, reference=None):
    return _decomposition_report(bochner_fields(d), d, mask, reference)


def alpha_equation_residual(d, mask=None, reference=None):
    return _decomposition_report(alpha_equation_fields(d), d, mask, reference)


W_EXCLUDE_RADIUS = 0.5


def w_equation_residuals(d, m, exclude_radius=None, reference=None):
    if exclude_radius is None:
        exclude_radius = W_EXCLUDE_RADIUS if m > 0 else 0.0
    mask = decomposition_mask(d, exclude_radius=exclude_radius, reference=reference)
    return summarize(w_equation_fields(d), d.grid, mask, reference)


def divergence_identity_residual(d, m, mask=None, reference=None):
    return _decomposition_report(divergence_fields(d, m), d, mask, reference)


def closed_form_curvature_residual(cfg, m, mask=None, reference=None):
    return summarize(closed_form_curvature_fields(cfg, m), cfg.grid, mask, reference)

"""Closed-form solution families of the reduced system and their scalar profiles.

All families are evaluated in Cartesian components on the coefficient basis of
:mod:`kwlab.su2`.  The degree-m model family is written in terms of

    x = sqrt(t^2 + |z|^2),   q = |z|^2 / (t + x)^2 = exp(-2 Theta),

so every expression is a ratio of short polynomials in q with no cancellation
at z = 0 (Theta -> infinity) or at |z| >> t (Theta -> 0).  The identities used
are sinh(Theta) = t/|z|, 1 - q = 2t/(t + x) and exp(-Theta) = |z|/(t + x).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import su2
from .errors import BadParam, QuadratureFailure

SMALL_THETA = 1e-3
LARGE_THETA = 30.0


@dataclass(frozen=True)
class ModelParams:
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise BadParam(f"model degree must be a non-negative integer, got {self.m}")


@dataclass(frozen=True)
class ImposterParams:
    w: complex

    def __post_init__(self):
        if abs(self.w) > 1.0:
            raise BadParam(f"imposter parameter needs |w| <= 1, got {self.w}")


@dataclass(frozen=True)
class PointTZ:
    t: float
    z: complex

    def __post_init__(self):
        if not self.t > 0:
            raise BadParam(f"t must be positive, got {self.t}")


@dataclass(frozen=True)
class FieldSample:
    """Connection and Higgs components; each entry has shape (..., 3)."""

    A_t: np.ndarray
    A_1: np.ndarray
    A_2: np.ndarray
    a_1: np.ndarray
    a_2: np.ndarray
    a_3: np.ndarray

    @property
    def phi(self):
        return self.a_1 - 1j * self.a_2


# -- scalar helpers --------------------------------------------------------


def geometric_sum(k, q):
    """G_k(q) = 1 + q + ... + q^k (zero for k < 0), by Horner's rule."""
    q = np.asarray(q, dtype=float)
    if k < 0:
        return np.zeros_like(q)
    out = np.ones_like(q)
    for _ in range(k):
        out = 1.0 + q * out
    return out


def _from_phi_coefficient(f):
    """(a1, a2) real elements with a1 - i a2 = f (s1 - i s2)."""
    zero = np.zeros(np.shape(f))
    a1 = su2.element(f.real, f.imag, zero)
    a2 = su2.element(-f.imag, f.real, zero)
    return a1, a2


def _along_s3(c):
    c = np.asarray(c, dtype=float)
    zero = np.zeros_like(c)
    return su2.element(zero, zero, c)


def _zero_element(shape):
    return np.zeros(tuple(shape) + (3,))


def theta_x(t, z):
    """Return (Theta, x) with sinh(Theta) = t/|z| and x = sqrt(t^2 + |z|^2).

    Theta is +inf where z = 0.
    """
    t = np.asarray(t, dtype=float)
    rho = np.abs(np.asarray(z))
    x = np.hypot(t, rho)
    with np.errstate(divide="ignore"):
        theta = np.arcsinh(t / rho)
    if theta.ndim == 0:
        return float(theta), float(x)
    return theta, x


def sinh_ratio(m, theta):
    """(m+1) sinh(Theta) / sinh((m+1) Theta), with its limits at 0 and infinity.

    Small Theta uses the Chebyshev recurrence for sinh((m+1)T)/sinh(T) in
    cosh(T); large Theta uses the exp-scaled form (m+1) e^{-mT} / G_m(e^{-2T}).
    """
    if m < 0:
        raise BadParam("m must be non-negative")
    theta = np.asarray(theta, dtype=float)
    scalar = theta.ndim == 0
    theta = np.atleast_1d(theta)
    if m == 0:
        out = np.ones_like(theta)
        return float(out[0]) if scalar else out
    n = m + 1
    out = np.empty_like(theta)

    small = theta < SMALL_THETA
    big = (theta > LARGE_THETA) | (n * theta > 700.0)
    mid = ~(small | big)

    if np.any(small):
        c = np.cosh(theta[small])
        u_prev, u = np.ones_like(c), 2.0 * c
        if m == 1:
            u_m = u
        else:
            for _ in range(m - 1):
                u_prev, u = u, 2.0 * c * u - u_prev
            u_m = u
        out[small] = n / u_m
    if np.any(mid):
        th = theta[mid]
        out[mid] = n * np.sinh(th) / np.sinh(n * th)
    if np.any(big):
        th = theta[big]
        with np.errstate(invalid="ignore", over="ignore"):
            q = np.exp(-2.0 * th)
            out[big] = np.where(np.isinf(th), 0.0, n * np.exp(-m * th) / geometric_sum(m, q))
    return float(out[0]) if scalar else out


def _log_sinhc(x):
    """log(sinh(x)/x) by its Taylor series; accurate to roundoff for |x| < 0.1."""
    x2 = x * x
    return x2 * (1.0 / 6.0 + x2 * (-1.0 / 180.0 + x2 * (1.0 / 2835.0 + x2 * (-1.0 / 37800.0
                                                                            + x2 / 467775.0))))


def w_model(m, theta):
    """Half the log of :func:`sinh_ratio`; non-positive, -inf on the axis for m > 0."""
    theta = np.asarray(theta, dtype=float)
    if m == 0:
        out = np.zeros_like(theta)
        return float(out) if out.ndim == 0 else out
    n = m + 1
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        near = 0.5 * np.log(sinh_ratio(m, np.minimum(theta, LARGE_THETA)))
        q = np.exp(-2.0 * theta)
        far = 0.5 * (math.log(n) - m * theta - np.log(geometric_sum(m, q)))
    # log S = g(T) - g(nT), g(x) = log(sinh(x)/x); the series keeps w < 0 where S rounds to 1
    tiny = n * theta < 0.1
    out = np.where(theta <= LARGE_THETA, near, far)
    if np.any(tiny):
        th = np.where(tiny, theta, 0.0)
        out = np.where(tiny, 0.5 * (_log_sinhc(th) - _log_sinhc(n * th)), out)
    return float(out) if out.ndim == 0 else out


# -- model family ----------------------------------------------------------


def _model_geometry(t, x1, x2):
    t, x1, x2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x1, x2)))
    rho2 = x1 * x1 + x2 * x2
    x = np.sqrt(t * t + rho2)
    tpx = t + x
    q = rho2 / (tpx * tpx)
    return t, x1, x2, x, tpx, q


def model_arrays(m, t, x1, x2):
    """Degree-m model fields at broadcast arrays of (t, x1, x2)."""
    ModelParams(m)
    t, x1, x2, x, tpx, q = _model_geometry(t, x1, x2)
    n = m + 1
    gm = geometric_sum(m, q)
    a3 = -n * (1.0 + q ** n) / (2.0 * t * (1.0 + q) * gm)
    zeta = (x1 + 1j * x2) / tpx
    f = -n * zeta ** m / (2.0 * t * gm)
    a1, a2 = _from_phi_coefficient(f)
    if m == 0:
        kappa = np.zeros_like(t)
    else:
        kappa = n * geometric_sum(m - 1, q) / ((1.0 + q) * gm * tpx * tpx)
    zero = _zero_element(t.shape)
    return FieldSample(
        A_t=zero,
        A_1=_along_s3(-x2 * kappa),
        A_2=_along_s3(x1 * kappa),
        a_1=a1,
        a_2=a2,
        a_3=_along_s3(a3),
    )


def model_curvature_arrays(m, t, x1, x2):
    """Closed-form (B_3, E_1, E_2) of the degree-m model connection."""
    ModelParams(m)
    t, x1, x2, x, tpx, q = _model_geometry(t, x1, x2)
    n = m + 1
    gm = geometric_sum(m, q)
    gm_sq = geometric_sum(m, q * q)
    # 1 - n sinh(2T)/sinh(2nT) = (1 - q)^2 Ntil / (2 G_m(q^2)), each term of Ntil positive
    ntil = np.zeros_like(q)
    for j in range(m + 1):
        k = abs(m - 2 * j) - 1
        if k >= 0:
            ntil = ntil + q ** (2 * min(j, m - j)) * geometric_sum(k, q) ** 2
    one_minus_q = 2.0 * t / tpx
    gap = 0.5 * one_minus_q ** 2 * ntil / gm_sq
    qn = 1.0 + q ** n
    # tanh(T) coth(nT) and coth(nT) (1 - q), in q-form
    tanh_coth = qn * tpx / (2.0 * x * gm)
    b3 = n / (2.0 * x * x) * tanh_coth * gap
    # coth(nT) * gap with the (1 - q) factor of coth cancelled against gap
    e_mag = n / (2.0 * x ** 3) * qn * 0.5 * one_minus_q * ntil / (gm * gm_sq)
    return _along_s3(b3), _along_s3(e_mag * x2), _along_s3(-e_mag * x1)


def model_alpha(m, t, z):
    """alpha = <sigma a_3> of the model family (sigma = s3 there)."""
    t = np.asarray(t, dtype=float)
    z = np.asarray(z)
    return model_arrays(m, t, z.real, z.imag).a_3[..., 2]


def model_phi_norm(m, t, z):
    z = np.asarray(z)
    return su2.norm(model_arrays(m, t, z.real, z.imag).phi)


def model_fields(params, p):
    """Model fields at a single point as a :class:`FieldSample` of 3-vectors."""
    return model_arrays(params.m, p.t, p.z.real, p.z.imag)


def model_curvature(params, p):
    return model_curvature_arrays(params.m, p.t, p.z.real, p.z.imag)


# -- other families --------------------------------------------------------


def imposter_arrays(w, t, shape=None):
    """Nahm-pole imposter fields; z-independent, broadcast to ``shape`` if given."""
    ImposterParams(w)
    w = complex(w)
    t = np.asarray(t, dtype=float)
    if shape is not None:
        t = np.broadcast_to(t, shape)
    s = math.sqrt(max(0.0, 1.0 - abs(w) ** 2))
    f = (-s / (2.0 * t)).astype(complex)
    a1, a2 = _from_phi_coefficient(f)
    # A_1 + i A_2 = W (s1 - i s2)
    W = -w / (2.0 * t)
    zero = np.zeros_like(t)
    return FieldSample(
        A_t=_zero_element(t.shape),
        A_1=su2.element(W.real, W.imag, zero),
        A_2=su2.element(W.imag, -W.real, zero),
        a_1=a1,
        a_2=a2,
        a_3=_along_s3(-0.5 / t),
    )


def imposter_fields(params, t):
    if not t > 0:
        raise BadParam("t must be positive")
    return imposter_arrays(params.w, t)


def abelian_arrays(r, t, x1, x2):
    """Abelian family: a_3 = -(r/x) s3, phi = 0, A = r (1 - t/x) dphi s3."""
    if not r > 0:
        raise BadParam("r must be positive")
    t, x1, x2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x1, x2)))
    x = np.sqrt(t * t + x1 * x1 + x2 * x2)
    # (1 - t/x)/|z|^2 = 1/(x (x + t)), finite on the axis
    h = r / (x * (x + t))
    zero = _zero_element(t.shape)
    return FieldSample(
        A_t=zero,
        A_1=_along_s3(-x2 * h),
        A_2=_along_s3(x1 * h),
        a_1=zero,
        a_2=zero,
        a_3=_along_s3(-r / x),
    )


def abelian_fields(r, p):
    return abelian_arrays(r, p.t, p.z.real, p.z.imag)


def c_family_arrays(c, t, shape=None):
    """a_3 = -(c/4) coth(ct/2) s3, phi = -(c/4)/sinh(ct/2) (s1 - i s2), A = 0."""
    if not c > 0:
        raise BadParam("c must be positive")
    t = np.asarray(t, dtype=float)
    if shape is not None:
        t = np.broadcast_to(t, shape)
    em = -np.expm1(-c * t)  # 1 - e^{-ct}, accurate at small ct
    a3 = -(c / 4.0) * (1.0 + np.exp(-c * t)) / em
    f = (-(c / 2.0) * np.exp(-0.5 * c * t) / em).astype(complex)
    a1, a2 = _from_phi_coefficient(f)
    zero = _zero_element(t.shape)
    return FieldSample(A_t=zero, A_1=zero, A_2=zero, a_1=a1, a_2=a2, a_3=_along_s3(a3))


def c_family_fields(c, t):
    if not t > 0:
        raise BadParam("t must be positive")
    return c_family_arrays(c, t)


# -- family spec used by the lattice layer ---------------------------------

FAMILY_KINDS = ("model", "imposter", "abelian", "cfamily")


@dataclass(frozen=True)
class Family:
    """A member of one of the closed-form families.

    ``kind`` is one of ``model`` (uses ``m``), ``imposter`` (uses ``w``),
    ``abelian`` (uses ``r``) and ``cfamily`` (uses ``c``).
    """

    kind: str = "model"
    m: int = 0
    w: complex = 0.0
    r: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise BadParam(f"unknown family {self.kind!r}")
        if self.kind == "model":
            ModelParams(self.m)
        elif self.kind == "imposter":
            ImposterParams(self.w)
        elif self.kind == "abelian" and not self.r > 0:
            raise BadParam("r must be positive")
        elif self.kind == "cfamily" and not self.c > 0:
            raise BadParam("c must be positive")

    @property
    def label(self):
        if self.kind == "model":
            return f"model(m={self.m})"
        if self.kind == "imposter":
            return f"imposter(w={complex(self.w):g})"
        if self.kind == "abelian":
            return f"abelian(r={self.r:g})"
        return f"cfamily(c={self.c:g})"

    def sample(self, t, x1, x2):
        t, x1, x2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x1, x2)))
        if self.kind == "model":
            return model_arrays(self.m, t, x1, x2)
        if self.kind == "imposter":
            return imposter_arrays(self.w, t)
        if self.kind == "abelian":
            return abelian_arrays(self.r, t, x1, x2)
        return c_family_arrays(self.c, t)

    def curvature_sq(self, t, rho):
        """|B_3|^2 + |E_1|^2 + |E_2|^2 from closed forms, for axisymmetric families."""
        t = np.asarray(t, dtype=float)
        rho = np.asarray(rho, dtype=float)
        if self.kind == "model":
            b3, e1, e2 = model_curvature_arrays(self.m, t, rho, np.zeros_like(rho))
            return su2.norm2(b3) + su2.norm2(e1) + su2.norm2(e2)
        if self.kind == "imposter":
            w2 = abs(self.w) ** 2
            t, _ = np.broadcast_arrays(t, rho)
            return w2 * w2 / (4.0 * t ** 4) + w2 / (2.0 * t ** 4)
        if self.kind == "cfamily":
            return np.zeros(np.broadcast(t, rho).shape)
        raise BadParam(f"no closed-form curvature for {self.kind}")


# -- scalar profiles -------------------------------------------------------


def triple_product_model(params, p):
    """<a_3 [a_1, a_2]> of the model fields by direct bracket arithmetic."""
    f = model_fields(params, p)
    return float(su2.inner(f.a_3, su2.bracket(f.a_1, f.a_2)))


def triple_product_closed_form(m, t, z):
    """The closed-form profile S^2 cosh((m+1)T) / (2 t^3 cosh T).

    The direct bracket value equals S/2 times this, i.e. -alpha |phi|^2.
    """
    t = np.asarray(t, dtype=float)
    rho = np.abs(np.asarray(z))
    _, _, _, x, tpx, q = _model_geometry(t, rho, 0.0)
    n = m + 1
    gm = geometric_sum(m, q)
    theta, _ = theta_x(t, rho)
    s = sinh_ratio(m, theta)
    # cosh(nT)/cosh(T) times S is n (1 + q^n) / ((1 + q) G_m)
    return s * n * (1.0 + q ** n) / ((1.0 + q) * gm) / (2.0 * t ** 3)


def w_model_disk_integral(m, t, R, rel_tol=1e-10):
    """Integral of w^(m)(t, .) over the disk |z| <= R, by log-radial quadrature."""
    if not (R > t > 0):
        raise BadParam("need R > t > 0")
    if m == 0:
        return 0.0

    def integrand(s):
        rho = math.exp(s)
        theta = math.asinh(t / rho)
        return 2.0 * math.pi * float(w_model(m, theta)) * rho * rho

    # w ~ (m/2) ln(rho/t) near the axis, so rho^2 w decays like rho^2 ln rho as s -> -inf
    lo = math.log(t) - 40.0
    hi = math.log(R)
    edges = np.unique(np.concatenate([np.arange(lo, hi, 2.0), [math.log(t)]]))
    edges = np.append(edges[(edges >= lo) & (edges < hi - 0.5)], hi)
    total = 0.0
    err_sum = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err, info, *rest = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=rel_tol,
                                               limit=200, full_output=1)
        if rest:
            raise QuadratureFailure(f"disk integral piece [{a:.2f}, {b:.2f}]: {rest[0]}")
        total += val
        err_sum += err
    if err_sum > 1e3 * rel_tol * abs(total):
        raise QuadratureFailure(f"disk integral error estimate {err_sum:.2e} for value {total:.6e}")
    return total


def disk_integral_slope(m, t, radii):
    """Least-squares slope of the disk integral against ln(R/t)."""
    radii = np.asarray(radii, dtype=float)
    vals = np.array([w_model_disk_integral(m, t, R) for R in radii])
    slope, _ = np.polyfit(np.log(radii / t), vals, 1)
    return float(slope)

"""Small-t scalar asymptotics: Riccati flows, leading-order profiles, turning times.

Two Riccati equations appear.  Along a line of fixed z with the other terms
frozen into a constant, alpha obeys

    d alpha / dt - 2 alpha^2 = zconst,

and in the variables y = t alpha, tau = ln(t / t_ref) the small-t equation is

    dy/dtau + 2 y^2 - (k+1)^2 / 2 = eps4(tau),   |eps4| <= mu.

With eps4 = 0 the second has fixed points y = +-lambda, lambda = (k+1)/2, and
solutions y = lambda tanh(2 lambda tau + atanh(y0 / lambda)) when |y0| < lambda.
Both are integrated by classical RK4 with step doubling.
"""

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import interpolate, optimize, special

from .errors import BadParam, BadParity, MultipleZeros

BLOW_UP = 1e6
RK_TOL = 1e-10


@dataclass(frozen=True)
class Trajectory:
    """Accepted RK4 samples; ``status`` is ``completed`` or ``blow_up``."""

    tau: np.ndarray
    y: np.ndarray
    status: str = "completed"
    blow_up_at: float = None
    variables: tuple = ("tau", "y")

    @property
    def blew_up(self):
        return self.status == "blow_up"

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(self.variables))
            for a, b in zip(self.tau, self.y):
                w.writerow([f"{a:.17g}", f"{b:.17g}"])


@dataclass(frozen=True)
class RiccatiSpec:
    k: int
    mu: float = 0.0
    y0: float = 0.0
    tau0: float = 0.0

    def __post_init__(self):
        if self.k < 0 or int(self.k) != self.k:
            raise BadParam("k must be a non-negative integer")
        if self.mu < 0:
            raise BadParam("mu must be non-negative")

    @property
    def lam(self):
        """(k+1)/2, the attracting fixed point of the unforced flow."""
        return 0.5 * (self.k + 1)


def _rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def integrate_rk4(f, t0, y0, t_end, tol=RK_TOL, h0=1e-3, escaped=None, max_steps=1_000_000):
    """Adaptive RK4 with step doubling.

    A step of size h is compared with two steps of size h/2; the step is
    accepted when the difference, scaled by max(1, |y|), is below tol * h
    (error per unit time).  The accepted value is the Richardson-corrected
    half-step result.  ``escaped(t, y)`` ends the run as a blow-up.

    Returns
    -------
    Trajectory
    """
    if not t_end > t0:
        raise BadParam("t_end must exceed the initial time")
    ts = [float(t0)]
    ys = [float(y0)]
    t, y, h = float(t0), float(y0), min(h0, t_end - t0)
    for _ in range(max_steps):
        if t >= t_end:
            break
        h = min(h, t_end - t)
        with np.errstate(over="ignore", invalid="ignore"):
            full = _rk4_step(f, t, y, h)
            half = _rk4_step(f, t, y, 0.5 * h)
            half = _rk4_step(f, t + 0.5 * h, half, 0.5 * h)
        err = abs(half - full) / 15.0
        scale = max(1.0, abs(y))
        bad = not (math.isfinite(full) and math.isfinite(half))
        if bad or err > tol * h * scale:
            h_new = 0.25 * h if bad or err == 0 else h * max(0.1, 0.9 * (tol * h * scale / err) ** 0.25)
            if h_new < 1e-15 * max(1.0, abs(t)):
                return Trajectory(np.array(ts), np.array(ys), "blow_up", t)
            h = h_new
            continue
        t = t + h
        y = half + (half - full) / 15.0
        ts.append(t)
        ys.append(y)
        if escaped is not None and escaped(t, y):
            return Trajectory(np.array(ts), np.array(ys), "blow_up", t)
        grow = 4.0 if err == 0 else min(4.0, 0.9 * (tol * h * scale / err) ** 0.25)
        h = h * max(grow, 0.1)
    else:
        raise RuntimeError("step budget exhausted")
    return Trajectory(np.array(ts), np.array(ys))


def riccati_alpha(zconst, alpha0, t0, t_end, tol=RK_TOL):
    """Integrate d alpha/dt = 2 alpha^2 + zconst from (t0, alpha0).

    Blow-up is reported once |alpha| > 1e6 / t.
    """
    if not t0 > 0:
        raise BadParam("t0 must be positive")
    traj = integrate_rk4(lambda t, a: 2.0 * a * a + zconst, t0, alpha0, t_end, tol,
                         escaped=lambda t, a: abs(a) > BLOW_UP / t)
    return Trajectory(traj.tau, traj.y, traj.status, traj.blow_up_at, ("t", "alpha"))


def _check_forcing(eps4, mu, tau0, tau_end, samples=2001):
    taus = np.linspace(tau0, tau_end, samples)
    vals = np.array([eps4(s) for s in taus])
    if np.max(np.abs(vals)) > mu * (1.0 + 1e-12) + 1e-300:
        raise BadParam(f"|eps4| exceeds mu = {mu:g} on the sampled interval")


def riccati_y(spec, eps4=None, tau_end=5.0, tol=RK_TOL):
    """Integrate dy/dtau = (k+1)^2/2 - 2 y^2 + eps4(tau); blow-up once |y| > 1e6."""
    if eps4 is None:
        c = 0.5 * (spec.k + 1) ** 2

        def rhs(s, y):
            return c - 2.0 * y * y
    else:
        _check_forcing(eps4, spec.mu, spec.tau0, tau_end)
        c = 0.5 * (spec.k + 1) ** 2

        def rhs(s, y):
            return c - 2.0 * y * y + eps4(s)
    return integrate_rk4(rhs, spec.tau0, spec.y0, tau_end, tol,
                         escaped=lambda s, y: abs(y) > BLOW_UP)


def tanh_solution(k, y0, tau, tau0=0.0):
    """Closed-form unforced solution for |y0| < (k+1)/2."""
    lam = 0.5 * (k + 1)
    if abs(y0) >= lam:
        raise BadParam("closed form needs |y0| < (k+1)/2")
    return lam * np.tanh(2.0 * lam * (np.asarray(tau) - tau0) + math.atanh(y0 / lam))


def tanh_lower_bound(k, mu, y0, tau, tau0=0.0, c=None):
    """lambda (c e^{4 lambda s} - 1)/(c e^{4 lambda s} + 1), s = tau - tau0, lambda^2 = (k+1)^2/4 - mu.

    ``c`` defaults to the value matching y0 at tau0.
    """
    lam2 = 0.25 * (k + 1) ** 2 - mu
    if lam2 <= 0:
        raise BadParam("need mu < (k+1)^2/4")
    lam = math.sqrt(lam2)
    if c is None:
        if abs(y0) >= lam:
            raise BadParam("need y0^2 < (k+1)^2/4 - mu")
        c = (lam + y0) / (lam - y0)
    s = np.asarray(tau) - tau0
    # lambda tanh(2 lambda s + ln(c)/2), written without overflow
    return lam * np.tanh(2.0 * lam * s + 0.5 * math.log(c))


def tanh_bound_check(k, trajectory, mu=0.0, c=None):
    """max(bound - y) along the trajectory; non-positive when the lower bound holds."""
    tau0 = float(trajectory.tau[0])
    y0 = float(trajectory.y[0])
    bound = tanh_lower_bound(k, mu, y0, trajectory.tau, tau0, c)
    return float(np.max(bound - trajectory.y))


# -- leading-order profiles --------------------------------------------------


def _pos(*vals):
    for v in vals:
        if np.any(np.asarray(v) <= 0):
            raise BadParam("arguments must be positive")


def alpha_profile(k, t, t_z):
    """(k+1)/(2t) (t^{2(k+1)} - t_z^{2(k+1)}) / (t^{2(k+1)} + t_z^{2(k+1)})."""
    _pos(t, t_z)
    n = k + 1
    s = np.log(np.asarray(t, dtype=float) / t_z)
    return n / (2.0 * np.asarray(t, dtype=float)) * np.tanh(n * s)


def beta_profile(k, t, t_z):
    """((k+1)/t) t_z^{2(k+1)} / (t^{2(k+1)} + t_z^{2(k+1)})."""
    _pos(t, t_z)
    n = k + 1
    t = np.asarray(t, dtype=float)
    s = np.log(t / t_z)
    # t_z^{2n}/(t^{2n} + t_z^{2n}) = 1/(1 + e^{2ns}), no cancellation for t >> t_z
    return n / t * special.expit(-2.0 * n * s)


def phi_profile(k, m, kappa, t, t_z, z, t_star=1.0):
    """kappa |z|^m (t_z/t_*)^{k+1} ((t_z/t)^{k+1} + (t/t_z)^{k+1})."""
    _pos(kappa, t, t_z, t_star)
    n = k + 1
    s = np.log(np.asarray(t, dtype=float) / t_z)
    return kappa * np.abs(z) ** m * (t_z / t_star) ** n * 2.0 * np.cosh(n * s)


def bhat_profile(k, t, t_z, bz):
    """2 b_z / ((t/t_z)^{k+1} + (t_z/t)^{k+1}); equals b_z at t = t_z.

    This is the profile obtained by integrating the bhat flow with the
    alpha of :func:`alpha_profile` while keeping |bhat| = O(1/t); it is the
    t-dependence of :func:`synthetic_bhat` at fixed z.
    """
    _pos(t, t_z)
    n = k + 1
    s = np.log(np.asarray(t, dtype=float) / t_z)
    return bz / np.cosh(n * s)


def _parity(k, m):
    if (k - m) % 2 or k <= m:
        raise BadParity(f"need k - m positive and even, got k={k}, m={m}")
    return (k - m) // 2


def synthetic_bhat(k, m, t, z):
    """Conjectural small-t profile t^{-(k+1)} zbar^{p-1} / (sqrt(2)(1 + t^{-2(k+1)} |z|^{2p})), p = (k-m)/2."""
    p = _parity(k, m)
    n = k + 1
    t = np.asarray(t, dtype=float)
    _pos(t)
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    with np.errstate(divide="ignore"):
        lr = np.log(r)
    big = 2.0 * p * lr - 2.0 * n * np.log(t)
    if p == 1:
        log_mag = -n * np.log(t) - np.logaddexp(0.0, big)
        phase = np.ones_like(z)
    else:
        log_mag = -n * np.log(t) + (p - 1) * lr - np.logaddexp(0.0, big)
        with np.errstate(invalid="ignore"):
            phase = np.where(r > 0, np.conj(z) / np.where(r > 0, r, 1.0), 0.0) ** (p - 1)
    return np.exp(log_mag) * phase / math.sqrt(2.0)


def bhat_peak_radius(k, m, t):
    """Radius where |synthetic_bhat(k, m, t, .)| peaks (half-maximum radius when p = 1).

    Found numerically in the variable ln|z|.
    """
    p = _parity(k, m)
    n = k + 1
    guess = n * math.log(t) / p
    f = lambda s: float(np.log(np.abs(synthetic_bhat(k, m, t, math.exp(s)))))  # noqa: E731
    if p == 1:
        top = math.log(abs(complex(synthetic_bhat(k, m, t, 0.0))))
        g = lambda s: f(s) - (top - math.log(2.0))  # noqa: E731
        return math.exp(optimize.brentq(g, guess - 20.0, guess + 20.0, xtol=1e-14, rtol=1e-15))
    res = optimize.minimize_scalar(lambda s: -f(s), bracket=(guess - 5.0, guess, guess + 5.0),
                                   tol=1e-12)
    return math.exp(res.x)


def bhat_peak_slope(k, m, ts):
    """Least-squares slope of ln(peak radius) against ln t."""
    ts = np.asarray(ts, dtype=float)
    radii = np.array([bhat_peak_radius(k, m, t) for t in ts])
    slope, _ = np.polyfit(np.log(ts), np.log(radii), 1)
    return float(slope)


def tz_exponent(m, p):
    """Exponent e in t_z ~ |z|^e: p/(m+2p+1), checked against (k-m)/(2(k+1)) for k = m+2p."""
    if p < 1 or m < 0:
        raise BadParam("need p >= 1 and m >= 0")
    e = Fraction(p, m + 2 * p + 1)
    k = m + 2 * p
    assert e == Fraction(k - m, 2 * (k + 1))
    return e


@dataclass(frozen=True)
class TurningTime:
    t_z: float
    slope: float


def turning_time(t, alpha=None):
    """The unique zero of alpha along a t-line, or None when alpha keeps its sign.

    ``t`` may be a :class:`Trajectory` (then ``alpha`` is its y column).
    The zero is bracketed on the samples and polished with Brent's method on
    a cubic interpolant; alpha must increase through it.
    """
    if isinstance(t, Trajectory):
        t, alpha = t.tau, t.y
    t = np.asarray(t, dtype=float)
    a = np.asarray(alpha, dtype=float)
    sign = np.sign(a)
    nz = sign != 0
    ts, ss, aa = t[nz], sign[nz], a[nz]
    flips = np.nonzero(ss[1:] != ss[:-1])[0]
    exact = np.nonzero(sign == 0)[0]
    if len(flips) == 0 and len(exact) == 0:
        return None
    if len(flips) > 1 or len(exact) > 1:
        raise MultipleZeros(f"alpha changes sign {max(len(flips), len(exact))} times")
    spline = interpolate.CubicSpline(t, a)
    if len(flips) == 1:
        i = flips[0]
        lo, hi = ts[i], ts[i + 1]
        tz = optimize.brentq(spline, lo, hi, xtol=1e-15, rtol=1e-14)
    else:
        tz = float(t[exact[0]])
    slope = float(spline(tz, 1))
    if not slope > 0:
        raise BadParam("alpha must increase through its zero")
    return TurningTime(float(tz), slope)


def write_profile_csv(path, rows):
    """rows of (t, z, value); complex z and value are written by their real parts."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "z", "value"])
        for t, z, v in rows:
            w.writerow([f"{float(t):.17g}", f"{float(np.real(z)):.17g}", f"{float(np.real(v)):.17g}"])

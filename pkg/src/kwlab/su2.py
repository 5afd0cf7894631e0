"""Coefficient arithmetic on su(2) and its complexification.

Elements are numpy arrays whose last axis holds the three coefficients over
the fixed basis (s1, s2, s3).  The bracket obeys [s1, s2] = -2 s3 (and
cyclic), the pairing is <s_i s_j> = delta_ij, and both are extended
bilinearly to complex coefficients.  Leading axes broadcast, so the same
functions act on single elements and on whole grids.
"""

import numpy as np

from . import _kernels
from .errors import NonUnitSigma

SIGMA1 = np.array([1.0, 0.0, 0.0])
SIGMA2 = np.array([0.0, 1.0, 0.0])
SIGMA3 = np.array([0.0, 0.0, 1.0])
# spans the +1 eigenline of [i s3/2, .]
E_PLUS = np.array([1.0, -1.0j, 0.0])

UNIT_TOL = 1e-9


def element(c1, c2, c3):
    """Pack three (possibly complex) coefficients into an element."""
    return np.stack(np.broadcast_arrays(c1, c2, c3), axis=-1)


def _cross(a, b, scale=1.0):
    return _kernels.cross(np.asarray(a), np.asarray(b), scale)


def bracket(a, b):
    """Lie bracket, [a, b] = -2 a x b on coefficient vectors."""
    return _cross(a, b, -2.0)


def inner(a, b):
    """Bilinear (not sesquilinear) pairing <a b>."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def star(eta):
    """Minus the Hermitian conjugate; coefficient-wise complex conjugation."""
    return np.conj(eta)


def norm2(eta):
    """|eta|^2 = <eta star(eta)>, real and non-negative."""
    eta = np.asarray(eta)
    return inner(eta, star(eta)).real


def norm(eta):
    return np.sqrt(norm2(eta))


def eigen_split(sigma, eta, tol=UNIT_TOL):
    """Split eta along the eigenspaces of ad(i sigma / 2).

    Parameters
    ----------
    sigma : array_like, real, shape (..., 3)
        Unit element defining the splitting.
    eta : array_like, shape (..., 3)
        Element to split.
    tol : float
        Allowed deviation of |sigma| from one.

    Returns
    -------
    p0, p_plus, p_minus : ndarray
        Parts with eigenvalue 0, +1 and -1, summing to eta.
    """
    sigma = np.asarray(sigma, dtype=float)
    eta = np.asarray(eta)
    dev = np.abs(norm(sigma) - 1.0)
    if np.any(dev > tol):
        raise NonUnitSigma(f"| |sigma| - 1 | = {np.max(dev):.3e} exceeds {tol:.1e}")
    p0 = inner(sigma, eta)[..., None] * sigma
    perp = eta - p0
    # [i sigma/2, v] = -i sigma x v squares to the identity on the orthogonal plane
    turned = -1.0j * _cross(sigma, perp)
    return p0, 0.5 * (perp + turned), 0.5 * (perp - turned)


def plus_part(sigma, eta):
    """The +1 eigen-part of eta (no unit check; sigma assumed normalized)."""
    sigma = np.asarray(sigma, dtype=float)
    eta = np.asarray(eta)
    perp = eta - inner(sigma, eta)[..., None] * sigma
    return 0.5 * (perp - 1.0j * _cross(sigma, perp))


def _rotation_coefficients(theta):
    """sin(th)/th, (1-cos th)/th^2 and (th - sin th)/th^3, stable at th -> 0."""
    theta = np.asarray(theta, dtype=float)
    s1 = np.sinc(theta / np.pi)
    s2 = 0.5 * np.sinc(theta / (2.0 * np.pi)) ** 2
    small = theta < 1e-3
    th2 = theta * theta
    with np.errstate(divide="ignore", invalid="ignore"):
        s3 = np.where(small, 1.0 / 6.0 - th2 / 120.0 + th2 * th2 / 5040.0,
                      (theta - np.sin(theta)) / np.where(small, 1.0, theta) ** 3)
    return s1, s2, s3


def adjoint_exp(xi, v):
    """Ad(exp xi) v, i.e. exp(ad xi) applied to v (a rotation of coefficients)."""
    xi = np.asarray(xi, dtype=float)
    v = np.asarray(v)
    theta = 2.0 * norm(xi)
    s1, s2, _ = _rotation_coefficients(theta)
    k1 = bracket(xi, v)
    k2 = bracket(xi, k1)
    return v + s1[..., None] * k1 + s2[..., None] * k2


def exp_right_differential(xi, dxi):
    """(dg) g^-1 for g = exp(xi), given the derivative dxi of the generator."""
    xi = np.asarray(xi, dtype=float)
    theta = 2.0 * norm(xi)
    _, s2, s3 = _rotation_coefficients(theta)
    k1 = bracket(xi, dxi)
    k2 = bracket(xi, k1)
    return dxi + s2[..., None] * k1 + s3[..., None] * k2

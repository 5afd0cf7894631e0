"""Random smooth configurations that are decomposable but solve nothing.

They are assembled in the frame sigma = sigma_3 from random smooth scalars,

    phi = f E_+,  beta = g E_+,  bhat = h E_+,  a_3 = alpha sigma_3 + beta + beta*,
    A = A_hat + b,  A_hat = c sigma_3,  b_t = -i(beta - beta*),  b_1 + i b_2 = 2 bhat,

with f nowhere zero, and then moved by a random gauge transformation whose
generator gradient is supplied exactly.  The curvature-split identities hold
on them; the field equations do not.
"""

from dataclasses import dataclass

import numpy as np

from . import su2
from .lattice import GaugeConfig, gauge_transform


@dataclass(frozen=True)
class SmoothScalar:
    """Sum of a few plane waves, offset + sum_j a_j sin(k_j . (t, x1, x2) + p_j)."""

    offset: float
    amps: np.ndarray
    waves: np.ndarray
    phases: np.ndarray

    @classmethod
    def random(cls, rng, amplitude=0.3, n_waves=3, max_wavenumber=1.5):
        return cls(
            offset=float(rng.uniform(-amplitude, amplitude)),
            amps=rng.uniform(-amplitude, amplitude, n_waves) / n_waves,
            waves=rng.uniform(-max_wavenumber, max_wavenumber, (n_waves, 3)),
            phases=rng.uniform(0.0, 2.0 * np.pi, n_waves),
        )

    def _arg(self, t, x1, x2):
        return (self.waves[:, 0] * t[..., None] + self.waves[:, 1] * x1[..., None]
                + self.waves[:, 2] * x2[..., None] + self.phases)

    def __call__(self, t, x1, x2):
        return self.offset + np.sin(self._arg(t, x1, x2)) @ self.amps

    def gradient(self, t, x1, x2):
        c = np.cos(self._arg(t, x1, x2))
        return [c @ (self.amps * self.waves[:, k]) for k in range(3)]


def synthetic_decomposable(grid, seed=0, amplitude=0.3, gauge=True):
    """A random decomposable configuration on ``grid``.

    Parameters
    ----------
    grid : GridSpec
    seed : int
        Seed for ``numpy.random.default_rng``.
    amplitude : float
        Size of the random perturbations (fields are O(1/t)).
    gauge : bool
        Apply a random smooth gauge transformation at the end.
    """
    rng = np.random.default_rng(seed)
    s = [SmoothScalar.random(rng, amplitude) for _ in range(13)]
    tt, xx1, xx2 = grid.mesh()
    v = [fn(tt, xx1, xx2) for fn in s]
    inv_t = 1.0 / tt

    e3 = np.array([0.0, 0.0, 1.0])
    ep = su2.E_PLUS
    along = lambda c, e: c[..., None] * e  # noqa: E731

    alpha = -0.5 * inv_t * (1.0 + v[0])
    f = 0.5 * inv_t * np.exp(v[1] + 1j * v[2])
    g = inv_t * (v[3] + 1j * v[4])
    h = inv_t * (v[5] + 1j * v[6])

    phi = along(f, ep)
    beta = along(g, ep)
    bhat = along(h, ep)
    a_1 = phi.real
    a_2 = -phi.imag
    a_3 = along(alpha, e3) + 2.0 * beta.real

    b_t = (-1j * (beta - su2.star(beta))).real
    b_1 = 2.0 * bhat.real
    b_2 = 2.0 * bhat.imag
    A_t = along(v[7], e3) + b_t
    A_1 = along(v[8], e3) + b_1
    A_2 = along(v[9], e3) + b_2

    cfg = GaugeConfig(grid, A_t, A_1, A_2, a_1, a_2, a_3, label=f"synthetic(seed={seed})")
    if not gauge:
        return cfg
    xi = np.stack([v[10], v[11], v[12]], axis=-1)
    grads = [fn.gradient(tt, xx1, xx2) for fn in s[10:13]]
    dxi = [np.stack([gr[k] for gr in grads], axis=-1) for k in range(3)]
    return gauge_transform(cfg, xi, dxi)

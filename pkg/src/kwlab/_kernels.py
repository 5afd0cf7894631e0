"""Hot loops: the coefficient cross product and the relaxation sweeps.

Every kernel has a numba version (``*_nb``) and a numpy version (``*_np``);
the public names dispatch on :data:`kwlab._accel.USE_NUMBA`.  Both versions
compute identical updates (red-black ordering makes the Gauss-Seidel sweep
independent of the visiting order within a colour).
"""

import numpy as np

from ._accel import USE_NUMBA, njit

# -- cross product on (..., 3) arrays ---------------------------------------


@njit
def _cross_nb(a, b, out, scale):
    n = a.shape[0]
    for i in range(n):
        a0 = a[i, 0]
        a1 = a[i, 1]
        a2 = a[i, 2]
        b0 = b[i, 0]
        b1 = b[i, 1]
        b2 = b[i, 2]
        out[i, 0] = scale * (a1 * b2 - a2 * b1)
        out[i, 1] = scale * (a2 * b0 - a0 * b2)
        out[i, 2] = scale * (a0 * b1 - a1 * b0)


def cross_np(a, b, scale=1.0):
    a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2]
    b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2]
    out = np.stack((a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1), axis=-1)
    return out if scale == 1.0 else scale * out


_SMALL = 4096


def cross_nb(a, b, scale=1.0):
    a, b = np.broadcast_arrays(a, b)
    shape = a.shape
    dtype = np.result_type(a, b)
    if a.size < _SMALL:
        return cross_np(a, b, scale)
    a2 = np.ascontiguousarray(a, dtype=dtype).reshape(-1, 3)
    b2 = np.ascontiguousarray(b, dtype=dtype).reshape(-1, 3)
    out = np.empty_like(a2)
    _cross_nb(a2, b2, out, scale)
    return out.reshape(shape)


cross = cross_nb if USE_NUMBA else cross_np


# -- second-order first derivative along one axis ---------------------------


@njit
def _diff_nb(f, h, out):
    # f, out have shape (before, n, after); central inside, one-sided at the ends
    nb, n, na = f.shape
    c = 0.5 / h
    for p in range(nb):
        for k in range(na):
            out[p, 0, k] = c * (-3.0 * f[p, 0, k] + 4.0 * f[p, 1, k] - f[p, 2, k])
            out[p, n - 1, k] = c * (3.0 * f[p, n - 1, k] - 4.0 * f[p, n - 2, k] + f[p, n - 3, k])
        for i in range(1, n - 1):
            for k in range(na):
                out[p, i, k] = c * (f[p, i + 1, k] - f[p, i - 1, k])


def diff_np(f, h, axis):
    return np.gradient(f, h, axis=axis, edge_order=2)


def diff_nb(f, h, axis):
    f = np.ascontiguousarray(f)
    shape = f.shape
    if f.size < _SMALL or f.dtype.kind not in "fc":
        return diff_np(f, h, axis)
    before = int(np.prod(shape[:axis], dtype=np.int64))
    after = int(np.prod(shape[axis + 1:], dtype=np.int64))
    f3 = f.reshape(before, shape[axis], after)
    out = np.empty_like(f3)
    _diff_nb(f3, float(h), out)
    return out.reshape(shape)


diff = diff_nb if USE_NUMBA else diff_np


# -- relaxation sweeps ------------------------------------------------------
#
# Discretization of  F(u) = -(u_tt + u_rr + u_r / rho) + (e^{4u} - 1) P + 4 s
# on nodes (i, j), rows i along t, columns j along rho with rho_j = j h_r.
# Rows 0 and n_t-1 and the last column hold Dirichlet data; column 0 is the
# axis, where u_rr + u_r/rho -> 2 u_rr and the ghost value u[i,-1] = u[i,1].


@njit
def _node_residual(u, P, s, i, j, ht2, hr2, hr):
    c = u[i, j]
    lt = (u[i + 1, j] - 2.0 * c + u[i - 1, j]) / ht2
    if j == 0:
        lr = 4.0 * (u[i, 1] - c) / hr2
        diag = 2.0 / ht2 + 4.0 / hr2
    else:
        rho = j * hr
        lr = (u[i, j + 1] - 2.0 * c + u[i, j - 1]) / hr2 + (u[i, j + 1] - u[i, j - 1]) / (2.0 * rho * hr)
        diag = 2.0 / ht2 + 2.0 / hr2
    e = np.exp(4.0 * c)
    f = -(lt + lr) + (e - 1.0) * P[i, j] + 4.0 * s[i, j]
    return f, diag + 4.0 * e * P[i, j]


@njit
def _gs_sweep_nb(u, P, s, ht, hr, omega):
    nt, nr = u.shape
    ht2 = ht * ht
    hr2 = hr * hr
    big = 0.0
    for colour in range(2):
        for i in range(1, nt - 1):
            j0 = (colour + i) % 2
            for j in range(j0, nr - 1, 2):
                f, df = _node_residual(u, P, s, i, j, ht2, hr2, hr)
                du = -omega * f / df
                u[i, j] += du
                if abs(du) > big:
                    big = abs(du)
    return big


@njit
def _jacobi_sweep_nb(u, P, s, ht, hr, omega):
    nt, nr = u.shape
    ht2 = ht * ht
    hr2 = hr * hr
    upd = np.zeros_like(u)
    big = 0.0
    for i in range(1, nt - 1):
        for j in range(0, nr - 1):
            f, df = _node_residual(u, P, s, i, j, ht2, hr2, hr)
            du = -omega * f / df
            upd[i, j] = du
            if abs(du) > big:
                big = abs(du)
    for i in range(1, nt - 1):
        for j in range(0, nr - 1):
            u[i, j] += upd[i, j]
    return big


@njit
def _residual_nb(u, P, s, ht, hr):
    nt, nr = u.shape
    out = np.zeros_like(u)
    ht2 = ht * ht
    hr2 = hr * hr
    for i in range(1, nt - 1):
        for j in range(0, nr - 1):
            f, _ = _node_residual(u, P, s, i, j, ht2, hr2, hr)
            out[i, j] = f
    return out


def _residual_and_slope_np(u, P, s, ht, hr):
    """Residual and its diagonal derivative on every free node (zeros elsewhere)."""
    nt, nr = u.shape
    f = np.zeros_like(u)
    df = np.ones_like(u)
    c = u[1:-1, :-1]
    lt = (u[2:, :-1] - 2.0 * c + u[:-2, :-1]) / (ht * ht)
    lr = np.empty_like(c)
    lr[:, 0] = 4.0 * (u[1:-1, 1] - c[:, 0]) / (hr * hr)
    rho = hr * np.arange(1, nr - 1)
    up = u[1:-1, 2:]
    dn = u[1:-1, :-2]
    lr[:, 1:] = (up - 2.0 * c[:, 1:] + dn) / (hr * hr) + (up - dn) / (2.0 * rho * hr)
    diag = np.full(nr - 1, 2.0 / (ht * ht) + 2.0 / (hr * hr))
    diag[0] = 2.0 / (ht * ht) + 4.0 / (hr * hr)
    e = np.exp(4.0 * c)
    Pc = P[1:-1, :-1]
    f[1:-1, :-1] = -(lt + lr) + (e - 1.0) * Pc + 4.0 * s[1:-1, :-1]
    df[1:-1, :-1] = diag[None, :] + 4.0 * e * Pc
    return f, df


def _gs_sweep_np(u, P, s, ht, hr, omega):
    big = 0.0
    for mask in _gs_masks(u.shape):
        f, df = _residual_and_slope_np(u, P, s, ht, hr)
        du = np.where(mask, -omega * f / df, 0.0)
        u += du
        big = max(big, float(np.max(np.abs(du))))
    return big


def _gs_masks(shape):
    nt, nr = shape
    ii, jj = np.meshgrid(np.arange(nt), np.arange(nr), indexing="ij")
    free = (ii > 0) & (ii < nt - 1) & (jj < nr - 1)
    # colour c visits j = (c + i) % 2, (c + i) % 2 + 2, ...  i.e. (i + j) % 2 == c
    return [free & ((ii + jj) % 2 == c) for c in (0, 1)]


def _jacobi_sweep_np(u, P, s, ht, hr, omega):
    f, df = _residual_and_slope_np(u, P, s, ht, hr)
    du = -omega * f / df
    du[0, :] = 0.0
    du[-1, :] = 0.0
    du[:, -1] = 0.0
    u += du
    return float(np.max(np.abs(du)))


def _residual_np(u, P, s, ht, hr):
    return _residual_and_slope_np(u, P, s, ht, hr)[0]


def gs_sweep(u, P, s, ht, hr, omega, use_numba=None):
    if USE_NUMBA if use_numba is None else use_numba:
        return _gs_sweep_nb(u, P, s, ht, hr, omega)
    return _gs_sweep_np(u, P, s, ht, hr, omega)


def jacobi_sweep(u, P, s, ht, hr, omega, use_numba=None):
    if USE_NUMBA if use_numba is None else use_numba:
        return _jacobi_sweep_nb(u, P, s, ht, hr, omega)
    return _jacobi_sweep_np(u, P, s, ht, hr, omega)


def residual(u, P, s, ht, hr, use_numba=None):
    if USE_NUMBA if use_numba is None else use_numba:
        return _residual_nb(u, P, s, ht, hr)
    return _residual_np(u, P, s, ht, hr)

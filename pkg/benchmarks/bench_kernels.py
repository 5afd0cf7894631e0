"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--n 129] [--repeat 5]

Each kernel is called once first so JIT compilation is not timed.  The two
paths are also checked to agree before anything is timed.
"""

import argparse
import timeit

import numpy as np

from kwlab import _kernels
from kwlab._accel import USE_NUMBA
from kwlab.relaxation import AxiGrid, model_weight, random_initial


def best(stmt, repeat, number):
    return min(timeit.repeat(stmt, repeat=repeat, number=number)) / number


def bench_sweeps(n, repeat):
    grid = AxiGrid(n_t=n, n_rho=n)
    P = model_weight(1, grid)
    s = np.zeros(grid.shape)
    u0 = random_initial(grid, 0)
    rows = []
    for name, fn in (("gs_sweep", _kernels.gs_sweep), ("jacobi_sweep", _kernels.jacobi_sweep)):
        a, b = u0.copy(), u0.copy()
        fn(a, P, s, grid.h_t, grid.h_rho, 0.8, use_numba=True)
        fn(b, P, s, grid.h_t, grid.h_rho, 0.8, use_numba=False)
        assert np.allclose(a, b, atol=1e-12), name
        u = u0.copy()
        t_nb = best(lambda: fn(u, P, s, grid.h_t, grid.h_rho, 0.8, use_numba=True), repeat, 20)
        t_np = best(lambda: fn(u, P, s, grid.h_t, grid.h_rho, 0.8, use_numba=False), repeat, 20)
        rows.append((f"{name} {n}x{n}", t_nb, t_np))
    return rows


def bench_lattice(n, repeat):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((n, n, n, 3))
    b = rng.standard_normal((n, n, n, 3))
    assert np.allclose(_kernels.cross_nb(a, b), _kernels.cross_np(a, b))
    assert np.allclose(_kernels.diff_nb(a, 0.1, 1), _kernels.diff_np(a, 0.1, 1))
    return [
        (f"cross {n}^3", best(lambda: _kernels.cross_nb(a, b), repeat, 3),
         best(lambda: _kernels.cross_np(a, b), repeat, 3)),
        (f"diff {n}^3", best(lambda: _kernels.diff_nb(a, 0.1, 1), repeat, 3),
         best(lambda: _kernels.diff_np(a, 0.1, 1), repeat, 3)),
    ]


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=129)
    p.add_argument("--lattice-n", type=int, default=65)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if not USE_NUMBA:
        print("numba disabled (KWLAB_DISABLE_NUMBA or not installed); both columns use numpy")
    print(f"{'kernel':24s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>8s}")
    for name, t_nb, t_np in bench_sweeps(args.n, args.repeat) + bench_lattice(args.lattice_n, args.repeat):
        print(f"{name:24s} {1e3 * t_nb:12.3f} {1e3 * t_np:12.3f} {t_np / t_nb:8.1f}")


if __name__ == "__main__":
    main()

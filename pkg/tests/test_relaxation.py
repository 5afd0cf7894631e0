import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kwlab import _kernels
from kwlab.errors import BadParam, NoConvergence, ShapeMismatch
from kwlab.models import theta_x, w_model
from kwlab.relaxation import (AxiGrid, ScalarGrid2D, SolverConfig, centered_bump,
                              comparison_experiment, extended_grid, model_weight, newton_residual,
                              phi_model_sq, random_initial, solve_u, u_residual,
                              uniqueness_experiment, write_convergence_log, write_solution_csv)

SMALL = AxiGrid(n_t=33, n_rho=33)
FAST = SolverConfig(damping=1.0)


def test_phi_model_sq_examples():
    t = np.array([0.3, 1.0, 4.0])
    assert np.allclose(phi_model_sq(0, t, 2.0), 1 / (2 * t ** 2))
    assert phi_model_sq(1, 1.0, 0.0) == 0
    assert phi_model_sq(1, 1.0, 1e7) == pytest.approx(0.5, rel=1e-9)


def test_grid_and_scalar_field_validation():
    with pytest.raises(BadParam):
        AxiGrid(t_min=1.0, t_max=0.5)
    with pytest.raises(ShapeMismatch):
        ScalarGrid2D(SMALL, np.zeros((3, 3)))
    free = SMALL.free_mask()
    assert not free[0].any() and not free[-1].any() and not free[:, -1].any()
    assert free[1:-1, 0].all()
    with pytest.raises(BadParam):
        SolverConfig(damping=1.5)


def test_residual_examples():
    u = ScalarGrid2D.zeros(SMALL)
    assert np.all(u_residual(u, 1).values == 0)
    tt, rr = SMALL.mesh()
    th, _ = theta_x(tt, rr)
    # w^(k) - w^(m) is finite off the axis; the axis column is replaced by its neighbour
    th[:, 0] = th[:, 1]
    diff = np.where(SMALL.free_mask(), w_model(2, th) - w_model(1, th), 0.0)
    r = u_residual(ScalarGrid2D(SMALL, diff), 1).values
    assert np.max(np.abs(r)) > 1e-2
    r = u_residual(ScalarGrid2D(SMALL, random_initial(SMALL, 1)), 0).values
    assert np.all(np.isfinite(r)) and np.max(np.abs(r)) > 1


def test_solve_examples():
    res = solve_u(0, 0.0, SMALL, None, FAST)
    assert res.sweeps == 1 and res.u.sup() == 0
    res = solve_u(0, 0.0, SMALL, random_initial(SMALL, 1), FAST)
    assert res.u.sup() < 1e-6
    assert np.max(np.abs(newton_residual(res.u, 0).values)) <= 10 * FAST.tolerance
    u = solve_u(1, centered_bump(SMALL, 0.1), SMALL, None, FAST).u
    assert np.max(u.values) <= 1e-8


def test_positive_constant_start_decays():
    init = np.where(SMALL.free_mask(), 0.3, 0.0)
    assert uniqueness_experiment(1, SMALL, cfg=FAST, init=init) < 1e-6


def test_comparison_examples():
    assert comparison_experiment(1, SMALL, 0.0, FAST) == (0.0, 0.0)
    hi, lo = comparison_experiment(1, SMALL, 0.1, FAST)
    assert hi <= 1e-8 and lo < -1e-4
    hi, lo = comparison_experiment(0, SMALL, 1.0, FAST)
    assert hi <= 1e-8
    with pytest.raises(BadParam):
        comparison_experiment(0, SMALL, -1.0, FAST)


def test_no_convergence_carries_last_iterate():
    with pytest.raises(NoConvergence) as info:
        solve_u(1, 0.0, SMALL, random_initial(SMALL, 2), SolverConfig(max_sweeps=5))
    assert info.value.max_sweeps == 5
    assert info.value.last_iterate.values.shape == SMALL.shape
    assert info.value.update_norm > 0


def test_jacobi_and_gauss_seidel_agree():
    s = centered_bump(SMALL, 0.5)
    a = solve_u(2, s, SMALL, None, FAST).u.values
    b = solve_u(2, s, SMALL, None, SolverConfig(scheme="jacobi_newton", damping=1.0)).u.values
    assert np.max(np.abs(a - b)) < 1e-8


def test_kernels_match_numpy_fallback():
    rng = np.random.default_rng(5)
    P = model_weight(1, SMALL)
    s = np.abs(rng.standard_normal(SMALL.shape))
    u0 = random_initial(SMALL, 3)
    args = (P, s, SMALL.h_t, SMALL.h_rho)
    r_nb = _kernels.residual(u0, *args, use_numba=True)
    r_np = _kernels.residual(u0, *args, use_numba=False)
    assert np.allclose(r_nb, r_np, rtol=1e-12, atol=1e-9)
    for sweep in (_kernels.gs_sweep, _kernels.jacobi_sweep):
        a, b = u0.copy(), u0.copy()
        da = sweep(a, *args, 0.8, use_numba=True)
        db = sweep(b, *args, 0.8, use_numba=False)
        assert da == pytest.approx(db, rel=1e-12)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


def test_disable_flag_selects_numpy():
    code = "from kwlab import _kernels; print(_kernels.USE_NUMBA, _kernels.diff is _kernels.diff_np)"
    env = dict(os.environ, KWLAB_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out == ["False", "True"]


@settings(max_examples=8)
@given(st.integers(0, 3), st.integers(0, 2 ** 32 - 1), st.floats(0.05, 1.0))
def test_uniqueness_property(m, seed, amp):
    grid = AxiGrid(n_t=17, n_rho=17)
    assert uniqueness_experiment(m, grid, seed, FAST, amplitude=amp) < 1e-6


@settings(max_examples=8)
@given(st.integers(0, 3), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_monotone_source_response(m, a1, a2):
    grid = AxiGrid(n_t=17, n_rho=17)
    lo, hi = sorted((a1, a2))
    u_lo = solve_u(m, centered_bump(grid, lo), grid, None, FAST).u.values
    u_hi = solve_u(m, centered_bump(grid, hi), grid, None, FAST).u.values
    assert np.all(u_hi <= u_lo + 1e-8)
    assert np.max(u_hi) <= 1e-8


def test_extended_grid_keeps_spacing():
    g = extended_grid(SMALL)
    assert g.rho_max == 2 * SMALL.rho_max and g.h_rho == pytest.approx(SMALL.h_rho)
    assert np.allclose(g.t, SMALL.t)


def test_csv_writers(tmp_path):
    res = solve_u(1, centered_bump(SMALL, 0.1), SMALL, None,
                  SolverConfig(damping=1.0, log_every=50))
    write_solution_csv(tmp_path / "u.csv", res.u)
    write_convergence_log(tmp_path / "log.csv", res.log)
    rows = (tmp_path / "u.csv").read_text().splitlines()
    assert rows[0] == "t,rho,u" and len(rows) == 1 + 33 * 33
    log = (tmp_path / "log.csv").read_text().splitlines()
    assert log[0] == "sweep,update_maxnorm,residual_maxnorm"
    assert int(log[1].split(",")[0]) == 1
    assert float(log[-1].split(",")[1]) < FAST.tolerance

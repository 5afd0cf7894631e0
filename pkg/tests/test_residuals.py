import math

import numpy as np
import pytest

from kwlab import residuals as res
from kwlab import su2
from kwlab.constraints import FluxCurve, constraint_diagnostics, constraint_flux
from kwlab.convergence import EXACT_FLOOR, convergence_study, study_table
from kwlab.errors import BadParam
from kwlab.lattice import GaugeConfig, GridSpec, decompose, sample_family
from kwlab.models import Family
from kwlab.synthetic import synthetic_decomposable

COARSE = GridSpec(0.5, 2.0, 2.0, 17, 17)


def study(check, base=COARSE):
    return {r.equation: r for r in convergence_study(check, base.nested(3))}


def solution_check(fam):
    def check(g, ref):
        c = sample_family(fam, g)
        return res.kw_residual(c, reference=ref) + res.second_order_residual(c, reference=ref)
    return check


def scaled_nahm(g, ref):
    c = sample_family(Family("model", 0), g)
    bad = GaugeConfig(g, c.A_t, c.A_1, c.A_2, c.a_1, c.a_2, 1.1 * c.a_3)
    return res.kw_residual(bad, reference=ref) + res.second_order_residual(bad, reference=ref)


def test_report_fields():
    rep = res.kw_residual(sample_family(Family("model", 1), COARSE))
    assert [r.equation for r in rep] == ["phi_t_transport", "phi_holomorphic", "a3_t_flow",
                                         "electric_1", "electric_2"]
    for r in rep:
        assert r.max_abs >= 0 and r.l2 >= 0 and r.excluded > 0
        assert r.grid_h == COARSE.h_x
        assert res.CHECKS[r.equation][0] == "solution"


@pytest.mark.parametrize("fam", [Family("model", 2), Family("imposter", w=0.3),
                                 Family("cfamily", c=2.0), Family("abelian", r=1.0)])
def test_solution_residuals_second_order(fam):
    rows = study(solution_check(fam))
    assert len(rows) == 8
    for row in rows.values():
        assert row.passed, (row.equation, row.errors, row.ratios)


def test_nahm_pole_residuals():
    rows = study(solution_check(Family("model", 0)))
    # fields are z-independent, so in-plane derivatives vanish exactly; t-derivatives of 1/t do not
    for name in ("phi_holomorphic", "electric_1", "electric_2"):
        assert rows[name].exact and rows[name].status == "exact"
        assert max(rows[name].errors) <= EXACT_FLOOR
    for row in rows.values():
        assert row.passed


def test_scaled_non_solution_residual_persists():
    rows = study(scaled_nahm)
    for name in ("phi_t_transport", "a3_t_flow", "higgs_laplace_1"):
        row = rows[name]
        assert not row.passed
        assert row.errors[-1] > 0.5 * row.errors[0] > 1e-3


def test_convergence_study_needs_nested_levels():
    with pytest.raises(ValueError):
        convergence_study(solution_check(Family("model", 0)), COARSE.nested(2))
    with pytest.raises(ValueError):
        convergence_study(solution_check(Family("model", 0)),
                          [COARSE, GridSpec(0.5, 2.0, 2.0, 30, 30), GridSpec(0.5, 2.0, 2.0, 60, 60)])


def test_study_table_columns():
    rows = convergence_study(solution_check(Family("model", 1)), COARSE.nested(3))
    table = study_table(rows)
    assert len(table) == 3 * len(rows)
    assert set(table[0]) == {"equation", "grid_h", "max_abs", "l2", "excluded", "ratio_vs_previous"}
    assert table[0]["ratio_vs_previous"] is None or table[0]["ratio_vs_previous"] == ""
    assert table[1]["ratio_vs_previous"] == pytest.approx(table[0]["max_abs"] / table[1]["max_abs"])


def test_interior_mask_shares_reference_nodes():
    fine = COARSE.refined().refined()
    m = res.interior_mask(fine, reference=COARSE)
    mc = res.interior_mask(COARSE)
    assert m.sum() == mc.sum()
    tf = np.broadcast_to(fine.t[:, None, None], fine.shape)[m]
    tc = np.broadcast_to(COARSE.t[:, None, None], COARSE.shape)[mc]
    assert np.allclose(np.unique(tf), np.unique(tc))
    with pytest.raises(ValueError):
        res.interior_mask(GridSpec(0.5, 2.0, 2.0, 30, 30), reference=COARSE)


def test_closed_form_curvature_second_order():
    def check(g, ref):
        return res.closed_form_curvature_residual(sample_family(Family("model", 2), g), 2,
                                                  reference=ref)
    assert study(check)["curvature_closed_form"].passed


def decomposition_check(fam, funcs):
    def check(g, ref):
        d = decompose(sample_family(fam, g))
        out = []
        for f in funcs:
            out += f(d, reference=ref)
        return out
    return check


ALL_DECOMP = (res.projected_residuals, res.curvature_projection_residuals,
              res.pairing_flow_residuals, res.balance_residual, res.bochner_residuals)


def test_imposter_identities_second_order():
    rows = study(decomposition_check(Family("imposter", w=0.5), ALL_DECOMP))
    for name, row in rows.items():
        assert row.passed, (name, row.errors)


@pytest.mark.parametrize("m", [1, 2])
def test_model_identities_reduce_to_exact_zeros(m):
    rows = study(decomposition_check(Family("model", m), ALL_DECOMP + (res.alpha_equation_residual,)))
    for name in ("beta_t_flow", "bhat_t_flow", "b_t_constraint", "bhat_in_plus", "magnetic_split",
                 "electric_split", "magnetic_plus", "pairing_bhat", "pairing_beta",
                 "beta_bhat_balance", "bochner_beta", "bochner_bhat"):
        assert rows[name].exact, (name, rows[name].errors)
    for row in rows.values():
        assert row.passed, (row.equation, row.errors)


def test_synthetic_identities_hold_and_solutions_fail():
    def check(g, ref):
        d = decompose(synthetic_decomposable(g, seed=4))
        return res.curvature_projection_residuals(d, reference=ref) + \
            res.projected_residuals(d, reference=ref) + res.pairing_flow_residuals(d, reference=ref) + \
            res.balance_residual(d, reference=ref) + res.bochner_residuals(d, reference=ref)
    rows = study(check)
    for name in ("magnetic_split", "electric_split", "magnetic_plus", "electric_plus_1",
                 "electric_plus_2"):
        assert res.CHECKS[name][0] == "identity"
        assert rows[name].passed, (name, rows[name].errors)
    for name in ("phi_t_hat", "sigma_magnetic", "pairing_beta", "beta_bhat_balance", "bochner_beta"):
        assert rows[name].errors[-1] > 0.3 * rows[name].errors[0] > 1e-3, name


def test_w_equations_second_order():
    def check(g, ref):
        return res.w_equation_residuals(decompose(sample_family(Family("model", 2), g)), 2,
                                        reference=ref)
    rows = study(check, GridSpec(0.5, 2.0, 2.0, 33, 33))
    assert set(rows) == {"w_elliptic", "alpha_from_w", "magnetic_from_w"}
    for row in rows.values():
        assert row.passed, (row.equation, row.errors)


def test_w_function_of_imposter_is_constant():
    d = decompose(sample_family(Family("imposter", w=0.5), COARSE))
    w = res.w_function(d)
    # |phi|^2 = e^{4w}/(2t^2) and sqrt(2) t |phi| = sqrt(1 - |w|^2)
    assert np.allclose(w, 0.25 * math.log(1 - 0.25), atol=1e-12)


def test_divergence_identity():
    shifted = GridSpec(0.5, 2.0, 2.0, 17, 17, x_shift=0.1)

    def check(g, ref):
        return res.divergence_identity_residual(decompose(sample_family(Family("model", 1), g)), 1,
                                                reference=ref)
    assert study(check, shifted)["w_divergence"].passed

    def wrong(g, ref):
        d = decompose(synthetic_decomposable(g, seed=2))
        return res.divergence_identity_residual(d, 1, reference=ref)
    row = study(wrong, shifted)["w_divergence"]
    assert row.errors[-1] > 0.3 * row.errors[0] > 1e-3


# -- flux and constraints ----------------------------------------------------


def test_flux_curve_invariants():
    with pytest.raises(BadParam):
        FluxCurve((2.0, 1.0), (1.0, 1.0), 0.1, 1.0, 2.0)
    with pytest.raises(BadParam):
        FluxCurve((1.0, 2.0), (1.0, -1.0), 0.1, 1.0, 2.0)
    c = FluxCurve((1.0, 2.0, 4.0), (1.0, 0.5, 0.25), 0.1, 1.0, 2.0)
    assert c.scaled == (1.0, 1.0, 1.0) and c.spread == 1.0 and c.growth == 1.0


def test_flux_examples():
    m1 = constraint_flux(Family("model", 1), [4, 8, 16], 0.05, 2000.0)
    assert m1.spread < 1.2
    imp = constraint_flux(Family("imposter", w=0.5), [4, 8], 0.05, 20.0)
    # z-independent curvature: the annulus flux scales with its area
    assert imp.values[1] / imp.values[0] == pytest.approx(4.0, rel=1e-10)
    zero = constraint_flux(Family("cfamily", c=1.0), [1, 2], 0.1, 1.0)
    assert zero.values == (0.0, 0.0) and zero.spread == 1.0
    with pytest.raises(BadParam):
        constraint_flux(Family("abelian"), [1, 2], 0.1, 1.0)


def test_flux_lattice_matches_closed_form():
    g = GridSpec(0.5, 1.0, 4.0, 33, 129)
    fam = Family("imposter", w=0.5)
    lat = constraint_flux(sample_family(fam, g), [1.0], outer_ratio=2.0)
    cf = constraint_flux(fam, [1.0], 0.5, 1.0, outer_ratio=2.0)
    assert lat.values[0] == pytest.approx(cf.values[0], rel=0.01)


DIAG_GRID = GridSpec(0.1, 2.0, 8.0, 33, 65)


def test_constraint_diagnostics_nahm_pole():
    rep = constraint_diagnostics(sample_family(Family("model", 0), DIAG_GRID))
    assert rep.set1_ok and rep.set2_ok and rep.failures() == []
    assert rep.details["min_ta3"] == pytest.approx(0.5) and rep.details["max_ta3"] == pytest.approx(0.5)


def test_constraint_diagnostics_flags_known_violations():
    ab = constraint_diagnostics(sample_family(Family("abelian", r=1.0), DIAG_GRID))
    assert "set1.small_t_lower_bound" in ab.failures()
    imp = constraint_diagnostics(sample_family(Family("imposter", w=0.5), DIAG_GRID))
    assert imp.failures() == ["set2.flux_decay"]
    for m in (1, 2):
        assert constraint_diagnostics(sample_family(Family("model", m), DIAG_GRID)).failures() == []

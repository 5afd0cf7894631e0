"""Run orchestration: one function per CLI verb, each filling a :class:`Report`.

Module errors inside a verb are caught and turned into failed records so a
run always finishes and reports everything it managed to measure.
"""

import math
import os

import numpy as np

from . import asymptotics as asy
from . import residuals as res
from . import su2
from .constraints import constraint_diagnostics, constraint_flux
from .convergence import RATIO_BAND, convergence_study, study_table
from .errors import KWLabError, NoConvergence
from .lattice import decompose, sample_family
from .models import (Family, model_alpha, model_phi_norm, sinh_ratio, theta_x,
                     triple_product_closed_form, w_model)
from .relaxation import (comparison_experiment, random_initial, solve_u, write_convergence_log,
                         write_solution_csv)
from .report import Report, write_rows_csv, write_study_csv
from .synthetic import synthetic_decomposable

COMMANDS = ("model-eval", "model-table", "residual", "identity", "flux", "solve-w", "ode",
            "asym", "report")


def _path(out, name):
    return None if out is None else os.path.join(out, name)


def _study_records(report, prefix, rows):
    for row in rows:
        report.add(f"{prefix}.{row.equation}", row.status,
                   [float(r) for r in row.ratios] if not row.exact else max(row.errors),
                   list(RATIO_BAND) if not row.exact else "exact zero", "ratio")


# -- verbs -------------------------------------------------------------------


def cmd_model_eval(cfg, report, out):
    fam = cfg.family
    t, x1, x2 = cfg["point.t"], cfg["point.x1"], cfg["point.x2"]
    f = fam.sample(t, x1, x2)
    a_abs = math.sqrt(sum(float(su2.norm2(a)) for a in (f.a_1, f.a_2, f.a_3)))
    report.add("t_abs_a", math.isfinite(a_abs), t * a_abs, None, "")
    report.add("t_abs_a3", True, t * float(su2.norm(f.a_3)), None, "")
    report.add("abs_phi", True, float(su2.norm(f.phi)), None, "1/length")
    triple = float(su2.inner(f.a_3, su2.bracket(f.a_1, f.a_2)))
    if fam.kind == "model":
        report.add("triple_product", triple >= -1e-12, triple, ">= 0", "1/length^3")
        theta, x = theta_x(t, complex(x1, x2))
        report.add("theta", True, theta, None, "")
        report.add("sinh_ratio", True, float(sinh_ratio(fam.m, theta)), None, "")
        report.add("w_model", True, float(w_model(fam.m, theta)), "<= 0", "")
        # scale invariance: fields at (lt, lz) are fields at (t, z) over l
        g = fam.sample(2.0 * t, 2.0 * x1, 2.0 * x2)
        dev = max(float(np.max(np.abs(2.0 * getattr(g, k) - getattr(f, k))))
                  for k in ("A_1", "A_2", "a_1", "a_2", "a_3"))
        report.add("scale_invariance", dev <= 1e-12 * max(1.0, 1.0 / t), dev, 1e-12, "")
    else:
        report.add("triple_product", True, triple, None, "1/length^3")


def cmd_model_table(cfg, report, out):
    m = cfg["model.m"]
    t = cfg["table.t"]
    rho = np.linspace(0.0, cfg["table.rho_max"], cfg["table.n"])
    alpha = model_alpha(m, t, rho)
    phi = model_phi_norm(m, t, rho)
    theta, _ = theta_x(t, rho)
    w = w_model(m, theta)
    triple = -alpha * phi ** 2
    closed = triple_product_closed_form(m, t, rho)
    tol = 1e-12 / t
    report.add("phi_nondecreasing", bool(np.all(np.diff(phi) >= -tol)),
               float(np.min(np.diff(phi))), -tol, "1/length")
    # alpha runs from -(m+1)/(2t) on the axis up to -1/(2t), so it is |alpha| that decreases
    d_abs = np.diff(np.abs(alpha))
    report.add("abs_alpha_nonincreasing", bool(np.all(d_abs <= tol)), float(np.max(d_abs)), tol,
               "1/length")
    a0 = float(alpha[0])
    report.add("alpha_on_axis", abs(a0 + (m + 1) / (2 * t)) <= 1e-6 * (m + 1) / (2 * t), a0,
               -(m + 1) / (2 * t), "1/length")
    report.add("triple_product_nonnegative", bool(np.min(triple) >= -1e-12), float(np.min(triple)),
               -1e-12, "1/length^3")
    if out is not None:
        write_rows_csv(_path(out, "model_table.csv"),
                       ["t", "rho", "alpha", "phi_norm", "w", "triple_product", "closed_form"],
                       [(t, float(r), float(a), float(p), float(ww), float(tp), float(c))
                        for r, a, p, ww, tp, c in zip(rho, alpha, phi, np.broadcast_to(w, rho.shape),
                                                      triple, closed)])


def cmd_residual(cfg, report, out):
    fam = cfg.family
    grids = cfg.grid.nested(cfg["grid.levels"])

    def check(g, ref):
        c = sample_family(fam, g)
        reps = res.kw_residual(c, reference=ref) + res.second_order_residual(c, reference=ref)
        if fam.kind == "model":
            reps += res.closed_form_curvature_residual(c, fam.m, reference=ref)
        return reps

    rows = convergence_study(check, grids)
    _study_records(report, "residual", rows)
    if out is not None:
        write_study_csv(_path(out, "residual_study.csv"), study_table(rows))


_IDENTITY_FUNCS = {
    "projected": res.projected_residuals,
    "curvature_projection": res.curvature_projection_residuals,
    "pairing": res.pairing_flow_residuals,
    "balance": res.balance_residual,
    "bochner": res.bochner_residuals,
    "alpha": res.alpha_equation_residual,
}


def _identity_check(fam, sets):
    m = fam.m if fam.kind == "model" else 0

    def check(g, ref):
        d = decompose(sample_family(fam, g))
        reps = []
        for name in sets:
            if name == "w":
                reps += res.w_equation_residuals(d, m, reference=ref)
            elif name == "divergence":
                reps += res.divergence_identity_residual(d, m, reference=ref)
            else:
                reps += _IDENTITY_FUNCS[name](d, reference=ref)
        return reps

    return check


def cmd_identity(cfg, report, out):
    fam = cfg.family
    grids = cfg.grid.nested(cfg["grid.levels"])
    rows = convergence_study(_identity_check(fam, cfg["identity.sets"]), grids)
    _study_records(report, "identity", rows)
    table = study_table(rows)
    for seed in range(cfg["identity.synthetic"]):
        s = cfg["run.seed"] + seed

        def syn(g, ref, s=s):
            return res.curvature_projection_residuals(decompose(synthetic_decomposable(g, s)),
                                                      reference=ref)

        srows = convergence_study(syn, grids)
        _study_records(report, f"synthetic{s}", srows)
        table += study_table(srows)
    if out is not None:
        write_study_csv(_path(out, "identity_study.csv"), table)


def cmd_flux(cfg, report, out):
    fam = cfg.family
    diag = constraint_diagnostics(sample_family(fam, cfg.grid))
    for prefix, bullets in (("set1", diag.set1), ("set2", diag.set2)):
        for b in bullets:
            report.add(f"constraints.{prefix}.{b.name}", b.passed, b.value, b.threshold, "")
    if fam.kind == "abelian":
        report.add("flux.R_times_f_spread", "skip", None, None, "no closed-form curvature")
        return
    curve = constraint_flux(fam, cfg["flux.radii"], cfg["flux.t_min"], cfg["flux.t_max"],
                            cfg["flux.outer_ratio"])
    report.add("flux.R_times_f_spread", curve.spread <= cfg["flux.max_spread"], curve.spread,
               cfg["flux.max_spread"], "max/min")
    report.add("flux.R_times_f_growth", "pass", curve.growth, None, "per step")
    if out is not None:
        write_rows_csv(_path(out, "flux.csv"), ["R", "f", "R_f"],
                       [(r, v, s) for r, v, s in zip(curve.radii, curve.values, curve.scaled)])


def cmd_solve_w(cfg, report, out):
    grid = cfg.axi_grid
    solver = cfg.solver
    m = cfg["relax.m"]
    try:
        if cfg["relax.experiment"] == "uniqueness":
            u0 = random_initial(grid, cfg["run.seed"], cfg["relax.init_amplitude"])
            result = solve_u(m, 0.0, grid, u0, solver)
            sup = result.u.sup()
            report.add("uniqueness.sup_u", sup < 1e-6, sup, 1e-6, "")
            report.add("uniqueness.sweeps", "pass", result.sweeps, solver.max_sweeps, "sweeps")
            if out is not None:
                write_solution_csv(_path(out, "solution.csv"), result.u)
                write_convergence_log(_path(out, "convergence_log.csv"), result.log)
        else:
            a = cfg["relax.source"]
            hi, lo = comparison_experiment(m, grid, a, solver)
            report.add("comparison.max_u", hi <= 1e-8, hi, 1e-8, "")
            report.add("comparison.min_u", lo < 0 if a > 0 else abs(lo) <= 1e-8, lo,
                       "< 0" if a > 0 else 0.0, "")
    except NoConvergence as exc:
        report.add("solve_w.converged", False, exc.update_norm, solver.tolerance, "update max-norm")


def _forcing(kind, mu):
    if kind == "sin":
        return lambda s: mu * math.sin(s)
    if kind == "const":
        return lambda s: -mu
    return None


def cmd_ode(cfg, report, out):
    if cfg["ode.equation"] == "alpha":
        traj = asy.riccati_alpha(cfg["ode.zconst"], cfg["ode.alpha0"], cfg["ode.t0"], cfg["ode.t_end"])
        report.add("alpha.status", "pass", traj.status, None, "")
        report.add("alpha.final", "pass", float(traj.y[-1]), None, "1/length")
        if cfg["ode.zconst"] == 0 and not traj.blew_up:
            # closed form alpha = -1/(2(t + tau)) with tau fixed by the initial value
            a0, t0 = cfg["ode.alpha0"], cfg["ode.t0"]
            if a0 < 0:
                tau = -1.0 / (2.0 * a0) - t0
                err = float(np.max(np.abs(traj.y + 0.5 / (traj.tau + tau))))
                report.add("alpha.closed_form_error", err <= 1e-8, err, 1e-8, "1/length")
    else:
        spec = asy.RiccatiSpec(cfg["ode.k"], cfg["ode.mu"], cfg["ode.y0"])
        forcing = _forcing(cfg["ode.forcing"], spec.mu)
        traj = asy.riccati_y(spec, forcing, cfg["ode.tau_end"])
        report.add("y.status", "pass", traj.status, None, "")
        if traj.blew_up:
            report.add("y.blow_up_tau", "pass", traj.blow_up_at, None, "")
        lam2 = spec.lam ** 2 - spec.mu
        if not traj.blew_up and spec.y0 ** 2 < lam2:
            viol = asy.tanh_bound_check(spec.k, traj, spec.mu)
            report.add("y.lower_bound_violation", viol <= 1e-8, viol, 1e-8, "")
        if forcing is None and abs(spec.y0) < spec.lam:
            err = float(np.max(np.abs(traj.y - asy.tanh_solution(spec.k, spec.y0, traj.tau))))
            report.add("y.closed_form_error", err <= 1e-8, err, 1e-8, "")
    if out is not None:
        traj.write_csv(_path(out, "trajectory.csv"))


def cmd_asym(cfg, report, out):
    from fractions import Fraction

    bad = []
    for m in range(cfg["asym.m_max"] + 1):
        for p in range(1, cfg["asym.p_max"] + 1):
            k = m + 2 * p
            if asy.tz_exponent(m, p) != Fraction(k - m, 2 * (k + 1)):
                bad.append((m, p))
    report.add("tz_exponent.rational_identity", not bad, len(bad), 0, "mismatches")
    k, m = cfg["asym.k"], cfg["asym.m"]
    t_z = cfg["asym.t_z"]
    ts = np.geomspace(t_z / 100.0, t_z * 100.0, 4001)
    tt = asy.turning_time(ts, asy.alpha_profile(k, ts, t_z))
    err = abs(tt.t_z - t_z) if tt else float("inf")
    report.add("turning_time.recovered", err <= 1e-6, err, 1e-6, "length")
    try:
        p = (k - m) // 2
        slope = asy.bhat_peak_slope(k, m, np.geomspace(1e-3, 1e-1, 9))
        target = (k + 1) / p
        report.add("bhat_peak.slope", abs(slope - target) <= 1e-3, slope, target, "")
    except KWLabError as exc:
        report.add("bhat_peak.slope", False, str(exc), None, "")
    if out is not None:
        rows = [(t, 0.0, a) for t, a in zip(ts[::40], asy.alpha_profile(k, ts[::40], t_z))]
        asy.write_profile_csv(_path(out, "profile.csv"), rows)


def cmd_report(cfg, report, out):
    for verb in ("model-table", "residual", "identity", "ode", "asym"):
        sub = Report(verb, {})
        _dispatch(verb, cfg, sub, out)
        for r in sub.records:
            report.records.append(type(r)(f"{verb}:{r.name}", r.status, r.value, r.threshold, r.units))


_VERBS = {
    "model-eval": cmd_model_eval,
    "model-table": cmd_model_table,
    "residual": cmd_residual,
    "identity": cmd_identity,
    "flux": cmd_flux,
    "solve-w": cmd_solve_w,
    "ode": cmd_ode,
    "asym": cmd_asym,
    "report": cmd_report,
}


def _dispatch(command, cfg, report, out):
    try:
        _VERBS[command](cfg, report, out)
    except (KWLabError, ValueError, ArithmeticError) as exc:
        report.add(f"{command}.error", False, f"{type(exc).__name__}: {exc}", None, "")


def run_suite(cfg, command, out=None):
    """Run ``command`` with the parsed config; returns the filled report."""
    if command not in _VERBS:
        raise ValueError(f"unknown command {command!r}")
    if out is not None:
        os.makedirs(out, exist_ok=True)
    report = Report(command, cfg.echo())
    _dispatch(command, cfg, report, out)
    if cfg["report.timestamp"]:
        report.stamp()
    return report


__all__ = ["COMMANDS", "run_suite", "Family"]

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kwlab import su2
from kwlab.errors import GridTooSmall, PhiZeroEverywhere, ZeroOnCircle
from kwlab.lattice import (GaugeConfig, GridSpec, covariant_derivative, curvature, decompose,
                           derivative, gauge_transform, recompose, sample_family,
                           vanishing_degree, write_field_csv)
from kwlab.models import Family, model_curvature_arrays
from kwlab.residuals import interior_mask, kw_residual
from kwlab.synthetic import synthetic_decomposable

GRID = GridSpec(0.5, 2.0, 2.0, 17, 17)


def zero_cfg(grid):
    z = np.zeros(grid.shape + (3,))
    return GaugeConfig(grid, z, z, z, z, z, z)


def test_grid_spec_basics():
    g = GridSpec(0.5, 2.0, 2.0, 17, 33)
    assert g.shape == (17, 33, 33)
    assert g.h_t == pytest.approx(1.5 / 16)
    assert g.h_x == pytest.approx(4.0 / 32)
    r = g.refined()
    assert (r.n_t, r.n_x) == (33, 65)
    assert [x.n_t for x in g.nested(3)] == [17, 33, 65]
    with pytest.raises(GridTooSmall):
        GridSpec(0.5, 2.0, 2.0, 4, 17)
    with pytest.raises(ValueError):
        GridSpec(0.0, 2.0, 2.0, 17, 17)


def test_sample_family_examples():
    cfg = sample_family(Family("model", 0), GRID)
    t = GRID.t[:, None, None]
    assert np.allclose(su2.norm(cfg.a_3), 1 / (2 * t))
    assert np.allclose(cfg.a_3, cfg.a_3[:, :1, :1])
    assert np.all(su2.norm(sample_family(Family("imposter", w=1.0), GRID).phi) == 0)
    assert np.all(su2.norm(sample_family(Family("abelian", r=1.0), GRID).phi) == 0)


def test_derivative_exact_on_quadratics():
    tt, x1, x2 = GRID.mesh()
    f = tt ** 2 - 3 * x1 * x2 + x2 ** 2
    assert np.allclose(derivative(f, GRID, "t"), 2 * tt, atol=1e-12)
    assert np.allclose(derivative(f, GRID, "1"), -3 * x2, atol=1e-12)
    assert np.allclose(derivative(f, GRID, "2"), -3 * x1 + 2 * x2, atol=1e-12)


def test_covariant_derivative_examples():
    cfg = zero_cfg(GRID)
    const = np.broadcast_to(np.array([0.3, -0.1, 2.0]), GRID.shape + (3,))
    for k in ("t", "1", "2"):
        assert np.allclose(covariant_derivative(cfg, const, k), 0)
    tt = GRID.mesh()[0]
    f = tt[..., None] * su2.SIGMA3
    assert np.allclose(covariant_derivative(cfg, f, "t"), su2.SIGMA3, atol=1e-12)
    nahm = sample_family(Family("model", 0), GRID)
    s3 = np.broadcast_to(su2.SIGMA3, GRID.shape + (3,))
    for k in ("t", "1", "2"):
        assert np.all(covariant_derivative(nahm, s3, k) == 0)


def test_curvature_examples():
    for F in curvature(zero_cfg(GRID)):
        assert np.all(F == 0)
    for F in curvature(sample_family(Family("model", 0), GRID)):
        assert np.max(np.abs(F)) < 1e-12


@pytest.mark.parametrize("m", [1, 2])
def test_curvature_second_order(m):
    errs = []
    for g in GridSpec(0.5, 2.0, 2.0, 17, 17).nested(3):
        cfg = sample_family(Family("model", m), g)
        tt, x1, x2 = g.mesh()
        b3, e1, e2 = model_curvature_arrays(m, tt, x1, x2)
        exact = (e1, e2, b3)
        mask = interior_mask(g, reference=GridSpec(0.5, 2.0, 2.0, 17, 17))
        errs.append(max(np.max(su2.norm(a - b)[mask]) for a, b in zip(curvature(cfg), exact)))
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert 3.2 <= r1 <= 4.8 and 3.2 <= r2 <= 4.8


def test_gauge_transform_examples():
    cfg = sample_family(Family("model", 1), GRID)
    same = gauge_transform(cfg, np.zeros(3))
    for k in ("A_t", "A_1", "A_2", "a_1", "a_2", "a_3"):
        assert np.allclose(getattr(same, k), getattr(cfg, k))
    nahm = sample_family(Family("model", 0), GRID)
    th = 0.4
    g = gauge_transform(nahm, th * su2.SIGMA3)
    # [s3, s1] = -2 s2, so push-forward by exp(th s3) turns the (s1, s2) plane by -2 th
    c, s = np.cos(2 * th), -np.sin(2 * th)
    a1 = nahm.a_1
    rot = np.stack([c * a1[..., 0] - s * a1[..., 1], s * a1[..., 0] + c * a1[..., 1], a1[..., 2]], -1)
    assert np.allclose(g.a_1, rot)
    assert np.allclose(su2.norm(g.phi), su2.norm(nahm.phi))
    assert np.allclose(g.A_1, 0) and np.allclose(g.a_3, nahm.a_3)


@settings(max_examples=15)
@given(st.integers(0, 3), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_gauge_invariants_for_constant_generators(m, c1, c2, c3):
    cfg = sample_family(Family("model", m), GridSpec(0.5, 2.0, 1.0, 9, 9))
    g = gauge_transform(cfg, np.array([c1, c2, c3]))
    assert np.allclose(su2.norm(g.phi), su2.norm(cfg.phi), atol=1e-9)
    assert np.allclose(su2.norm(g.a_3), su2.norm(cfg.a_3), atol=1e-9)
    trip = lambda c: su2.inner(c.a_3, su2.bracket(c.a_1, c.a_2))  # noqa: E731
    assert np.allclose(trip(g), trip(cfg), atol=1e-9)
    F0 = sum(su2.norm2(F) for F in curvature(cfg))
    F1 = sum(su2.norm2(F) for F in curvature(g))
    assert np.allclose(F0, F1, atol=1e-9)


def test_random_gauge_keeps_residual_second_order():
    from kwlab.synthetic import SmoothScalar

    rng = np.random.default_rng(3)
    scalars = [SmoothScalar.random(rng, 0.4) for _ in range(3)]
    errs = []
    ref = GridSpec(0.5, 2.0, 2.0, 17, 17)
    for g in ref.nested(3):
        mesh = g.mesh()
        xi = np.stack([s(*mesh) for s in scalars], -1)
        grads = [np.stack([s.gradient(*mesh)[k] for s in scalars], -1) for k in range(3)]
        cfg = gauge_transform(sample_family(Family("model", 1), g), xi, grads)
        errs.append(max(r.max_abs for r in kw_residual(cfg, reference=ref)))
    assert 3.2 <= errs[0] / errs[1] <= 4.8 and 3.2 <= errs[1] / errs[2] <= 4.8


def test_decompose_nahm_pole():
    d = decompose(sample_family(Family("model", 0), GRID))
    t = GRID.t[:, None, None]
    assert np.allclose(d.sigma, su2.SIGMA3)
    assert np.allclose(d.alpha, -1 / (2 * t))
    assert np.all(d.beta == 0) and np.all(d.bhat == 0)
    assert not d.flagged.any()


def test_decompose_imposter():
    d = decompose(sample_family(Family("imposter", w=0.5), GRID))
    assert np.allclose(d.beta, 0, atol=1e-14)
    tb = GRID.t[:, None, None] * su2.norm(d.bhat)
    assert np.min(tb) > 0.1
    assert np.ptp(tb) < 1e-12


def test_decompose_flags_axis_zero():
    g = GridSpec(0.5, 2.0, 2.0, 9, 9)
    d = decompose(sample_family(Family("model", 2), g))
    assert d.flagged[:, 4, 4].all() and d.flagged.sum() == 9
    assert np.allclose(su2.norm(d.sigma), 1)
    with pytest.raises(PhiZeroEverywhere):
        decompose(sample_family(Family("abelian", r=1.0), g))


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_recompose_roundtrip(seed):
    cfg = synthetic_decomposable(GridSpec(0.5, 2.0, 1.0, 9, 9), seed)
    d = decompose(cfg)
    a3, At, A1, A2 = recompose(d)
    for a, b in ((a3, cfg.a_3), (At, cfg.A_t), (A1, cfg.A_1), (A2, cfg.A_2)):
        assert np.max(np.abs(a - b)) <= 1e-10


@pytest.mark.parametrize("fam", [Family("model", m) for m in range(4)] + [Family("imposter", w=0.5)])
def test_phi_components_orthogonal_on_grids(fam):
    cfg = sample_family(fam, GRID)
    scale = np.max(su2.norm2(cfg.phi))
    assert np.max(np.abs(su2.inner(cfg.phi, cfg.phi))) <= 1e-10 * scale
    assert np.allclose(su2.norm(cfg.a_1), su2.norm(cfg.a_2), atol=1e-10)


def test_vanishing_degree_examples():
    g = GridSpec(0.5, 2.0, 2.0, 9, 41)
    x = g.x
    z = x[:, None] + 1j * x[None, :]
    for m in range(4):
        phi = (z ** m)[..., None] * (su2.SIGMA1 - 1j * su2.SIGMA2)
        assert vanishing_degree(phi, x, 1.0).degree == m
    cfg = sample_family(Family("model", 2), g)
    i = np.argmin(abs(g.t - 1.0))
    assert vanishing_degree(cfg.phi[i], x, g.t[i]).degree == 2
    cfg = sample_family(Family("model", 0), g)
    assert vanishing_degree(cfg.phi[0], x, 1.0).degree == 0
    phi = ((z - 1.0))[..., None] * (su2.SIGMA1 - 1j * su2.SIGMA2)
    with pytest.raises(ZeroOnCircle):
        vanishing_degree(phi, x, 1.0)


def test_write_field_csv(tmp_path):
    g = GridSpec(0.5, 2.0, 1.0, 8, 8)
    cfg = sample_family(Family("model", 1), g)
    p = tmp_path / "phi.csv"
    write_field_csv(p, g, "phi", cfg.phi)
    lines = p.read_text().splitlines()
    assert lines[0].startswith("# field=phi")
    assert lines[1] == "t,x1,x2,c1_re,c1_im,c2_re,c2_im,c3_re,c3_im"
    assert len(lines) == 2 + 8 ** 3
    write_field_csv(p, g, "a3", cfg.a_3)
    assert p.read_text().splitlines()[1] == "t,x1,x2,c1,c2,c3"

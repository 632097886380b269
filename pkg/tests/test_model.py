import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import small_model
from fracchoquard.grid import Field, from_function, inner, l2_norm, make_grid
from fracchoquard.model import (
    HypothesisError,
    PenalizationParams,
    PotentialSpec,
    RegionSpec,
    autonomous_config,
    eval_f,
    eval_g,
    eval_potential,
    g_arrays,
    growth_q_window,
    indicator_lambda,
    make_config,
    norm_eps_sq,
    existence_q_window,
)
from fracchoquard.nonlocal_ops import frac_seminorm_sq

WELLS = ((-2.0,), (2.0,))


def model(**kw):
    args = dict(dim=1, s=0.4, mu=0.5, q=3.0, eps=0.5,
                potential=PotentialSpec("product_well", 1.0, 2.0, 1.0, WELLS),
                lambda_region=RegionSpec("box", (0.0,), (4.0,)), grid=make_grid(1, 12.0, 64))
    args.update(kw)
    return make_config(**args)


def test_standard_scenario_is_valid():
    cfg = model()
    assert existence_q_window(1, 0.4, 0.5) == (2.0, pytest.approx(5.0))
    assert cfg.V0 == 1.0
    assert cfg.pen.ell == 10.0 and cfg.pen.a == pytest.approx(0.1)
    assert cfg.delta == pytest.approx(1.0)
    assert cfg.expected_solution_count == 2


@pytest.mark.parametrize("q", [6.0, 7.0, 2.0, 1.5])
def test_q_outside_window(q):
    with pytest.raises(HypothesisError) as exc:
        model(q=q)
    assert exc.value.hypothesis == "exponent window"


def test_mu_must_stay_below_2s():
    with pytest.raises(HypothesisError) as exc:
        model(mu=0.9)
    assert exc.value.hypothesis == "mu window"


def test_s_window_and_dimension():
    with pytest.raises(HypothesisError, match="s window"):
        model(s=1.0)
    with pytest.raises(HypothesisError, match="N > 2s"):
        model(s=0.6, mu=0.5, q=3.0)


def test_growth_window_contains_existence_window():
    assert growth_q_window(1, 0.4, 0.5)[1] == pytest.approx(7.5)
    for N, s_, mu in [(1, 0.4, 0.5), (1, 0.45, 0.1), (2, 0.7, 1.3), (2, 0.9, 0.2)]:
        assert growth_q_window(N, s_, mu)[1] > existence_q_window(N, s_, mu)[1]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        model(q=4.9)


def test_missing_lambda_names_v2():
    with pytest.raises(HypothesisError) as exc:
        model(lambda_region=None)
    assert exc.value.hypothesis == "(V2)"


def test_lambda_boundary_must_exceed_v0():
    # a region that still contains a well on its boundary violates (V2)
    with pytest.raises(HypothesisError, match="V2"):
        model(lambda_region=RegionSpec("box", (0.0,), (2.0,)))


def test_lambda_must_fit_in_box():
    with pytest.raises(HypothesisError, match="containment"):
        model(lambda_region=RegionSpec("box", (0.0,), (13.0,)))


def test_delta_too_large():
    with pytest.raises(HypothesisError, match="containment"):
        model(delta=2.5)


def test_v1_positive_base():
    with pytest.raises(HypothesisError, match="V1"):
        model(potential=PotentialSpec("product_well", -1.0, 2.0, 1.0, WELLS))


def test_ell_must_exceed_two():
    with pytest.raises(HypothesisError, match="penalization"):
        model(ell=2.0)


def test_constant_potential():
    g = make_grid(1, 5.0, 16)
    cfg = autonomous_config(1.0, 0.4, 0.5, 3.0, g)
    assert np.all(eval_potential(cfg).values == 1.0)
    assert cfg.pen is None and cfg.eps == 1.0


def test_product_well_values():
    V = PotentialSpec("product_well", 1.0, 2.0, 1.0, WELLS)
    assert V.at_point(2.0) == 1.0 and V.at_point(-2.0) == 1.0
    x = 0.7
    direct = 1.0 + 2.0 * (1 - np.exp(-(x + 2) ** 2)) * (1 - np.exp(-(x - 2) ** 2))
    assert V.at_point(x) == pytest.approx(direct, rel=1e-14)
    far = V(np.array([6.0, 8.0, 10.0, 30.0]))
    assert np.all(np.diff(far) > 0) or np.allclose(far, 3.0)
    assert np.all(far <= 3.0) and far[-1] == pytest.approx(3.0)


def test_product_well_2d():
    V = PotentialSpec("product_well", 0.5, 1.0, 1.0, ((1.0, 1.0), (-1.0, 0.0)))
    assert V.at_point((1.0, 1.0)) == 0.5
    assert V.at_point((-1.0, 0.0)) == 0.5
    assert V.at_point((5.0, 5.0)) > 1.4


def test_v0_uses_well_points_off_grid():
    # n = 10 on [-12, 12) puts no grid point on x = +-2
    cfg = model(grid=make_grid(1, 12.0, 10))
    assert cfg.V0 == 1.0


def test_indicator_inside_outside_and_measure():
    cfg = model(grid=make_grid(1, 12.0, 256))
    ind = indicator_lambda(cfg).values
    g = cfg.grid
    assert ind[np.argmin(np.abs(g.axis))] == 1.0
    assert ind[0] == 0.0
    assert abs(ind.mean() - 8.0 / 24.0) <= 2.0 / 256


def test_indicator_ball_2d():
    pot = PotentialSpec("product_well", 1.0, 2.0, 1.0, ((0.0, 0.0),))
    cfg = make_config(dim=2, s=0.7, mu=0.8, q=2.5, eps=0.5, potential=pot,
                      lambda_region=RegionSpec("ball", (0.0, 0.0), (3.0,)), grid=make_grid(2, 6.0, 64))
    frac = indicator_lambda(cfg).values.mean()
    assert abs(frac - np.pi * 9 / 144) <= 2 * 2.0 / 64
    assert cfg.delta == pytest.approx(1.5)


def test_eval_f_values():
    f, F = eval_f(np.array([-1.0, 2.0]), 3.0)
    assert f[0] == 0.0 and F[0] == 0.0
    assert f[1] == 4.0 and F[1] == pytest.approx(8.0 / 3.0)


def test_calibration_identity():
    p = PenalizationParams.calibrated(1.0, 3.0, 10.0)
    f, _ = eval_f(p.a, 3.0)
    assert f / p.a == pytest.approx(1.0 / 10.0, rel=1e-14)
    p = PenalizationParams.calibrated(2.0, 2.5, 7.0)
    assert eval_f(p.a, 2.5)[0] / p.a == pytest.approx(2.0 / 7.0, rel=1e-13)


def test_g_equals_f_below_threshold(model64):
    vals = np.linspace(-0.05, model64.pen.a, 64)
    g, G = g_arrays(vals, model64)
    f, F = eval_f(vals, 3.0)
    assert np.array_equal(g, f) and np.allclose(G, F, rtol=1e-15, atol=0)


def test_g_caps_outside_only(model64):
    a = model64.pen.a
    u = Field(model64.grid, np.full(64, 2 * a))
    g, _ = eval_g(u, model64)
    inside = model64.inside
    assert np.allclose(g.values[~inside], 0.1 * 2 * a, rtol=1e-14)
    assert np.allclose(g.values[inside], (2 * a) ** 2, rtol=1e-14)
    big = Field(model64.grid, np.full(64, 50.0))
    assert np.allclose(eval_g(big, model64)[0].values[inside], 2500.0)


def test_norm_eps_sq_zero_and_single_mode():
    L = 10.0
    g = make_grid(1, L, 64)
    cfg = autonomous_config(1.0, 0.4, 0.5, 3.0, g)
    assert norm_eps_sq(Field(g, np.zeros(64)), cfg) == 0.0
    u = from_function(g, lambda x: np.cos(np.pi * x / L))
    expected = (np.pi / L) ** 0.8 * l2_norm(u) ** 2 + l2_norm(u) ** 2
    assert norm_eps_sq(u, cfg) == pytest.approx(expected, rel=1e-12)


def test_norm_eps_sq_recomposes(model64, rng):
    u = Field(model64.grid, rng.standard_normal(64))
    parts = (model64.eps ** 0.8 * frac_seminorm_sq(u, 0.4)
             + inner(u, Field(model64.grid, model64.potential_values * u.values)))
    assert norm_eps_sq(u, model64) == pytest.approx(parts, rel=1e-12)


def test_with_eps_revalidates(model64):
    other = model64.with_eps(0.25, make_grid(1, 12.0, 128))
    assert other.eps == 0.25 and other.grid.points_per_axis == 128 and other.V0 == 1.0


def test_single_well_expected_count():
    cfg = small_model(wells=((0.0,),))
    assert cfg.expected_solution_count == 1


@settings(max_examples=50, deadline=None)
@given(st.floats(2.05, 4.95), st.floats(2.5, 50.0))
def test_penalization_laws_property(q, ell):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = model(q=q, ell=ell)
    a, slope = cfg.pen.a, cfg.V0 / ell
    t = np.geomspace(1e-4, 100.0, 200)[:, None] * np.ones(64)
    g, G = g_arrays(t, cfg)
    f, _ = eval_f(t, q)
    assert np.all(g <= f * (1 + 1e-14))
    out = ~cfg.inside
    assert np.all(g[:, out] <= slope * t[:, out] * (1 + 1e-12))
    assert np.all(2 * G[:, out] <= g[:, out] * t[:, out] * (1 + 1e-12))
    assert np.all(4 * G[:, ~out] <= 2 * g[:, ~out] * t[:, ~out] * (1 + 1e-12))
    assert np.all(np.diff(g / t, axis=0) >= -1e-12 * (g / t)[1:])
    assert eval_f(a, q)[0] == pytest.approx(slope * a, rel=1e-10)

import numpy as np
import pytest

from conftest import small_model
from fracchoquard.grid import Field, inner, make_grid
from fracchoquard.nonlocal_ops import build_riesz_kernel
from fracchoquard.solver import (
    ROUNDOFF_REL,
    DeadSeedError,
    SolverOptions,
    autonomous_ground_state,
    barycenter,
    build_concentrating_seed,
    cluster_solutions,
    concentrating_profile,
    cutoff,
    gaussian_seed,
    minimize_ground_state,
    multistart_search,
    precondition,
    relative_distance,
    rho_for,
    verify_solution,
)

AUTO_GRID = make_grid(1, 24.0, 1024)


@pytest.fixture(scope="module")
def auto():
    return autonomous_ground_state(1.0, 0.4, 0.5, 3.0, AUTO_GRID)


@pytest.fixture(scope="module")
def solve_05(auto):
    cfg = small_model(eps=0.5, n=512)
    k = build_riesz_kernel(cfg.grid, cfg.mu)
    seed = build_concentrating_seed((2.0,), auto.w, cfg, k)
    return cfg, k, minimize_ground_state(seed, cfg, k, seed_point=(2.0,))


def test_solver_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(tol_grad=0.0)
    with pytest.raises(ValueError):
        SolverOptions(armijo_shrink=1.0)


def test_precondition_zero_and_single_mode(model64):
    g = model64.grid
    assert np.all(precondition(Field(g, np.zeros(64)), model64).values == 0.0)
    k = np.pi / g.half_length
    u = Field(g, np.cos(k * g.axis))
    scale = 1.0 / (model64.eps ** 0.8 * k ** 0.8 + model64.V0)
    assert np.allclose(precondition(u, model64).values, scale * u.values, atol=1e-13)


def test_precondition_self_adjoint(model64, rng):
    r, w = Field(model64.grid, rng.standard_normal(64)), Field(model64.grid, rng.standard_normal(64))
    a, b = inner(precondition(r, model64), w), inner(r, precondition(w, model64))
    assert abs(a - b) <= 1e-12 * abs(a)


def test_autonomous_ground_state_properties(auto):
    res = auto.result
    assert res.converged and res.grad_norm_rel <= 1e-8
    assert res.nehari_residual_rel <= 1e-10
    assert np.all(auto.w.values > 0)
    assert auto.even_residual <= 1e-6
    assert auto.w.values[512] == auto.w.values.max()
    # on the Nehari manifold of the pure power problem J = (1/2 - 1/(2q)) * quadform
    assert auto.c_V0 == pytest.approx((0.5 - 1 / 6.0) * 2 * res.energy.quad, rel=1e-8)


def test_autonomous_seed_independence(auto):
    other = autonomous_ground_state(1.0, 0.4, 0.5, 3.0, AUTO_GRID, seed_width=2.0)
    assert relative_distance(auto.w, other.w) <= SolverOptions().cluster_radius
    assert other.c_V0 == pytest.approx(auto.c_V0, rel=1e-8)


def test_energy_history_non_increasing(auto):
    h = np.array(auto.result.energy_history)
    assert len(h) > 2
    assert np.all(np.diff(h) <= ROUNDOFF_REL * np.abs(h[1:]))


def test_dead_seed(model64):
    k = build_riesz_kernel(model64.grid, model64.mu)
    with pytest.raises(DeadSeedError):
        minimize_ground_state(Field(model64.grid, -np.ones(64)), model64, k)


def test_cutoff_profile():
    t = np.array([0.0, 0.5, 0.75, 1.0, 2.0])
    assert list(cutoff(t, 1.0)) == pytest.approx([1.0, 1.0, 0.5, 0.0, 0.0])


def test_concentrating_profile_support_and_peak(auto):
    cfg = small_model(eps=0.25, n=1024)
    phi = concentrating_profile((2.0,), auto.w, cfg)
    x = cfg.grid.axis
    assert np.all(phi.values[np.abs(x - 2.0) >= cfg.delta] == 0.0)
    assert abs(x[np.argmax(phi.values)] - 2.0) <= cfg.grid.spacing


def test_concentrating_profile_rejects_bad_centre(auto):
    cfg = small_model(eps=0.5, n=512)
    with pytest.raises(ValueError):
        concentrating_profile((3.5,), auto.w, cfg)


def test_barycenter_even_and_bump():
    g = make_grid(1, 12.0, 512)
    even = Field(g, np.exp(-g.axis**2))
    assert abs(barycenter(even, 3.0)[0]) <= 1e-10
    bump = Field(g, np.exp(-((g.axis - 1.3) / 0.1) ** 2))
    assert abs(barycenter(bump, 3.0)[0] - 1.3) <= g.spacing
    far = Field(g, np.exp(-((g.axis - 8.0) / 0.1) ** 2))
    assert barycenter(far, 3.0)[0] == pytest.approx(3.0)
    with pytest.raises(ValueError):
        barycenter(Field(g, np.zeros(512)), 3.0)


def test_rho(model64):
    assert rho_for(model64) == pytest.approx(3.0)


def test_penalized_solve(solve_05):
    cfg, k, res = solve_05
    assert res.converged and res.positive
    assert res.grad_norm_rel <= 1e-8 and res.nehari_residual_rel <= 1e-10
    assert res.riesz_certificate and res.original_certificate
    assert abs(res.argmax[0][0] - 2.0) < 0.5
    assert res.v_at_argmax - cfg.V0 >= -1e-10
    assert res.sup_outside < cfg.pen.a
    h = np.array(res.energy_history)
    assert np.all(np.diff(h) <= ROUNDOFF_REL * np.abs(h[1:]))


def test_certificate_closure(solve_05):
    cfg, k, res = solve_05
    rep = verify_solution(res, cfg, k)
    assert rep.is_solution
    for name in ("positive", "riesz_certificate", "original_certificate", "boundary_ok"):
        assert getattr(rep, name) == getattr(res, name)
    for name in ("linf", "riesz_sup", "sup_outside", "grad_norm_rel", "nehari_residual_rel",
                 "boundary_mass_rel"):
        assert getattr(rep, name) == pytest.approx(getattr(res, name), rel=1e-12, abs=1e-300)


def test_scale_robustness(solve_05, auto):
    cfg, k, res = solve_05
    seed = build_concentrating_seed((2.0,), auto.w, cfg, k)
    for c in (0.5, 2.0):
        other = minimize_ground_state(seed * c, cfg, k)
        assert relative_distance(other.u, res.u) <= SolverOptions().cluster_radius


def test_violating_field_fails_original_certificate(solve_05):
    cfg, k, res = solve_05
    vals = res.u.values.copy()
    vals[10] = 10 * cfg.pen.a
    rep = verify_solution(Field(cfg.grid, vals), cfg, k)
    assert not rep.original_certificate and rep.sup_outside == pytest.approx(10 * cfg.pen.a)


def test_zero_field_not_a_solution(model64):
    k = build_riesz_kernel(model64.grid, model64.mu)
    rep = verify_solution(Field(model64.grid, np.zeros(64)), model64, k)
    assert not rep.is_solution


def test_unconverged_flagged(solve_05, auto):
    cfg, k, _ = solve_05
    res = minimize_ground_state(gaussian_seed(cfg.grid, 1.0, (2.0,)), cfg, k, SolverOptions(max_iter=2))
    assert not res.converged and res.iterations == 2


def test_clustering_deduplicates(solve_05):
    cfg, k, res = solve_05
    assert len(cluster_solutions([res, res], 0.05)) == 1


def test_multistart_single_well(auto):
    cfg = small_model(eps=0.5, n=512, wells=((0.0,),))
    k = build_riesz_kernel(cfg.grid, cfg.mu)
    out = multistart_search(cfg, k, auto.w)
    assert out.distinct_count == 1 and out.expected == 1 and not out.failures


def test_multistart_duplicate_seeds(auto):
    cfg = small_model(eps=0.5, n=512)
    k = build_riesz_kernel(cfg.grid, cfg.mu)
    out = multistart_search(cfg, k, auto.w, seeds=[(2.0,), (2.0,)], threads=2)
    assert out.distinct_count == 1 and len(out.per_seed) == 2


def test_multistart_reports_failures(auto):
    cfg = small_model(eps=0.5, n=512)
    k = build_riesz_kernel(cfg.grid, cfg.mu)
    out = multistart_search(cfg, k, auto.w, seeds=[(2.0,), (3.9,)])
    assert out.distinct_count == 1
    assert len(out.failures) == 1 and out.failures[0][0] == (3.9,) and out.per_seed[1] is None


def test_autonomous_warns_when_not_even(monkeypatch):
    import fracchoquard.solver as solver

    g = make_grid(1, 12.0, 128)
    monkeypatch.setattr(solver, "_reflect", lambda v: np.roll(v, 3))
    with pytest.warns(UserWarning, match="not even"):
        solver.autonomous_ground_state(1.0, 0.4, 0.5, 3.0, g)

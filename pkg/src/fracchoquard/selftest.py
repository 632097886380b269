"""Operator oracle suite run by ``fracchoquard selftest``."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import oracles
from .energy import grad_j, j_eps, nehari_h_prime, nehari_project
from .grid import Field, inner, make_grid, spectral_transform
from .model import PotentialSpec, RegionSpec, autonomous_config, eval_f, g_arrays, make_config, norm_eps_sq
from .nonlocal_ops import (
    build_riesz_kernel,
    frac_laplacian,
    frac_seminorm_sq,
    origin_cell_average,
    riesz_convolve,
    riesz_energy,
)

# riesz_energy(h, h) <= C * ||h||_{L^t}^2 with t = 2N/(2N - mu); inequality direction only
HLS_EMPIRICAL_CONSTANT = 4.0


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def standard_model(eps: float = 0.5, n: int = 64, L: float = 12.0):
    pot = PotentialSpec("product_well", 1.0, 2.0, 1.0, ((-2.0,), (2.0,)))
    reg = RegionSpec("box", (0.0,), (4.0,))
    return make_config(dim=1, s=0.4, mu=0.5, q=3.0, eps=eps, potential=pot,
                       lambda_region=reg, grid=make_grid(1, L, n))


def check_transforms(rng) -> list[Check]:
    out = []
    for g in (make_grid(1, 10.0, 64), make_grid(2, 5.0, 16)):
        u = Field(g, rng.standard_normal(g.shape))
        fast = spectral_transform(u)
        err = _rel(fast, oracles.dense_transform(g, u.values))
        back = spectral_transform(fast, "inverse", g).values
        out.append(Check(f"transform vs dense DFT ({g.dim}D)", err <= 1e-12, f"rel err {err:.2e}"))
        out.append(Check(f"transform round trip ({g.dim}D)", _rel(back, u.values) <= 1e-12,
                         f"rel err {_rel(back, u.values):.2e}"))
    return out


def check_frac_laplacian(rng) -> list[Check]:
    out = []
    for g, s in ((make_grid(1, 10.0, 32), 0.4), (make_grid(2, 5.0, 16), 0.7)):
        u = Field(g, rng.standard_normal(g.shape))
        v = Field(g, rng.standard_normal(g.shape))
        err = _rel(frac_laplacian(u, s, 1.3).values, oracles.dense_frac_laplacian(g, u.values, s, 1.3))
        out.append(Check(f"frac_laplacian vs dense multiplier ({g.dim}D)", err <= 1e-10, f"rel err {err:.2e}"))
        a, b = inner(v, frac_laplacian(u, s)), inner(u, frac_laplacian(v, s))
        out.append(Check(f"frac_laplacian self-adjoint ({g.dim}D)", abs(a - b) <= 1e-10 * abs(a),
                         f"|diff| {abs(a - b):.2e}"))
        semi, quad = frac_seminorm_sq(u, s), inner(u, frac_laplacian(u, s))
        out.append(Check(f"seminorm = <u, A u> ({g.dim}D)", abs(semi - quad) <= 1e-10 * semi,
                         f"rel diff {abs(semi - quad) / semi:.2e}"))
    return out


def check_riesz(rng) -> list[Check]:
    out = []
    for g, mu in ((make_grid(1, 10.0, 64), 0.5), (make_grid(2, 4.0, 16), 0.8)):
        k = build_riesz_kernel(g, mu)
        h = Field(g, rng.standard_normal(g.shape))
        p = Field(g, rng.standard_normal(g.shape))
        direct = oracles.direct_convolve(g, h.values, mu, k.cell_average_origin)
        err = _rel(riesz_convolve(h, k).values, direct)
        out.append(Check(f"riesz_convolve vs direct sum ({g.dim}D)", err <= 1e-10, f"rel err {err:.2e}"))
        e1, e2 = riesz_energy(h, p, k), riesz_energy(p, h, k)
        out.append(Check(f"riesz bilinear symmetry ({g.dim}D)", abs(e1 - e2) <= 1e-10 * max(abs(e1), 1.0),
                         f"|diff| {abs(e1 - e2):.2e}"))
        de = oracles.direct_energy(g, h.values, p.values, mu, k.cell_average_origin)
        out.append(Check(f"riesz_energy vs direct double sum ({g.dim}D)", abs(e1 - de) <= 1e-10 * abs(de),
                         f"rel err {abs(e1 - de) / abs(de):.2e}"))
        quad = oracles.cell_average_quadrature(g.dim, g.spacing, mu)
        ca = origin_cell_average(g.dim, g.spacing, mu)
        out.append(Check(f"origin cell average vs quadrature ({g.dim}D)", abs(ca - quad) <= 1e-8 * quad,
                         f"rel err {abs(ca - quad) / quad:.2e}"))
        pos = Field(g, np.abs(rng.standard_normal(g.shape)))
        t = 2.0 * g.dim / (2.0 * g.dim - mu)
        lt = (g.cell_volume * np.sum(pos.values**t)) ** (1.0 / t)
        ratio = riesz_energy(pos, pos, k) / lt**2
        out.append(Check(f"HLS sanity ({g.dim}D)", 0 < ratio <= HLS_EMPIRICAL_CONSTANT,
                         f"ratio {ratio:.3f} <= {HLS_EMPIRICAL_CONSTANT}"))
    return out


def check_gradient(rng, pairs: int = 10) -> list[Check]:
    cfg = standard_model(eps=0.5, n=64)
    k = build_riesz_kernel(cfg.grid, cfg.mu)
    x = cfg.grid.axis
    worst = 0.0
    for _ in range(pairs):
        # bumps straddling the boundary of Lambda exercise both branches of g
        c = rng.uniform(-5.0, 5.0)
        u = Field(cfg.grid, rng.uniform(0.5, 2.0) * np.exp(-((x - c) ** 2)) + 0.05 * rng.standard_normal(64))
        v = Field(cfg.grid, rng.standard_normal(64))
        fd = oracles.central_difference(lambda a: j_eps(Field(cfg.grid, a), cfg, k).total,
                                        u.values, v.values, 1e-5)
        an = inner(grad_j(u, cfg, k), v)
        worst = max(worst, abs(fd - an) / max(abs(an), 1e-12))
    return [Check("gradient vs central differences", worst <= 1e-6, f"worst rel err {worst:.2e}")]


def check_nehari(rng) -> list[Check]:
    g = make_grid(1, 12.0, 64)
    cfg = autonomous_config(1.0, 0.4, 0.5, 3.0, g)
    k = build_riesz_kernel(g, cfg.mu)
    u = Field(g, np.exp(-g.axis**2) * (1 + 0.1 * rng.random(64)))
    Q = norm_eps_sq(u, cfg)
    _, F = eval_f(u.values, cfg.q)
    D = riesz_energy(Field(g, F), Field(g, F), k)
    t_star = (Q / (cfg.q * D)) ** (1.0 / (2 * cfg.q - 2))
    t, proj = nehari_project(u, cfg, k)
    out = [Check("Nehari closed form t_u", abs(t - t_star) <= 1e-9 * t_star, f"rel err {abs(t - t_star) / t_star:.2e}")]
    J = j_eps(proj, cfg, k).total
    ident = (0.5 - 0.5 / cfg.q) * Q * t_star**2
    out.append(Check("Nehari energy identity", abs(J - ident) <= 1e-9 * abs(ident), f"rel err {abs(J - ident) / ident:.2e}"))
    worst = 0.0
    for c in (0.1, 10.0):
        _, pc = nehari_project(u * c, cfg, k)
        worst = max(worst, float(np.linalg.norm(pc.values - proj.values) / np.linalg.norm(proj.values)))
    out.append(Check("Nehari ray invariance", worst <= 1e-9, f"rel err {worst:.2e}"))
    res = abs(nehari_h_prime(t, u, cfg, k)) / Q
    out.append(Check("Nehari residual after projection", res <= 1e-10, f"{res:.2e}"))
    return out


def check_penalization() -> list[Check]:
    cfg = standard_model(eps=0.5, n=64)
    a = cfg.pen.a
    slope = cfg.V0 / cfg.pen.ell
    t = np.concatenate([np.linspace(1e-3, 3 * a, 500, endpoint=False), np.geomspace(3 * a, 50.0, 500)])
    # ten x samples: every sixth grid point covers both sides of Lambda
    cols = np.arange(2, cfg.grid.points_per_axis, 6)[:10]
    inside = cfg.inside[cols]
    g, G = _g_lattice(cfg, t, cols)
    f, _ = eval_f(t, cfg.q)
    tt = t[:, None]
    le_f = bool(np.all(g <= f[:, None] * (1 + 1e-14)))
    in_ok = np.all(4 * G[:, inside] <= 2 * g[:, inside] * tt * (1 + 1e-12))
    out_ok = (np.all(g[:, ~inside] * tt <= slope * tt**2 * (1 + 1e-12))
              and np.all(2 * G[:, ~inside] <= g[:, ~inside] * tt * (1 + 1e-12)))
    mono = bool(np.all(np.diff(g / tt, axis=0) >= -1e-14))
    out = [Check("g <= f on the (x, t) lattice", le_f, f"{len(t)} t x {len(cols)} x samples"),
           Check("growth inequalities", bool(in_ok and out_ok),
                 f"{int(inside.sum())} inside, {int((~inside).sum())} outside"),
           Check("g(x,t)/t nondecreasing", mono, "both branches")]
    col = cols[~inside][:1]
    lo = _g_lattice(cfg, np.array([a * (1 - 1e-9)]), col)[0][0, 0]
    hi = _g_lattice(cfg, np.array([a * (1 + 1e-9)]), col)[0][0, 0]
    out.append(Check("capped f continuous at a", abs(lo - hi) <= 1e-8 and abs(lo - slope * a) <= 1e-8,
                     f"jump {abs(lo - hi):.2e}"))
    step = 1e-5
    ladder = np.linspace(0.01, 1.0, 200)
    Gp = _g_lattice(cfg, ladder + step, col)[1][:, 0]
    Gm = _g_lattice(cfg, ladder - step, col)[1][:, 0]
    err = float(np.max(np.abs((Gp - Gm) / (2 * step) - _g_lattice(cfg, ladder, col)[0][:, 0])))
    out.append(Check("capped F' = capped f (finite differences)", err <= 1e-6, f"max err {err:.2e}"))
    return out


def _g_lattice(cfg, t: np.ndarray, cols: np.ndarray):
    """g and G at grid points ``cols`` for every t; rows index t."""
    g, G = g_arrays(np.broadcast_to(t[:, None], (len(t), cfg.grid.points_per_axis)).copy(), cfg)
    return g[:, cols], G[:, cols]


def run_selftest(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    for fn in (check_transforms, check_frac_laplacian, check_riesz, check_gradient, check_nehari):
        checks.extend(fn(rng))
    checks.extend(check_penalization())
    return checks


def main(seed: int = 0, stream=None) -> bool:
    import sys

    stream = stream or sys.stdout
    t0 = time.perf_counter()
    checks = run_selftest(seed)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}", file=stream)
    ok = all(c.passed for c in checks)
    print(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed in "
          f"{time.perf_counter() - t0:.1f} s", file=stream)
    return ok

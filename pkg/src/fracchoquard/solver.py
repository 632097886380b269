"""Ground states by preconditioned descent on the Nehari-projected energy.

The optimizer works with psi(u) = J(t_u u).  At a point u on the Nehari
manifold the derivative of psi is J'(u) itself, so each iteration takes the
L2 gradient of J at the projected point, maps it through a constant
coefficient preconditioner, steps, and projects back.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyBreakdown, NehariBracketError, grad_j, j_eps, nehari_h_prime, nehari_project
from .grid import Field, GridSpec, argmax_point, boundary_mass, inner, l2_norm, trig_interpolate
from .model import ModelConfig, autonomous_config, g_arrays, norm_eps_sq
from .nonlocal_ops import RieszKernel, build_riesz_kernel, riesz_convolve_array

log = logging.getLogger(__name__)

BOUNDARY_MASS_LIMIT = 1e-6
# relative size of energy changes that double precision cannot resolve
ROUNDOFF_REL = 1e-13


class DeadSeedError(ValueError):
    """Seed has no positive part, so the nonlinearity vanishes on it."""


@dataclass(frozen=True)
class SolverOptions:
    tol_grad: float = 1e-8
    tol_nehari: float = 1e-10
    max_iter: int = 5000
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    step0: float = 1.0
    cluster_radius: float = 0.05
    max_backtracks: int = 50

    def __post_init__(self):
        for name in ("tol_grad", "tol_nehari", "max_iter", "armijo_c", "step0",
                     "cluster_radius", "max_backtracks"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.armijo_shrink < 1:
            raise ValueError("armijo_shrink must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class SolveResult:
    u: Field
    energy: EnergyBreakdown
    grad_norm_rel: float
    nehari_residual_rel: float
    argmax: tuple[np.ndarray, float]
    v_at_argmax: float
    linf: float
    riesz_sup: float
    riesz_certificate: bool
    original_certificate: bool
    sup_outside: float
    barycenter: np.ndarray
    iterations: int
    boundary_mass_rel: float
    boundary_ok: bool
    positive: bool
    converged: bool
    energy_history: tuple[float, ...] = field(default=(), repr=False)
    seed_point: tuple[float, ...] | None = None

    @property
    def certificates_ok(self) -> bool:
        return self.converged and self.riesz_certificate and self.original_certificate and self.positive


@dataclass(frozen=True)
class CertificateReport:
    is_solution: bool
    positive: bool
    linf: float
    sup_outside: float
    original_certificate: bool
    riesz_sup: float
    riesz_certificate: bool
    grad_norm_rel: float
    nehari_residual_rel: float
    boundary_mass_rel: float
    boundary_ok: bool


def _metric_symbol(cfg: ModelConfig) -> np.ndarray:
    return cfg.eps ** (2.0 * cfg.s) * cfg.grid.rk_abs ** (2.0 * cfg.s) + cfg.V0


def precondition(r: Field, cfg: ModelConfig) -> Field:
    """Riesz representative of r in the metric eps^(2s)|k|^(2s) + V0."""
    sym = _metric_symbol(cfg)
    vals = np.fft.irfftn(np.fft.rfftn(r.values) / sym, s=r.grid.shape, axes=range(r.grid.dim))
    return Field(r.grid, vals)


def _apply_metric(u: Field, cfg: ModelConfig) -> Field:
    sym = _metric_symbol(cfg)
    return Field(u.grid, np.fft.irfftn(np.fft.rfftn(u.values) * sym, s=u.grid.shape, axes=range(u.grid.dim)))


def rho_for(cfg: ModelConfig) -> float:
    """Truncation radius of the barycenter map: max |y_i| + delta."""
    if not cfg.wells or not np.isfinite(cfg.delta):
        return np.inf
    return max(float(np.linalg.norm(y)) for y in cfg.wells) + cfg.delta


def barycenter(u: Field, rho: float) -> np.ndarray:
    """u^2-weighted mean of x clipped radially to the ball of radius rho."""
    w = u.values**2
    total = float(np.sum(w))
    if total == 0.0:
        raise ValueError("barycenter of the zero field is undefined")
    coords = [np.broadcast_to(c, u.grid.shape) for c in u.grid.coords()]
    r = np.sqrt(sum(c**2 for c in coords))
    scale = np.ones_like(r) if not np.isfinite(rho) else np.where(r > rho, rho / np.maximum(r, 1e-300), 1.0)
    return np.array([float(np.sum(c * scale * w)) / total for c in coords])


def _certify(u: Field, cfg: ModelConfig, kernel: RieszKernel) -> dict:
    vals = u.values
    norm_u = l2_norm(u)
    if norm_u == 0.0:
        return dict(is_solution=False, positive=False, linf=0.0, sup_outside=0.0,
                    original_certificate=False, riesz_sup=0.0, riesz_certificate=False,
                    grad_norm_rel=np.inf, nehari_residual_rel=np.inf,
                    boundary_mass_rel=0.0, boundary_ok=True)
    _, G = g_arrays(vals, cfg)
    conv = cfg.interaction_prefactor * riesz_convolve_array(G, kernel)
    riesz_sup = float(np.max(np.abs(conv)))
    if cfg.pen is not None:
        riesz_ok = riesz_sup / cfg.pen.ell < 0.5
        outside = ~cfg.inside
        sup_out = float(np.max(vals[outside])) if np.any(outside) else -np.inf
        original_ok = sup_out < cfg.pen.a
    else:
        riesz_ok, sup_out, original_ok = True, -np.inf, True
    grad = grad_j(u, cfg, kernel)
    Q = norm_eps_sq(u, cfg)
    bm = boundary_mass(u)
    return dict(
        is_solution=True,
        positive=bool(np.min(vals) >= 0.0),
        linf=float(np.max(np.abs(vals))),
        sup_outside=sup_out,
        original_certificate=bool(original_ok),
        riesz_sup=riesz_sup,
        riesz_certificate=bool(riesz_ok),
        grad_norm_rel=l2_norm(grad) / norm_u,
        nehari_residual_rel=abs(nehari_h_prime(1.0, u, cfg, kernel, quad=Q)) / Q,
        boundary_mass_rel=bm,
        boundary_ok=bool(bm <= BOUNDARY_MASS_LIMIT),
    )


def verify_solution(res: SolveResult | Field, cfg: ModelConfig, kernel: RieszKernel) -> CertificateReport:
    """Recompute every certificate from the field alone."""
    u = res.u if isinstance(res, SolveResult) else res
    c = _certify(u, cfg, kernel)
    if c["is_solution"]:
        # the Nehari manifold is bounded away from zero; a vanishing field is not a solution
        c["is_solution"] = bool(np.any(u.values > 0))
    return CertificateReport(**c)


def _make_result(u: Field, cfg, kernel, iterations, converged, history, seed_point) -> SolveResult:
    c = _certify(u, cfg, kernel)
    point, value = argmax_point(u)
    return SolveResult(
        u=u, energy=j_eps(u, cfg, kernel), grad_norm_rel=c["grad_norm_rel"],
        nehari_residual_rel=c["nehari_residual_rel"], argmax=(point, value),
        v_at_argmax=cfg.potential.at_point(point), linf=c["linf"], riesz_sup=c["riesz_sup"],
        riesz_certificate=c["riesz_certificate"], original_certificate=c["original_certificate"],
        sup_outside=c["sup_outside"], barycenter=barycenter(u, rho_for(cfg)),
        iterations=iterations, boundary_mass_rel=c["boundary_mass_rel"],
        boundary_ok=c["boundary_ok"], positive=c["positive"], converged=converged,
        energy_history=tuple(history), seed_point=seed_point,
    )


def minimize_ground_state(seed: Field, cfg: ModelConfig, kernel: RieszKernel,
                          opts: SolverOptions | None = None,
                          seed_point=None) -> SolveResult:
    """Minimize J over the Nehari manifold starting from ``seed``.

    Steps are accepted by Armijo backtracking on t -> J(project(u - t d)).
    Once energy differences fall to round-off level the test switches to the
    derivative form of the same condition, which stays meaningful there.
    Returns the best iterate flagged unconverged if ``max_iter`` runs out.
    """
    opts = opts or SolverOptions()
    clipped = np.maximum(seed.values, 0.0)
    if not np.any(clipped > 0):
        raise DeadSeedError("seed has no positive part; the nonlinearity vanishes on it")
    _, u = nehari_project(seed.with_values(clipped), cfg, kernel)
    J = j_eps(u, cfg, kernel).total
    r = grad_j(u, cfg, kernel)
    history = [J]
    converged = False
    it = 0
    for it in range(opts.max_iter + 1):
        norm_u = l2_norm(u)
        if l2_norm(r) / norm_u <= opts.tol_grad:
            converged = True
            break
        if it == opts.max_iter:
            break
        d = precondition(r, cfg)
        Mu = _apply_metric(u, cfg)
        d = d - u * (inner(d, Mu) / inner(u, Mu))
        slope = -inner(r, d)
        if slope >= 0:
            d = precondition(r, cfg)
            slope = -inner(r, d)
        alpha = opts.step0
        accepted = False
        for _ in range(opts.max_backtracks):
            trial = u - alpha * d
            alpha_tried = alpha
            alpha *= opts.armijo_shrink
            if not np.any(trial.values > 0):
                continue
            try:
                t, v = nehari_project(trial, cfg, kernel)
            except NehariBracketError:
                continue
            Jv = j_eps(v, cfg, kernel).total
            if Jv <= J + opts.armijo_c * alpha_tried * slope:
                r = grad_j(v, cfg, kernel)
                accepted = True
            elif abs(Jv - J) <= ROUNDOFF_REL * abs(J):
                rv = grad_j(v, cfg, kernel)
                dphi = -t * inner(rv, d)
                if dphi <= (1.0 - 2.0 * opts.armijo_c) * abs(slope):
                    r = rv
                    accepted = True
            if accepted:
                u, J = v, Jv
                history.append(J)
                break
        if not accepted:
            log.info("line search stalled at iteration %d (grad %.3e)", it, l2_norm(r) / norm_u)
            break
    res = _make_result(u, cfg, kernel, it, converged, history, seed_point)
    if not res.boundary_ok:
        log.info("boundary mass %.3e above %.1e", res.boundary_mass_rel, BOUNDARY_MASS_LIMIT)
    return res


@dataclass(frozen=True, eq=False)
class AutonomousGroundState:
    w: Field
    c_V0: float
    result: SolveResult
    even_residual: float


def _reflect(values: np.ndarray) -> np.ndarray:
    # x -> -x on the grid x_j = -L + j h is j -> (n - j) mod n
    out = values
    for ax in range(values.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def gaussian_seed(grid: GridSpec, width: float, center=None, amplitude: float = 1.0) -> Field:
    center = np.zeros(grid.dim) if center is None else np.asarray(center, dtype=float)
    r2 = sum((c - x0) ** 2 for c, x0 in zip(grid.coords(), center))
    return Field(grid, np.broadcast_to(amplitude * np.exp(-r2 / width**2), grid.shape))


def autonomous_ground_state(V0: float, s: float, mu: float, q: float, grid: GridSpec,
                            opts: SolverOptions | None = None, seed_width: float = 1.0,
                            kernel: RieszKernel | None = None) -> AutonomousGroundState:
    """Positive ground state w of the constant-potential problem and its level c_V0.

    The result is rolled so its maximum sits on the grid point x = 0.
    """
    cfg = autonomous_config(V0, s, mu, q, grid)
    kernel = kernel or build_riesz_kernel(grid, mu)
    res = minimize_ground_state(gaussian_seed(grid, seed_width), cfg, kernel, opts)
    idx = np.unravel_index(int(np.argmax(res.u.values.ravel())), grid.shape)
    shift = tuple(grid.points_per_axis // 2 - i for i in idx)
    w = Field(grid, np.roll(res.u.values, shift, axis=tuple(range(grid.dim))))
    even = float(np.linalg.norm(w.values - _reflect(w.values)) / np.linalg.norm(w.values))
    if even > 1e-6:
        warnings.warn(f"autonomous ground state is not even (residual {even:.2e})", stacklevel=2)
    if any(shift):
        res = _make_result(w, cfg, kernel, res.iterations, res.converged, res.energy_history, None)
    return AutonomousGroundState(w, res.energy.total, res, even)


def cutoff(t: np.ndarray, delta: float) -> np.ndarray:
    """1 on [0, delta/2], 0 beyond delta, cosine ramp in between."""
    t = np.asarray(t, dtype=float)
    ramp = 0.5 * (1.0 + np.cos(np.pi * (2.0 * t / delta - 1.0)))
    return np.where(t <= delta / 2, 1.0, np.where(t >= delta, 0.0, ramp))


def concentrating_profile(y, w: Field, cfg: ModelConfig) -> Field:
    """eta(|x - y|) w((x - y)/eps) sampled on cfg.grid, before projection."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if cfg.lambda_region is not None and cfg.lambda_region.distance_to_boundary(y) < cfg.delta:
        raise ValueError(f"ball of radius delta = {cfg.delta} around {y} is not inside Lambda")
    delta = cfg.delta
    if delta / cfg.eps >= w.grid.half_length:
        raise ValueError(
            f"autonomous box half-length {w.grid.half_length} does not cover delta/eps = {delta / cfg.eps}")
    coords = [np.broadcast_to(c, cfg.grid.shape) for c in cfg.grid.coords()]
    dist = np.sqrt(sum((c - yc) ** 2 for c, yc in zip(coords, y)))
    mask = dist < delta
    z = np.stack([(c[mask] - yc) / cfg.eps for c, yc in zip(coords, y)], axis=-1)
    vals = np.zeros(cfg.grid.shape)
    vals[mask] = trig_interpolate(w, z) * cutoff(dist[mask], delta)
    return Field(cfg.grid, vals)


def build_concentrating_seed(y, w: Field, cfg: ModelConfig, kernel: RieszKernel) -> Field:
    """Nehari projection of the cut-off, rescaled ground state centred at y."""
    _, phi = nehari_project(concentrating_profile(y, w, cfg), cfg, kernel)
    return phi


def relative_distance(u: Field, v: Field) -> float:
    return l2_norm(u - v) / max(l2_norm(u), l2_norm(v))


@dataclass
class MultistartOutcome:
    solutions: list[SolveResult]
    failures: list[tuple[tuple[float, ...], str]]
    expected: int
    per_seed: list[SolveResult | None]

    def __iter__(self):
        return iter(self.solutions)

    def __len__(self):
        return len(self.solutions)

    def __getitem__(self, i):
        return self.solutions[i]

    @property
    def distinct_count(self) -> int:
        return len(self.solutions)


def cluster_solutions(results, radius: float) -> list[SolveResult]:
    """Keep the first representative of each relative-L2 cluster, sorted by energy."""
    reps: list[SolveResult] = []
    for res in results:
        if all(relative_distance(res.u, rep.u) > radius for rep in reps):
            reps.append(res)
    order = sorted(range(len(reps)), key=lambda i: (reps[i].energy.total, i))
    return [reps[i] for i in order]


def multistart_search(cfg: ModelConfig, kernel: RieszKernel, w: Field,
                      opts: SolverOptions | None = None, seeds=None,
                      threads: int = 1) -> MultistartOutcome:
    """One descent per well from its concentrating seed, then deduplicate."""
    opts = opts or SolverOptions()
    points = [tuple(p) for p in (seeds if seeds is not None else cfg.wells)]

    def run(y):
        seed = build_concentrating_seed(y, w, cfg, kernel)
        return minimize_ground_state(seed, cfg, kernel, opts, seed_point=y)

    outcomes = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run, y) for y in points]
            for y, fut in zip(points, futures):
                try:
                    outcomes.append((y, fut.result(), None))
                except Exception as exc:  # noqa: BLE001
                    outcomes.append((y, None, f"{type(exc).__name__}: {exc}"))
    else:
        for y in points:
            try:
                outcomes.append((y, run(y), None))
            except Exception as exc:  # noqa: BLE001
                outcomes.append((y, None, f"{type(exc).__name__}: {exc}"))
    failures = [(y, msg) for y, res, msg in outcomes if msg is not None]
    failures += [(y, "not converged") for y, res, msg in outcomes if res is not None and not res.converged]
    good = [res for _, res, _ in outcomes if res is not None and res.converged]
    return MultistartOutcome(cluster_solutions(good, opts.cluster_radius), failures,
                             cfg.expected_solution_count, [res for _, res, _ in outcomes])

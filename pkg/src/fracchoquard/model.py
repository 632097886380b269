"""Physical configuration: exponents, potential, region, nonlinearity, penalization.

Everything lives in original variables x.  The penalized problem is

    eps^(2s) (-Delta)^s u + V(x) u = eps^(mu - N) (|x|^(-mu) * G(x, u)) g(x, u)

on a fixed box that contains the region Lambda.  The nonlinearity is the
pure power f(t) = t_+^(q-1), F(t) = t_+^q / q.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .grid import Field, GridSpec, integrate
from .nonlocal_ops import frac_seminorm_sq

DEFAULT_ELL = 10.0


class HypothesisError(ValueError):
    """A configuration violates one of the standing hypotheses."""

    def __init__(self, hypothesis: str, message: str):
        self.hypothesis = hypothesis
        super().__init__(f"{hypothesis}: {message}")


@dataclass(frozen=True)
class PotentialSpec:
    family: str
    base: float
    amplitude: float = 0.0
    width: float = 1.0
    wells: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        if self.family not in ("constant", "product_well"):
            raise ValueError(f"unknown potential family {self.family!r}")
        wells = tuple(tuple(float(c) for c in np.atleast_1d(w)) for w in self.wells)
        object.__setattr__(self, "wells", wells)
        if self.family == "product_well":
            if not self.amplitude > 0 or not self.width > 0:
                raise ValueError("product_well needs amplitude > 0 and width > 0")
            if not wells:
                raise ValueError("product_well needs at least one well")

    def __call__(self, *coords: np.ndarray) -> np.ndarray:
        """V at points given as one coordinate array per axis."""
        if self.family == "constant":
            return np.full(np.broadcast(*coords).shape, float(self.base))
        prod = 1.0
        for y in self.wells:
            r2 = sum((c - yc) ** 2 for c, yc in zip(coords, y))
            prod = prod * (-np.expm1(-r2 / self.width**2))
        return self.base + self.amplitude * prod

    def at_point(self, point) -> float:
        p = np.atleast_1d(np.asarray(point, dtype=float))
        return float(self(*[np.array(c) for c in p]))


@dataclass(frozen=True)
class RegionSpec:
    """Open box (``extent`` = half side lengths) or open ball (``extent`` = radius)."""

    shape: str
    center: tuple[float, ...]
    extent: tuple[float, ...]

    def __post_init__(self):
        if self.shape not in ("box", "ball"):
            raise ValueError(f"region shape must be 'box' or 'ball', got {self.shape!r}")
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        extent = tuple(float(e) for e in np.atleast_1d(self.extent))
        if any(e <= 0 for e in extent):
            raise ValueError("region extents must be positive")
        if self.shape == "ball" and len(extent) != 1:
            raise ValueError("a ball takes a single radius")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "extent", extent)

    @property
    def dim(self) -> int:
        return len(self.center)

    def _half_sides(self) -> np.ndarray:
        e = np.asarray(self.extent)
        return np.broadcast_to(e, (self.dim,)) if e.size == 1 else e

    def contains(self, *coords: np.ndarray) -> np.ndarray:
        if self.shape == "box":
            inside = True
            for c, x0, e in zip(coords, self.center, self._half_sides()):
                inside = inside & (np.abs(c - x0) < e)
            return np.asarray(inside)
        r2 = sum((c - x0) ** 2 for c, x0 in zip(coords, self.center))
        return np.asarray(r2 < self.extent[0] ** 2)

    def distance_to_boundary(self, point) -> float:
        """Distance from an interior point to the boundary (negative if outside)."""
        p = np.asarray(point, dtype=float) - np.asarray(self.center)
        if self.shape == "box":
            return float(np.min(self._half_sides() - np.abs(p)))
        return float(self.extent[0] - np.linalg.norm(p))

    def boundary_samples(self, count: int = 64) -> np.ndarray:
        """Points on the boundary, shape (P, N); at least ``count`` in 2D."""
        c = np.asarray(self.center)
        if self.dim == 1:
            e = self._half_sides()[0]
            return np.array([[c[0] - e], [c[0] + e]])
        if self.shape == "ball":
            th = 2 * np.pi * np.arange(count) / count
            return c + self.extent[0] * np.stack([np.cos(th), np.sin(th)], axis=-1)
        ex, ey = self._half_sides()
        per_side = max(count // 4, 2)
        t = np.linspace(-1.0, 1.0, per_side + 1)[:-1]
        sides = [
            np.stack([t * ex, np.full_like(t, -ey)], -1),
            np.stack([np.full_like(t, ex), t * ey], -1),
            np.stack([-t * ex, np.full_like(t, ey)], -1),
            np.stack([np.full_like(t, -ex), -t * ey], -1),
        ]
        return c + np.concatenate(sides)

    def fits_in_box(self, half_length: float) -> bool:
        c = np.abs(np.asarray(self.center))
        if self.shape == "box":
            return bool(np.all(c + self._half_sides() < half_length))
        return bool(np.all(c + self.extent[0] < half_length))

    def measure(self) -> float:
        if self.shape == "box":
            return float(np.prod(2 * self._half_sides()))
        r = self.extent[0]
        return 2 * r if self.dim == 1 else np.pi * r**2


@dataclass(frozen=True)
class PenalizationParams:
    ell: float
    a: float

    @classmethod
    def calibrated(cls, V0: float, q: float, ell: float = DEFAULT_ELL) -> PenalizationParams:
        """Threshold a with f(a)/a = V0/ell for f(t) = t^(q-1)."""
        if not ell > 2:
            raise ValueError(f"ell must exceed 2, got {ell}")
        return cls(float(ell), float((V0 / ell) ** (1.0 / (q - 2.0))))


@dataclass(frozen=True)
class ModelConfig:
    s: float
    mu: float
    q: float
    eps: float
    potential: PotentialSpec
    lambda_region: RegionSpec | None
    pen: PenalizationParams | None
    grid: GridSpec
    V0: float = float("nan")
    delta: float = float("nan")
    expected_solution_count: int = 0

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def wells(self) -> tuple[tuple[float, ...], ...]:
        return self.potential.wells

    @cached_property
    def potential_values(self) -> np.ndarray:
        v = np.broadcast_to(self.potential(*self.grid.coords()), self.grid.shape).copy()
        v.setflags(write=False)
        return v

    @cached_property
    def inside(self) -> np.ndarray:
        """Boolean mask of grid points in Lambda (all True when unpenalized)."""
        if self.lambda_region is None or self.pen is None:
            m = np.ones(self.grid.shape, dtype=bool)
        else:
            m = np.broadcast_to(self.lambda_region.contains(*self.grid.coords()),
                                self.grid.shape).copy()
        m.setflags(write=False)
        return m

    @property
    def interaction_prefactor(self) -> float:
        return self.eps ** (self.mu - self.dim)

    def with_eps(self, eps: float, grid: GridSpec | None = None) -> ModelConfig:
        return validate_config(replace(self, eps=float(eps), grid=grid or self.grid))


def existence_q_window(N: int, s: float, mu: float) -> tuple[float, float]:
    return 2.0, 2.0 * (N - mu) / (N - 2.0 * s)


def growth_q_window(N: int, s: float, mu: float) -> tuple[float, float]:
    two_star = 2.0 * N / (N - 2.0 * s)
    return 2.0, two_star / 2.0 * (2.0 - mu / N)


def default_delta(region: RegionSpec, wells) -> float:
    return 0.5 * min(region.distance_to_boundary(y) for y in wells)


def make_config(*, dim: int, s: float, mu: float, q: float, eps: float,
                potential: PotentialSpec, lambda_region: RegionSpec | None,
                grid: GridSpec, ell: float = DEFAULT_ELL,
                delta: float | None = None) -> ModelConfig:
    """Assemble and validate a penalized configuration, filling defaults."""
    if grid.dim != dim:
        raise ValueError(f"grid dim {grid.dim} != dim {dim}")
    pen = PenalizationParams(float(ell), float("nan"))
    if delta is None and lambda_region is not None and potential.wells:
        delta = default_delta(lambda_region, potential.wells)
    cfg = ModelConfig(s=float(s), mu=float(mu), q=float(q), eps=float(eps),
                      potential=potential, lambda_region=lambda_region, pen=pen, grid=grid,
                      delta=float("nan") if delta is None else float(delta))
    return validate_config(cfg)


def _check_exponents(N: int, s: float, mu: float, q: float) -> None:
    if not 0 < s < 1:
        raise HypothesisError("s window", f"s = {s} must lie in (0, 1)")
    if not N > 2 * s:
        raise HypothesisError("N > 2s", f"N = {N}, s = {s}")
    if not 0 < mu < 2 * s:
        raise HypothesisError("mu window", f"need 0 < mu < 2s, got mu = {mu}, 2s = {2 * s}")
    lo, hi = existence_q_window(N, s, mu)
    if not lo < q < hi:
        raise HypothesisError("exponent window",
                              f"need 2 < q < 2(N-mu)/(N-2s) = {hi:.6g}, got q = {q}")
    lo2, hi2 = growth_q_window(N, s, mu)
    if not lo2 < q < hi2:
        warnings.warn(f"q = {q} outside the growth window (2, {hi2:.6g})", stacklevel=3)


def validate_config(cfg: ModelConfig) -> ModelConfig:
    """Check every standing hypothesis; return the config with V0 and counts filled."""
    N = cfg.grid.dim
    _check_exponents(N, cfg.s, cfg.mu, cfg.q)
    if not cfg.eps > 0:
        raise ValueError(f"eps must be positive, got {cfg.eps}")
    pot = cfg.potential
    if not pot.base > 0:
        raise HypothesisError("(V1)", f"V0 = {pot.base} must be positive")
    if any(len(y) != N for y in pot.wells):
        raise ValueError("well coordinates do not match the grid dimension")
    # V0 is attained at the wells; the grid itself need not contain them
    grid_min = float(np.min(cfg.potential_values))
    candidates = [grid_min] + [pot.at_point(y) for y in pot.wells]
    V0 = min(candidates)
    if abs(V0 - pot.base) > 1e-10:
        raise HypothesisError("(V1)", f"inf V = {V0} differs from the declared base {pot.base}")
    region = cfg.lambda_region
    if region is None:
        raise HypothesisError("(V2)", "no region Lambda given")
    if region.dim != N:
        raise HypothesisError("(V2)", "region dimension does not match the grid")
    bdry = region.boundary_samples(64)
    v_bdry = float(np.min(pot(*bdry.T)))
    if not v_bdry > V0:
        raise HypothesisError("(V2)", f"min V on the boundary of Lambda is {v_bdry}, not > V0 = {V0}")
    if not region.fits_in_box(cfg.grid.half_length):
        raise HypothesisError("Lambda containment", "Lambda is not inside the computational box")
    if not pot.wells:
        raise HypothesisError("Lambda containment", "the minimum set M is empty")
    dists = [region.distance_to_boundary(y) for y in pot.wells]
    delta = cfg.delta if np.isfinite(cfg.delta) else 0.5 * min(dists)
    if not delta > 0 or min(dists) < delta:
        raise HypothesisError("Lambda containment",
                              f"M_delta not inside Lambda (delta = {delta}, well margins {dists})")
    ell = cfg.pen.ell if cfg.pen is not None else DEFAULT_ELL
    if not ell > 2:
        raise HypothesisError("penalization", f"ell = {ell} must exceed 2")
    pen = PenalizationParams.calibrated(V0, cfg.q, ell)
    return replace(cfg, V0=V0, delta=float(delta), pen=pen,
                   expected_solution_count=len(pot.wells))


def autonomous_config(V0: float, s: float, mu: float, q: float, grid: GridSpec) -> ModelConfig:
    """Constant potential, no penalization, eps = 1: the limit problem."""
    _check_exponents(grid.dim, s, mu, q)
    if not V0 > 0:
        raise HypothesisError("(V1)", f"V0 = {V0} must be positive")
    return ModelConfig(s=float(s), mu=float(mu), q=float(q), eps=1.0,
                       potential=PotentialSpec("constant", float(V0)),
                       lambda_region=None, pen=None, grid=grid, V0=float(V0),
                       expected_solution_count=1)


def eval_potential(cfg: ModelConfig) -> Field:
    return Field(cfg.grid, cfg.potential_values)


def indicator_lambda(cfg: ModelConfig) -> Field:
    return Field(cfg.grid, cfg.inside.astype(float))


def eval_f(t, q: float) -> tuple[np.ndarray, np.ndarray]:
    """f(t) = t_+^(q-1) and its antiderivative F(t) = t_+^q / q."""
    tp = np.maximum(np.asarray(t, dtype=float), 0.0)
    f = tp ** (q - 1.0)
    return f, f * tp / q


def g_arrays(values: np.ndarray, cfg: ModelConfig) -> tuple[np.ndarray, np.ndarray]:
    """Penalized nonlinearity g(x, u) and G(x, u) on raw arrays."""
    f, F = eval_f(values, cfg.q)
    if cfg.pen is None:
        return f, F
    a, slope = cfg.pen.a, cfg.V0 / cfg.pen.ell
    tp = np.maximum(values, 0.0)
    f_cap = np.minimum(f, slope * tp)
    F_cap = eval_f(np.minimum(tp, a), cfg.q)[1] + 0.5 * slope * (np.maximum(tp, a) ** 2 - a**2)
    inside = cfg.inside
    return np.where(inside, f, f_cap), np.where(inside, F, F_cap)


def eval_g(u: Field, cfg: ModelConfig) -> tuple[Field, Field]:
    g, G = g_arrays(u.values, cfg)
    return Field(u.grid, g), Field(u.grid, G)


def norm_eps_sq(u: Field, cfg: ModelConfig) -> float:
    """eps^(2s) [u]^2 + integral V u^2 (original-variable quadratic form)."""
    semi = frac_seminorm_sq(u, cfg.s)
    pot = integrate(Field(u.grid, cfg.potential_values * u.values**2))
    return cfg.eps ** (2.0 * cfg.s) * semi + pot

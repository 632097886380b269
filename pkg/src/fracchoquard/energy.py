"""Penalized energy, its L2 gradient, and projection onto the Nehari manifold.

In original variables

    J(u) = 1/2 Q(u) - 1/2 eps^(mu-N) integral (K * G(u)) G(u),
    Q(u) = eps^(2s) [u]^2 + integral V u^2,

and the rescaled energy (the one comparable with the autonomous level) is
eps^(-N) J(u).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field
from .model import ModelConfig, autonomous_config, g_arrays, norm_eps_sq
from .nonlocal_ops import RieszKernel, frac_laplacian, riesz_convolve_array

BRACKET_GROWTH = 4.0
BRACKET_MAX_EXPANSIONS = 60
BISECTION_STEPS = 80


class NehariBracketError(RuntimeError):
    """h'(t) never changed sign while growing the bracket."""


@dataclass(frozen=True)
class EnergyBreakdown:
    quad: float
    interaction: float
    total: float
    rescaled_total: float


def _check_kernel(u: Field, cfg: ModelConfig, kernel: RieszKernel) -> None:
    if u.grid != cfg.grid or kernel.grid != cfg.grid:
        raise ValueError("field, config and kernel must share a grid")
    if kernel.mu != cfg.mu:
        raise ValueError(f"kernel built for mu = {kernel.mu}, config has mu = {cfg.mu}")


def _interaction(values: np.ndarray, cfg: ModelConfig, kernel: RieszKernel):
    """Return (g, G, eps^(mu-N) K*G) arrays for the current values."""
    g, G = g_arrays(values, cfg)
    conv = cfg.interaction_prefactor * riesz_convolve_array(G, kernel)
    return g, G, conv


def sigma_eps(u: Field, cfg: ModelConfig, kernel: RieszKernel) -> float:
    _check_kernel(u, cfg, kernel)
    _, G, conv = _interaction(u.values, cfg, kernel)
    return 0.5 * cfg.grid.cell_volume * float(np.vdot(conv, G))


def j_eps(u: Field, cfg: ModelConfig, kernel: RieszKernel) -> EnergyBreakdown:
    quad = 0.5 * norm_eps_sq(u, cfg)
    inter = sigma_eps(u, cfg, kernel)
    total = quad - inter
    return EnergyBreakdown(quad, inter, total, total * cfg.eps ** (-cfg.dim))


def grad_j(u: Field, cfg: ModelConfig, kernel: RieszKernel) -> Field:
    """L2 representative of J'(u): eps^(2s)(-Delta)^s u + V u - eps^(mu-N)(K*G) g."""
    _check_kernel(u, cfg, kernel)
    g, _, conv = _interaction(u.values, cfg, kernel)
    lap = frac_laplacian(u, cfg.s, cfg.eps ** (2.0 * cfg.s)).values
    return Field(u.grid, lap + cfg.potential_values * u.values - conv * g)


def nehari_h_prime(t: float, u: Field, cfg: ModelConfig, kernel: RieszKernel,
                   quad: float | None = None) -> float:
    """d/dt J(t u) = t Q(u) - eps^(mu-N) integral (K*G(tu)) g(tu) u."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    _check_kernel(u, cfg, kernel)
    Q = norm_eps_sq(u, cfg) if quad is None else quad
    g, _, conv = _interaction(t * u.values, cfg, kernel)
    return t * Q - cfg.grid.cell_volume * float(np.vdot(conv * g, u.values))


def nehari_project(u: Field, cfg: ModelConfig, kernel: RieszKernel) -> tuple[float, Field]:
    """Find the unique t_u > 0 with h'(t_u) = 0 and return (t_u, t_u u).

    g is only continuous, so the root is located by bracketing and
    bisection rather than Newton.
    """
    _check_kernel(u, cfg, kernel)
    if not np.any(u.values > 0):
        raise ValueError("cannot project a field with no positive part")
    Q = norm_eps_sq(u, cfg)

    def hp(t):
        return nehari_h_prime(t, u, cfg, kernel, quad=Q)

    lo = hi = 1.0
    val = hp(1.0)
    if val == 0.0:
        return 1.0, u
    if val > 0:
        for _ in range(BRACKET_MAX_EXPANSIONS):
            lo, hi = hi, hi * BRACKET_GROWTH
            if hp(hi) < 0:
                break
        else:
            raise NehariBracketError("h' stayed positive; field too weak to reach the manifold")
    else:
        for _ in range(BRACKET_MAX_EXPANSIONS):
            lo, hi = lo / BRACKET_GROWTH, lo
            if hp(lo) > 0:
                break
        else:
            raise NehariBracketError("h' stayed negative while shrinking t")
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if hp(mid) > 0:
            lo = mid
        else:
            hi = mid
    t = lo if abs(hp(lo)) <= abs(hp(hi)) else hi
    return t, u * t


def j_autonomous(u: Field, V0: float, cfg: ModelConfig, kernel: RieszKernel) -> EnergyBreakdown:
    """Energy of the limit problem: V = V0, g = f, eps = 1, on cfg's grid."""
    auto = autonomous_config(V0, cfg.s, cfg.mu, cfg.q, cfg.grid)
    return j_eps(u, auto, kernel)

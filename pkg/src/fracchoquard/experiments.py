"""Experiment drivers shared by the command line and the acceptance tests."""

from __future__ import annotations

import hashlib
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .energy import j_eps
from .fieldio import FieldFormatError, read_field, write_field
from .grid import Field
from .model import ModelConfig, autonomous_config
from .nonlocal_ops import build_riesz_kernel
from .solver import (
    AutonomousGroundState,
    MultistartOutcome,
    autonomous_ground_state,
    barycenter,
    build_concentrating_seed,
    multistart_search,
    rho_for,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Autonomous:
    w: Field
    c_V0: float
    detail: AutonomousGroundState | None = None


def _cache_stem(exp: ExperimentConfig, out_dir: Path) -> Path:
    m, g = exp.model, exp.autonomous_grid
    key = f"{m.s!r}|{m.mu!r}|{m.q!r}|{m.V0!r}|{g.dim}|{g.half_length!r}|{g.points_per_axis}"
    digest = hashlib.sha1(key.encode()).hexdigest()[:12]
    return out_dir / "cache" / f"autonomous_{digest}"


def autonomous_for(exp: ExperimentConfig, out_dir: Path | None = None) -> Autonomous:
    """Ground state of the limit problem, read from / written to the run's cache."""
    m, g = exp.model, exp.autonomous_grid
    cfg = autonomous_config(m.V0, m.s, m.mu, m.q, g)
    kernel = build_riesz_kernel(g, m.mu)
    stem = _cache_stem(exp, out_dir) if out_dir is not None else None
    if stem is not None and stem.with_suffix(".bin").exists():
        try:
            w = read_field(stem)
            if w.grid == g:
                return Autonomous(w, j_eps(w, cfg, kernel).total)
        except FieldFormatError as exc:
            log.warning("ignoring unreadable autonomous cache: %s", exc)
    detail = autonomous_ground_state(m.V0, m.s, m.mu, m.q, g, exp.solver, kernel=kernel)
    if not detail.result.converged:
        log.warning("autonomous ground state did not converge (grad %.2e)", detail.result.grad_norm_rel)
    if stem is not None:
        write_field(detail.w, stem, label=f"autonomous ground state {stem.name}")
    return Autonomous(detail.w, j_eps(detail.w, cfg, kernel).total, detail)


@dataclass(frozen=True, eq=False)
class SeedDiagnostics:
    well: tuple[float, ...]
    rescaled_energy: float
    energy_gap: float
    barycenter: np.ndarray
    barycenter_error: float


def seed_diagnostics(cfg: ModelConfig, kernel, auto: Autonomous) -> list[SeedDiagnostics]:
    out = []
    rho = rho_for(cfg)
    for y in cfg.wells:
        phi = build_concentrating_seed(y, auto.w, cfg, kernel)
        e = j_eps(phi, cfg, kernel).rescaled_total
        b = barycenter(phi, rho)
        out.append(SeedDiagnostics(tuple(y), e, abs(e - auto.c_V0), b,
                                   float(np.linalg.norm(b - np.asarray(y)))))
    return out


@dataclass(frozen=True, eq=False)
class SweepStep:
    cfg: ModelConfig
    outcome: MultistartOutcome
    seeds: list[SeedDiagnostics]
    record: dict


def sweep_step(exp: ExperimentConfig, eps: float, points: int, auto: Autonomous,
               threads: int = 1) -> SweepStep:
    t0 = time.perf_counter()
    cfg = exp.model_at(eps, points)
    kernel = build_riesz_kernel(cfg.grid, cfg.mu)
    seeds = seed_diagnostics(cfg, kernel, auto)
    outcome = multistart_search(cfg, kernel, auto.w, exp.solver, threads=threads)
    first = next((r for r in outcome.per_seed if r is not None), None)
    if first is None:
        raise RuntimeError(f"every solve failed at eps = {eps}: {outcome.failures}")
    point = first.argmax[0]
    record = {
        "schema_version": 1,
        "eps": float(eps),
        "grid_n": int(points),
        "x_eps": [float(c) for c in point],
        "V_at_xeps": float(first.v_at_argmax),
        "V_gap": float(first.v_at_argmax - cfg.V0),
        "rescaled_energy": float(first.energy.rescaled_total),
        "c_V0": float(auto.c_V0),
        "energy_gap": float(first.energy.rescaled_total - auto.c_V0),
        "barycenter": [float(c) for c in first.barycenter],
        "distinct_count": int(outcome.distinct_count),
        "expected_count": int(cfg.expected_solution_count),
        "converged": all(r is not None and r.converged for r in outcome.per_seed),
        "positive": all(r is not None and r.positive for r in outcome.per_seed),
        "riesz_certificate": all(r is not None and r.riesz_certificate for r in outcome.per_seed),
        "original_certificate": all(r is not None and r.original_certificate for r in outcome.per_seed),
        "boundary_ok": all(r is not None and r.boundary_ok for r in outcome.per_seed),
        "riesz_sup": max(r.riesz_sup for r in outcome.per_seed if r is not None),
        "sup_outside": max(r.sup_outside for r in outcome.per_seed if r is not None),
        "grad_norm_rel": max(r.grad_norm_rel for r in outcome.per_seed if r is not None),
        "nehari_residual_rel": max(r.nehari_residual_rel for r in outcome.per_seed if r is not None),
        "seed_energy_gap": max(sd.energy_gap for sd in seeds),
        "seed_barycenter_error": max(sd.barycenter_error for sd in seeds),
        "iterations": sum(r.iterations for r in outcome.per_seed if r is not None),
        "wall_time_s": time.perf_counter() - t0,
    }
    return SweepStep(cfg, outcome, seeds, record)


def run_sweep(exp: ExperimentConfig, auto: Autonomous, threads: int = 1):
    for eps, n in zip(exp.eps_ladder, exp.points_ladder):
        yield sweep_step(exp, eps, n, auto, threads)

"""Command-line driver: ``fracchoquard <subcommand> [flags]``.

Subcommands: selftest, autonomous, solve, sweep, multistart. Every run
writes into ``--out`` (default ``runs/``); the exit status is nonzero when
a solve fails to converge or a certificate fails, unless
``--allow-unconverged`` is given.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import selftest
from .config import STANDARD_CONFIG, ConfigError, ExperimentConfig, load_config, parse_config
from .experiments import autonomous_for, run_sweep
from .fieldio import append_sweep_record, result_to_dict, write_field, write_json
from .model import HypothesisError
from .nonlocal_ops import build_riesz_kernel
from .solver import DeadSeedError, build_concentrating_seed, minimize_ground_state, multistart_search

SUBCOMMANDS = ("selftest", "autonomous", "solve", "sweep", "multistart")

log = logging.getLogger("fracchoquard")


@dataclass
class Flags:
    eps: float | None = None
    out: Path = Path("runs")
    allow_unconverged: bool = False
    threads: int = 1
    seed: int = 0


def _status(ok: bool, flags: Flags) -> int:
    return 0 if ok or flags.allow_unconverged else 1


def _tag(kind: str, eps: float) -> str:
    # no dots: the field writer treats everything after one as a suffix.
    # Field dumps append "_field" so their sidecar never clobbers the result JSON.
    return f"{kind}_eps{eps:g}".replace(".", "p")


def _eps(exp: ExperimentConfig, flags: Flags) -> float:
    return exp.model.eps if flags.eps is None else flags.eps


def cmd_autonomous(exp: ExperimentConfig, flags: Flags) -> int:
    auto = autonomous_for(exp, flags.out)
    write_field(auto.w, flags.out / "autonomous_field", label="autonomous ground state")
    summary = {"schema_version": 1, "c_V0": auto.c_V0,
               "grid": {"dim": auto.w.grid.dim, "half_length": auto.w.grid.half_length,
                        "points_per_axis": auto.w.grid.points_per_axis}}
    ok = True
    if auto.detail is not None:
        summary["result"] = result_to_dict(auto.detail.result, "autonomous")
        summary["even_residual"] = auto.detail.even_residual
        ok = auto.detail.result.converged and auto.detail.result.positive
    write_json(summary, flags.out / "autonomous.json")
    print(f"c_V0 = {auto.c_V0:.12g}")
    return _status(ok, flags)


def cmd_solve(exp: ExperimentConfig, flags: Flags) -> int:
    eps = _eps(exp, flags)
    cfg = exp.model_at(eps)
    auto = autonomous_for(exp, flags.out)
    kernel = build_riesz_kernel(cfg.grid, cfg.mu)
    y = cfg.wells[0]
    seed = build_concentrating_seed(y, auto.w, cfg, kernel)
    res = minimize_ground_state(seed, cfg, kernel, exp.solver, seed_point=y)
    tag = _tag("solve", eps)
    write_json(result_to_dict(res, tag), flags.out / f"{tag}.json")
    write_field(res.u, flags.out / f"{tag}_field", label=tag)
    print(f"eps = {eps:g}: J/eps^N = {res.energy.rescaled_total:.10g}, "
          f"converged = {res.converged}, certificates = {res.certificates_ok}")
    return _status(res.converged and res.positive and res.certificates_ok, flags)


def cmd_multistart(exp: ExperimentConfig, flags: Flags) -> int:
    eps = _eps(exp, flags)
    cfg = exp.model_at(eps)
    auto = autonomous_for(exp, flags.out)
    kernel = build_riesz_kernel(cfg.grid, cfg.mu)
    outcome = multistart_search(cfg, kernel, auto.w, exp.solver, threads=flags.threads)
    tag = _tag("multistart", eps)
    payload = {"schema_version": 1, "eps": eps, "expected_count": outcome.expected,
               "distinct_count": outcome.distinct_count,
               "failures": [{"seed_point": list(map(float, y)), "error": msg} for y, msg in outcome.failures],
               "solutions": []}
    for i, res in enumerate(outcome.solutions):
        label = f"{tag}_{i}"
        payload["solutions"].append(result_to_dict(res, label))
        write_field(res.u, flags.out / f"{label}_field", label=label)
    write_json(payload, flags.out / f"{tag}.json")
    print(f"eps = {eps:g}: {outcome.distinct_count} distinct solutions (expected {outcome.expected})")
    ok = (not outcome.failures and outcome.distinct_count >= outcome.expected
          and all(r.converged and r.positive and r.certificates_ok for r in outcome.solutions))
    return _status(ok, flags)


def cmd_sweep(exp: ExperimentConfig, flags: Flags) -> int:
    auto = autonomous_for(exp, flags.out)
    ok = True
    for step in run_sweep(exp, auto, threads=flags.threads):
        r = step.record
        append_sweep_record(r, flags.out / "sweep.csv", flags.out / "sweep.jsonl")
        print(f"eps = {r['eps']:g}: V_gap = {r['V_gap']:.3e}, energy = {r['rescaled_energy']:.6f}, "
              f"distinct = {r['distinct_count']}")
        ok &= r["converged"] and r["positive"] and r["riesz_certificate"] and r["original_certificate"]
    return _status(ok, flags)


def cmd_selftest(exp: ExperimentConfig | None, flags: Flags) -> int:
    return 0 if selftest.main(seed=flags.seed) else 1


COMMANDS = {"selftest": cmd_selftest, "autonomous": cmd_autonomous, "solve": cmd_solve,
            "sweep": cmd_sweep, "multistart": cmd_multistart}


def run(subcommand: str, config: ExperimentConfig | str | Path | None, flags: Flags) -> int:
    """Run one subcommand; ``config`` is a parsed config, a path, or None for the standard scenario."""
    if subcommand not in COMMANDS:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    if subcommand != "selftest":
        if config is None:
            config = parse_config(STANDARD_CONFIG, "<standard>")
        elif not isinstance(config, ExperimentConfig):
            config = load_config(config)
        flags.out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[subcommand](config, flags)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracchoquard",
                                description="Semiclassical ground states of a fractional Choquard equation.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", type=Path, help="INI config file (default: the standard 1D scenario)")
    p.add_argument("--eps", type=float, help="epsilon for solve/multistart (default: [model] eps)")
    p.add_argument("--out", type=Path, default=Path("runs"), help="output directory")
    p.add_argument("--allow-unconverged", action="store_true",
                   help="exit 0 even if a solve or certificate fails")
    p.add_argument("--threads", type=int, default=1, help="concurrent multistart solves")
    p.add_argument("--seed", type=int, default=0, help="RNG seed for the selftest random fields")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)  # exits 2 on an unknown subcommand
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("fracchoquard: --threads must be >= 1", file=sys.stderr)
        return 2
    flags = Flags(args.eps, args.out, args.allow_unconverged, args.threads, args.seed)
    try:
        return run(args.subcommand, args.config, flags)
    except (ConfigError, HypothesisError, DeadSeedError) as exc:
        print(f"fracchoquard: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""INI-style experiment configuration.

Schema (sections and keys; everything except [model], [potential] wells
and [lambda] has a default)::

    [model]        dim, s, mu, q, eps (default: last eps of the ladder)
    [potential]    family = product_well | constant, V0 = 1, amplitude = 2,
                   width = 1, wells = -2; 2      (points split by ';', coords by ',')
    [lambda]       shape = box | ball, center = 0, extent = 4
                   (box: half side lengths; ball: radius)
    [penalization] ell = 10, delta = half the smallest well-to-boundary distance
    [grid]         half_length = 12, points (grid used by `solve`/`multistart`;
                   default: the ladder entry for eps, else the finest)
    [sweep]        eps = 0.5, 0.25, 0.125 ; points = 1024, 2048, 4096
    [autonomous]   points = 1024, half_length (default: spacing matched to the
                   first ladder grid in rescaled units)
    [solver]       tol_grad, tol_nehari, max_iter, armijo_c, armijo_shrink,
                   step0, cluster_radius
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, fields
from pathlib import Path

from .grid import GridSpec, make_grid
from .model import DEFAULT_ELL, HypothesisError, ModelConfig, PotentialSpec, RegionSpec, make_config
from .solver import SolverOptions

DEFAULT_LADDER = (0.5, 0.25, 0.125)
DEFAULT_LADDER_POINTS = (1024, 2048, 4096)
DEFAULT_HALF_LENGTH = 12.0
DEFAULT_AUTONOMOUS_POINTS = 1024


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig
    solver: SolverOptions
    eps_ladder: tuple[float, ...]
    points_ladder: tuple[int, ...]
    autonomous_grid: GridSpec
    source: str = ""

    def model_at(self, eps: float, points: int | None = None) -> ModelConfig:
        """The validated model at ``eps`` on the grid the schedule assigns to it."""
        if points is None:
            points = self.points_for(eps)
        g = make_grid(self.model.dim, self.model.grid.half_length, points)
        return self.model.with_eps(eps, g)

    def points_for(self, eps: float) -> int:
        for e, n in zip(self.eps_ladder, self.points_ladder):
            if abs(e - eps) <= 1e-12 * e:
                return n
        return max(self.points_ladder)


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip().lower()
            continue
        if current == section and re.match(rf"\s*{re.escape(key)}\s*[=:]", line, re.I):
            return i
    return None


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, text: str, source: str):
        self.p, self.text, self.source = parser, text, source

    def has(self, section, key=None):
        if key is None:
            return self.p.has_section(section)
        return self.p.has_option(section, key)

    def _fail(self, section, key, msg):
        line = _line_of(self.text, section, key)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: [{section}] {key}: {msg}")

    def get(self, section, key, conv, default=None, required=False):
        if not self.p.has_option(section, key):
            if required:
                raise ConfigError(f"{self.source}: missing [{section}] {key}")
            return default
        raw = self.p.get(section, key)
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            self._fail(section, key, f"cannot parse {raw!r} ({exc})")


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(x) for x in re.split(r"[,\s]+", raw.strip()) if x)


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(x) for x in re.split(r"[,\s]+", raw.strip()) if x)


def _points(raw: str) -> tuple[tuple[float, ...], ...]:
    return tuple(_floats(chunk) for chunk in raw.split(";") if chunk.strip())


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    # ';' separates wells, so only '#' starts a comment
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
    parser.optionxform = str.lower
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    r = _Reader(parser, text, source)

    dim = r.get("model", "dim", int, required=True)
    s = r.get("model", "s", float, required=True)
    mu = r.get("model", "mu", float, required=True)
    q = r.get("model", "q", float, required=True)

    ladder = r.get("sweep", "eps", _floats, DEFAULT_LADDER)
    ladder_n = r.get("sweep", "points", _ints, DEFAULT_LADDER_POINTS)
    if len(ladder) != len(ladder_n):
        raise ConfigError(f"{source}: [sweep] eps and points have different lengths")
    eps = r.get("model", "eps", float, ladder[-1])

    family = r.get("potential", "family", str, "product_well")
    V0 = r.get("potential", "v0", float, 1.0)
    if family == "product_well":
        wells = r.get("potential", "wells", _points, required=True)
        potential = PotentialSpec(family, V0, r.get("potential", "amplitude", float, 2.0),
                                  r.get("potential", "width", float, 1.0), wells)
    else:
        potential = PotentialSpec(family, V0, wells=r.get("potential", "wells", _points, ()))

    if r.has("lambda"):
        shape = r.get("lambda", "shape", str, "box")
        region = RegionSpec(shape, r.get("lambda", "center", _floats, (0.0,) * dim),
                            r.get("lambda", "extent", _floats, required=True))
        if len(region.center) != dim:
            raise ConfigError(f"{source}: [lambda] center must have {dim} coordinates")
    else:
        region = None

    half_length = r.get("grid", "half_length", float, DEFAULT_HALF_LENGTH)
    points = r.get("grid", "points", int, None)
    ell = r.get("penalization", "ell", float, DEFAULT_ELL)
    delta = r.get("penalization", "delta", float, None)

    opts_kw = {}
    for f in fields(SolverOptions):
        conv = int if f.type in ("int", int) else float
        val = r.get("solver", f.name, conv, None)
        if val is not None:
            opts_kw[f.name] = val
    try:
        opts = SolverOptions(**opts_kw)
    except ValueError as exc:
        raise ConfigError(f"{source}: [solver] {exc}") from exc

    tmp_ladder_grid = make_grid(dim, half_length, ladder_n[0])
    auto_n = r.get("autonomous", "points", int, DEFAULT_AUTONOMOUS_POINTS)
    matched = auto_n * tmp_ladder_grid.spacing / (2.0 * ladder[0])
    auto_L = r.get("autonomous", "half_length", float, matched)

    if points is None:
        points = dict(zip(ladder, ladder_n)).get(eps, max(ladder_n))
    model = make_config(dim=dim, s=s, mu=mu, q=q, eps=eps, potential=potential,
                        lambda_region=region, grid=make_grid(dim, half_length, points),
                        ell=ell, delta=delta)
    return ExperimentConfig(model, opts, tuple(ladder), tuple(ladder_n),
                            make_grid(dim, auto_L, auto_n), source)


def load_config(path) -> ExperimentConfig:
    """Parse and validate a config file; hypothesis violations raise HypothesisError."""
    path = Path(path)
    return parse_config(path.read_text(), source=str(path))


STANDARD_CONFIG = """\
[model]
dim = 1
s = 0.4
mu = 0.5
q = 3

[potential]
family = product_well
V0 = 1.0
amplitude = 2.0
width = 1.0
wells = -2; 2

[lambda]
shape = box
center = 0
extent = 4

[penalization]
ell = 10

[grid]
half_length = 12

[sweep]
eps = 0.5, 0.25, 0.125
points = 1024, 2048, 4096

[autonomous]
points = 1024
"""

__all__ = ["ConfigError", "ExperimentConfig", "HypothesisError", "STANDARD_CONFIG",
           "load_config", "parse_config"]

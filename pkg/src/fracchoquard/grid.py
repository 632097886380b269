"""Uniform periodic grids on [-L, L]^N, real fields, and spectral transforms.

Transform convention (unitary on the box):

    u_hat[m] = h^N / (2L)^(N/2) * sum_j u(x_j) exp(-i k_m . x_j)

with x_j = -L + j h and k_m = pi m / L.  The coefficients are those of u
in the orthonormal basis exp(i k.x) / (2L)^(N/2), so that
``sum |u_hat|^2 == integrate(u**2)`` and a constant c maps to
``c * (2L)^(N/2)`` on the zero mode.  Coefficient arrays are stored in
numpy FFT order (m = 0, 1, ..., n/2-1, -n/2, ..., -1 along each axis).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    dim: int
    half_length: float
    points_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"unsupported dim {self.dim}; only 1 and 2 are supported")
        if not self.half_length > 0:
            raise ValueError(f"half_length must be positive, got {self.half_length}")
        n = self.points_per_axis
        if int(n) != n or n < 8 or n % 2:
            raise ValueError(f"points_per_axis must be an even integer >= 8, got {n}")
        object.__setattr__(self, "half_length", float(self.half_length))
        object.__setattr__(self, "points_per_axis", int(n))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.points_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        """Sample coordinates along one axis, -L + j h."""
        n = self.points_per_axis
        return -self.half_length + self.spacing * np.arange(n)

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Wavenumbers pi m / L along one axis, in FFT order."""
        n = self.points_per_axis
        m = np.fft.fftfreq(n, d=1.0 / n)
        return np.pi * m / self.half_length

    def coords(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcastable to ``shape`` (sparse meshgrid)."""
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij", sparse=True))

    def points(self) -> np.ndarray:
        """All sample points as an array of shape (n^N, N), row-major."""
        mesh = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack([c.ravel() for c in mesh], axis=-1)

    @cached_property
    def k_abs(self) -> np.ndarray:
        """|k| on the full FFT grid."""
        ks = np.meshgrid(*([self.frequencies] * self.dim), indexing="ij", sparse=True)
        return np.sqrt(sum(k**2 for k in ks))

    @cached_property
    def rk_abs(self) -> np.ndarray:
        """|k| on the half-spectrum used by ``rfftn`` (last axis truncated)."""
        n = self.points_per_axis
        last = np.pi * np.arange(n // 2 + 1) / self.half_length
        axes = [self.frequencies] * (self.dim - 1) + [last]
        ks = np.meshgrid(*axes, indexing="ij", sparse=True)
        return np.sqrt(sum(k**2 for k in ks))

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(-i k_m * (-L)) = (-1)^m, per axis
        n = self.points_per_axis
        m = np.fft.fftfreq(n, d=1.0 / n).astype(int)
        sign = np.where(m % 2 == 0, 1.0, -1.0)
        out = sign
        for _ in range(self.dim - 1):
            out = np.multiply.outer(out, sign)
        return out

    @property
    def transform_scale(self) -> float:
        return self.cell_volume / (2.0 * self.half_length) ** (self.dim / 2.0)


def make_grid(dim: int, half_length: float, points_per_axis: int) -> GridSpec:
    return GridSpec(dim, half_length, points_per_axis)


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a function on a grid.  Values are read-only."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            if vals.size == self.grid.size:
                vals = vals.reshape(self.grid.shape)
            else:
                raise ValueError(
                    f"field shape {vals.shape} does not match grid shape {self.grid.shape}"
                )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray) -> Field:
        return Field(self.grid, values)

    def __add__(self, other: Field) -> Field:
        _check_same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: Field) -> Field:
        _check_same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> Field:
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> Field:
        return Field(self.grid, -self.values)


def _check_same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def from_function(grid: GridSpec, func) -> Field:
    """Sample ``func(*coords)`` on the grid."""
    vals = np.broadcast_to(func(*grid.coords()), grid.shape)
    return Field(grid, vals)


def spectral_transform(u, direction: str = "forward", grid: GridSpec | None = None):
    """Unitary box transform.

    ``forward`` takes a Field and returns complex coefficients in FFT order;
    ``inverse`` takes coefficients (and the grid) and returns a real Field.
    """
    if direction == "forward":
        if not isinstance(u, Field):
            raise TypeError("forward transform expects a Field")
        g = u.grid
        return np.fft.fftn(u.values) * g._phase * g.transform_scale
    if direction == "inverse":
        if grid is None:
            raise ValueError("inverse transform needs the grid")
        coeffs = np.asarray(u)
        if coeffs.shape != grid.shape:
            raise ValueError(f"coefficient shape {coeffs.shape} does not match grid {grid.shape}")
        vals = np.fft.ifftn(coeffs * grid._phase) / grid.transform_scale
        return Field(grid, vals.real)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def integrate(u: Field) -> float:
    """Rectangle rule h^N * sum(values); spectrally accurate for periodic data."""
    return float(u.grid.cell_volume * np.sum(u.values))


def inner(u: Field, v: Field) -> float:
    _check_same_grid(u, v)
    return float(u.grid.cell_volume * np.vdot(u.values, v.values))


def l2_norm(u: Field) -> float:
    return float(np.sqrt(u.grid.cell_volume * np.vdot(u.values, u.values)))


def argmax_point(u: Field) -> tuple[np.ndarray, float]:
    """Grid point of the maximum; ties go to the lowest flat index."""
    flat = int(np.argmax(u.values.ravel()))
    idx = np.unravel_index(flat, u.grid.shape)
    point = np.array([u.grid.axis[i] for i in idx])
    return point, float(u.values.ravel()[flat])


def boundary_mass(u: Field, layers: int = 4) -> float:
    """Fraction of the L2 mass within ``layers`` cells of the box boundary."""
    g = u.grid
    dist = np.full(g.shape, np.inf)
    for c in g.coords():
        dist = np.minimum(dist, g.half_length - np.abs(c))
    total = float(np.sum(u.values**2))
    if total == 0.0:
        return 0.0
    return float(np.sum(u.values[dist < layers * g.spacing] ** 2) / total)


def trig_interpolate(u: Field, points: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``u`` at arbitrary points.

    ``points`` has shape (P, N).  The Nyquist mode is split evenly between
    +n/2 and -n/2, which makes the interpolant real.  Cost is O(P n^N), so
    this is meant for patches, not whole fine grids.
    """
    g = u.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != g.dim:
        raise ValueError(f"points must have {g.dim} columns")
    coef = spectral_transform(u)
    nyq = g.points_per_axis // 2
    k = g.frequencies
    norm = (2.0 * g.half_length) ** (-g.dim / 2.0)

    def basis(x):
        e = np.exp(1j * np.outer(x, k))
        e[:, nyq] = np.cos(k[nyq] * x)
        return e

    out = np.empty(len(pts))
    for start in range(0, len(pts), chunk):
        block = pts[start:start + chunk]
        if g.dim == 1:
            val = basis(block[:, 0]) @ coef
        else:
            val = np.einsum("pi,ij,pj->p", basis(block[:, 0]), coef, basis(block[:, 1]))
        out[start:start + chunk] = val.real * norm
    return out

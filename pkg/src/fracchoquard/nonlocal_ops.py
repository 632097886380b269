"""Fractional Laplacian and free-space Riesz-potential convolution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _quad

from .grid import Field, GridSpec


def _check_s(s: float) -> None:
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order s must lie in (0, 1), got {s}")


def frac_laplacian(u: Field, s: float, scale: float = 1.0) -> Field:
    """Apply ``scale * (-Delta)^s`` as the Fourier multiplier |k|^(2s).

    The zero mode is annihilated.  Pass ``scale = eps**(2s)`` for the
    semiclassical operator.
    """
    _check_s(s)
    if not scale > 0:
        raise ValueError("scale must be positive")
    g = u.grid
    mult = scale * g.rk_abs ** (2.0 * s)
    vals = np.fft.irfftn(np.fft.rfftn(u.values) * mult, s=g.shape, axes=range(g.dim))
    return Field(g, vals)


def frac_seminorm_sq(u: Field, s: float) -> float:
    """Gagliardo seminorm squared, computed as sum |k|^(2s) |u_hat|^2."""
    _check_s(s)
    g = u.grid
    coef = np.fft.rfftn(u.values)
    weight = np.full(coef.shape, 2.0)
    # columns without a conjugate partner in the half spectrum
    weight[..., 0] = 1.0
    weight[..., -1] = 1.0
    power = weight * np.abs(coef) ** 2 * g.rk_abs ** (2.0 * s)
    return float(np.sum(power) * g.transform_scale**2)


def origin_cell_average(dim: int, h: float, mu: float) -> float:
    """Mean of |x|^(-mu) over the cell [-h/2, h/2]^dim.

    1D is closed form.  In 2D the square splits into eight triangles; the
    radial integral is exact and the angular one is done by adaptive
    quadrature.
    """
    if dim == 1:
        return 2.0 / (h * (1.0 - mu)) * (h / 2.0) ** (1.0 - mu)
    if dim == 2:
        ang, _ = _quad.quad(lambda th: np.cos(th) ** (mu - 2.0), 0.0, np.pi / 4,
                            epsabs=0.0, epsrel=1e-13)
        total = 8.0 / (2.0 - mu) * (h / 2.0) ** (2.0 - mu) * ang
        return total / h**2
    raise ValueError(f"unsupported dim {dim}")


@dataclass(frozen=True, eq=False)
class RieszKernel:
    """|x|^(-mu) sampled on the doubled grid of offsets, origin cell averaged.

    ``samples`` holds K at offsets j*h, j in [-n, n) per axis, laid out in
    FFT (wrap-around) order so that it can be circularly convolved with a
    zero-padded field of size 2n.
    """

    grid: GridSpec
    mu: float
    samples: np.ndarray
    cell_average_origin: float
    spectrum: np.ndarray = field(repr=False)


def build_riesz_kernel(grid: GridSpec, mu: float) -> RieszKernel:
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if mu >= grid.dim:
        raise ValueError(f"mu = {mu} >= N = {grid.dim}: kernel not locally integrable")
    n, h = grid.points_per_axis, grid.spacing
    offs = h * np.fft.fftfreq(2 * n, d=1.0 / (2 * n))
    mesh = np.meshgrid(*([offs] * grid.dim), indexing="ij", sparse=True)
    r = np.sqrt(sum(c**2 for c in mesh))
    with np.errstate(divide="ignore"):
        samples = r ** (-mu)
    avg = origin_cell_average(grid.dim, h, mu)
    samples[(0,) * grid.dim] = avg
    samples.setflags(write=False)
    spectrum = np.fft.rfftn(samples)
    spectrum.setflags(write=False)
    return RieszKernel(grid, float(mu), samples, avg, spectrum)


def _padded(values: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((2 * n,) * values.ndim)
    out[(slice(0, n),) * values.ndim] = values
    return out


def riesz_convolve_array(values: np.ndarray, kernel: RieszKernel) -> np.ndarray:
    """Array-level free-space convolution h^N sum_y K(x - y) values(y)."""
    g = kernel.grid
    n = g.points_per_axis
    full = np.fft.irfftn(np.fft.rfftn(_padded(values, n)) * kernel.spectrum, s=(2 * n,) * g.dim, axes=range(g.dim))
    return g.cell_volume * full[(slice(0, n),) * g.dim]


def riesz_convolve(h_field: Field, kernel: RieszKernel) -> Field:
    """Linear (not circular) convolution with the sampled Riesz kernel."""
    if h_field.grid != kernel.grid:
        raise ValueError("field and kernel are on different grids")
    return Field(h_field.grid, riesz_convolve_array(h_field.values, kernel))


def riesz_energy(g_field: Field, h_field: Field, kernel: RieszKernel) -> float:
    """Bilinear form  integral (K * g) h ;  symmetric in (g, h)."""
    if g_field.grid != h_field.grid or g_field.grid != kernel.grid:
        raise ValueError("fields and kernel must share a grid")
    conv = riesz_convolve_array(g_field.values, kernel)
    return float(kernel.grid.cell_volume * np.vdot(conv, h_field.values))

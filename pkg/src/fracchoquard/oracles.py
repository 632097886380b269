"""Slow reference implementations used to check the fast operators.

Nothing here touches an FFT: transforms are dense DFT matrices and
convolutions are explicit double sums.
"""

from __future__ import annotations

import numpy as np

from .grid import GridSpec


def dft_matrix(grid: GridSpec) -> np.ndarray:
    """Dense unitary-box DFT matrix for the 1D axis, acting on samples."""
    x = grid.axis
    k = grid.frequencies
    return grid.spacing / np.sqrt(2.0 * grid.half_length) * np.exp(-1j * np.outer(k, x))


def dense_transform(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    F = dft_matrix(grid)
    out = np.asarray(values, dtype=complex)
    for ax in range(grid.dim):
        out = np.moveaxis(np.tensordot(F, out, axes=([1], [ax])), 0, ax)
    return out


def dense_inverse(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    # the unitary-box inverse is the conjugate transpose up to the cell volume
    F = dft_matrix(grid)
    Finv = F.conj().T / grid.spacing
    out = np.asarray(coeffs, dtype=complex)
    for ax in range(grid.dim):
        out = np.moveaxis(np.tensordot(Finv, out, axes=([1], [ax])), 0, ax)
    return out


def dense_frac_laplacian(grid: GridSpec, values: np.ndarray, s: float, scale: float = 1.0) -> np.ndarray:
    ks = np.meshgrid(*([grid.frequencies] * grid.dim), indexing="ij")
    kabs = np.sqrt(sum(k**2 for k in ks))
    coef = dense_transform(grid, values)
    return dense_inverse(grid, scale * kabs ** (2 * s) * coef).real


def direct_riesz_matrix(grid: GridSpec, mu: float, origin_value: float) -> np.ndarray:
    """K(x_i - x_j) for every pair of grid points, origin replaced by ``origin_value``."""
    pts = grid.points()
    diff = pts[:, None, :] - pts[None, :, :]
    r = np.sqrt(np.sum(diff**2, axis=-1))
    with np.errstate(divide="ignore"):
        K = r ** (-mu)
    K[r == 0] = origin_value
    return K


def direct_convolve(grid: GridSpec, values: np.ndarray, mu: float, origin_value: float) -> np.ndarray:
    K = direct_riesz_matrix(grid, mu, origin_value)
    return (grid.cell_volume * K @ np.ravel(values)).reshape(grid.shape)


def direct_energy(grid: GridSpec, a: np.ndarray, b: np.ndarray, mu: float, origin_value: float) -> float:
    K = direct_riesz_matrix(grid, mu, origin_value)
    return float(grid.cell_volume**2 * np.ravel(a) @ K @ np.ravel(b))


def cell_average_quadrature(dim: int, h: float, mu: float) -> float:
    """Cell mean of |x|^-mu by adaptive quadrature in Cartesian coordinates."""
    from scipy import integrate

    if dim == 1:
        val, _ = integrate.quad(lambda x: x ** (-mu), 0.0, h / 2, epsabs=0.0, epsrel=1e-12)
        return 2.0 * val / h
    # one quadrant; the inner integral in y has a closed-form-free singularity only at x = 0
    val, _ = integrate.dblquad(lambda y, x: (x * x + y * y) ** (-mu / 2), 0.0, h / 2,
                               0.0, h / 2, epsabs=0.0, epsrel=1e-11)
    return 4.0 * val / h**2


def central_difference(fun, u: np.ndarray, v: np.ndarray, step: float) -> float:
    return (fun(u + step * v) - fun(u - step * v)) / (2.0 * step)

"""Double-well potential, the kink (instanton) family, and its zero mode.

The potential is fixed to V(m) = m^4/4 - m^2/2; every constant downstream
(normalization sqrt(3)/2 of the zero mode, the spectral gap 3/2, the limit
diffusion coefficients) is specific to this V.
"""

import numpy as np

from .grid import Field, Grid1D, inner_product, laplacian_neumann

# L2 normalization of the kink derivative: integral of sech^4 is 4/3,
# so (sqrt(3)/2)^2 * 4/3 = 1.
ZERO_MODE_SCALE = np.sqrt(3.0) / 2.0


def potential_derivatives(m):
    """Return (V, V', V'') at m; works on scalars and arrays.

    Powers are expanded as products so that V' is bitwise odd and V, V''
    bitwise even (vectorized pow is not exactly sign-symmetric).
    """
    m = np.asarray(m, dtype=float)
    m2 = m * m
    v = 0.25 * (m2 * m2) - 0.5 * m2
    v1 = m2 * m - m
    v2 = 3.0 * m2 - 1.0
    if m.ndim == 0:
        return float(v), float(v1), float(v2)
    return v, v1, v2


def potential_curvature(m):
    """V''(m) alone, the linearization coefficient."""
    m = np.asarray(m, dtype=float)
    return 3.0 * (m * m) - 1.0


def instanton_profile(x, x0=0.0):
    return np.tanh(np.asarray(x, dtype=float) - x0)


def instanton_slope(x, x0=0.0):
    """First derivative sech^2(x - x0) of the kink profile."""
    return 1.0 / np.cosh(np.asarray(x, dtype=float) - x0) ** 2


def instanton_curvature(x, x0=0.0):
    """Second derivative -2 sech^2 tanh of the kink profile."""
    z = np.asarray(x, dtype=float) - x0
    return -2.0 * np.tanh(z) / np.cosh(z) ** 2


def instanton_field(grid: Grid1D, x0: float) -> Field:
    """Kink tanh(x - x0) sampled at the grid nodes."""
    return Field(grid, instanton_profile(grid.x, x0))


def instanton_derivative_field(grid: Grid1D, x0: float, normalized: bool = False) -> Field:
    """sech^2(x - x0), scaled by sqrt(3)/2 when normalized (unit L2 norm)."""
    v = instanton_slope(grid.x, x0)
    if normalized:
        v = ZERO_MODE_SCALE * v
    return Field(grid, v)


def stationarity_residual(grid: Grid1D, f: Field | None = None) -> float:
    """Max residual of 0.5*Lap(f) - V'(f) on nodes >= 2 units from the boundary.

    With f = None the centered kink is used, for which the residual is pure
    discretization error, O(dx^2).
    """
    if f is None:
        f = instanton_field(grid, 0.0)
    lap = laplacian_neumann(f)
    _, v1, _ = potential_derivatives(f.values)
    resid = 0.5 * lap.values - v1
    interior = np.abs(grid.x) <= grid.half_length - 2.0
    return float(np.max(np.abs(resid[interior])))


def zero_mode_residual(grid: Grid1D, x0: float = 0.0) -> float:
    """Sup norm of 0.5*Lap(m') - V''(m)*m' on interior nodes (discrete zero-mode check)."""
    mp = instanton_derivative_field(grid, x0)
    m = instanton_field(grid, x0)
    lap = laplacian_neumann(mp)
    resid = 0.5 * lap.values - potential_curvature(m.values) * mp.values
    interior = np.abs(grid.x - x0) <= grid.half_length - 2.0
    return float(np.max(np.abs(resid[interior])))


def zero_mode_norm_squared(grid: Grid1D, x0: float = 0.0) -> float:
    """Trapezoid value of <m', m'>; tends to 4/3 on large grids."""
    mp = instanton_derivative_field(grid, x0)
    return inner_product(mp, mp)

"""Uniform symmetric 1-D grid with Neumann boundary handling.

The computational domain is [-half_length, half_length]. Functions on the
grid extend to the whole line by reflecting through +half_length and
repeating with period 4*half_length, which is the extension compatible with
zero-flux boundaries. All discrete operators here (second difference, heat
semigroup, quadrature) are consistent with that extension.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Uniform grid on [-half_length, half_length] with n_nodes points.

    Node positions are exactly antisymmetric: x[j] + x[n-1-j] == 0.
    """

    epsilon: float
    half_length: float
    dx: float
    n_nodes: int
    x: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)  # trapezoid weights, sum = 2*half_length

    def __eq__(self, other):
        if not isinstance(other, Grid1D):
            return NotImplemented
        return (
            self.epsilon == other.epsilon
            and self.half_length == other.half_length
            and self.dx == other.dx
            and self.n_nodes == other.n_nodes
        )

    def __hash__(self):
        return hash((self.epsilon, self.half_length, self.dx, self.n_nodes))


@dataclass(frozen=True)
class Field:
    """Real-valued function sampled at the nodes of a Grid1D."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"field has {values.shape} values, grid has {self.grid.n_nodes} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def build_grid(epsilon, dx, half_length_override=None):
    """Build the grid for inverse half-length epsilon and spacing dx.

    half_length defaults to 1/epsilon; an override allows truncated
    desk-scale domains. dx must divide 2*half_length; the stored spacing is
    recomputed as 2*half_length/(n_nodes-1) so the cover is exact to
    rounding.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if dx <= 0:
        raise ValueError("dx must be positive")
    half_length = 1.0 / epsilon if half_length_override is None else float(half_length_override)
    if half_length <= 0:
        raise ValueError("half_length must be positive")
    if dx > half_length:
        raise ValueError(f"dx={dx} larger than half_length={half_length}")
    n_cells = 2.0 * half_length / dx
    if abs(n_cells - round(n_cells)) > 1e-6 * max(1.0, n_cells):
        raise ValueError(f"dx={dx} does not divide 2*half_length={2 * half_length}")
    n_nodes = int(round(n_cells)) + 1
    if n_nodes < 3:
        raise ValueError("grid needs at least 3 nodes")
    dx_exact = 2.0 * half_length / (n_nodes - 1)
    # x[j] = dx*(j - (n-1)/2): antisymmetric pairs cancel exactly in floats
    x = dx_exact * (np.arange(n_nodes) - (n_nodes - 1) / 2.0)
    x.flags.writeable = False
    weights = np.full(n_nodes, dx_exact)
    weights[0] = weights[-1] = dx_exact / 2.0
    weights.flags.writeable = False
    return Grid1D(
        epsilon=float(epsilon),
        half_length=half_length,
        dx=dx_exact,
        n_nodes=n_nodes,
        x=x,
        weights=weights,
    )


def reflect_extend(f: Field, x):
    """Evaluate the reflective periodic extension of a field at any real x.

    Reflect through +half_length, then repeat with period 4*half_length.
    Off-node points are linearly interpolated.
    """
    L = f.grid.half_length
    y = np.mod(np.asarray(x, dtype=float) + L, 4.0 * L)
    x_mapped = np.where(y <= 2.0 * L, y - L, 3.0 * L - y)
    out = np.interp(x_mapped, f.grid.x, f.values)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def laplacian_neumann(f: Field) -> Field:
    """Second difference with even-reflection ghost nodes at both ends.

    The neighbor sum is grouped as (left + right) - 2*center, which makes
    the stencil commute bit-exactly with grid reflection.
    """
    v = f.values
    dx2 = f.grid.dx**2
    out = np.empty_like(v)
    out[1:-1] = ((v[:-2] + v[2:]) - 2.0 * v[1:-1]) / dx2
    out[0] = 2.0 * (v[1] - v[0]) / dx2
    out[-1] = 2.0 * (v[-2] - v[-1]) / dx2
    return Field(f.grid, out)


def inner_product(f: Field, g: Field) -> float:
    """Trapezoidal quadrature of f*g over the domain."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return float(np.dot(f.grid.weights, f.values * g.values))


class HeatSolver:
    """Backward-Euler step for du/dt = 0.5*u_xx with Neumann boundaries.

    One step solves (I - (dt/2)*Lap_N) u_new = u_old. The matrix is
    symmetrized by the sqrt of the trapezoid weights and factorized once
    (Cholesky, banded); steps reuse the factor. The step matrix is
    entrywise nonnegative with unit row sums, so it is a sup-norm
    contraction and conserves the trapezoid integral exactly.
    """

    def __init__(self, grid: Grid1D, dt: float):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.dt = dt
        n = grid.n_nodes
        r = dt / (2.0 * grid.dx**2)
        diag = np.full(n, 1.0 + 2.0 * r)
        off = np.full(n - 1, -r)
        off[0] = -r * np.sqrt(2.0)
        off[-1] = -r * np.sqrt(2.0)
        # upper banded storage for cholesky_banded: row 0 superdiag, row 1 diag
        ab = np.zeros((2, n))
        ab[0, 1:] = off
        ab[1, :] = diag
        self._cho = cholesky_banded(ab, lower=False)
        s = np.ones(n)
        s[0] = s[-1] = np.sqrt(0.5)
        self._s = s

    def step(self, values):
        """Apply one implicit step to node values (1-D) or columns (2-D).

        Non-finite inputs pass through as non-finite outputs; blow-up
        detection is the caller's responsibility.
        """
        if values.ndim == 1:
            y = cho_solve_banded((self._cho, False), self._s * values, check_finite=False)
            return y / self._s
        y = cho_solve_banded((self._cho, False), self._s[:, None] * values, check_finite=False)
        return y / self._s[:, None]


def heat_step_matrix(grid: Grid1D, dt: float) -> np.ndarray:
    """Dense matrix of one implicit heat step (for kernel-property checks)."""
    solver = HeatSolver(grid, dt)
    return solver.step(np.eye(grid.n_nodes))


def apply_heat_semigroup(f: Field, t: float, dt: float = 0.01) -> Field:
    """Heat semigroup at time t via repeated implicit sub-steps.

    t must be nonnegative; t = 0 returns the field unchanged. Sub-steps
    have length t/ceil(t/dt), so times that are multiples of dt compose
    exactly (semigroup property holds to rounding).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return Field(f.grid, f.values)
    n_sub = max(1, int(np.ceil(t / dt - 1e-12)))
    dt_sub = t / n_sub
    solver = HeatSolver(f.grid, dt_sub)
    v = f.values
    for _ in range(n_sub):
        v = solver.step(v)
    return Field(f.grid, v)

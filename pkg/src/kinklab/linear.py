"""Linearization around the kink: spectrum, semigroup, and the coupled modes.

The operator is 0.5*d2/dx2 - V''(kink) - shift with the Neumann stencil.
It is self-adjoint with respect to the trapezoid inner product; conjugating
by the square roots of the quadrature weights gives a genuinely symmetric
tridiagonal matrix, which is what gets stored and eigensolved.

The sum and difference of the two coupled linearized components decouple:
the sum evolves under the bare operator, the difference under the operator
shifted by twice the coupling strength.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .grid import Field, Grid1D, HeatSolver, inner_product
from .model import (
    instanton_derivative_field,
    instanton_field,
    potential_curvature,
)


@dataclass(frozen=True)
class LinearOperator:
    grid: Grid1D
    x0: float
    shift: float
    diagonal: np.ndarray = field(repr=False)
    off_diagonal: np.ndarray = field(repr=False)  # symmetrized, shared by both sides
    _sqrt_w: np.ndarray = field(repr=False)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Apply the operator to node values (node basis)."""
        y = self._sqrt_w * values
        out = self.diagonal * y
        out[:-1] += self.off_diagonal * y[1:]
        out[1:] += self.off_diagonal * y[:-1]
        return out / self._sqrt_w

    def potential(self) -> np.ndarray:
        """V''(kink) + shift at the nodes (the non-Laplacian part, negated)."""
        return potential_curvature(instanton_field(self.grid, self.x0).values) + self.shift


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray  # descending
    eigenvectors: list  # Fields, trapezoid-normalized
    gap: float


def assemble_operator(grid: Grid1D, x0: float, shift: float = 0.0) -> LinearOperator:
    """Discrete 0.5*Lap - V''(kink at x0) - shift with Neumann boundary rows."""
    if abs(x0) > grid.half_length - 2.0:
        raise ValueError(f"x0={x0} too close to the boundary of [-{grid.half_length}, {grid.half_length}]")
    n = grid.n_nodes
    dx2 = grid.dx**2
    vpp = potential_curvature(instanton_field(grid, x0).values)
    diag = -1.0 / dx2 - vpp - shift
    off = np.full(n - 1, 1.0 / (2.0 * dx2))
    off[0] *= np.sqrt(2.0)
    off[-1] *= np.sqrt(2.0)
    s = np.ones(n)
    s[0] = s[-1] = np.sqrt(0.5)
    return LinearOperator(
        grid=grid, x0=x0, shift=float(shift), diagonal=diag, off_diagonal=off, _sqrt_w=s
    )


def eigen_spectrum(op: LinearOperator, k: int) -> SpectrumResult:
    """Top-k eigenvalues (algebraically largest) with residual-validated eigenvectors."""
    n = op.grid.n_nodes
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for {n} nodes")
    vals, vecs = eigh_tridiagonal(
        op.diagonal, op.off_diagonal, select="i", select_range=(n - k, n - 1)
    )
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    fields = []
    sqrt_w = np.sqrt(op.grid.weights)
    for i in range(k):
        u = vecs[:, i] / sqrt_w  # unit-norm in the trapezoid inner product
        if u[np.argmax(np.abs(u))] < 0:
            u = -u
        resid = op.apply(u) - vals[i] * u
        rnorm = np.sqrt(np.dot(op.grid.weights, resid**2))
        unorm = np.sqrt(np.dot(op.grid.weights, u**2))
        if rnorm > 1e-8 * unorm:
            raise RuntimeError(
                f"eigenpair {i} failed residual check: |Av - mu v| = {rnorm:.3e}"
            )
        fields.append(Field(op.grid, u))
    gap = float(vals[0] - vals[1]) if k >= 2 else float("nan")
    return SpectrumResult(eigenvalues=np.array(vals), eigenvectors=fields, gap=gap)


class LinearStepper:
    """Splitting step for du/dt = (0.5*Lap - V'' - shift) u: explicit potential,
    implicit diffusion. Shared by the pair evolution and the kernel checks."""

    def __init__(self, grid: Grid1D, x0: float, dt: float, shift: float = 0.0):
        self.grid = grid
        self.dt = dt
        self.solver = HeatSolver(grid, dt)
        vpp = potential_curvature(instanton_field(grid, x0).values)
        self.multiplier = 1.0 - dt * (vpp + shift)

    def step(self, values):
        if values.ndim == 1:
            return self.solver.step(self.multiplier * values)
        return self.solver.step(self.multiplier[:, None] * values)


def evolve_linear_pair(u0: Field, v0: Field, lam: float, x0: float, t_end: float, dt: float):
    """Evolve the noise-free coupled linearization, recording mode diagnostics.

    Records, at every step: the zero-mode projections of the sum and
    difference modes, the sup norm of the sum mode minus its zero-mode part,
    and the sup norm of the difference mode.
    """
    if u0.grid != v0.grid:
        raise ValueError("fields live on different grids")
    grid = u0.grid
    stepper = LinearStepper(grid, x0, dt)
    mz = instanton_derivative_field(grid, x0, normalized=True)
    w = grid.weights
    mzv = mz.values

    n_steps = int(round(t_end / dt))
    u = u0.values.copy()
    v = v0.values.copy()
    lam_dt = lam * dt

    times = np.empty(n_steps + 1)
    proj_plus = np.empty(n_steps + 1)
    proj_minus = np.empty(n_steps + 1)
    orth_plus_sup = np.empty(n_steps + 1)
    minus_sup = np.empty(n_steps + 1)

    def record(i, t):
        up = u + v
        um = u - v
        pp = float(np.dot(w, up * mzv))
        pm = float(np.dot(w, um * mzv))
        times[i] = t
        proj_plus[i] = pp
        proj_minus[i] = pm
        orth_plus_sup[i] = float(np.max(np.abs(up - pp * mzv)))
        minus_sup[i] = float(np.max(np.abs(um)))

    record(0, 0.0)
    for k in range(1, n_steps + 1):
        u_star = u + lam_dt * (v - u)
        v_star = v + lam_dt * (u - v)
        out = stepper.step(np.column_stack([u_star, v_star]))
        u, v = out[:, 0], out[:, 1]
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise RuntimeError(f"linear evolution blew up at t={k * dt:.6g}")
        record(k, k * dt)

    records = {
        "t": times,
        "proj_plus": proj_plus,
        "proj_minus": proj_minus,
        "orth_plus_sup": orth_plus_sup,
        "minus_sup": minus_sup,
    }
    return Field(grid, u), Field(grid, v), records


def fit_decay_rate(times, values, window) -> float:
    """Least-squares slope of log(values) against time on the window, sign-flipped."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t_lo, t_hi = window
    mask = (times >= t_lo) & (times <= t_hi)
    if np.count_nonzero(mask) < 3:
        raise ValueError("decay fit needs at least 3 points in the window")
    y = values[mask]
    if np.any(y <= 0):
        raise ValueError("decay fit window contains non-positive values")
    slope = np.polyfit(times[mask], np.log(y), 1)[0]
    return float(-slope)


def propagator_matrix(op: LinearOperator, t: float, dt: float = 0.0125) -> np.ndarray:
    """Dense matrix of the discrete semigroup at time t, built by evolving
    the identity (column j is the evolution of the indicator of node j)."""
    n_steps = max(1, int(round(t / dt)))
    stepper = LinearStepper(op.grid, op.x0, t / n_steps, shift=op.shift)
    mat = np.eye(op.grid.n_nodes)
    for _ in range(n_steps):
        mat = stepper.step(mat)
    return mat


def evolve_semigroup(op: LinearOperator, values: np.ndarray, t: float, dt: float = 0.0125):
    """Apply the discrete semigroup at time t to node values."""
    n_steps = max(1, int(round(t / dt)))
    stepper = LinearStepper(op.grid, op.x0, t / n_steps, shift=op.shift)
    v = values.copy()
    for _ in range(n_steps):
        v = stepper.step(v)
    return v


def semigroup_contraction_check(op: LinearOperator, phi: Field, t: float, dt: float = 0.0125):
    """Measured pair (sup norm of the evolved zero-mode complement,
    exp(-gap*t) times the initial complement sup norm).

    The gap is taken from the operator's own top two eigenvalues. Callers
    assert lhs <= C*rhs with a calibrated constant.
    """
    if t < 1.0:
        raise ValueError("contraction check excludes the transient: t >= 1 required")
    mz = instanton_derivative_field(op.grid, op.x0, normalized=True)
    coeff = inner_product(phi, mz)
    perp = phi.values - coeff * mz.values
    evolved = evolve_semigroup(op, perp, t, dt=dt)
    spectrum = eigen_spectrum(op, 2)
    lhs = float(np.max(np.abs(evolved)))
    rhs = float(np.exp(-spectrum.gap * t) * np.max(np.abs(perp)))
    return lhs, rhs

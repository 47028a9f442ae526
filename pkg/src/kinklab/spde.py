"""Stochastic integrator for the coupled two-component system.

Each step splits the dynamics: reaction, linear coupling and the white-noise
increment are applied explicitly, then the half-Laplacian diffusion is
applied implicitly (tridiagonal solve). Adding the noise before the solve
means every increment is smoothed by one application of the heat step,
matching the integral (mild) form of the equation where noise enters under
the semigroup.

Noise convention: each component receives an independent Gaussian per node
and per step with variance 1/(dx*dt), scaled by sqrt(epsilon)*dt in the
update, so the increment variance per node is epsilon*dt/dx (lattice
space-time white noise).
"""

from dataclasses import dataclass, replace

import numpy as np

from .grid import Field, Grid1D, HeatSolver, build_grid
from .model import instanton_profile, potential_derivatives


class BlowUpError(RuntimeError):
    """Raised when a trajectory produces non-finite values."""

    def __init__(self, t, seed, replica):
        super().__init__(
            f"blow-up: non-finite field values at t={t:.6g} (seed={seed}, replica={replica})"
        )
        self.t = t
        self.seed = seed
        self.replica = replica


@dataclass(frozen=True)
class InstantonInitial:
    x0: float = 0.0


@dataclass(frozen=True)
class ConstantInitial:
    value: float = 0.0


@dataclass(frozen=True)
class FieldPairInitial:
    m1: np.ndarray
    m2: np.ndarray


@dataclass(frozen=True)
class SimConfig:
    epsilon: float
    lam: float = 1.0
    dx: float = 0.1
    dt: float | None = None
    t_end: float = 10.0
    seed: int = 1
    record_stride: int | None = None
    mode: str = "coupled"
    initial: object = InstantonInitial(0.0)
    half_length: float | None = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.dx <= 0:
            raise ValueError("dx must be positive")
        if self.dt is None:
            object.__setattr__(self, "dt", self.dx / 4.0)
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.dt > self.dx:
            raise ValueError(f"dt={self.dt} exceeds dx={self.dx}")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.record_stride is None:
            object.__setattr__(self, "record_stride", max(1, int(round(0.1 / self.dt))))
        if self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")
        if self.mode not in ("coupled", "single"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def grid(self) -> Grid1D:
        return build_grid(self.epsilon if self.epsilon > 0 else 1.0 / self._domain(),
                          self.dx, half_length_override=self._domain())

    def _domain(self) -> float:
        if self.half_length is not None:
            return self.half_length
        if self.epsilon <= 0:
            raise ValueError("half_length required when epsilon = 0")
        return 1.0 / self.epsilon


@dataclass(frozen=True)
class CoupledState:
    t: float
    m1: Field
    m2: Field

    def __post_init__(self):
        if self.m1.grid != self.m2.grid:
            raise ValueError("components live on different grids")


@dataclass(frozen=True)
class NoiseSlice:
    """One white-noise field per component, N(0, 1/(dx*dt)) per node."""

    z1: np.ndarray
    z2: np.ndarray


@dataclass
class Trajectory:
    """Recorded states of one run: times plus (n_frames, n_nodes) arrays."""

    config: SimConfig
    replica: int
    grid: Grid1D
    times: np.ndarray
    m1: np.ndarray
    m2: np.ndarray

    @property
    def n_frames(self):
        return len(self.times)

    def state(self, i) -> CoupledState:
        return CoupledState(
            float(self.times[i]), Field(self.grid, self.m1[i]), Field(self.grid, self.m2[i])
        )

    def average(self, i) -> Field:
        """The tracked field: component average in coupled mode, m1 in single mode."""
        if self.config.mode == "single":
            return Field(self.grid, self.m1[i])
        return Field(self.grid, 0.5 * (self.m1[i] + self.m2[i]))


def replica_rngs(seed: int, replica: int):
    """Independent per-component generators derived from (seed, replica, component)."""
    return tuple(
        np.random.default_rng(np.random.SeedSequence([int(seed), int(replica), comp]))
        for comp in (0, 1)
    )


def sample_noise(grid: Grid1D, dt: float, rngs) -> NoiseSlice:
    """Draw one white-noise slice; advances both generators deterministically."""
    sigma = 1.0 / np.sqrt(grid.dx * dt)
    z1 = rngs[0].standard_normal(grid.n_nodes) * sigma
    z2 = rngs[1].standard_normal(grid.n_nodes) * sigma
    return NoiseSlice(z1=z1, z2=z2)


def drift(m1, m2, lam, grid: Grid1D, mode="coupled"):
    """Deterministic drift of both components (reaction + coupling + diffusion)."""
    from .grid import laplacian_neumann

    lap1 = laplacian_neumann(Field(grid, m1)).values
    _, v1, _ = potential_derivatives(m1)
    d1 = 0.5 * lap1 - v1
    if mode == "coupled":
        lap2 = laplacian_neumann(Field(grid, m2)).values
        _, v2, _ = potential_derivatives(m2)
        d2 = 0.5 * lap2 - v2
        d1 = d1 + lam * (m2 - m1)
        d2 = d2 + lam * (m1 - m2)
    else:
        d2 = np.zeros_like(m2)
    return d1, d2


def _initial_arrays(config: SimConfig, grid: Grid1D):
    init = config.initial
    if isinstance(init, InstantonInitial):
        m = instanton_profile(grid.x, init.x0)
        return m.copy(), m.copy()
    if isinstance(init, ConstantInitial):
        m = np.full(grid.n_nodes, float(init.value))
        return m, m.copy()
    if isinstance(init, FieldPairInitial):
        m1 = np.asarray(init.m1, dtype=float)
        m2 = np.asarray(init.m2, dtype=float)
        if m1.shape != (grid.n_nodes,) or m2.shape != (grid.n_nodes,):
            raise ValueError("initial field pair does not match the grid")
        return m1.copy(), m2.copy()
    raise ValueError(f"unknown initial condition {init!r}")


def _advance(m1, m2, config: SimConfig, solver: HeatSolver, grid: Grid1D, noise: NoiseSlice):
    dt = config.dt
    amp = np.sqrt(config.epsilon) * dt
    _, v1, _ = potential_derivatives(m1)
    if config.mode == "coupled":
        _, v2, _ = potential_derivatives(m2)
        star1 = m1 + dt * (-v1 + config.lam * (m2 - m1)) + amp * noise.z1
        star2 = m2 + dt * (-v2 + config.lam * (m1 - m2)) + amp * noise.z2
        out = solver.step(np.column_stack([star1, star2]))
        return out[:, 0], out[:, 1]
    star1 = m1 + dt * (-v1) + amp * noise.z1
    return solver.step(star1), m2


def step(state: CoupledState, config: SimConfig, rngs, solver: HeatSolver | None = None) -> CoupledState:
    """One splitting step; pure in its inputs apart from advancing the rngs."""
    grid = state.m1.grid
    if solver is None:
        solver = HeatSolver(grid, config.dt)
    noise = sample_noise(grid, config.dt, rngs)
    m1, m2 = _advance(state.m1.values, state.m2.values, config, solver, grid, noise)
    t = state.t + config.dt
    if not (np.all(np.isfinite(m1)) and np.all(np.isfinite(m2))):
        raise BlowUpError(t, config.seed, 0)
    return CoupledState(t, Field(grid, m1), Field(grid, m2))


def simulate(config: SimConfig, replica: int = 0) -> Trajectory:
    """Run one trajectory, recording every record_stride steps (initial state included)."""
    grid = config.grid()
    n_steps = int(round(config.t_end / config.dt))
    if abs(n_steps * config.dt - config.t_end) > 1e-9 * max(1.0, config.t_end):
        raise ValueError("t_end must be a multiple of dt")
    solver = HeatSolver(grid, config.dt)
    rngs = replica_rngs(config.seed, replica)
    m1, m2 = _initial_arrays(config, grid)
    stride = config.record_stride

    times = [0.0]
    rec1 = [m1.copy()]
    rec2 = [m2.copy()]
    for k in range(1, n_steps + 1):
        noise = sample_noise(grid, config.dt, rngs)
        m1, m2 = _advance(m1, m2, config, solver, grid, noise)
        if not (np.all(np.isfinite(m1)) and np.all(np.isfinite(m2))):
            raise BlowUpError(k * config.dt, config.seed, replica)
        if k % stride == 0 or k == n_steps:
            times.append(k * config.dt)
            rec1.append(m1.copy())
            rec2.append(m2.copy())
    return Trajectory(
        config=config,
        replica=replica,
        grid=grid,
        times=np.array(times),
        m1=np.array(rec1),
        m2=np.array(rec2),
    )


def simulate_pair_same_noise(config: SimConfig, initial_a, initial_b, replica: int = 0):
    """Two runs driven by the identical noise realization (same seed and draws)."""
    traj_a = simulate(replace(config, initial=initial_a), replica=replica)
    traj_b = simulate(replace(config, initial=initial_b), replica=replica)
    return traj_a, traj_b


def energy(state: CoupledState, lam: float) -> float:
    """Discrete free energy: cell-sum gradient term + trapezoid potential + coupling.

    The noise-free splitting scheme dissipates this along trajectories.
    """
    grid = state.m1.grid
    dx = grid.dx
    total = 0.0
    for f in (state.m1, state.m2):
        dv = np.diff(f.values) / dx
        total += 0.25 * dx * float(np.dot(dv, dv))
        v, _, _ = potential_derivatives(f.values)
        total += float(np.dot(grid.weights, v))
    diff = state.m1.values - state.m2.values
    total += 0.5 * lam * float(np.dot(grid.weights, diff * diff))
    return total

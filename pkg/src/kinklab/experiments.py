"""Monte Carlo harness and statistical estimators.

Replicas are independent tasks seeded from (master seed, replica index,
component); aggregation iterates in replica order, so results are
bit-identical regardless of worker count or completion order.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .center import track_center
from .grid import Grid1D
from .linear import LinearStepper
from .model import ZERO_MODE_SCALE, instanton_profile
from .spde import (
    ConstantInitial,
    InstantonInitial,
    SimConfig,
    replica_rngs,
    simulate,
    simulate_pair_same_noise,
)


@dataclass(frozen=True)
class DiffusionEstimate:
    d_hat: float
    stderr: float
    n_replicas: int
    tau_grid: np.ndarray
    per_tau_variance: np.ndarray
    per_tau_mean: np.ndarray
    per_tau_n: np.ndarray
    not_proper_fraction: float
    increments: np.ndarray  # consecutive-tau center increments, pooled over replicas
    sup_distance_max: np.ndarray  # per replica, max over frames/components
    closeness_threshold: float
    closeness_fraction: float
    epsilon: float
    seed: int


@dataclass(frozen=True)
class NoiseProjectionReport:
    variance_slope: float
    d_epsilon: float
    t_grid: np.ndarray
    per_t_variance: np.ndarray
    remainder_p99: float
    remainder_max: float
    increment_correlation: float
    n_replicas: int

    def __post_init__(self):
        if not 0.0 < self.d_epsilon < 2.0:
            raise ValueError(f"d_epsilon={self.d_epsilon} outside (0, 2)")


@dataclass(frozen=True)
class GaussianityReport:
    ks_statistic: float
    excess_kurtosis: float
    mean: float
    n_samples: int
    degenerate: bool


def compute_d_epsilon(epsilon: float, grid: Grid1D, x0: float = 0.0) -> float:
    """Quadrature of the squared reflected-periodized normalized zero mode.

    The image sum is truncated once the largest neglected term falls below
    1e-14 (the profile decays like exp(-2|x|), so a handful of images
    suffice even on short domains).
    """
    if abs(x0) > grid.half_length - 2.0:
        raise ValueError("x0 too close to the boundary")
    ell = 1.0 / epsilon
    if abs(grid.half_length - ell) > 1e-6 * ell:
        raise ValueError(
            f"grid half_length {grid.half_length} does not match 1/epsilon = {ell}"
        )
    y = grid.x

    def mz(z):
        return ZERO_MODE_SCALE / np.cosh(z - x0) ** 2

    total = np.zeros_like(y)
    k = 0
    while True:
        if k == 0:
            term = mz(y) + mz(2.0 * ell - y)
        else:
            term = (
                mz(y + 4.0 * k * ell)
                + mz(4.0 * k * ell + 2.0 * ell - y)
                + mz(y - 4.0 * k * ell)
                + mz(-4.0 * k * ell + 2.0 * ell - y)
            )
        total += term
        if np.max(np.abs(term)) < 1e-14 and k >= 1:
            break
        k += 1
        if k > 64:
            break
    return float(np.dot(grid.weights, total**2))


def _map_replicas(fn, args_list, workers):
    if workers <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args_list, chunksize=max(1, len(args_list) // (4 * workers))))


def _noise_projection_replica(args):
    config, x0, replica, t_grid, noise_scale = args
    grid = config.grid()
    stepper = LinearStepper(grid, x0, config.dt)
    mz = ZERO_MODE_SCALE * (1.0 / np.cosh(grid.x - x0) ** 2)
    w = grid.weights
    rngs = replica_rngs(config.seed, replica)
    sigma = noise_scale / np.sqrt(grid.dx * config.dt)

    u = np.zeros(grid.n_nodes)
    n_steps = int(round(config.t_end / config.dt))
    targets = np.round(np.asarray(t_grid) / config.dt).astype(int)
    proj = np.empty(len(targets))
    rem_sup = np.empty(len(targets))
    j = 0
    for k in range(1, n_steps + 1):
        z = rngs[0].standard_normal(grid.n_nodes) * sigma
        u = stepper.step(u + config.dt * z)
        if j < len(targets) and k == targets[j]:
            b = float(np.dot(w, u * mz))
            proj[j] = b
            rem_sup[j] = float(np.max(np.abs(u - b * mz)))
            j += 1
    return proj, rem_sup


def noise_projection_check(
    config: SimConfig,
    x0: float,
    n_replicas: int,
    workers: int = 1,
    noise_scale: float = 1.0,
) -> NoiseProjectionReport:
    """Statistics of the zero-mode projection of the pure-noise linear system.

    Evolves the linearized equation around the kink with unit space-time
    white noise and zero initial datum; the projection onto the normalized
    zero mode should perform Brownian motion with the domain-dependent
    diffusion coefficient, and the remainder should stay bounded.

    The variance growth rate is the pooled variance of increments over
    disjoint unit windows in [1, t_end] divided by the window length (the
    maximum-likelihood slope under the Brownian model).
    """
    if n_replicas < 16:
        raise ValueError("noise projection check needs at least 16 replicas")
    t_grid = np.arange(1.0, config.t_end + 1e-9, 1.0)
    args = [(config, x0, r, t_grid, noise_scale) for r in range(n_replicas)]
    results = _map_replicas(_noise_projection_replica, args, workers)

    proj = np.array([r[0] for r in results])  # (n_replicas, n_times)
    rem = np.array([r[1] for r in results])
    increments = np.diff(proj, axis=1, prepend=0.0)  # windows [0,1],[1,2],...
    # drop the first window: the fit range starts at t = 1
    inc = increments[:, 1:]
    slope = float(np.mean(inc**2))  # window length is 1
    per_t_variance = np.var(proj, axis=0, ddof=1) if n_replicas > 1 else np.zeros(len(t_grid))

    if inc.shape[1] >= 2 and np.std(inc) > 0:
        a = inc[:, :-1].ravel()
        b = inc[:, 1:].ravel()
        corr = float(np.corrcoef(a, b)[0, 1])
    else:
        corr = 0.0

    grid = config.grid()
    d_eps = compute_d_epsilon(config.epsilon, grid, x0)
    return NoiseProjectionReport(
        variance_slope=slope,
        d_epsilon=d_eps,
        t_grid=t_grid,
        per_t_variance=per_t_variance,
        remainder_p99=float(np.percentile(rem, 99.0)),
        remainder_max=float(np.max(rem)),
        increment_correlation=corr,
        n_replicas=n_replicas,
    )


def _diffusion_replica(args):
    config, replica, frame_targets = args
    traj = simulate(config, replica=replica)
    path = track_center(traj)
    xis = np.array([est.xi for _, est in path])
    proper = np.array([est.proper for _, est in path])
    # sup-norm distance of each component to the kink at the tracked center
    sup_dist = 0.0
    for i in range(traj.n_frames):
        kink = instanton_profile(traj.grid.x, xis[i])
        d1 = np.max(np.abs(traj.m1[i] - kink))
        d = d1
        if config.mode == "coupled":
            d = max(d1, float(np.max(np.abs(traj.m2[i] - kink))))
        sup_dist = max(sup_dist, float(d))
    return xis[frame_targets], proper[frame_targets], int(np.sum(~proper)), traj.n_frames, sup_dist


def estimate_diffusion(
    config: SimConfig,
    n_replicas: int,
    tau_grid,
    workers: int = 1,
) -> DiffusionEstimate:
    """Monte Carlo estimate of the center's diffusion coefficient.

    Runs seeded replicas from a kink initial state, tracks the center, forms
    the recentered path at the rescaled times tau/epsilon, and fits
    Var(X_tau) = d_hat * tau by least squares through the origin. Frames
    whose center is not proper are dropped from the variance at that tau
    and counted; more than 5% not-proper frames fails the run.
    """
    if not isinstance(config.initial, InstantonInitial):
        raise ValueError("diffusion estimation requires a kink initial state")
    tau_grid = np.asarray(tau_grid, dtype=float)
    if config.epsilon > 0:
        t_targets = tau_grid / config.epsilon
    else:
        t_targets = tau_grid * config.t_end / np.max(tau_grid)
    if config.t_end < np.max(t_targets) - 1e-9:
        raise ValueError(
            f"t_end={config.t_end} shorter than required {np.max(t_targets)}"
        )
    x0 = config.initial.x0
    frame_dt = config.dt * config.record_stride
    frame_targets = np.round(t_targets / frame_dt).astype(int)
    if np.max(np.abs(frame_targets * frame_dt - t_targets)) > 1e-9:
        raise ValueError("tau grid does not align with the recording stride")
    threshold = config.epsilon**0.25 if config.epsilon > 0 else float("inf")

    args = [(config, r, frame_targets) for r in range(n_replicas)]
    results = _map_replicas(_diffusion_replica, args, workers)

    xs = np.array([r[0] for r in results]) - x0  # (n_replicas, n_tau)
    proper = np.array([r[1] for r in results])
    n_bad = sum(r[2] for r in results)
    n_frames = sum(r[3] for r in results)
    sup_dist = np.array([r[4] for r in results])

    bad_fraction = n_bad / n_frames
    if bad_fraction > 0.05:
        raise RuntimeError(
            f"{100 * bad_fraction:.1f}% of frames have no proper center "
            f"(seed={config.seed}, epsilon={config.epsilon}); run rejected"
        )

    n_tau = len(tau_grid)
    per_tau_variance = np.empty(n_tau)
    per_tau_mean = np.empty(n_tau)
    per_tau_n = np.empty(n_tau, dtype=int)
    for j in range(n_tau):
        sel = xs[proper[:, j], j]
        per_tau_n[j] = len(sel)
        per_tau_mean[j] = float(np.mean(sel)) if len(sel) else float("nan")
        per_tau_variance[j] = float(np.var(sel, ddof=1)) if len(sel) > 1 else 0.0

    d_hat = float(np.dot(tau_grid, per_tau_variance) / np.dot(tau_grid, tau_grid))
    stderr = d_hat * math.sqrt(2.0 / (n_replicas - 1)) if n_replicas > 1 else float("inf")

    all_proper = proper.all(axis=1)
    increments = np.diff(xs[all_proper], axis=1).ravel() if np.any(all_proper) else np.empty(0)
    closeness = float(np.mean(sup_dist < threshold))

    return DiffusionEstimate(
        d_hat=d_hat,
        stderr=stderr,
        n_replicas=n_replicas,
        tau_grid=tau_grid,
        per_tau_variance=per_tau_variance,
        per_tau_mean=per_tau_mean,
        per_tau_n=per_tau_n,
        not_proper_fraction=bad_fraction,
        increments=increments,
        sup_distance_max=sup_dist,
        closeness_threshold=threshold,
        closeness_fraction=closeness,
        epsilon=config.epsilon,
        seed=config.seed,
    )


def gaussianity_report(increments) -> GaussianityReport:
    """KS distance to the standard normal, excess kurtosis, and sample mean.

    Callers standardize the increments; a zero-spread input is reported as
    degenerate with the maximal KS distance.
    """
    x = np.asarray(increments, dtype=float)
    if len(x) < 50:
        raise ValueError(f"need at least 50 samples, got {len(x)}")
    if np.std(x) == 0:
        return GaussianityReport(
            ks_statistic=1.0, excess_kurtosis=0.0, mean=float(np.mean(x)),
            n_samples=len(x), degenerate=True,
        )
    ks = stats.kstest(x, "norm").statistic
    kurt = stats.kurtosis(x, fisher=True)
    return GaussianityReport(
        ks_statistic=float(ks), excess_kurtosis=float(kurt), mean=float(np.mean(x)),
        n_samples=len(x), degenerate=False,
    )


def _comparison_replica(args):
    config, replica, offset = args
    grid = config.grid()
    base = instanton_profile(grid.x, getattr(config.initial, "x0", 0.0))
    from .spde import FieldPairInitial

    lower = FieldPairInitial(base, base)
    upper = FieldPairInitial(base + offset, base + offset)
    traj_a, traj_b = simulate_pair_same_noise(config, upper, lower, replica=replica)
    diff = np.concatenate([(traj_a.m1 - traj_b.m1).ravel(), (traj_a.m2 - traj_b.m2).ravel()])
    return float(np.min(diff))


def run_comparison_experiment(
    config: SimConfig, n_seeds: int = 20, offset: float = 0.1, workers: int = 1
) -> dict:
    """Same-noise monotonicity: ordered initial data must stay ordered."""
    args = [(config, r, offset) for r in range(n_seeds)]
    mins = _map_replicas(_comparison_replica, args, workers)
    return {
        "n_seeds": n_seeds,
        "offset": offset,
        "per_seed_min_difference": [float(m) for m in mins],
        "min_difference": float(np.min(mins)),
    }


def run_barrier_experiment(
    config: SimConfig,
    agreement_radius: float = 15.0,
    bump: float = 0.5,
    workers: int = 1,
    n_seeds: int = 1,
) -> dict:
    """Finite speed of influence: initials equal on |x| <= radius, same noise.

    Measures the discrepancy at x = 0 over time; it must stay exponentially
    small in the agreement radius.
    """
    grid = config.grid()
    if agreement_radius >= grid.half_length:
        raise ValueError("agreement radius must be inside the domain")
    x0 = getattr(config.initial, "x0", 0.0)
    base = instanton_profile(grid.x, x0)
    outside = np.abs(grid.x) > agreement_radius
    modified = base + bump * outside
    from .spde import FieldPairInitial

    center_idx = int(np.argmin(np.abs(grid.x)))
    series = None
    per_seed_max = []
    for r in range(n_seeds):
        traj_a, traj_b = simulate_pair_same_noise(
            config,
            FieldPairInitial(base, base),
            FieldPairInitial(modified, modified),
            replica=r,
        )
        d1 = np.abs(traj_a.m1[:, center_idx] - traj_b.m1[:, center_idx])
        d2 = np.abs(traj_a.m2[:, center_idx] - traj_b.m2[:, center_idx])
        d = np.maximum(d1, d2)
        per_seed_max.append(float(np.max(d)))
        if series is None:
            series = d
            times = traj_a.times
    return {
        "agreement_radius": agreement_radius,
        "bump": bump,
        "horizon": config.t_end,
        "n_seeds": n_seeds,
        "times": times.tolist(),
        "center_discrepancy": series.tolist(),
        "per_seed_max": per_seed_max,
        "max_center_discrepancy": float(np.max(per_seed_max)),
    }


def _boundedness_replica(args):
    config, replica = args
    traj = simulate(config, replica=replica)
    return float(max(np.max(np.abs(traj.m1)), np.max(np.abs(traj.m2))))


def run_boundedness_experiment(
    config: SimConfig, n_seeds: int = 100, workers: int = 1
) -> dict:
    """Fraction of seeds whose sup norm exceeds 2 before t_end.

    The initial state is the constant 1 + 1/(32*(2+lambda)), the worst case
    admitted by the sup-norm bound; every step is recorded so the sup is
    over the full path.
    """
    level = 1.0 + 1.0 / (32.0 * (2.0 + config.lam))
    config = replace(config, initial=ConstantInitial(level), record_stride=1)
    args = [(config, r) for r in range(n_seeds)]
    sups = _map_replicas(_boundedness_replica, args, workers)
    exceed = [s > 2.0 for s in sups]
    return {
        "initial_level": level,
        "n_seeds": n_seeds,
        "t_end": config.t_end,
        "per_seed_sup": [float(s) for s in sups],
        "exceed_fraction": float(np.mean(exceed)),
    }

"""Command-line operator surface.

Every subcommand reads a strict JSON config (or a previously emitted
manifest), runs the corresponding experiment, and writes deterministic
artifacts: CSV tables and a JSON report, a rendered PNG figure, and a run
manifest listing every output. Numeric payloads are reproducible
bit-exactly from the manifest.
"""

import argparse
import os
import sys
import time
import numpy as np

from . import __version__
from .center import track_center
from .config import EXPERIMENTS, ConfigError, parse_config
from .experiments import (
    compute_d_epsilon,
    estimate_diffusion,
    gaussianity_report,
    noise_projection_check,
    run_barrier_experiment,
    run_boundedness_experiment,
    run_comparison_experiment,
)
from .io import (
    report_payload,
    write_csv,
    write_json,
    write_trajectory_binary,
    write_trajectory_csv,
)
from .linear import assemble_operator, eigen_spectrum, evolve_linear_pair, fit_decay_rate
from .model import instanton_derivative_field
from .spde import simulate


def _out(rc, name):
    return os.path.join(rc.output_dir, name)


def _cmd_simulate(rc):
    from . import plots

    traj = simulate(rc.sim)
    if rc.format == "binary":
        data = write_trajectory_binary(_out(rc, "trajectory.bin"), traj)
    else:
        data = write_trajectory_csv(_out(rc, "trajectory.csv"), traj)
    fig = plots.plot_trajectory(_out(rc, "trajectory.png"), traj)
    return [data, fig]


def _cmd_track(rc):
    from . import plots

    traj = simulate(rc.sim)
    path = track_center(traj)
    rows = [
        (t, est.xi, est.residual, "1" if est.proper else "0") for t, est in path
    ]
    csv = write_csv(_out(rc, "center_path.csv"), ["t", "xi", "residual", "proper"], rows)
    fig = plots.plot_center_path(
        _out(rc, "center_path.png"),
        [t for t, _ in path],
        [e.xi for _, e in path],
        [e.proper for _, e in path],
    )
    return [csv, fig]


def _cmd_spectrum(rc):
    from . import plots

    grid = rc.sim.grid()
    op = assemble_operator(grid, rc.x0, 0.0)
    spec = eigen_spectrum(op, rc.k_eigen)
    csv = write_csv(
        _out(rc, "spectrum.csv"),
        ["index", "eigenvalue"],
        list(enumerate(spec.eigenvalues)),
    )
    mz = instanton_derivative_field(grid, rc.x0, normalized=True)
    fig = plots.plot_spectrum(
        _out(rc, "spectrum.png"), spec.eigenvalues, grid,
        spec.eigenvectors[0].values, mz.values,
    )
    report = write_json(
        _out(rc, "spectrum.json"),
        report_payload(rc, {
            "eigenvalues": [float(v) for v in spec.eigenvalues],
            "gap": spec.gap,
        }),
    )
    return [csv, report, fig]


def _cmd_linear_decay(rc):
    from . import plots

    grid = rc.sim.grid()
    mz = instanton_derivative_field(grid, rc.x0, normalized=True)
    from .grid import Field

    u0 = mz
    v0 = Field(grid, -mz.values)
    _, _, records = evolve_linear_pair(
        u0, v0, rc.sim.lam, rc.x0, rc.sim.t_end, rc.sim.dt
    )
    rows = zip(records["t"], records["proj_plus"], records["proj_minus"],
               records["orth_plus_sup"])
    csv = write_csv(
        _out(rc, "linear_decay.csv"), ["t", "proj_plus", "proj_minus", "orth_norm"], rows
    )
    window = (rc.sim.t_end / 2.0, rc.sim.t_end)
    rate = fit_decay_rate(records["t"], np.abs(records["proj_minus"]), window)
    report = write_json(
        _out(rc, "linear_decay.json"),
        report_payload(rc, {
            "fitted_minus_rate": rate,
            "expected_rate": 2.0 * rc.sim.lam,
            "fit_window": list(window),
        }),
    )
    fig = plots.plot_linear_decay(_out(rc, "linear_decay.png"), records)
    return [csv, report, fig]


def _cmd_diffusion(rc):
    from . import plots

    est = estimate_diffusion(rc.sim, rc.n_replicas, rc.tau_grid, workers=rc.workers)
    per_tau = write_csv(
        _out(rc, "per_tau_variance.csv"),
        ["tau", "variance", "mean", "n"],
        zip(est.tau_grid, est.per_tau_variance, est.per_tau_mean, est.per_tau_n),
    )
    endpoints = write_csv(
        _out(rc, "replica_sup_distance.csv"),
        ["replica", "max_sup_distance"],
        list(enumerate(est.sup_distance_max)),
    )
    results = {
        "d_hat": est.d_hat,
        "stderr": est.stderr,
        "n_replicas": est.n_replicas,
        "tau_grid": [float(v) for v in est.tau_grid],
        "per_tau_variance": [float(v) for v in est.per_tau_variance],
        "not_proper_fraction": est.not_proper_fraction,
        "closeness_threshold": est.closeness_threshold,
        "closeness_fraction": est.closeness_fraction,
    }
    if len(est.increments) >= 50:
        d_ref = est.d_hat if est.d_hat > 0 else 1.0
        dtau = float(np.min(np.diff(est.tau_grid))) if len(est.tau_grid) > 1 else 1.0
        g = gaussianity_report(est.increments / np.sqrt(d_ref * dtau))
        results["increment_ks"] = g.ks_statistic
        results["increment_excess_kurtosis"] = g.excess_kurtosis
    report = write_json(_out(rc, "diffusion.json"), report_payload(rc, results))
    fig = plots.plot_diffusion(_out(rc, "diffusion.png"), est)
    return [per_tau, endpoints, report, fig]


def _cmd_noise_projection(rc):
    from . import plots

    rep = noise_projection_check(rc.sim, rc.x0, rc.n_replicas, workers=rc.workers)
    csv = write_csv(
        _out(rc, "variance_growth.csv"),
        ["t", "variance"],
        zip(rep.t_grid, rep.per_t_variance),
    )
    report = write_json(
        _out(rc, "noise_projection.json"),
        report_payload(rc, {
            "variance_slope": rep.variance_slope,
            "d_epsilon": rep.d_epsilon,
            "slope_over_d_epsilon": rep.variance_slope / rep.d_epsilon,
            "remainder_p99": rep.remainder_p99,
            "remainder_max": rep.remainder_max,
            "increment_correlation": rep.increment_correlation,
            "n_replicas": rep.n_replicas,
        }),
    )
    fig = plots.plot_noise_projection(_out(rc, "noise_projection.png"), rep)
    return [csv, report, fig]


def _cmd_verify_comparison(rc):
    from . import plots

    rep = run_comparison_experiment(
        rc.sim, n_seeds=rc.n_replicas, offset=rc.offset, workers=rc.workers
    )
    csv = write_csv(
        _out(rc, "comparison.csv"),
        ["seed", "min_difference"],
        list(enumerate(rep["per_seed_min_difference"])),
    )
    report = write_json(_out(rc, "comparison.json"), report_payload(rc, rep))
    fig = plots.plot_comparison(_out(rc, "comparison.png"), rep)
    return [csv, report, fig]


def _cmd_verify_barrier(rc):
    from . import plots

    rep = run_barrier_experiment(
        rc.sim, agreement_radius=rc.agreement_radius, workers=rc.workers
    )
    csv = write_csv(
        _out(rc, "barrier.csv"),
        ["t", "center_discrepancy"],
        zip(rep["times"], rep["center_discrepancy"]),
    )
    report = write_json(_out(rc, "barrier.json"), report_payload(rc, rep))
    fig = plots.plot_barrier(_out(rc, "barrier.png"), rep)
    return [csv, report, fig]


def _cmd_verify_bounded(rc):
    from . import plots

    rep = run_boundedness_experiment(rc.sim, n_seeds=rc.n_replicas, workers=rc.workers)
    csv = write_csv(
        _out(rc, "bounded.csv"),
        ["seed", "sup_norm"],
        list(enumerate(rep["per_seed_sup"])),
    )
    report = write_json(_out(rc, "bounded.json"), report_payload(rc, rep))
    fig = plots.plot_boundedness(_out(rc, "bounded.png"), rep)
    return [csv, report, fig]


def _cmd_d_epsilon(rc):
    from . import plots
    from .grid import build_grid

    sweep = sorted(set([0.5, 0.2, 0.1] + [rc.sim.epsilon]), reverse=True)
    values = []
    for eps in sweep:
        grid = build_grid(eps, min(rc.sim.dx, 0.05))
        values.append(compute_d_epsilon(eps, grid, 0.0))
    csv = write_csv(_out(rc, "d_epsilon.csv"), ["epsilon", "d_epsilon"], zip(sweep, values))
    report = write_json(
        _out(rc, "d_epsilon.json"),
        report_payload(rc, {
            "epsilon": rc.sim.epsilon,
            "d_epsilon": values[sweep.index(rc.sim.epsilon)],
            "sweep_epsilons": sweep,
            "sweep_values": values,
        }),
    )
    fig = plots.plot_d_epsilon(_out(rc, "d_epsilon.png"), sweep, values)
    return [csv, report, fig]


_HANDLERS = {
    "simulate": _cmd_simulate,
    "track": _cmd_track,
    "spectrum": _cmd_spectrum,
    "linear-decay": _cmd_linear_decay,
    "diffusion": _cmd_diffusion,
    "noise-projection": _cmd_noise_projection,
    "verify-comparison": _cmd_verify_comparison,
    "verify-barrier": _cmd_verify_barrier,
    "verify-bounded": _cmd_verify_bounded,
    "d-epsilon": _cmd_d_epsilon,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kinklab",
        description="Coupled stochastic Allen-Cahn interface laboratory",
    )
    parser.add_argument("--version", action="version", version=f"kinklab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="JSON config or manifest path")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--workers", type=int, default=None, help="replica worker count")
        p.add_argument("--out", default=None,
                       help="output directory (default: config, then $KINKLAB_OUT, then ./out)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    try:
        rc = parse_config(
            args.config,
            experiment=args.command,
            seed_override=args.seed,
            workers_override=args.workers,
            output_override=args.out,
        )
        os.makedirs(rc.output_dir, exist_ok=True)
        outputs = _HANDLERS[args.command](rc)
        manifest = {
            "kind": "kinklab-run-manifest",
            "version": __version__,
            "experiment": rc.experiment,
            "config": rc.as_dict(),
            "master_seed": rc.sim.seed,
            "outputs": [os.path.basename(p) for p in outputs],
            "duration_seconds": time.time() - started,
        }
        write_json(_out(rc, "manifest.json"), manifest)
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

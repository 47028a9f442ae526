"""Figure rendering for the report path. All figures go to files (Agg)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_trajectory(path, traj):
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.2))
    extent = [traj.grid.x[0], traj.grid.x[-1], traj.times[0], traj.times[-1]]
    im = ax0.imshow(traj.m1, origin="lower", aspect="auto", extent=extent,
                    cmap="RdBu_r", vmin=-1.3, vmax=1.3)
    ax0.set_xlabel("x")
    ax0.set_ylabel("t")
    ax0.set_title("m1(x, t)")
    fig.colorbar(im, ax=ax0)
    ax1.plot(traj.grid.x, traj.m1[-1], label="m1 final")
    ax1.plot(traj.grid.x, traj.m2[-1], "--", label="m2 final")
    ax1.plot(traj.grid.x, traj.m1[0], ":", color="gray", label="initial")
    ax1.set_xlabel("x")
    ax1.legend()
    return _save(fig, path)


def plot_center_path(path, times, xis, proper):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    times = np.asarray(times)
    xis = np.asarray(xis)
    proper = np.asarray(proper, dtype=bool)
    ax.plot(times, xis, lw=1)
    if not proper.all():
        ax.plot(times[~proper], xis[~proper], "rx", ms=4, label="not proper")
        ax.legend()
    ax.set_xlabel("t")
    ax.set_ylabel("center")
    return _save(fig, path)


def plot_spectrum(path, eigenvalues, grid, eigenvector, reference):
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax0.axhline(0.0, color="gray", lw=0.5)
    ax0.stem(np.arange(len(eigenvalues)), eigenvalues)
    ax0.set_xlabel("index")
    ax0.set_ylabel("eigenvalue")
    ax1.plot(grid.x, eigenvector, label="top eigenvector")
    ax1.plot(grid.x, reference, "--", label="normalized zero mode")
    ax1.set_xlabel("x")
    ax1.legend()
    return _save(fig, path)


def plot_linear_decay(path, records):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    t = records["t"]
    for key, label in [
        ("proj_minus", "|<U-, zero mode>|"),
        ("orth_plus_sup", "sup |U+ complement|"),
        ("minus_sup", "sup |U-|"),
    ]:
        y = np.abs(records[key])
        mask = y > 0
        ax.semilogy(t[mask], y[mask], label=label)
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_diffusion(path, estimate):
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.2))
    tau = estimate.tau_grid
    ax0.plot(tau, estimate.per_tau_variance, "o", label="ensemble variance")
    tt = np.linspace(0, tau[-1], 50)
    ax0.plot(tt, estimate.d_hat * tt, "-", label=f"fit d = {estimate.d_hat:.3f}")
    ax0.set_xlabel("rescaled time tau")
    ax0.set_ylabel("Var(center displacement)")
    ax0.legend()
    if len(estimate.increments):
        ax1.hist(estimate.increments, bins=30, density=True, alpha=0.7)
        s = np.std(estimate.increments)
        xx = np.linspace(-4 * s, 4 * s, 200)
        ax1.plot(xx, np.exp(-(xx**2) / (2 * s**2)) / np.sqrt(2 * np.pi * s**2), "k-")
        ax1.set_xlabel("center increment")
    return _save(fig, path)


def plot_noise_projection(path, report):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(report.t_grid, report.per_t_variance, "o", label="Var(projection)")
    tt = np.linspace(0, report.t_grid[-1], 50)
    ax.plot(tt, report.variance_slope * tt, "-",
            label=f"slope {report.variance_slope:.3f} (D_eps {report.d_epsilon:.3f})")
    ax.set_xlabel("t")
    ax.legend()
    return _save(fig, path)


def plot_comparison(path, report):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(report["per_seed_min_difference"], "o")
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.set_xlabel("seed")
    ax.set_ylabel("min (upper - lower)")
    return _save(fig, path)


def plot_barrier(path, report):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    d = np.asarray(report["center_discrepancy"])
    t = np.asarray(report["times"])
    mask = d > 0
    if mask.any():
        ax.semilogy(t[mask], d[mask])
    ax.set_xlabel("t")
    ax.set_ylabel("|difference at x = 0|")
    ax.set_title(f"agreement radius {report['agreement_radius']}")
    return _save(fig, path)


def plot_boundedness(path, report):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(report["per_seed_sup"], "o", ms=3)
    ax.axhline(2.0, color="r", lw=1, label="bound 2")
    ax.axhline(report["initial_level"], color="gray", lw=0.5, label="initial level")
    ax.set_xlabel("seed")
    ax.set_ylabel("sup norm over path")
    ax.legend()
    return _save(fig, path)


def plot_d_epsilon(path, epsilons, values):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    devs = np.abs(np.asarray(values) - 1.0)
    ax.semilogy(1.0 / np.asarray(epsilons), np.maximum(devs, 1e-17), "o-")
    ax.set_xlabel("1/epsilon")
    ax.set_ylabel("|D_eps - 1|")
    return _save(fig, path)

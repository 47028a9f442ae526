"""Front center: the root of <m - kink(xi), kink'(xi)> = 0 and its tracking.

The residual is strictly monotone through the root for fields near a kink
(slope close to <kink', kink'> = 4/3), so Newton with the analytic
derivative converges in a few iterations; noisy or degenerate fields fall
back to a coarse scan plus bisection, and failures are reported in flags
rather than raised.
"""

from dataclasses import dataclass

import numpy as np

from .grid import Field
from .model import instanton_curvature, instanton_profile, instanton_slope

# A field counts as properly centered when it is within this sup-norm
# distance of the fitted kink on a window of half-width 5 around it: far
# below the kink amplitude, far above desk-scale noise excursions.
PROPER_SUP_TOLERANCE = 0.5
PROPER_WINDOW = 5.0
RESIDUAL_TOLERANCE = 1e-10
BOUNDARY_MARGIN = 2.0


@dataclass(frozen=True)
class CenterEstimate:
    xi: float
    residual: float
    iterations: int
    converged: bool
    proper: bool


def _window_limit(grid):
    return grid.half_length - BOUNDARY_MARGIN


def center_residual(m: Field, xi: float) -> float:
    """Trapezoid value of <m - kink(xi), kink'(xi)> over the grid."""
    grid = m.grid
    if abs(xi) > _window_limit(grid):
        raise ValueError(f"xi={xi} outside the search window |xi| <= {_window_limit(grid)}")
    kink = instanton_profile(grid.x, xi)
    slope = instanton_slope(grid.x, xi)
    return float(np.dot(grid.weights, (m.values - kink) * slope))


def _residual_and_derivative(m: Field, xi: float):
    grid = m.grid
    kink = instanton_profile(grid.x, xi)
    slope = instanton_slope(grid.x, xi)
    curv = instanton_curvature(grid.x, xi)
    diff = m.values - kink
    r = float(np.dot(grid.weights, diff * slope))
    # d/dxi <m - kink, slope> = <slope, slope> - <m - kink, curvature>
    dr = float(np.dot(grid.weights, slope * slope) - np.dot(grid.weights, diff * curv))
    return r, dr


def _is_proper(m: Field, xi: float) -> bool:
    grid = m.grid
    if abs(xi) > _window_limit(grid):
        return False
    window = np.abs(grid.x - xi) <= PROPER_WINDOW
    dist = np.max(np.abs(m.values[window] - instanton_profile(grid.x[window], xi)))
    return bool(dist <= PROPER_SUP_TOLERANCE)


def _scan_fallback(m: Field, guess: float):
    """Coarse scan for a sign change of the residual, then bisection."""
    grid = m.grid
    lim = _window_limit(grid)
    xs = np.arange(-lim, lim + 1e-12, 0.5)
    rs = np.array([center_residual(m, x) for x in xs])
    sign_change = np.nonzero(rs[:-1] * rs[1:] <= 0)[0]
    if len(sign_change) == 0:
        return None
    # bracket nearest to the guess
    mids = 0.5 * (xs[sign_change] + xs[sign_change + 1])
    i = sign_change[np.argmin(np.abs(mids - guess))]
    a, b = xs[i], xs[i + 1]
    ra = rs[i]
    for _ in range(200):
        c = 0.5 * (a + b)
        rc = center_residual(m, c)
        if abs(rc) <= RESIDUAL_TOLERANCE or (b - a) < 1e-14:
            return c, rc
        if ra * rc <= 0:
            b = c
        else:
            a, ra = c, rc
    return c, rc


def find_center(m: Field, guess: float = 0.0) -> CenterEstimate:
    """Newton iteration for the center, with scan+bisection fallback.

    Never raises: non-convergence and degeneracy are encoded in the
    converged/proper flags. A field too far from every kink keeps the
    conventional fallback value xi = 0 with proper = False.
    """
    grid = m.grid
    lim = _window_limit(grid)
    xi = float(np.clip(guess, -lim, lim))
    iterations = 0
    converged = False
    r = float("nan")
    for _ in range(50):
        r, dr = _residual_and_derivative(m, xi)
        if abs(r) <= RESIDUAL_TOLERANCE:
            converged = True
            break
        if dr <= 0.1:  # flat or wrong-sign slope: Newton unreliable here
            break
        nxt = xi - r / dr
        iterations += 1
        if abs(nxt) > lim:
            break
        if abs(nxt - xi) < 1e-15:
            xi = nxt
            r, _ = _residual_and_derivative(m, xi)
            converged = abs(r) <= RESIDUAL_TOLERANCE
            break
        xi = nxt
    if not converged:
        found = _scan_fallback(m, guess)
        if found is not None:
            xi, r = found
            iterations += 1
            converged = abs(r) <= RESIDUAL_TOLERANCE
        else:
            return CenterEstimate(
                xi=0.0, residual=center_residual(m, 0.0), iterations=iterations,
                converged=False, proper=False,
            )
    proper = converged and _is_proper(m, xi)
    return CenterEstimate(
        xi=float(xi), residual=float(r), iterations=iterations,
        converged=converged, proper=proper,
    )


def linearized_center(m: Field, x0: float) -> float:
    """First-order center: x0 - (3/4) <kink'(x0), m - kink(x0)>."""
    grid = m.grid
    kink = instanton_profile(grid.x, x0)
    slope = instanton_slope(grid.x, x0)
    return float(x0 - 0.75 * np.dot(grid.weights, slope * (m.values - kink)))


def track_center(trajectory, x0: float | None = None):
    """find_center of the tracked field per recorded frame, warm-started.

    The first frame starts from x0 (or the configured kink center); later
    frames start from the last proper estimate. Returns a list of
    (t, CenterEstimate).
    """
    if trajectory.n_frames == 0:
        raise ValueError("trajectory has no recorded frames")
    if x0 is None:
        init = trajectory.config.initial
        x0 = getattr(init, "x0", 0.0)
    guess = float(x0)
    out = []
    for i in range(trajectory.n_frames):
        est = find_center(trajectory.average(i), guess)
        out.append((float(trajectory.times[i]), est))
        if est.proper:
            guess = est.xi
    return out

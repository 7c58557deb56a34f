"""Particle paths of the transport field, momentum density, and the
characteristic conservation law of the a = 0 subfamily.

Particles follow d(eta)/dt = u^k(eta, t) with eta(0) = x0; the stretch
eta_x obeys its own linear equation d(eta_x)/dt = k u^{k-1} u_x(eta, t) eta_x
and is integrated jointly rather than differenced between neighbors.  For
a = 0 and c = (3k - b)/2 the momentum m = u - u_xx satisfies
m(eta(t), t) * eta_x(t)^{b/k} = m(x0, 0) along every path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import Params
from .spectral import Field, derivative

# eta_x at or below this aborts advection: the flow map is no longer a
# diffeomorphism to working precision (wave-breaking indicator).
STRETCH_FLOOR = 1e-10


class WaveBreakingError(RuntimeError):
    """eta_x lost positivity along some path."""


@dataclass
class ParticleSet:
    """Paths eta(x0, t) and stretches eta_x(x0, t) at stored times.

    left_core flags seeds whose path came within the core margin of the
    periodic seam at any stored time (informational, not fatal).
    """

    seeds: np.ndarray
    times: np.ndarray
    paths: np.ndarray    # (n_times, n_seeds)
    stretch: np.ndarray  # (n_times, n_seeds)
    left_core: np.ndarray


def momentum(u: Field) -> Field:
    """Momentum density m = u - u_xx."""
    return Field(u.grid, u.values - derivative(u, 2).values)


def cubic_interp_periodic(values: np.ndarray, grid, q: np.ndarray) -> np.ndarray:
    """4-point Lagrange interpolation of grid samples at positions q,
    periodic in the box."""
    n, dx = grid.n, grid.dx
    s = np.asarray(q, dtype=float) / dx
    j = np.floor(s).astype(int)
    f = s - j
    jm, j0, j1, j2 = (j - 1) % n, j % n, (j + 1) % n, (j + 2) % n
    wm = -f * (f - 1.0) * (f - 2.0) / 6.0
    w0 = (f * f - 1.0) * (f - 2.0) / 2.0
    w1 = -f * (f + 1.0) * (f - 2.0) / 2.0
    w2 = f * (f * f - 1.0) / 6.0
    return wm * values[jm] + w0 * values[j0] + w1 * values[j1] + w2 * values[j2]


def _window_indices(times, t_start, t_end):
    t = np.asarray(times, dtype=float)
    if t_end is None:
        t_end = t[-1]
    idx = np.nonzero((t >= t_start - 1e-12) & (t <= t_end + 1e-12))[0]
    if len(idx) < 2:
        raise ValueError("advection window must cover at least two snapshots")
    return idx


def advect(traj, seeds, t_start: float = 0.0, t_end=None, core_margin=None) -> ParticleSet:
    """Integrate particle paths through the stored snapshots.

    u between grid nodes is cubic-interpolated; between snapshots it is
    linear in t, so one RK4 step per snapshot interval keeps the stage
    fields smooth.  Requires the trajectory to be stored densely
    (output_stride such that the snapshot spacing is ~2x the solver step).
    """
    grid = traj.config.grid
    k = traj.config.params.k
    if core_margin is None:
        core_margin = grid.length / 8.0
    idx = _window_indices(traj.times, t_start, t_end)
    times = np.asarray(traj.times, dtype=float)[idx]
    u_fields = [traj.snapshots[i].values for i in idx]
    ux_fields = [derivative(traj.snapshots[i], 1).values for i in idx]

    eta = np.asarray(seeds, dtype=float).copy()
    if eta.ndim != 1 or eta.size == 0:
        raise ValueError("seeds must be a non-empty 1-d sequence")
    etax = np.ones_like(eta)
    paths = [eta.copy()]
    stretch = [etax.copy()]
    left_core = _near_seam(eta, grid, core_margin)

    for i in range(len(times) - 1):
        t0, t1 = times[i], times[i + 1]
        h = t1 - t0
        u0, u1 = u_fields[i], u_fields[i + 1]
        ux0, ux1 = ux_fields[i], ux_fields[i + 1]

        def rate(eta_c, etax_c, frac):
            uv = (1.0 - frac) * cubic_interp_periodic(u0, grid, eta_c) + frac * cubic_interp_periodic(u1, grid, eta_c)
            uxv = (1.0 - frac) * cubic_interp_periodic(ux0, grid, eta_c) + frac * cubic_interp_periodic(ux1, grid, eta_c)
            return uv**k, k * uv ** (k - 1) * uxv * etax_c

        d1, s1 = rate(eta, etax, 0.0)
        d2, s2 = rate(eta + 0.5 * h * d1, etax + 0.5 * h * s1, 0.5)
        d3, s3 = rate(eta + 0.5 * h * d2, etax + 0.5 * h * s2, 0.5)
        d4, s4 = rate(eta + h * d3, etax + h * s3, 1.0)
        eta = eta + (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        etax = etax + (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
        if np.any(etax <= STRETCH_FLOOR):
            raise WaveBreakingError(
                f"eta_x lost positivity at t = {t1:.6g} (min {float(np.min(etax)):.3e})"
            )
        left_core |= _near_seam(eta, grid, core_margin)
        paths.append(eta.copy())
        stretch.append(etax.copy())

    return ParticleSet(
        seeds=np.asarray(seeds, dtype=float),
        times=times,
        paths=np.asarray(paths),
        stretch=np.asarray(stretch),
        left_core=left_core,
    )


def _near_seam(eta, grid, margin):
    d = np.mod(eta, grid.length)
    return np.minimum(d, grid.length - d) < margin


def conservation_check(traj, ps: ParticleSet, p: Params) -> float:
    """Max relative defect of m(eta(t), t) * eta_x^{b/k} against its value
    at the first stored time, over all seeds and times.

    Only meaningful for the a = 0, c = (3k - b)/2 subfamily; other
    parameters are rejected (the balance law fails there).
    """
    if p.a != 0.0 or abs(p.c - (3.0 * p.k - p.b) / 2.0) > 1e-12:
        raise ValueError("conservation law requires a = 0 and c = (3k - b)/2")
    expo = p.b / p.k
    grid = traj.config.grid
    times = np.asarray(traj.times, dtype=float)
    m_fields = {}
    for j, t in enumerate(ps.times):
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > 1e-9:
            raise ValueError(f"particle time {t} not among trajectory snapshots")
        m_fields[j] = momentum(traj.snapshots[i]).values
    m0 = cubic_interp_periodic(m_fields[0], grid, ps.paths[0])
    worst = 0.0
    for j in range(len(ps.times)):
        m_along = cubic_interp_periodic(m_fields[j], grid, ps.paths[j])
        inv = m_along * ps.stretch[j] ** expo
        rel = np.abs(inv - m0) / (np.abs(m0) + 1e-12)
        worst = max(worst, float(np.max(rel)))
    return worst

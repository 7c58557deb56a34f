"""Measurement instruments: Sobolev norms, conservation drift, exponential
decay-rate fits, weighted sup norms, and crest tracking.

All functions here are read-only analyses of fields or trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import Field, derivative

# Log fits discard samples at or below this magnitude: below the transform
# round-off, log|f| is noise.
FIT_FLOOR = 1e-13

# A windowed fit counts as "exponential" only above this r^2.
R2_EXPONENTIAL = 0.995


def sobolev_norm(f: Field, s: float) -> float:
    """H^s norm, normalized so the square at s = 1 is the integral of
    u^2 + u_x^2 over the box."""
    if s < 0:
        raise ValueError("s must be >= 0")
    grid = f.grid
    xi = grid.wavenumbers
    weight = (1.0 + xi * xi) ** s
    count = np.full(grid.n // 2 + 1, 2.0)  # rfft bins stand for +-m pairs
    count[0] = 1.0
    count[-1] = 1.0
    with np.errstate(over="ignore"):  # huge fields report an inf norm
        total = np.sum(count * weight * np.abs(f.hat) ** 2) * grid.length / grid.n**2
    return math.sqrt(total)


def h1_squared(f: Field) -> float:
    """Integral of u^2 + u_x^2 (the tracked conservation quantity)."""
    return sobolev_norm(f, 1.0) ** 2


def h1_drift(traj) -> float:
    """max_t |E(t) - E(0)| / E(0) over the per-step records, with E the
    squared H^1 norm.  Raises if E(0) = 0."""
    if not traj.records:
        raise ValueError("empty trajectory")
    e0 = traj.records[0].h1_sq
    if e0 == 0.0:
        raise ValueError("initial H^1 norm is zero; drift undefined")
    es = np.array([r.h1_sq for r in traj.records])
    return float(np.max(np.abs(es - e0)) / e0)


@dataclass(frozen=True)
class WeightSpec:
    """Exponential weight e^{theta |x|} capped at radius N.  theta must lie
    strictly inside (0, 1): the continuum estimates behind the cap degenerate
    at theta = 1."""

    theta: float
    cap_radius: float

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie strictly in (0, 1)")
        if not self.cap_radius > 0.0:
            raise ValueError("cap_radius must be positive")


def weighted_sup(f: Field, w: WeightSpec) -> float:
    """max over nodes of |f(x)| * e^{theta * min(|x|, N)}, |x| measured from
    the box center."""
    d = np.abs(f.grid.nodes - f.grid.length / 2.0)
    phi = np.exp(w.theta * np.minimum(d, w.cap_radius))
    return float(np.max(np.abs(f.values) * phi))


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of log|f| against distance from the box center.

    theta_hat is minus the slope (NaN when fewer than two samples survive
    the floor), r2 the goodness of fit, floor_hit whether any window sample
    was discarded as below FIT_FLOOR.
    """

    theta_hat: float
    window: tuple[float, float]
    r2: float
    floor_hit: bool
    n_used: int

    @property
    def is_exponential(self) -> bool:
        """Clean exponential: good r^2 and no sample lost to the floor."""
        return (not self.floor_hit) and math.isfinite(self.r2) and self.r2 >= R2_EXPONENTIAL


def decay_fit(f: Field, window, side: str = "right") -> DecayFit:
    """Fit |f| ~ A exp(-theta_hat * d) on d in [x_lo, x_hi] from the box
    center, one-sided.  Samples at or below FIT_FLOOR are excluded and set
    floor_hit.  The window must hold at least 16 nodes and stay at least
    length/8 away from the wrap-around seam."""
    x_lo, x_hi = float(window[0]), float(window[1])
    if not x_lo < x_hi:
        raise ValueError("window must satisfy x_lo < x_hi")
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    grid = f.grid
    if x_hi > grid.length / 2.0 - grid.length / 8.0:
        raise ValueError("window too close to the wrap-around seam")
    offset = grid.nodes - grid.length / 2.0
    if side == "left":
        offset = -offset
    sel = (offset >= x_lo) & (offset <= x_hi)
    if int(np.sum(sel)) < 16:
        raise ValueError("window must contain at least 16 grid nodes")
    d = offset[sel]
    v = np.abs(f.values[sel])
    keep = v > FIT_FLOOR
    floor_hit = bool(np.any(~keep))
    n_used = int(np.sum(keep))
    if n_used < 2:
        return DecayFit(math.nan, (x_lo, x_hi), math.nan, True, n_used)
    dd, logv = d[keep], np.log(v[keep])
    slope, intercept = np.polyfit(dd, logv, 1)
    resid = logv - (slope * dd + intercept)
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return DecayFit(float(-slope), (x_lo, x_hi), r2, floor_hit, n_used)


def default_tail_window(grid) -> tuple[float, float]:
    """Standard right-tail fit window [L/8, L/4]: far from both the data
    core and the periodic seam."""
    return (grid.length / 8.0, grid.length / 4.0)


@dataclass
class PersistenceReport:
    """Per-snapshot decay fits of u and u_x against a reference exponent."""

    reference_theta: float
    times: np.ndarray
    fits_u: list[DecayFit]
    fits_ux: list[DecayFit]

    @staticmethod
    def _min_theta(fits) -> float:
        vals = [g.theta_hat for g in fits if math.isfinite(g.theta_hat)]
        return min(vals) if vals else math.nan

    @property
    def min_theta_u(self) -> float:
        return self._min_theta(self.fits_u)

    @property
    def min_theta_ux(self) -> float:
        return self._min_theta(self.fits_ux)

    @property
    def any_floor_hit(self) -> bool:
        return any(g.floor_hit for g in self.fits_u + self.fits_ux)


def persistence_report(traj, theta: float, window=None, side: str = "right") -> PersistenceReport:
    """decay_fit applied to every stored snapshot and its derivative.

    theta is the reference exponent the fits are compared against (it must
    lie in (0, 1), where tail persistence is expected to hold).
    """
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    if window is None:
        window = default_tail_window(traj.snapshots[0].grid)
    fits_u, fits_ux = [], []
    for snap in traj.snapshots:
        fits_u.append(decay_fit(snap, window, side))
        fits_ux.append(decay_fit(derivative(snap, 1), window, side))
    return PersistenceReport(theta, np.asarray(traj.times, dtype=float), fits_u, fits_ux)


def crest_positions(traj) -> np.ndarray:
    """Crest location per snapshot by quadratic interpolation through the
    three nodes around the maximum, unwrapped across the periodic seam."""
    grid = traj.snapshots[0].grid
    n, dx = grid.n, grid.dx
    pos = []
    for snap in traj.snapshots:
        v = snap.values
        j = int(np.argmax(v))
        vmax, vmin = v[j], float(np.min(v))
        if vmax - vmin <= 1e-13 * max(1.0, abs(vmax)):
            raise ValueError("ambiguous maximum: field is flat")
        if int(np.sum(v == vmax)) > 1:
            raise ValueError("ambiguous maximum: multiple global maxima")
        ym, y0, yp = v[(j - 1) % n], v[j], v[(j + 1) % n]
        denom = ym - 2.0 * y0 + yp
        delta = 0.0 if denom == 0.0 else 0.5 * (ym - yp) / denom
        pos.append(grid.nodes[j] + delta * dx)
    return np.unwrap(np.asarray(pos), period=grid.length)


def crest_track(traj) -> float:
    """Wave speed: least-squares slope of the unwrapped crest position
    against time."""
    if len(traj.times) < 2:
        raise ValueError("need at least two snapshots to estimate a speed")
    pos = crest_positions(traj)
    t = np.asarray(traj.times, dtype=float)
    return float(np.polyfit(t, pos, 1)[0])

"""Right-hand side assembly and time integration.

The equation is advanced in its smoothed evolution form

    u_t = -u^k u_x + a u^{k-2} u_x^3 - d_x G*(f1) - G*(f2) + forcing,

where G* is the Helmholtz-inverse convolution and f1, f2 collect the
degree-(k+1) monomials defined in params.coefficients.  This form is
first-order in space plus smoothing convolutions, hence non-stiff, and is
stepped explicitly with CFL-adaptive classical RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import diagnostics
from .params import Params, coefficients
from .spectral import Field, Grid, dealiased_product, derivative, get_ops


class BlowUpError(RuntimeError):
    """A stage or step produced non-finite samples."""

    def __init__(self, t: float):
        self.t = t
        super().__init__(f"non-finite field at t = {t:.6g}")


@dataclass(frozen=True)
class SimConfig:
    """One run: parameters, grid, horizon and stepping controls.

    forcing, when present, is a callable (x_nodes, t) -> samples added to
    the right-hand side.  spectral_filter enables a mild exponential filter
    on the top sixth of modes (off by default; useful for peakon runs).
    """

    params: Params
    grid: Grid
    t_end: float
    cfl_safety: float = 0.4
    dt_max: float = 1e-2
    output_stride: int = 1
    forcing: Optional[Callable] = None
    sobolev_s: float = 3.0
    spectral_filter: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0.0):
            raise ValueError("t_end must be positive and finite")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if not self.dt_max > 0.0:
            raise ValueError("dt_max must be positive")
        if self.output_stride < 1:
            raise ValueError("output_stride must be >= 1")


@dataclass(frozen=True)
class StepRecord:
    t: float
    dt: float
    hs_norm: float
    h1_sq: float


@dataclass
class Trajectory:
    """Stored snapshots plus per-step scalar records.

    blew_up marks a run aborted on non-finite values; the last stored time
    is then the last good one.  softbound_exceeded_t records when the H^s
    norm first exceeded 2^{1+1/k} times its initial value (a heuristic
    lifespan warning, not an error).
    """

    config: SimConfig
    times: list[float] = field(default_factory=list)
    snapshots: list[Field] = field(default_factory=list)
    records: list[StepRecord] = field(default_factory=list)
    blew_up: bool = False
    softbound_exceeded_t: Optional[float] = None

    @property
    def last_time(self) -> float:
        return self.times[-1]

    @property
    def sup_hs(self) -> float:
        return max(r.hs_norm for r in self.records)

    def softbound_factor(self) -> float:
        """Heuristic growth bound 2^{1+1/k} on the H^s norm."""
        return 2.0 ** (1.0 + 1.0 / self.config.params.k)


def _power_table(base: np.ndarray, powers) -> dict:
    """base**j by repeated multiplication, for the requested nonnegative
    integer exponents (u may be negative, so no exp/log)."""
    top = max(powers)
    table = {0: np.ones_like(base)}
    acc = table[0]
    for j in range(1, top + 1):
        acc = acc * base
        table[j] = acc
    return {j: table[j] for j in powers}


class RhsOperator:
    """Semi-discrete right-hand side bound to one (grid, params) pair.

    All monomials have total degree k+1 in (u, u_x, u_xx) and are formed on
    a zero-padded grid of size pad_size(k+1), then truncated back before the
    smoothing multipliers are applied.  Terms with zero coefficient are
    pruned up front, so no negative power of u is ever evaluated for the
    admissible parameter sets.
    """

    def __init__(self, grid: Grid, params: Params, forcing: Optional[Callable] = None):
        self.grid = grid
        self.params = params
        self.forcing = forcing
        self.ops = get_ops(grid)
        self.coeffs = cs = coefficients(params)
        k = params.k
        self.k = k
        self.m = self.ops.pad_size(k + 1)
        # (coefficient, power of u) for the terms that could go negative
        for coef, upow, name in (
            (cs.c_cub, k - 2, "u^{k-2} u_x^3"),
            (cs.c_f1_3, k - 3, "u^{k-3} u_x^4"),
            (cs.c_f2_1, k - 2, "u^{k-2} u_x^3"),
            (cs.c_f2_2, k - 3, "u^{k-3} u_x^3 u_xx"),
        ):
            if coef != 0.0 and upow < 0:
                raise ValueError(
                    f"parameters give the term {name} a nonzero coefficient "
                    f"({coef:g}) but a negative power of u at k = {k}"
                )
        upows = {k, k + 1}
        if cs.c_f1_2 != 0.0:
            upows.add(k - 1)
        if cs.c_cub != 0.0 or cs.c_f2_1 != 0.0:
            upows.add(k - 2)
        if cs.c_f1_3 != 0.0 or cs.c_f2_2 != 0.0:
            upows.add(k - 3)
        self.u_powers = upows

    def __call__(self, u: np.ndarray, t: float) -> np.ndarray:
        # overflow to inf is the blow-up signal, not a warning condition
        with np.errstate(over="ignore", invalid="ignore"):
            return self._eval(u, t)

    def _eval(self, u: np.ndarray, t: float) -> np.ndarray:
        ops, cs, k, m = self.ops, self.coeffs, self.k, self.m
        uh = np.fft.rfft(u)
        ux = np.fft.irfft(uh * ops.ik, self.grid.n)
        uu = ops.upsample(u, m)
        vx = ops.upsample(ux, m)
        up = _power_table(uu, self.u_powers)
        vx2 = vx * vx
        vx3 = vx2 * vx

        local = -(up[k] * vx)
        if cs.c_cub != 0.0:
            local += cs.c_cub * up[k - 2] * vx3

        f1 = cs.c_f1_1 * up[k + 1]
        if cs.c_f1_2 != 0.0:
            f1 += cs.c_f1_2 * up[k - 1] * vx2
        if cs.c_f1_3 != 0.0:
            f1 += cs.c_f1_3 * up[k - 3] * vx2 * vx2

        rhs_hat = ops.reduce_hat(local, m)
        rhs_hat -= ops.green_dx * ops.reduce_hat(f1, m)

        if cs.c_f2_1 != 0.0 or cs.c_f2_2 != 0.0:
            f2 = np.zeros_like(uu)
            if cs.c_f2_1 != 0.0:
                f2 += cs.c_f2_1 * up[k - 2] * vx3
            if cs.c_f2_2 != 0.0:
                wxx = ops.upsample(np.fft.irfft(uh * ops.d2, self.grid.n), m)
                f2 += cs.c_f2_2 * up[k - 3] * vx3 * wxx
            rhs_hat -= ops.helmholtz * ops.reduce_hat(f2, m)

        out = np.fft.irfft(rhs_hat, self.grid.n)
        if self.forcing is not None:
            out = out + self.forcing(self.grid.nodes, t)
        if not np.all(np.isfinite(out)):
            raise BlowUpError(t)
        return out


def f1(u: Field, p: Params) -> Field:
    """Bracket under d_x G*: b/(k+1) u^{k+1} + c u^{k-1} u_x^2
    - a(k-2) u^{k-3} u_x^4, with zero-coefficient terms pruned."""
    cs = coefficients(p)
    k = p.k
    ux = derivative(u, 1)
    out = cs.c_f1_1 * dealiased_product([u] * (k + 1)).values
    if cs.c_f1_2 != 0.0:
        out = out + cs.c_f1_2 * dealiased_product([u] * (k - 1) + [ux, ux]).values
    if cs.c_f1_3 != 0.0:
        if k < 3:
            raise ValueError("u^{k-3} term requires k >= 3 when its coefficient is nonzero")
        out = out + cs.c_f1_3 * dealiased_product([u] * (k - 3) + [ux] * 4).values
    return Field(u.grid, out)


def f2(u: Field, p: Params) -> Field:
    """Bracket under G*: [k(k+2) - 8a - b - c(k+1)] u^{k-2} u_x^3
    - 3a(k-2) u^{k-3} u_x^3 u_xx, with zero-coefficient terms pruned."""
    cs = coefficients(p)
    k = p.k
    out = np.zeros(u.grid.n)
    if cs.c_f2_1 != 0.0 or cs.c_f2_2 != 0.0:
        ux = derivative(u, 1)
        if cs.c_f2_1 != 0.0:
            if k < 2:
                raise ValueError("u^{k-2} term requires k >= 2 when its coefficient is nonzero")
            out = out + cs.c_f2_1 * dealiased_product([u] * (k - 2) + [ux] * 3).values
        if cs.c_f2_2 != 0.0:
            if k < 3:
                raise ValueError("u^{k-3} term requires k >= 3 when its coefficient is nonzero")
            uxx = derivative(u, 2)
            out = out + cs.c_f2_2 * dealiased_product([u] * (k - 3) + [ux] * 3 + [uxx]).values
    return Field(u.grid, out)


def rhs(u: Field, p: Params, t: float = 0.0, forcing: Optional[Callable] = None) -> Field:
    """Time derivative of u in the smoothed evolution form."""
    op = RhsOperator(u.grid, p, forcing)
    return Field(u.grid, op(u.values, t))


def local_form_residual(u: Field, ut: Field, p: Params) -> Field:
    """Left side of the equivalent third-order local formulation

        ut - ut_xx + (b+1) u^k u_x + (2c-3k) u^{k-1} u_x u_xx - u^k u_xxx
        + (3k-9a-b-2c) u^{k-2} u_x^3 + 6a u^{k-2} u_x u_xx^2
        + 3a u^{k-2} u_x^2 u_xxx

    evaluated with ut in place of the time derivative.  Vanishes to
    round-off when ut = rhs(u), which cross-validates the two formulations.
    """
    if u.grid != ut.grid:
        raise ValueError("u and ut must share one grid")
    k, a, b, c = p.k, p.a, p.b, p.c
    ux = derivative(u, 1)
    uxx = derivative(u, 2)
    uxxx = derivative(uxx, 1)
    out = ut.values - derivative(ut, 2).values
    out = out + (b + 1.0) * dealiased_product([u] * k + [ux]).values
    out = out + (2.0 * c - 3.0 * k) * dealiased_product([u] * (k - 1) + [ux, uxx]).values
    out = out - dealiased_product([u] * k + [uxxx]).values
    c_cub = 3.0 * k - 9.0 * a - b - 2.0 * c
    if c_cub != 0.0:
        if k < 2:
            raise ValueError("u^{k-2} term requires k >= 2 when its coefficient is nonzero")
        out = out + c_cub * dealiased_product([u] * (k - 2) + [ux] * 3).values
    if a != 0.0:
        out = out + 6.0 * a * dealiased_product([u] * (k - 2) + [ux, uxx, uxx]).values
        out = out + 3.0 * a * dealiased_product([u] * (k - 2) + [ux, ux, uxxx]).values
    return Field(u.grid, out)


def cfl_dt(u: Field, p: Params, safety: float, dt_max: float) -> float:
    """CFL step from the advective characteristic speed u^k - a u^{k-2} u_x^2
    (the u_x coefficient of the evolution form), floored at 1e-12."""
    if not 0.0 < safety <= 1.0:
        raise ValueError("safety must lie in (0, 1]")
    v = u.values
    with np.errstate(over="ignore", invalid="ignore"):
        speed = v**p.k
        if p.a != 0.0:
            ux = derivative(u, 1).values
            speed = speed - p.a * v ** (p.k - 2) * ux * ux
        vmax = float(np.max(np.abs(speed)))
    if not math.isfinite(vmax):
        raise BlowUpError(math.nan)
    vmax = max(vmax, 1e-12)
    return min(dt_max, safety * u.grid.dx / vmax)


def rk4_step(f: Callable, y: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One classical 4-stage Runge-Kutta step of y' = f(y, t)."""
    k1 = f(y, t)
    k2 = f(y + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = f(y + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = f(y + dt * k3, t + dt)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_rk4(u: Field, t: float, dt: float, p: Params, forcing: Optional[Callable] = None) -> Field:
    """One RK4 update of the evolution form.  Deterministic; raises
    BlowUpError if any stage goes non-finite."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    op = RhsOperator(u.grid, p, forcing)
    out = rk4_step(op, u.values, t, dt)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(t)
    return Field(u.grid, out)


def _filter_multiplier(grid: Grid) -> np.ndarray:
    """Mild exponential filter on the top sixth of modes."""
    nmodes = grid.n // 2
    m0 = int((5.0 / 6.0) * nmodes)
    idx = np.arange(nmodes + 1)
    eta = np.clip((idx - m0) / max(nmodes - m0, 1), 0.0, None)
    return np.exp(-36.0 * eta**8)


def simulate(cfg: SimConfig, u0: Field) -> Trajectory:
    """Advance u0 to cfg.t_end with CFL-adaptive RK4 steps.

    Stores every output_stride-th snapshot plus the final state, and a
    per-step scalar record (H^s norm, squared H^1 norm, step size).  On
    blow-up the run aborts cleanly: the returned trajectory is flagged and
    holds only finite snapshots up to the last good time.
    """
    if u0.grid != cfg.grid:
        raise ValueError("u0 must live on cfg.grid")
    op = RhsOperator(cfg.grid, cfg.params, cfg.forcing)
    filt = _filter_multiplier(cfg.grid) if cfg.spectral_filter else None

    t = 0.0
    cur = u0
    traj = Trajectory(config=cfg)
    hs0 = diagnostics.sobolev_norm(u0, cfg.sobolev_s)
    bound = traj.softbound_factor() * hs0
    traj.records.append(StepRecord(0.0, 0.0, hs0, diagnostics.h1_squared(u0)))
    traj.times.append(0.0)
    traj.snapshots.append(u0)

    step = 0
    while t < cfg.t_end - 1e-12:
        try:
            dt = cfl_dt(cur, cfg.params, cfg.cfl_safety, cfg.dt_max)
            dt = min(dt, cfg.t_end - t)
            u_new = rk4_step(op, cur.values, t, dt)
            if not np.all(np.isfinite(u_new)):
                raise BlowUpError(t)
        except BlowUpError:
            traj.blew_up = True
            if traj.times[-1] < t:  # keep the last good state
                traj.times.append(t)
                traj.snapshots.append(cur)
            break
        if filt is not None:
            u_new = np.fft.irfft(np.fft.rfft(u_new) * filt, cfg.grid.n)
        t += dt
        step += 1
        cur = Field(cfg.grid, u_new)
        hs = diagnostics.sobolev_norm(cur, cfg.sobolev_s)
        traj.records.append(StepRecord(t, dt, hs, diagnostics.h1_squared(cur)))
        if traj.softbound_exceeded_t is None and hs0 > 0.0 and hs > bound:
            traj.softbound_exceeded_t = t
        if step % cfg.output_stride == 0 or t >= cfg.t_end - 1e-12:
            traj.times.append(t)
            traj.snapshots.append(cur)
    return traj


@dataclass(frozen=True)
class ManufacturedSolution:
    """Analytic space-time field u(x, t) with an optional analytic time
    derivative.  Without one, a fourth-order central difference with step
    1e-6 is used."""

    value: Callable[[np.ndarray, float], np.ndarray]
    dt_value: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    def time_derivative(self, x: np.ndarray, t: float) -> np.ndarray:
        if self.dt_value is not None:
            return self.dt_value(x, t)
        h = 1e-6
        return (
            -self.value(x, t + 2 * h)
            + 8.0 * self.value(x, t + h)
            - 8.0 * self.value(x, t - h)
            + self.value(x, t - 2 * h)
        ) / (12.0 * h)


def mms_forcing(u_star: ManufacturedSolution, p: Params, grid: Grid) -> Callable:
    """Forcing that makes u_star an exact solution of the semi-discrete
    system: g(x, t) = d_t u* - N(u*), with N the unforced right-hand side
    evaluated by the same discrete operators the solver uses."""
    op = RhsOperator(grid, p)
    def forcing(x: np.ndarray, t: float) -> np.ndarray:
        return u_star.time_derivative(x, t) - op(u_star.value(x, t), t)
    return forcing

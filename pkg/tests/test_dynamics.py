import math

import numpy as np
import pytest

from kabc.dynamics import (
    BlowUpError,
    ManufacturedSolution,
    RhsOperator,
    SimConfig,
    cfl_dt,
    f1,
    f2,
    local_form_residual,
    mms_forcing,
    rhs,
    rk4_step,
    simulate,
    step_rk4,
)
from kabc.exact import Peakon, mollified_profile
from kabc.params import preset, validate
from kabc.spectral import Field, Grid, derivative
from kabc import diagnostics


def band_limited(grid, max_mode, seed, amp=0.25):
    rng = np.random.default_rng(seed)
    coef = np.zeros(grid.n // 2 + 1, dtype=complex)
    coef[1 : max_mode + 1] = rng.normal(size=max_mode) + 1j * rng.normal(size=max_mode)
    v = np.fft.irfft(coef, grid.n)
    return Field(grid, v * (amp / np.max(np.abs(v))))


class TestF1:
    def test_zero(self):
        g = Grid(64, 2 * np.pi)
        assert np.all(f1(Field(g, np.zeros(64)), preset("novikov")).values == 0.0)

    def test_constant_ch(self):
        # u = 1 constant: only the b/(k+1) u^{k+1} term survives; CH gives 1
        g = Grid(64, 2 * np.pi)
        out = f1(Field(g, np.ones(64)), preset("ch"))
        assert np.max(np.abs(out.values - 1.0)) < 1e-13

    def test_sine_novikov_closed_form(self):
        # b/(k+1) u^{k+1} + c u^{k-1} u_x^2 at (k=2, b=3, c=3/2):
        # sin^3 + 1.5 sin cos^2
        g = Grid(128, 2 * np.pi)
        x = g.nodes
        out = f1(Field(g, np.sin(x)), preset("novikov"))
        want = np.sin(x) ** 3 + 1.5 * np.sin(x) * np.cos(x) ** 2
        assert np.max(np.abs(out.values - want)) < 1e-10

    def test_sine_forq_closed_form(self):
        # (2/3) sin^3 + sin cos^2 (the u^{k-3} term is pruned at k = 2)
        g = Grid(128, 2 * np.pi)
        x = g.nodes
        out = f1(Field(g, np.sin(x)), preset("forq"))
        want = (2.0 / 3.0) * np.sin(x) ** 3 + np.sin(x) * np.cos(x) ** 2
        assert np.max(np.abs(out.values - want)) < 1e-10


class TestF2:
    def test_zero(self):
        g = Grid(64, 2 * np.pi)
        assert np.all(f2(Field(g, np.zeros(64)), preset("forq")).values == 0.0)

    def test_constant_is_zero(self):
        g = Grid(64, 2 * np.pi)
        out = f2(Field(g, np.full(64, 2.5)), preset("novikov"))
        assert np.max(np.abs(out.values)) < 1e-13

    def test_sine_forq_closed_form(self):
        # coefficient k(k+2)-8a-b-c(k+1) = 1/3 at FORQ: (1/3) cos^3
        g = Grid(128, 2 * np.pi)
        x = g.nodes
        out = f2(Field(g, np.sin(x)), preset("forq"))
        assert np.max(np.abs(out.values - np.cos(x) ** 3 / 3.0)) < 1e-10

    def test_ch_vanishes_identically(self):
        # CH has k(k+2)-8a-b-c(k+1) = 3-2-1 = 0
        g = Grid(64, 2 * np.pi)
        out = f2(band_limited(g, 10, seed=4), preset("ch"))
        assert np.max(np.abs(out.values)) < 1e-13


class TestRhs:
    def test_zero_field(self):
        g = Grid(64, 2 * np.pi)
        assert np.max(np.abs(rhs(Field(g, np.zeros(64)), preset("novikov")).values)) == 0.0

    def test_constant_field(self):
        # constants are equilibria: derivative terms vanish and the
        # smoothed gradient of a constant bracket is zero
        g = Grid(64, 2 * np.pi)
        for name in ("ch", "novikov", "forq"):
            out = rhs(Field(g, np.full(64, 2.0)), preset(name))
            assert np.max(np.abs(out.values)) < 1e-12

    def test_mollified_peakon_travels(self):
        # away from the crest the peakon satisfies u_t = -speed * u_x
        grid = Grid(1024, 40 * np.pi)
        p = preset("ch")
        u = mollified_profile(Peakon(1.0), grid.dx, grid)
        resid = rhs(u, p).values + 1.0 * derivative(u, 1).values
        d = np.abs(grid.nodes - grid.length / 2)
        assert np.max(np.abs(resid[d > 3.0])) < 5e-3

    def test_k1_off_family_rejected(self):
        # k = 1 with b + 2c != 3 gives the u^{k-2} u_x^3 bracket a nonzero
        # coefficient and would need 1/u
        g = Grid(64, 2 * np.pi)
        with pytest.raises(ValueError):
            rhs(Field(g, np.ones(64)), validate(1, 0.0, 2.0, 0.0))

    def test_forcing_added(self):
        g = Grid(64, 2 * np.pi)
        forcing = lambda x, t: np.cos(x) * (1.0 + t)
        out = rhs(Field(g, np.zeros(64)), preset("ch"), t=2.0, forcing=forcing)
        assert np.max(np.abs(out.values - 3.0 * np.cos(g.nodes))) < 1e-13


class TestLocalFormResidual:
    def test_zero(self):
        g = Grid(64, 2 * np.pi)
        z = Field(g, np.zeros(64))
        assert np.max(np.abs(local_form_residual(z, z, preset("novikov")).values)) == 0.0

    @pytest.mark.parametrize("name", ["ch", "dp", "novikov", "forq"])
    def test_nonlocal_rhs_satisfies_local_form(self, name):
        p = preset(name)
        g = Grid(256, 2 * np.pi)
        for seed in range(3):
            u = band_limited(g, g.n // 6, seed=seed)
            ut = rhs(u, p)
            res = local_form_residual(u, ut, p)
            assert np.max(np.abs(res.values)) < 1e-8

    def test_wrong_ut_gives_large_residual(self):
        p = preset("novikov")
        g = Grid(256, 2 * np.pi)
        u = band_limited(g, 20, seed=1)
        bad = Field(g, rhs(u, p).values + 0.01 * np.sin(g.nodes))
        res = local_form_residual(u, bad, p)
        assert np.max(np.abs(res.values)) > 1e-3


class TestCflDt:
    def test_zero_field_gives_dt_max(self):
        g = Grid(64, 2 * np.pi)
        assert cfl_dt(Field(g, np.zeros(64)), preset("ch"), 0.5, 0.3) == 0.3

    def test_arithmetic(self):
        # max speed u^k = 2, dx = 0.1, safety 0.4, dt_max 1 -> 0.02
        g = Grid(64, 6.4)
        f = Field(g, np.full(64, 2.0))
        assert cfl_dt(f, preset("ch"), 0.4, 1.0) == pytest.approx(0.02, rel=1e-12)

    def test_peakon_speed_scale(self):
        g = Grid(1024, 40 * np.pi)
        u = mollified_profile(Peakon(1.0), 3 * g.dx, g)
        dt = cfl_dt(u, preset("ch"), 0.4, 10.0)
        assert dt == pytest.approx(0.4 * g.dx / np.max(np.abs(u.values)), rel=1e-6)

    def test_gradient_term_enters_for_a_nonzero(self):
        # steep field: u_x^2 dominates u^2, so the -a u^{k-2} u_x^2 part of
        # the characteristic speed must shrink dt when a != 0
        g = Grid(128, 2 * np.pi)
        u = Field(g, 0.5 * np.sin(4 * g.nodes))
        dt_forq = cfl_dt(u, preset("forq"), 0.4, 10.0)
        dt_nov = cfl_dt(u, preset("novikov"), 0.4, 10.0)
        assert dt_forq < dt_nov


class TestRk4:
    def test_zero_stays_zero(self):
        g = Grid(64, 2 * np.pi)
        out = step_rk4(Field(g, np.zeros(64)), 0.0, 0.1, preset("novikov"))
        assert np.all(out.values == 0.0)

    def test_linear_decay_exact_taylor(self):
        # on u' = -u one RK4 step reproduces the 4-term Taylor polynomial
        # of exp(-dt) exactly
        dt = 0.3
        out = rk4_step(lambda y, t: -y, np.array([1.0]), 0.0, dt)
        want = sum((-dt) ** j / math.factorial(j) for j in range(5))
        assert abs(out[0] - want) < 1e-15

    def test_local_error_fifth_order(self):
        p = preset("novikov")
        g = Grid(128, 2 * np.pi)
        u = (0.3 * np.sin(g.nodes) + 0.1 * np.cos(2 * g.nodes))
        op = RhsOperator(g, p)

        def reference(u0, dt, nsub=64):
            v, t, h = u0.copy(), 0.0, dt / nsub
            for _ in range(nsub):
                v = rk4_step(op, v, t, h)
                t += h
            return v

        dt = 0.1
        e1 = np.max(np.abs(rk4_step(op, u, 0.0, dt) - reference(u, dt)))
        e2 = np.max(np.abs(rk4_step(op, u, 0.0, dt / 2) - reference(u, dt / 2)))
        assert 26.0 < e1 / e2 < 40.0

    def test_blowup_detected(self):
        g = Grid(64, 2 * np.pi)
        huge = Field(g, np.full(64, 1e200))
        with pytest.raises(BlowUpError):
            step_rk4(huge, 0.0, 0.1, preset("novikov"))


class TestSimulate:
    def test_zero_initial_data(self):
        g = Grid(64, 2 * np.pi)
        cfg = SimConfig(params=preset("ch"), grid=g, t_end=0.5)
        traj = simulate(cfg, Field(g, np.zeros(64)))
        assert not traj.blew_up
        assert traj.last_time == pytest.approx(0.5, abs=1e-12)
        for snap in traj.snapshots:
            assert np.all(snap.values == 0.0)

    def test_deterministic(self):
        g = Grid(128, 2 * np.pi)
        u0 = band_limited(g, 10, seed=5)
        cfg = SimConfig(params=preset("forq"), grid=g, t_end=0.3)
        a = simulate(cfg, u0)
        b = simulate(cfg, u0)
        assert np.array_equal(a.snapshots[-1].values, b.snapshots[-1].values)
        assert [r.t for r in a.records] == [r.t for r in b.records]
        assert [r.hs_norm for r in a.records] == [r.hs_norm for r in b.records]

    def test_blowup_contained(self):
        g = Grid(64, 2 * np.pi)
        u0 = Field(g, np.full(64, 1e200))
        cfg = SimConfig(params=preset("novikov"), grid=g, t_end=1.0)
        traj = simulate(cfg, u0)
        assert traj.blew_up
        assert traj.last_time < 1.0
        for snap in traj.snapshots:
            assert np.all(np.isfinite(snap.values))

    def test_softbound_recorded_for_small_data(self):
        g = Grid(128, 2 * np.pi)
        u0 = band_limited(g, 6, seed=9, amp=0.05)
        cfg = SimConfig(params=preset("novikov"), grid=g, t_end=0.5)
        traj = simulate(cfg, u0)
        hs0 = traj.records[0].hs_norm
        assert traj.sup_hs <= traj.softbound_factor() * hs0
        assert traj.softbound_exceeded_t is None

    def test_output_stride(self):
        g = Grid(64, 2 * np.pi)
        u0 = band_limited(g, 6, seed=2, amp=0.1)
        cfg = SimConfig(params=preset("ch"), grid=g, t_end=0.2, dt_max=1e-2, output_stride=5)
        traj = simulate(cfg, u0)
        assert len(traj.records) - 1 == 20
        assert len(traj.snapshots) == 1 + 4  # initial + every 5th

    def test_grid_mismatch(self):
        cfg = SimConfig(params=preset("ch"), grid=Grid(64, 2 * np.pi), t_end=0.1)
        with pytest.raises(ValueError):
            simulate(cfg, Field(Grid(128, 2 * np.pi), np.zeros(128)))

    def test_h1_conserved_smooth_run(self):
        g = Grid(256, 2 * np.pi)
        u0 = Field(g, 0.3 * np.sin(g.nodes) + 0.1 * np.cos(2 * g.nodes))
        cfg = SimConfig(params=preset("novikov"), grid=g, t_end=0.25, dt_max=5e-3)
        traj = simulate(cfg, u0)
        assert diagnostics.h1_drift(traj) < 1e-7

    def test_spectral_filter_keeps_smooth_solution(self):
        # the filter touches only the top sixth of modes, so a well-resolved
        # run barely changes but stays deterministic
        g = Grid(128, 2 * np.pi)
        u0 = band_limited(g, 8, seed=3, amp=0.2)
        base = SimConfig(params=preset("novikov"), grid=g, t_end=0.2, dt_max=5e-3)
        filt = SimConfig(params=preset("novikov"), grid=g, t_end=0.2, dt_max=5e-3, spectral_filter=True)
        a = simulate(base, u0).snapshots[-1].values
        b = simulate(filt, u0).snapshots[-1].values
        assert np.max(np.abs(a - b)) < 1e-8
        c = simulate(filt, u0).snapshots[-1].values
        assert np.array_equal(b, c)


class TestScalingSymmetry:
    def test_lambda_two_rescaled_trajectories_agree(self):
        # u(x,t) -> lam * u(x, lam^k t) maps solutions to solutions; with
        # matched step schedules the discrete flows coincide too
        p = preset("novikov")
        lam, k, T = 2.0, 2, 0.5
        g = Grid(128, 2 * np.pi)
        u0 = Field(g, 0.25 * np.sin(g.nodes) + 0.1 * np.cos(2 * g.nodes))
        cfg_a = SimConfig(params=p, grid=g, t_end=T, cfl_safety=1.0, dt_max=2e-3, output_stride=10**9)
        cfg_b = SimConfig(params=p, grid=g, t_end=T / lam**k, cfl_safety=1.0, dt_max=2e-3 / lam**k, output_stride=10**9)
        ta = simulate(cfg_a, u0)
        tb = simulate(cfg_b, Field(g, lam * u0.values))
        va = lam * ta.snapshots[-1].values
        vb = tb.snapshots[-1].values
        assert np.max(np.abs(va - vb)) <= 1e-6 * np.max(np.abs(vb))


class TestMms:
    def test_zero_solution_zero_forcing(self):
        g = Grid(64, 2 * np.pi)
        star = ManufacturedSolution(lambda x, t: np.zeros_like(x))
        forcing = mms_forcing(star, preset("novikov"), g)
        assert np.max(np.abs(forcing(g.nodes, 0.7))) < 1e-9

    def test_traveling_sine_reproduced(self):
        p = preset("novikov")
        g = Grid(128, 2 * np.pi)
        star = ManufacturedSolution(
            lambda x, t: 0.1 * np.sin(x - t), lambda x, t: -0.1 * np.cos(x - t)
        )
        forcing = mms_forcing(star, p, g)
        cfg = SimConfig(params=p, grid=g, t_end=1.0, cfl_safety=1.0, dt_max=1.0 / 256, forcing=forcing)
        traj = simulate(cfg, Field(g, star.value(g.nodes, 0.0)))
        err = np.max(np.abs(traj.snapshots[-1].values - star.value(g.nodes, traj.last_time)))
        assert err < 1e-8

    def test_fourth_order_in_time(self):
        p = preset("forq")
        g = Grid(64, 2 * np.pi)
        star = ManufacturedSolution(
            lambda x, t: 0.1 * np.sin(x - t), lambda x, t: -0.1 * np.cos(x - t)
        )
        forcing = mms_forcing(star, p, g)
        errs = []
        for dt in (1.0 / 32, 1.0 / 64):
            cfg = SimConfig(params=p, grid=g, t_end=1.0, cfl_safety=1.0, dt_max=dt, forcing=forcing)
            traj = simulate(cfg, Field(g, star.value(g.nodes, 0.0)))
            errs.append(np.max(np.abs(traj.snapshots[-1].values - star.value(g.nodes, traj.last_time))))
        assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.3)

    def test_finite_difference_time_derivative(self):
        # no analytic dt: the 4th-order difference floor is well below the
        # integration tolerance
        p = preset("novikov")
        g = Grid(64, 2 * np.pi)
        star = ManufacturedSolution(lambda x, t: 0.1 * np.sin(x - t))
        forcing = mms_forcing(star, p, g)
        cfg = SimConfig(params=p, grid=g, t_end=0.5, cfl_safety=1.0, dt_max=1.0 / 128, forcing=forcing)
        traj = simulate(cfg, Field(g, star.value(g.nodes, 0.0)))
        err = np.max(np.abs(traj.snapshots[-1].values - star.value(g.nodes, traj.last_time)))
        assert err < 1e-6

"""Exit-time Monte Carlo: oracles, invariants, fitting, censoring."""

import math

import numpy as np
import pytest

from levylab.domains import Ball, HalfSpace, Interval
from levylab.errors import (
    GridAlignmentError,
    InsufficientDataError,
    ParameterError,
)
from levylab.exit_mc import (
    DtBiasReport,
    SurvivalCurve,
    WindowPolicy,
    curve_from_ensemble,
    dt_bias_check,
    fit_decay_rate,
    mean_exit_time,
    run_exit_ensemble,
    simulate_exit,
    survival_curve,
    wilson_interval,
)
from levylab.sampler import RngStream, StableParams

INTERVAL = Interval(-1.0, 1.0)
A1 = StableParams(1.0, 1)
A2 = StableParams(2.0, 1)


def interval_survival_a2(t, terms=60):
    """Eigen-expansion of P_0(tau > t) for the generator d^2/dx^2 on (-1, 1)."""
    ks = np.arange(1, 2 * terms, 2)
    return float(
        np.sum(4.0 / (ks * np.pi) * np.sin(ks * np.pi / 2) * np.exp(-(ks**2) * np.pi**2 * t / 4.0))
    )


def getoor_mean_exit(alpha, x):
    return (
        (1.0 - x**2) ** (alpha / 2.0)
        * math.gamma(0.5)
        / (2.0**alpha * math.gamma(1 + alpha / 2.0) * math.gamma((1 + alpha) / 2.0))
    )


def snapped_grid(t_max, n, dt):
    return np.unique(np.round(np.linspace(0.0, t_max, n) / dt) * dt)


class TestSimulateExit:
    def test_censoring_contract(self):
        # huge domain, tiny horizon: the record is censored
        rec = simulate_exit(Interval(-1e9, 1e9), A1, [0.0], 0.01, 0.1, RngStream(1))
        assert not rec.exited
        assert rec.exit_time == pytest.approx(0.1)
        assert rec.exit_location is None
        assert rec.first_exterior_grid_index is None

    def test_exit_record_fields(self):
        rec = simulate_exit(INTERVAL, A1, [0.9], 1e-3, 50.0, RngStream(2))
        assert rec.exited
        assert rec.exit_time <= 50.0
        assert not INTERVAL.contains(rec.exit_location)
        assert rec.first_exterior_grid_index == round(rec.exit_time / 1e-3)

    def test_interval_cauchy_exits_with_overwhelming_probability(self):
        # survival beyond t = 50 is about exp(-1.158 * 50): astronomically small
        ens = run_exit_ensemble(INTERVAL, A1, [0.0], 1e-3, 50.0, 10_000, seed=3)
        assert (ens.exit_idx >= 0).mean() >= 0.999

    def test_halfspace_far_start_rarely_exits(self):
        # numeric Cauchy tail: reaching distance 1e6 within t = 1 is ~1e-6
        dom = HalfSpace((1.0,), 1e6)
        ens = run_exit_ensemble(dom, A1, [0.0], 0.01, 1.0, 10_000, seed=4)
        assert (ens.exit_idx >= 0).mean() < 1e-3

    def test_start_outside_rejected(self):
        with pytest.raises(ParameterError):
            simulate_exit(INTERVAL, A1, [2.0], 0.01, 1.0, RngStream(1))

    def test_bridge_requires_alpha2(self):
        with pytest.raises(ParameterError):
            simulate_exit(INTERVAL, A1, [0.0], 0.01, 1.0, RngStream(1), bridge_correction=True)

    def test_deterministic_given_stream(self):
        a = simulate_exit(INTERVAL, A1, [0.0], 1e-2, 20.0, RngStream(9, 5))
        b = simulate_exit(INTERVAL, A1, [0.0], 1e-2, 20.0, RngStream(9, 5))
        assert a.exit_time == b.exit_time
        assert np.array_equal(a.exit_location, b.exit_location)


class TestSurvivalCurve:
    def test_starts_at_one_and_monotone(self):
        grid = snapped_grid(2.0, 41, 1e-2)
        c = survival_curve(INTERVAL, A2, [0.0], grid, 500, 1e-2, seed=5, bridge_correction=True)
        assert c.p_hat[0] == 1.0
        assert np.all(np.diff(c.p_hat) <= 0)
        assert np.all((c.ci_low <= c.p_hat) & (c.p_hat <= c.ci_high))

    def test_matches_eigen_expansion_oracle(self):
        grid = snapped_grid(1.0, 21, 5e-4)
        c = survival_curve(INTERVAL, A2, [0.0], grid, 20_000, 5e-4, seed=101, bridge_correction=True)
        target = interval_survival_a2(1.0)
        half_width = 0.5 * (c.ci_high[-1] - c.ci_low[-1])
        assert abs(c.p_hat[-1] - target) < 3.0 * half_width

    def test_grid_misalignment_rejected(self):
        with pytest.raises(GridAlignmentError):
            survival_curve(INTERVAL, A2, [0.0], [0.0, 0.0123], 200, 1e-2, seed=1)

    def test_grid_must_start_at_zero(self):
        with pytest.raises(ParameterError):
            survival_curve(INTERVAL, A2, [0.0], [0.01, 0.02], 200, 1e-2, seed=1)

    def test_min_paths(self):
        with pytest.raises(ParameterError):
            survival_curve(INTERVAL, A2, [0.0], [0.0, 0.01], 50, 1e-2, seed=1)

    def test_exchangeable_in_stream_order(self):
        grid = snapped_grid(2.0, 21, 1e-2)
        ens1 = run_exit_ensemble(INTERVAL, A2, [0.0], 1e-2, 2.0, 1000, seed=6)
        perm = np.random.default_rng(0).permutation(1000)
        ens2 = run_exit_ensemble(INTERVAL, A2, [0.0], 1e-2, 2.0, 1000, seed=6, stream_ids=perm)
        s1 = curve_from_ensemble(ens1, grid, 1000).survivors
        s2 = curve_from_ensemble(ens2, grid, 1000).survivors
        assert np.array_equal(s1, s2)

    def test_monotone_under_domain_inclusion(self):
        # shared seeds drive identical noise, so exits are ordered pathwise
        small = run_exit_ensemble(INTERVAL, A1, [0.0], 1e-3, 2.0, 2000, seed=7)
        big = run_exit_ensemble(Interval(-2, 2), A1, [0.0], 1e-3, 2.0, 2000, seed=7)
        ts = np.where(small.exit_idx < 0, np.iinfo(np.int64).max, small.exit_idx)
        tb = np.where(big.exit_idx < 0, np.iinfo(np.int64).max, big.exit_idx)
        assert np.all(ts <= tb)

    def test_workers_do_not_change_results(self):
        grid = snapped_grid(1.0, 11, 1e-2)
        c1 = survival_curve(INTERVAL, A1, [0.0], grid, 400, 1e-2, seed=8, n_workers=1)
        c4 = survival_curve(INTERVAL, A1, [0.0], grid, 400, 1e-2, seed=8, n_workers=4)
        assert np.array_equal(c1.survivors, c4.survivors)

    def test_wilson_interval_bounds(self):
        p = np.array([0, 5, 100]) / 100
        lo, hi = wilson_interval(np.array([0, 5, 100]), 100)
        assert lo[0] == 0.0 and hi[0] > 0.0
        assert hi[2] == 1.0 and lo[2] < 1.0
        assert np.all(lo <= p) and np.all(p <= hi)


class TestMeanExit:
    def test_alpha2_center_matches_closed_form(self):
        est = mean_exit_time(INTERVAL, A2, [0.0], 20_000, 5e-4, 6.0, seed=3, bridge_correction=True)
        assert abs(est.mean - 0.5) < 3.0 * est.stderr

    def test_alpha1_center_matches_poisson_oracle(self):
        est = mean_exit_time(INTERVAL, A1, [0.0], 20_000, 5e-4, 9.0, seed=4)
        # oracle = fractional Poisson solve extrapolated in resolution (= 1.0)
        assert abs(est.mean - 1.0) < 3.0 * (est.stderr + 2e-3)

    def test_near_boundary_scaling(self):
        # only the delta^(alpha/2) scaling is asserted, not the constant
        e1 = mean_exit_time(INTERVAL, A1, [0.99], 20_000, 2e-4, 4.0, seed=5)
        e2 = mean_exit_time(INTERVAL, A1, [0.96], 20_000, 2e-4, 4.0, seed=6)
        ratio = e1.mean / e2.mean
        target = (0.01 / 0.04) ** 0.5
        se = ratio * (e1.stderr / e1.mean + e2.stderr / e2.mean)
        assert abs(ratio - target) < 3.0 * se + 0.05 * target

    def test_all_censored_is_an_error(self):
        with pytest.raises(ParameterError, match="t_max too small"):
            mean_exit_time(Interval(-1e9, 1e9), A1, [0.0], 200, 1e-2, 0.1, seed=1)

    def test_censored_without_fit_is_lower_bound(self):
        est = mean_exit_time(INTERVAL, A1, [0.0], 500, 1e-2, 0.5, seed=2)
        assert est.truncated_fraction > 0
        assert est.is_lower_bound
        assert est.tail_correction == 0.0

    def test_tail_correction_with_fit(self):
        grid = snapped_grid(6.0, 121, 1e-3)
        curve = survival_curve(INTERVAL, A1, [0.0], grid, 20_000, 1e-3, seed=9)
        fit = fit_decay_rate(curve)
        est = mean_exit_time(INTERVAL, A1, [0.0], 2_000, 1e-3, 2.0, seed=9, decay_fit=fit)
        assert est.truncated_fraction > 0
        assert est.tail_correction == pytest.approx(est.truncated_fraction / abs(fit.rate))
        assert not est.is_lower_bound

    def test_mean_curve_consistency(self):
        # the censored mean is the integral of the empirical survival curve
        grid = snapped_grid(3.0, 301, 1e-3)
        ens = run_exit_ensemble(INTERVAL, A1, [0.0], 1e-3, 3.0, 5_000, seed=10)
        curve = curve_from_ensemble(ens, grid, 5_000)
        est = mean_exit_time(INTERVAL, A1, [0.0], 5_000, 1e-3, 3.0, seed=10)
        integral = float(np.trapezoid(curve.p_hat, curve.times))
        assert abs((est.mean - est.tail_correction) - integral) < 2.0 * est.stderr


class TestDecayFit:
    def synthetic_curve(self, rate=2.0, n=10**6):
        times = np.linspace(0.0, 6.0, 121)
        surv = np.round(n * np.exp(-rate * times)).astype(int)
        p = surv / n
        lo, hi = wilson_interval(surv, n)
        return SurvivalCurve(times, surv, n, p, lo, hi, dt=0.05, seed=0)

    def test_exact_exponential_input(self):
        fit = fit_decay_rate(self.synthetic_curve())
        assert abs(fit.rate + 2.0) < 1e-3
        assert fit.stderr > 0
        assert fit.n_points >= 5

    def test_flat_curve_gives_zero_rate(self):
        n = 10**6
        times = np.linspace(0.0, 2.0, 40)
        surv = np.full(40, 5000)
        p = surv / n
        lo, hi = wilson_interval(surv, n)
        fit = fit_decay_rate(SurvivalCurve(times, surv, n, p, lo, hi, 0.05, 0))
        assert abs(fit.rate) < 1e-10
        assert fit.stderr > 0

    def test_interval_alpha2_rate(self):
        grid = snapped_grid(4.0, 161, 1e-3)
        c = survival_curve(INTERVAL, A2, [0.0], grid, 20_000, 1e-3, seed=7, bridge_correction=True)
        fit = fit_decay_rate(c)
        assert abs(fit.rate + math.pi**2 / 4) < 0.05 * math.pi**2 / 4

    def test_window_too_small(self):
        n = 10**6
        times = np.linspace(0.0, 1.0, 6)
        surv = np.array([n, n, n, n, n, n - 5])
        p = surv / n
        lo, hi = wilson_interval(surv, n)
        with pytest.raises(InsufficientDataError, match="insufficient tail data"):
            fit_decay_rate(SurvivalCurve(times, surv, n, p, lo, hi, 0.2, 0))

    def test_stable_scaling_of_rates(self):
        # lambda(r D) = r^-alpha lambda(D): fitted rates scale accordingly
        grid1 = snapped_grid(7.0, 141, 1e-3)
        c1 = survival_curve(INTERVAL, A1, [0.0], grid1, 20_000, 1e-3, seed=11)
        f1 = fit_decay_rate(c1)
        grid2 = snapped_grid(3.5, 141, 5e-4)
        c2 = survival_curve(Interval(-0.5, 0.5), A1, [0.0], grid2, 20_000, 5e-4, seed=12)
        f2 = fit_decay_rate(c2)
        combined = 2.0 * (abs(f2.stderr) + 2.0 * abs(f1.stderr))
        assert abs(f2.rate - 2.0 * f1.rate) < combined + 0.02 * abs(f2.rate)


class TestDtBias:
    def test_identical_dt_zero_shift(self):
        grid = snapped_grid(4.0, 81, 1e-3)
        kw = dict(bridge_correction=True)
        c1 = survival_curve(INTERVAL, A2, [0.0], grid, 4_000, 1e-3, seed=13, **kw)
        c2 = survival_curve(INTERVAL, A2, [0.0], grid, 4_000, 1e-3, seed=13, **kw)
        assert fit_decay_rate(c1).rate == fit_decay_rate(c2).rate

    def test_bridge_removes_alpha2_bias(self):
        rep = dt_bias_check(
            INTERVAL, A2, [0.0], 2e-3, seed=21, n_paths=50_000, t_max=4.0,
            bridge_correction=True,
        )
        assert isinstance(rep, DtBiasReport)
        assert not rep.exceeds_1se

    def test_alpha1_halving_study_reports_shift(self):
        rep = dt_bias_check(INTERVAL, A1, [0.0], 1e-3, seed=15, n_paths=10_000, t_max=6.0)
        assert rep.rate_coarse < 0 and rep.rate_fine < 0
        assert rep.stderr_combined > 0
        # acceptance threshold: flagged only beyond 2 combined stderr
        assert rep.exceeds_2se == (abs(rep.shift) > 2 * rep.stderr_combined)

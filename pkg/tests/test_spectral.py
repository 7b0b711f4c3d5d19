"""Spectral machinery against exact eigenvalues and closed-form oracles."""

import math

import numpy as np
import pytest

from levylab.domains import Horn, Interval, RationalProfile, CallableProfile
from levylab.errors import HypothesisViolationError, ParameterError
from levylab.spectral import (
    SpectralEstimate,
    ball_rayleigh_upper,
    eigenvalue_ladder,
    frac_laplacian_1d,
    frac_laplacian_constant,
    horn_bottom,
    laplacian_1d,
    poisson_center_value,
    rayleigh_upper,
    smallest_eigenvalue,
    solve_frac_poisson,
    tube_bottom,
)

PI24 = math.pi**2 / 4.0
# first eigenvalue of the alpha = 1 operator on (-1, 1); pinned from the
# resolution-ladder extrapolation, cross-checked by the MC decay rate
LAMBDA1_CAUCHY = 1.1578


def getoor_mean_exit(alpha, R, x):
    """Closed-form mean exit time of the |xi|^alpha process from (-R, R)."""
    return (
        (R**2 - x**2) ** (alpha / 2.0)
        * math.gamma(0.5)
        / (2.0**alpha * math.gamma(1 + alpha / 2.0) * math.gamma((1 + alpha) / 2.0))
    )


class TestKernelConstant:
    def test_alpha_one_is_inverse_pi(self):
        assert frac_laplacian_constant(1, 1.0) == pytest.approx(1.0 / math.pi, rel=1e-12)

    def test_symbol_recovered_on_wide_grid(self):
        # apply the assembled operator to cos(xi x); away from the ends the
        # result is |xi|^alpha cos(xi x) up to the oscillatory exterior tail
        op = frac_laplacian_1d(1.0, 20.0, 2048)
        for xi in (1.0, 2.0):
            u = np.cos(xi * op.grid)
            v = op.entries @ u
            center = np.abs(op.grid) < 1.0
            ratio = v[center] / u[center]
            assert np.max(np.abs(ratio - xi)) < 0.02 * xi

    def test_alpha_two_rejected(self):
        with pytest.raises(ParameterError):
            frac_laplacian_constant(1, 2.0)


class TestOperators:
    def test_fractional_matrix_is_symmetric(self):
        op = frac_laplacian_1d(1.2, 1.0, 128)
        assert np.max(np.abs(op.entries - op.entries.T)) == 0.0

    def test_zero_function_maps_to_zero(self):
        op = frac_laplacian_1d(0.7, 1.0, 64)
        assert np.all(op.entries @ np.zeros(op.n) == 0.0)

    def test_laplacian_first_eigenvalue(self):
        lam, res = smallest_eigenvalue(laplacian_1d(1.0, 1024))
        assert res <= 1e-10
        assert lam == pytest.approx(PI24, rel=5e-3)

    def test_ground_state_is_positive(self):
        op = laplacian_1d(1.0, 256)
        lam, _ = smallest_eigenvalue(op)
        w, v = np.linalg.eigh(op.entries)
        ground = v[:, 0] * np.sign(v[:, 0].sum())
        assert np.all(ground > 0)

    def test_second_order_convergence(self):
        errs = []
        for n in (256, 512):
            lam, _ = smallest_eigenvalue(laplacian_1d(1.0, n))
            errs.append(abs(lam - PI24))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)

    def test_small_n_rejected(self):
        with pytest.raises(ParameterError):
            frac_laplacian_1d(1.0, 1.0, 8)
        with pytest.raises(ParameterError):
            frac_laplacian_1d(2.0, 1.0, 64)


class TestEigenvalueLadder:
    def test_cauchy_interval_extrapolation(self):
        est = eigenvalue_ladder(1.0, 1.0, (256, 512, 1024))
        assert est.method == "eigensolver"
        assert est.value == pytest.approx(LAMBDA1_CAUCHY, abs=2e-3)
        vals = [v for _, v in est.resolution_ladder]
        shifts = np.diff(vals)
        assert np.all(shifts < 0)  # monotone from above
        assert abs(shifts[1]) <= abs(shifts[0])
        assert abs(shifts[1]) <= est.error + 1e-15

    def test_stable_scaling_in_halfwidth(self):
        alpha = 1.0
        big = eigenvalue_ladder(alpha, 1.0, (256,)).value
        small = eigenvalue_ladder(alpha, 0.5, (256,)).value
        assert small / big == pytest.approx(2.0**alpha, rel=2e-3)

    def test_domain_monotonicity(self):
        vals = [eigenvalue_ladder(1.5, hw, (128,)).value for hw in (0.5, 1.0, 2.0)]
        assert vals[0] > vals[1] > vals[2]


class TestRayleigh:
    def test_exact_eigenfunction_alpha2(self):
        est = rayleigh_upper(2.0, Interval(-1, 1), lambda x: np.cos(np.pi * x / 2))
        assert abs(est.value - PI24) < 1e-4

    def test_parabola_upper_bounds_cauchy_eigenvalue(self):
        est = rayleigh_upper(1.0, Interval(-1, 1), lambda x: np.maximum(1 - x**2, 0.0))
        assert est.method == "rayleigh_upper"
        assert LAMBDA1_CAUCHY <= est.value < 2.0

    def test_tent_function_finite_upper_bound(self):
        est = rayleigh_upper(1.0, Interval(-1, 1), lambda x: np.maximum(1 - np.abs(x), 0.0))
        assert LAMBDA1_CAUCHY <= est.value < 3.0

    def test_zero_function_rejected(self):
        with pytest.raises(ParameterError):
            rayleigh_upper(1.0, Interval(-1, 1), lambda x: 0.0 * x)

    def test_ball_quotient_matches_closed_form(self):
        # (1 - r^2) on the unit disk, alpha = 1: the Fourier-side reduction
        # evaluates to 32/(5 pi) via a Weber-Schafheitlin integral
        est = ball_rayleigh_upper(1.0, 1.0)
        assert est.value == pytest.approx(32.0 / (5.0 * math.pi), rel=2e-3)

    def test_ball_quotient_scaling(self):
        one = ball_rayleigh_upper(1.0, 1.0, quadrature_n=400).value
        half = ball_rayleigh_upper(1.0, 0.5, quadrature_n=400).value
        assert half / one == pytest.approx(2.0, rel=1e-12)


class TestPoissonSolve:
    def test_alpha2_center_value(self):
        grid, u = solve_frac_poisson(2.0, 1.0, 1023)
        assert u[511] == pytest.approx(0.5, abs=1e-4)
        assert np.all(u >= 0)

    def test_alpha1_center_extrapolates_to_getoor(self):
        val, err = poisson_center_value(1.0, 1.0, (256, 512, 1024))
        assert val == pytest.approx(getoor_mean_exit(1.0, 1.0, 0.0), abs=2e-3)
        assert err < 2e-3

    def test_profile_shape(self):
        grid, u = solve_frac_poisson(1.0, 1.0, 1023)
        mask = np.abs(grid) <= 0.8
        ratio = u[mask] / np.sqrt(1.0 - grid[mask] ** 2)
        assert (ratio.max() - ratio.min()) / ratio.mean() < 0.02

    def test_matches_getoor_profile_everywhere(self):
        grid, u = solve_frac_poisson(1.0, 1.0, 511)
        exact = np.array([getoor_mean_exit(1.0, 1.0, x) for x in grid])
        assert np.max(np.abs(u - exact)) < 0.02


class TestIdentities:
    def test_tube_bottom_passthrough(self):
        cross = eigenvalue_ladder(1.0, 1.0, (256, 512))
        tube = tube_bottom(cross)
        assert tube.method == "tube_identity"
        assert tube.value == cross.value  # independent of the tube offset a

    def test_horn_bottom_equals_projection_eigenvalue(self):
        horn = Horn(RationalProfile(1.0))
        est = horn_bottom(horn, 1.0, (256, 512, 1024))
        assert est.value == pytest.approx(LAMBDA1_CAUCHY, abs=2e-3)

    def test_horn_bottom_alpha2(self):
        est = horn_bottom(Horn(RationalProfile(1.0)), 2.0, (256, 512, 1024))
        assert est.value == pytest.approx(PI24, rel=1e-4)

    def test_scaled_profile_doubles_eigenvalue(self):
        est_half = horn_bottom(Horn(RationalProfile(0.5)), 1.0, (256, 512, 1024))
        est_one = horn_bottom(Horn(RationalProfile(1.0)), 1.0, (256, 512, 1024))
        assert est_half.value / est_one.value == pytest.approx(2.0, rel=1e-3)

    def test_unbounded_projection_rejected(self):
        horn = Horn(CallableProfile(fn=lambda x: 1.0 + np.asarray(x)))
        with pytest.raises(HypothesisViolationError):
            horn_bottom(horn, 1.0)


class TestConsistency:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    def test_lower_eigen_upper_ordering(self, alpha):
        from levylab.bounds import inradius_lower

        dom = Interval(-1, 1)
        low = inradius_lower(1, alpha, dom.c11_scale, dom.inradius(), units="generator")
        lam = eigenvalue_ladder(alpha, 1.0, (256, 512)).value
        upper = rayleigh_upper(alpha, dom, lambda x: np.maximum(1 - x**2, 0.0)).value
        assert low <= lam <= upper

    def test_estimate_requires_positive_value(self):
        with pytest.raises(ParameterError):
            SpectralEstimate(value=0.0, method="exact")

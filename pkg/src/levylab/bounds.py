"""Closed-form rate constants, envelopes and comparison checks.

The survival-rate sandwich says the log-survival slope of the killed
process lies between -lambda(D) and -lambda(D)/(1 + d/(4 alpha)); the
functions here evaluate that family of constants, the n-step
self-improvement exponents behind it, the inradius lower bound for
lambda, and the heat-kernel envelope shapes.  Prefactors are never
asserted, only fitted; the testable content is rates and exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .spectral import frac_laplacian_constant

__all__ = [
    "HKProfile",
    "EnvelopeParams",
    "hk_profile_rd",
    "unit_ball_volume",
    "iteration_exponent",
    "limit_rate",
    "survival_upper_envelope",
    "prelim_envelope",
    "inradius_lower",
    "mean_exit_envelope",
    "free_kernel_profile",
    "free_kernel_envelope",
    "free_kernel_density_1d",
    "kernel_decay_rate",
    "dirichlet_kernel_envelope",
    "kernel_survival_check",
]


@dataclass(frozen=True)
class HKProfile:
    """Volume-doubling and scale-function exponents of a heat-kernel profile."""

    d1: float
    d2: float
    alpha1: float
    alpha2: float
    C_mu: float
    c_mu: float
    phi_exponent: float

    def __post_init__(self):
        if not (self.alpha2 >= self.alpha1 > 0):
            raise ParameterError("need alpha2 >= alpha1 > 0")
        if not (self.d1 >= self.d2 > 0):
            raise ParameterError("need d1 >= d2 > 0")
        if self.C_mu < 1 or self.c_mu <= 0:
            raise ParameterError("need C_mu >= 1 and c_mu > 0")

    def phi(self, r):
        return np.asarray(r, dtype=float) ** self.phi_exponent


@dataclass(frozen=True)
class EnvelopeParams:
    """Prefactor and shape parameters of a survival envelope."""

    C: float
    eps: float
    lam: float
    d: float
    alpha: float

    def __post_init__(self):
        if self.C <= 0 or self.lam <= 0 or self.d <= 0 or self.alpha <= 0:
            raise ParameterError("envelope parameters must be positive")
        if not (0.0 < self.eps < 1.0):
            raise ParameterError("eps must lie in (0, 1)")


def hk_profile_rd(d: int, alpha: float) -> HKProfile:
    """Euclidean instantiation: V(x,r) = omega_d r^d and phi(r) = r^alpha."""
    if d < 1 or not (0.0 < alpha <= 2.0):
        raise ParameterError("need d >= 1 and alpha in (0, 2]")
    return HKProfile(
        d1=float(d),
        d2=float(d),
        alpha1=alpha,
        alpha2=alpha,
        C_mu=2.0**d,
        c_mu=2.0**-d,
        phi_exponent=alpha,
    )


def unit_ball_volume(d: int) -> float:
    """omega_d, volume of the unit ball in R^d (omega_1 = 2, omega_2 = pi)."""
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def iteration_exponent(n: int, d: float, alpha: float, eps: float) -> float:
    """Coefficient of lambda(D) t after n self-improvement steps.

    Equals (1 - q^(n+1)) / (1 + d/(4 alpha)) * (1 - eps) with
    q = (d/(4 alpha)) / (1 + d/(2 alpha)): the partial sum of the
    geometric refinement series.  n = 0 reduces to the preliminary
    coefficient 1/(1 + d/(2 alpha)) and n -> inf to the limiting
    1/(1 + d/(4 alpha)).
    """
    if n < 0 or int(n) != n:
        raise ParameterError("n must be a nonnegative integer")
    if d <= 0 or alpha <= 0:
        raise ParameterError("d and alpha must be positive")
    if not (0.0 <= eps < 1.0):
        raise ParameterError("eps must lie in [0, 1)")
    q = (d / (4.0 * alpha)) / (1.0 + d / (2.0 * alpha))
    return (1.0 - q ** (n + 1)) / (1.0 + d / (4.0 * alpha)) * (1.0 - eps)


def limit_rate(d: float, alpha: float, lam: float) -> float:
    """Limiting sandwich constant lambda / (1 + d/(4 alpha))."""
    if d < 0 or alpha <= 0 or lam <= 0:
        raise ParameterError("need d >= 0, alpha > 0, lambda > 0")
    return lam / (1.0 + d / (4.0 * alpha))


def survival_upper_envelope(p: EnvelopeParams, t) -> np.ndarray:
    """C exp(-(1-eps)/(1 + d/(4 alpha)) lambda t), the refined upper envelope."""
    t = np.asarray(t, dtype=float)
    rate = (1.0 - p.eps) * limit_rate(p.d, p.alpha, p.lam)
    return p.C * np.exp(-rate * t)


def prelim_envelope(C: float, eps: float, d: float, alpha: float, lam: float, t) -> np.ndarray:
    """C (1 + 1/eps) exp(-(1-eps)/(1 + d/(2 alpha)) lambda t), the one-step bound.

    Weaker than the refined envelope for large t: its exponent coefficient
    is 1/(1 + d/(2 alpha)) < 1/(1 + d/(4 alpha)).
    """
    if not (0.0 < eps < 1.0):
        raise ParameterError("eps must lie in (0, 1)")
    t = np.asarray(t, dtype=float)
    rate = (1.0 - eps) / (1.0 + d / (2.0 * alpha)) * lam
    return C * (1.0 + 1.0 / eps) * np.exp(-rate * t)


def inradius_lower(d: int, alpha: float, r: float, R: float, units: str = "seminorm") -> float:
    """Lower bound omega_d r^d / (R + 2r)^(d + alpha) for the bottom of the spectrum.

    r is the C^{1,1} tangent-ball scale and R the inradius.  'seminorm'
    returns the bare Gagliardo-quotient bound; 'generator' multiplies by
    C(d, alpha)/2 so the value compares against eigensolver or Monte Carlo
    decay estimates (alpha < 2 only: the conversion constant degenerates
    at the local endpoint).
    """
    if r <= 0:
        raise ParameterError("C^{1,1} scale r must be positive")
    if R < r:
        raise ParameterError("inradius R cannot be below the interior-ball scale r")
    if units not in ("seminorm", "generator"):
        raise ParameterError("units must be 'seminorm' or 'generator'")
    val = unit_ball_volume(d) * r**d / (R + 2.0 * r) ** (d + alpha)
    if units == "generator":
        val *= 0.5 * frac_laplacian_constant(d, alpha)
    return val


def mean_exit_envelope(delta: float, alpha: float, C_lo: float, C_hi: float) -> tuple[float, float]:
    """(C_lo delta^(alpha/2), C_hi delta^(alpha/2)); the exponent is the content."""
    if delta < 0:
        raise ParameterError("delta must be nonnegative")
    s = delta ** (alpha / 2.0)
    return C_lo * s, C_hi * s


def free_kernel_profile(d: int, alpha: float, t: float, dist: float) -> float:
    """Free heat-kernel shape m = min(t^(-d/alpha), t / dist^(d+alpha))."""
    if t <= 0:
        raise ParameterError("t must be positive")
    if dist < 0:
        raise ParameterError("dist must be nonnegative")
    near = t ** (-d / alpha)
    if dist == 0.0:
        return near
    return min(near, t / dist ** (d + alpha))


def free_kernel_envelope(
    d: int, alpha: float, t: float, dist: float, c_lo: float = 1.0, c_hi: float = 1.0
) -> tuple[float, float]:
    """Two-sided envelope (c_lo m, c_hi m); a density passes iff it fits between."""
    m = free_kernel_profile(d, alpha, t, dist)
    return c_lo * m, c_hi * m


def free_kernel_density_1d(alpha: float, t: float, x) -> np.ndarray:
    """Exact free transition density on R for the two closed-form cases.

    alpha = 1 is the Cauchy law t / (pi (t^2 + x^2)); alpha = 2 the
    twice-speed Gaussian with variance 2t.  Used where the kernel checks
    want the true p(t, 0, y) rather than its envelope shape.
    """
    x = np.asarray(x, dtype=float)
    if t <= 0:
        raise ParameterError("t must be positive")
    if alpha == 1.0:
        return t / (math.pi * (t**2 + x**2))
    if alpha == 2.0:
        return np.exp(-(x**2) / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)
    raise ParameterError("closed-form density only for alpha in {1, 2}")


def kernel_decay_rate(d: float, alpha: float, lam: float, eps: float) -> float:
    """Default exponential rate (1/2)(1-eps)/(1 + d/(4 alpha)) lambda of the kernel bound."""
    if not (0.0 <= eps < 1.0):
        raise ParameterError("eps must lie in [0, 1)")
    return 0.5 * (1.0 - eps) * limit_rate(d, alpha, lam)


def dirichlet_kernel_envelope(
    t: float,
    delta_x: float,
    delta_y: float,
    dist: float,
    rate: float,
    C: float,
    d: int,
    alpha: float,
) -> float:
    """C e^{-rate t} (1 ^ delta_x^(a/2)/sqrt t)(1 ^ delta_y^(a/2)/sqrt t) m(t, dist).

    The boundary factors absorb at the boundary (delta = 0 gives 0) and
    scale like 1/sqrt(t) once unsaturated.
    """
    if t <= 0:
        raise ParameterError("t must be positive")
    bx = min(1.0, delta_x ** (alpha / 2.0) / math.sqrt(t))
    by = min(1.0, delta_y ** (alpha / 2.0) / math.sqrt(t))
    return C * math.exp(-rate * t) * bx * by * free_kernel_profile(d, alpha, t, dist)


def kernel_survival_check(
    p_D_estimate: float, survival_half_t: float, free_kernel_value: float
) -> float:
    """Ratio p_D / (sup-survival(t/2) * free kernel) from the factorization bound.

    The bound holds with a single constant independent of x, y, t and D;
    callers assert the fitted constant is stable across (t, y) cells.
    """
    if survival_half_t <= 0 or free_kernel_value <= 0:
        raise ParameterError("survival and free-kernel values must be positive")
    if p_D_estimate < 0:
        raise ParameterError("density estimate cannot be negative")
    return p_D_estimate / (survival_half_t * free_kernel_value)

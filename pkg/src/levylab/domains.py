"""Geometric descriptions of the domains the process exits from.

Every domain answers three questions: membership (open-set convention,
boundary points are outside), distance to the complement delta_D, and the
inradius R_D = sup_x delta_D(x).  Distances are exact for intervals, balls,
half-spaces, tubes and the swiss-cheese lattice; horn-shaped, wavy-strip
and predicate domains fall back to bounded numeric searches with a
declared tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DimensionMismatchError, HypothesisViolationError, ParameterError

__all__ = [
    "Domain",
    "Interval",
    "Ball",
    "HalfSpace",
    "Tube",
    "Horn",
    "SwissCheese",
    "WavyStripWithHoles",
    "Predicate",
    "Profile",
    "RationalProfile",
    "ConstantProfile",
    "CallableProfile",
    "contains",
    "dist_to_complement",
    "inradius",
    "cross_section",
    "projection",
]

NUMERIC_TOL = 1e-6  # declared accuracy of numeric distance searches


class Domain:
    """Base class; subclasses set ``dim`` and the geometric primitives."""

    dim: int
    c11_scale: float | None = None  # C^{1,1} ball scale where analytic, else user-set

    def contains(self, x) -> bool:
        return bool(self.contains_many(self._check_point(x)[None, :])[0])

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dist_to_complement(self, x) -> float:
        return float(self.dist_many(self._check_point(x)[None, :])[0])

    def dist_many(self, pts: np.ndarray) -> np.ndarray:
        # generic fallback: one numeric search per point
        return np.array([self._dist_one(p) for p in pts])

    def _dist_one(self, p: np.ndarray) -> float:
        raise NotImplementedError

    def inradius(self) -> float:
        raise NotImplementedError

    def _check_point(self, x) -> np.ndarray:
        p = np.atleast_1d(np.asarray(x, dtype=float))
        if p.shape != (self.dim,):
            raise DimensionMismatchError(
                f"point has dimension {p.size}, domain has dim {self.dim}"
            )
        return p


@dataclass(frozen=True)
class Interval(Domain):
    a: float
    b: float
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        if not self.a < self.b:
            raise ParameterError(f"need a < b, got ({self.a}, {self.b})")
        object.__setattr__(self, "c11_scale", 0.5 * (self.b - self.a))

    def contains_many(self, pts):
        x = pts[:, 0]
        return (x > self.a) & (x < self.b)

    def dist_many(self, pts):
        x = pts[:, 0]
        return np.maximum(np.minimum(x - self.a, self.b - x), 0.0)

    def inradius(self):
        return 0.5 * (self.b - self.a)


@dataclass(frozen=True)
class Ball(Domain):
    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ParameterError("radius must be positive")
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        object.__setattr__(self, "dim", c.size)
        object.__setattr__(self, "c11_scale", self.radius)

    def contains_many(self, pts):
        c = np.asarray(self.center)
        return np.sum((pts - c) ** 2, axis=1) < self.radius**2

    def dist_many(self, pts):
        c = np.asarray(self.center)
        r = np.sqrt(np.sum((pts - c) ** 2, axis=1))
        return np.maximum(self.radius - r, 0.0)

    def inradius(self):
        return self.radius


@dataclass(frozen=True)
class HalfSpace(Domain):
    """{x : normal . x < offset}; the normal is normalized on construction."""

    normal: tuple
    offset: float

    def __post_init__(self):
        n = np.atleast_1d(np.asarray(self.normal, dtype=float))
        norm = np.linalg.norm(n)
        if norm == 0:
            raise ParameterError("normal must be nonzero")
        n = n / norm
        object.__setattr__(self, "normal", tuple(float(v) for v in n))
        object.__setattr__(self, "offset", float(self.offset) / norm)
        object.__setattr__(self, "dim", n.size)
        object.__setattr__(self, "c11_scale", math.inf)

    def contains_many(self, pts):
        n = np.asarray(self.normal)
        return pts @ n < self.offset

    def dist_many(self, pts):
        n = np.asarray(self.normal)
        return np.maximum(self.offset - pts @ n, 0.0)

    def inradius(self):
        return math.inf


@dataclass(frozen=True)
class Tube(Domain):
    """Semi-tube Q_a(omega) = (a, inf) x omega; a = -inf gives the full tube."""

    a: float
    cross_section: Domain

    def __post_init__(self):
        object.__setattr__(self, "dim", 1 + self.cross_section.dim)
        object.__setattr__(self, "c11_scale", None if math.isfinite(self.a) else self.cross_section.c11_scale)

    def contains_many(self, pts):
        ok = self.cross_section.contains_many(pts[:, 1:])
        if math.isfinite(self.a):
            ok = ok & (pts[:, 0] > self.a)
        return ok

    def dist_many(self, pts):
        d = self.cross_section.dist_many(pts[:, 1:])
        if math.isfinite(self.a):
            d = np.minimum(d, np.maximum(pts[:, 0] - self.a, 0.0))
        return d

    def inradius(self):
        return self.cross_section.inradius()


class Profile:
    """Nondecreasing positive width profile f of a horn."""

    kind: str

    def __call__(self, x):
        raise NotImplementedError

    def sup(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class RationalProfile(Profile):
    """f(x) = scale * x / (x + 1); sup f = scale."""

    scale: float = 1.0
    kind: str = field(default="rational", init=False)

    def __post_init__(self):
        if self.scale <= 0:
            raise ParameterError("scale must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * x / (x + 1.0)

    def sup(self):
        return self.scale


@dataclass(frozen=True)
class ConstantProfile(Profile):
    """f = c: the horn degenerates to the semi-tube (0, inf) x (-c, c)."""

    c: float = 1.0
    kind: str = field(default="constant", init=False)

    def __post_init__(self):
        if self.c <= 0:
            raise ParameterError("c must be positive")

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.c)

    def sup(self):
        return self.c


@dataclass(frozen=True)
class CallableProfile(Profile):
    """Wrap an arbitrary nondecreasing positive function.

    ``sup_f`` is required when the caller knows it; otherwise it is probed
    on a doubling grid (raises if the profile keeps growing unbounded).
    Monotonicity is spot-checked on a coarse grid at construction.
    """

    fn: object
    sup_f: float | None = None
    kind: str = field(default="callable", init=False)

    def __post_init__(self):
        xs = np.geomspace(1e-6, 1e6, 200)
        vals = np.asarray(self.fn(xs), dtype=float)
        if np.any(vals <= 0):
            raise ParameterError("profile must be positive on (0, inf)")
        if np.any(np.diff(vals) < -1e-12 * np.maximum(vals[:-1], 1.0)):
            raise ParameterError("profile must be nondecreasing")

    def __call__(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def sup(self):
        if self.sup_f is not None:
            return self.sup_f
        x, prev = 1.0, -1.0
        for _ in range(80):
            v = float(self.fn(np.asarray(x)))
            if v > 1e12:
                raise HypothesisViolationError("profile appears unbounded")
            if v - prev < NUMERIC_TOL * max(1.0, v):
                return v
            prev, x = v, 2.0 * x
        return prev


@dataclass(frozen=True)
class Horn(Domain):
    """Increasing horn H = {(x1, x'): x1 > 0, |x'| < f(x1)}."""

    profile: Profile
    dim: int = 2

    def __post_init__(self):
        if self.dim < 2:
            raise ParameterError("horn needs dim >= 2")

    def contains_many(self, pts):
        x1 = pts[:, 0]
        r = np.linalg.norm(pts[:, 1:], axis=1)
        with np.errstate(invalid="ignore"):
            width = np.where(x1 > 0, self.profile(np.maximum(x1, 0.0)), 0.0)
        return (x1 > 0) & (r < width)

    def _dist_one(self, p):
        x1 = p[0]
        r = float(np.linalg.norm(p[1:]))
        if x1 <= 0 or r >= float(self.profile(x1)):
            return 0.0
        # distance to the profile curve {(t, f(t))}, treated as epigraph boundary
        def gap(t):
            ft = float(self.profile(t))
            dy = max(ft, r) - r
            return math.hypot(x1 - t, dy)

        best = min(x1, float(self.profile(x1)) - r)  # wall at x1=0; vertical gap
        lo, hi = max(1e-12, x1 - best), x1 + best
        ts = np.linspace(lo, hi, 257)
        vals = [gap(t) for t in ts]
        k = int(np.argmin(vals))
        a = ts[max(k - 1, 0)]
        b = ts[min(k + 1, len(ts) - 1)]
        res = minimize_scalar(gap, bounds=(a, b), method="bounded",
                              options={"xatol": NUMERIC_TOL * 0.1})
        return min(best, float(res.fun))

    def inradius(self):
        # sup_x delta on an expanding grid; increasing cross sections push the
        # supremum to x1 -> inf where it approaches sup f monotonically.
        x, prev = 1.0, 0.0
        for _ in range(80):
            d = self._dist_one(np.array([x] + [0.0] * (self.dim - 1)))
            if d - prev < NUMERIC_TOL:
                return d
            prev, x = d, 2.0 * x
        return prev


@dataclass(frozen=True)
class SwissCheese(Domain):
    """R^d minus balls of radius eps centered on the half-integer lattice.

    Unit cell [0,1]^d with the hole at its center, tiled over Z^d; membership
    and delta are exact via nearest-center rounding.
    """

    hole_radius: float
    dim: int = 2

    def __post_init__(self):
        if not (0.0 < self.hole_radius < 0.5):
            raise ParameterError("hole_radius must lie in (0, 1/2)")
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")
        object.__setattr__(self, "c11_scale", self.hole_radius)

    def _nearest_center_dist(self, pts):
        frac = pts - (np.floor(pts) + 0.5)
        return np.sqrt(np.sum(frac**2, axis=1))

    def contains_many(self, pts):
        return self._nearest_center_dist(pts) > self.hole_radius

    def dist_many(self, pts):
        return np.maximum(self._nearest_center_dist(pts) - self.hole_radius, 0.0)

    def inradius(self):
        # attained at lattice corners, equidistant from 2^d hole centers
        return math.sqrt(self.dim) / 2.0 - self.hole_radius


@dataclass(frozen=True)
class WavyStripWithHoles(Domain):
    """{|y| < base + amplitude cos(frequency x)} minus holes on the x-axis.

    Holes of radius ``hole_radius`` sit at (k * hole_spacing, 0), k in Z.
    The paper's instance is base=2, amplitude=1, frequency=3, radius=1/2,
    spacing=2; all five are free parameters here.
    """

    base: float = 2.0
    amplitude: float = 1.0
    frequency: float = 3.0
    hole_radius: float = 0.5
    hole_spacing: float = 2.0
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        if self.base - abs(self.amplitude) <= self.hole_radius:
            raise ParameterError("holes must fit strictly inside the strip")
        if self.hole_radius <= 0 or 2 * self.hole_radius >= self.hole_spacing:
            raise ParameterError("holes must be disjoint: 2*radius < spacing")

    def _half_width(self, x):
        return self.base + self.amplitude * np.cos(self.frequency * np.asarray(x, dtype=float))

    def _hole_dist(self, pts):
        k = np.round(pts[:, 0] / self.hole_spacing)
        dx = pts[:, 0] - k * self.hole_spacing
        return np.sqrt(dx**2 + pts[:, 1] ** 2)

    def contains_many(self, pts):
        inside_strip = np.abs(pts[:, 1]) < self._half_width(pts[:, 0])
        return inside_strip & (self._hole_dist(pts) > self.hole_radius)

    def _dist_one(self, p):
        if not self.contains(p):
            return 0.0
        x, y = p[0], abs(p[1])

        def gap(t):
            return math.hypot(x - t, float(self._half_width(t)) - y)

        bound = float(self._half_width(x)) - y
        ts = np.linspace(x - bound, x + bound, 257)
        vals = [gap(t) for t in ts]
        k = int(np.argmin(vals))
        res = minimize_scalar(gap, bounds=(ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)]),
                              method="bounded", options={"xatol": NUMERIC_TOL * 0.1})
        d_curve = min(bound, float(res.fun))
        d_hole = float(self._hole_dist(p[None, :])[0]) - self.hole_radius
        return max(0.0, min(d_curve, d_hole))

    def inradius(self):
        # periodic in x with period 2*pi/frequency and lcm structure with the
        # hole spacing; a grid over a few spacings with refinement suffices.
        xs = np.linspace(0.0, 2.0 * self.hole_spacing, 161)
        ys = np.linspace(0.0, self.base + abs(self.amplitude), 161)
        best, arg = 0.0, (0.0, 0.0)
        for x in xs:
            for y in ys:
                p = np.array([x, y])
                if self.contains(p):
                    d = self._dist_one(p)
                    if d > best:
                        best, arg = d, (x, y)
        # local refinement around the grid maximizer
        for scale in (0.1, 0.01):
            x0, y0 = arg
            for x in np.linspace(x0 - scale, x0 + scale, 21):
                for y in np.linspace(y0 - scale, y0 + scale, 21):
                    p = np.array([x, y])
                    if self.contains(p):
                        d = self._dist_one(p)
                        if d > best:
                            best, arg = d, (x, y)
        return best


@dataclass(frozen=True)
class Predicate(Domain):
    """Generic membership callback with a bounding box and numeric delta.

    delta is probed along a fan of ``n_directions`` rays: each ray is walked
    to a guaranteed-exterior point (outside the bounding box) and the
    boundary crossing is bisected to ``tol``.  The fan makes delta an upper
    bound accurate to O(delta * (1 - cos(pi / n_directions))) + tol.
    """

    fn: object
    lo: tuple
    hi: tuple
    dim: int = 2
    tol: float = NUMERIC_TOL
    n_directions: int = 64

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != (self.dim,) or hi.shape != (self.dim,):
            raise DimensionMismatchError("bounding box must match dim")
        if np.any(hi <= lo):
            raise ParameterError("bounding box must have positive extent")

    def contains_many(self, pts):
        return np.asarray([bool(self.fn(p)) for p in pts])

    def _directions(self):
        if self.dim == 1:
            return np.array([[1.0], [-1.0]])
        if self.dim == 2:
            th = np.linspace(0.0, 2.0 * np.pi, self.n_directions, endpoint=False)
            return np.stack([np.cos(th), np.sin(th)], axis=1)
        gen = np.random.default_rng(0)  # fixed fan, part of the declared contract
        v = gen.standard_normal((self.n_directions, self.dim))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def _dist_one(self, p):
        if not bool(self.fn(p)):
            return 0.0
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        reach = float(np.linalg.norm(hi - lo)) + 1.0
        best = math.inf
        for u in self._directions():
            a, b = 0.0, reach  # fn(p + a u) inside, p + b u outside the box
            while b - a > self.tol:
                m = 0.5 * (a + b)
                if bool(self.fn(p + m * u)):
                    a = m
                else:
                    b = m
            best = min(best, b)
        return best

    def inradius(self):
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        n = max(4, int(round(40 ** (2.0 / self.dim))))
        axes = [np.linspace(lo[i], hi[i], n) for i in range(self.dim)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        dists = [self._dist_one(p) for p in grid if bool(self.fn(p))]
        if not dists:
            return 0.0
        best = max(dists)
        return best


def contains(dom: Domain, x) -> bool:
    """True iff x lies in the open set D (boundary points are outside)."""
    return dom.contains(x)


def dist_to_complement(dom: Domain, x) -> float:
    """delta_D(x) = d(x, D^c); zero for points outside D."""
    return dom.dist_to_complement(x)


def inradius(dom: Domain) -> float:
    """R_D = sup_x delta_D(x); may be +inf (half-spaces)."""
    return dom.inradius()


def cross_section(horn: Domain, x1: float) -> Domain:
    """Cross section H(x1) as a (d-1)-dimensional domain.

    An interval (-f(x1), f(x1)) when d = 2, a centered ball in higher
    dimension.  The radius tends to the degenerate 0 as x1 -> 0+ for
    profiles vanishing at the tip.
    """
    if not isinstance(horn, Horn):
        raise TypeError("cross_section requires a Horn domain")
    if x1 <= 0:
        raise ParameterError("x1 must be positive")
    radius = float(horn.profile(x1))
    if horn.dim == 2:
        return Interval(-radius, radius)
    return Ball(center=(0.0,) * (horn.dim - 1), radius=radius)


def projection(horn: Domain) -> Domain:
    """Projection h = union of all cross sections; requires sup f < inf."""
    if not isinstance(horn, Horn):
        raise TypeError("projection requires a Horn domain")
    try:
        sup_f = horn.profile.sup()
    except HypothesisViolationError as exc:
        raise HypothesisViolationError(
            "unbounded projection: horn-limit hypothesis violated "
            "(bounded projection required)"
        ) from exc
    if not math.isfinite(sup_f):
        raise HypothesisViolationError(
            "unbounded projection: horn-limit hypothesis violated "
            "(bounded projection required)"
        )
    if horn.dim == 2:
        return Interval(-sup_f, sup_f)
    return Ball(center=(0.0,) * (horn.dim - 1), radius=sup_f)

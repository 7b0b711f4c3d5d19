"""Monte Carlo estimation of exit times and survival curves.

Paths live on the uniform grid {0, dt, 2dt, ...} with exact stable
marginals; an exit is recorded at the first grid time whose position lies
outside the domain.  For alpha = 2 an optional Brownian-bridge correction
flags crossings between grid points (per-unit-time variance 2, applied
against the nearest-boundary half-space); for alpha < 2 jump exits
dominate and the residual grid bias is monitored by the dt-halving check.

Path i of an ensemble always consumes stream (seed, i), and draws within a
path follow a fixed segment schedule, so results are reproducible and
independent of execution order or parallelism.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .domains import Domain
from .errors import (
    GridAlignmentError,
    InsufficientDataError,
    ParameterError,
)
from .sampler import RngStream, StableParams, sample_subordinator_increment

__all__ = [
    "SEGMENT",
    "ExitRecord",
    "SurvivalCurve",
    "DecayFit",
    "MeanExitEstimate",
    "WindowPolicy",
    "EnsembleResult",
    "DtBiasReport",
    "simulate_exit",
    "run_exit_ensemble",
    "survival_curve",
    "curve_from_ensemble",
    "mean_exit_time",
    "fit_decay_rate",
    "dt_bias_check",
    "wilson_interval",
]

SEGMENT = 1024  # steps drawn per block; fixed, part of the draw schedule
_Z95 = 1.959963984540054


@dataclass(frozen=True)
class ExitRecord:
    """Outcome of one simulated path."""

    exited: bool
    exit_time: float  # censor mark t_max when not exited
    exit_location: np.ndarray | None  # absent for censored and bridge-flagged exits
    first_exterior_grid_index: int | None


@dataclass(frozen=True)
class SurvivalCurve:
    """Empirical survivor counts on a time grid with Wilson 95% bands."""

    times: np.ndarray
    survivors: np.ndarray
    n_paths: int
    p_hat: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    dt: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "times": [float(v) for v in self.times],
            "survivors": [int(v) for v in self.survivors],
            "n_paths": int(self.n_paths),
            "p_hat": [float(v) for v in self.p_hat],
            "ci_low": [float(v) for v in self.ci_low],
            "ci_high": [float(v) for v in self.ci_high],
            "dt": float(self.dt),
            "seed": int(self.seed),
        }

    @staticmethod
    def from_dict(d: dict) -> "SurvivalCurve":
        return SurvivalCurve(
            times=np.asarray(d["times"], dtype=float),
            survivors=np.asarray(d["survivors"], dtype=int),
            n_paths=int(d["n_paths"]),
            p_hat=np.asarray(d["p_hat"], dtype=float),
            ci_low=np.asarray(d["ci_low"], dtype=float),
            ci_high=np.asarray(d["ci_high"], dtype=float),
            dt=float(d["dt"]),
            seed=int(d["seed"]),
        )


@dataclass(frozen=True)
class DecayFit:
    """Weighted least-squares slope of log p-hat against t."""

    rate: float
    stderr: float
    window: tuple[float, float]
    r_squared: float
    n_points: int
    intercept: float = 0.0

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "stderr": self.stderr,
            "window": [self.window[0], self.window[1]],
            "r_squared": self.r_squared,
            "n_points": self.n_points,
            "intercept": self.intercept,
        }


@dataclass(frozen=True)
class MeanExitEstimate:
    """Sample mean exit time with censoring diagnostics."""

    mean: float
    stderr: float
    truncated_fraction: float
    tail_correction: float
    is_lower_bound: bool = False


@dataclass(frozen=True)
class WindowPolicy:
    """Count-based fit window: grid points with survivors in [lo, hi]."""

    min_survivors: int = 100
    max_fraction: float = 0.2


@dataclass(frozen=True)
class EnsembleResult:
    """Raw exit indices (grid units, -1 = censored) plus optional snapshots."""

    exit_idx: np.ndarray
    n_steps: int
    dt: float
    seed: int
    snapshots: dict = field(default_factory=dict)  # grid index -> positions of survivors

    @property
    def exit_times(self) -> np.ndarray:
        t = self.exit_idx.astype(float) * self.dt
        t[self.exit_idx < 0] = self.n_steps * self.dt
        return t

    @property
    def censored(self) -> np.ndarray:
        return self.exit_idx < 0


@dataclass(frozen=True)
class DtBiasReport:
    """Rate shift between a dt run and its dt/2 twin on matched budgets."""

    dt: float
    rate_coarse: float
    rate_fine: float
    shift: float
    stderr_combined: float
    exceeds_1se: bool
    exceeds_2se: bool


def wilson_interval(successes, n: int, z: float = _Z95):
    """Wilson score interval; robust at small counts, always contains p-hat."""
    s = np.asarray(successes, dtype=float)
    p = s / n
    denom = 1.0 + z**2 / n
    center = (p + z**2 / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / denom
    # clamp out rounding residue so the interval always contains p-hat
    lo = np.minimum(np.maximum(center - half, 0.0), p)
    hi = np.maximum(np.minimum(center + half, 1.0), p)
    return lo, hi


def _walk_one(
    dom: Domain,
    params: StableParams,
    x0: np.ndarray,
    dt: float,
    n_steps: int,
    gen: np.random.Generator,
    bridge: bool,
    snap_idx: np.ndarray,
    snap_out: list | None,
):
    """Walk one path; returns (exit_idx or -1, jump_location or None).

    Draw order per segment is fixed: subordinator uniforms+exponentials
    (alpha < 2), normals, then bridge uniforms (when enabled).  Snapshot
    positions are appended for every requested grid index the path
    survives past.
    """
    pos = x0
    t_idx = 0
    snap_ptr = 0
    while t_idx < n_steps:
        m = min(SEGMENT, n_steps - t_idx)
        if params.alpha == 2.0:
            ds = np.full(m, dt)
        else:
            ds = sample_subordinator_increment(params.beta, dt, gen, size=m)
        g = gen.standard_normal((m, params.dim))
        xs = np.sqrt(2.0 * ds)[:, None] * g
        np.cumsum(xs, axis=0, out=xs)
        xs += pos
        inside = dom.contains_many(xs)
        exit_k = -1
        exit_loc = None
        if not inside.all():
            exit_k = int(np.argmin(inside))
            exit_loc = xs[exit_k]
        if bridge:
            ub = gen.random(m)  # drawn every segment to keep the schedule fixed
            deltas = np.empty(m + 1)
            deltas[0] = dom.dist_many(pos[None, :])[0]
            deltas[1:] = dom.dist_many(xs)
            crossed = ub < np.exp(-deltas[:-1] * deltas[1:] / dt)
            if crossed.any():
                k_b = int(np.argmax(crossed))
                if exit_k < 0 or k_b < exit_k:
                    exit_k, exit_loc = k_b, None  # between-grid crossing, no location
        limit = exit_k if exit_k >= 0 else m  # survives local indices < limit
        if snap_out is not None:
            while snap_ptr < len(snap_idx) and snap_idx[snap_ptr] <= t_idx + m:
                local = snap_idx[snap_ptr] - t_idx - 1
                if local < limit:
                    snap_out[snap_ptr].append(xs[local].copy())
                    snap_ptr += 1
                else:
                    snap_ptr = len(snap_idx)  # exited before this snapshot
        if exit_k >= 0:
            return t_idx + exit_k + 1, exit_loc
        pos = xs[-1]
        t_idx += m
    return -1, None


def simulate_exit(
    dom: Domain,
    params: StableParams,
    x0,
    dt: float,
    t_max: float,
    rng: RngStream,
    bridge_correction: bool = False,
) -> ExitRecord:
    """Simulate one path until it leaves the domain or t_max censors it."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not dom.contains(x0):
        raise ParameterError(f"starting point {x0.tolist()} is not inside the domain")
    if bridge_correction and params.alpha < 2.0:
        raise ParameterError(
            "bridge_correction requires alpha = 2: no valid bridge law for the "
            "subordinated process is implemented"
        )
    if dt <= 0 or t_max <= 0 or dt > t_max:
        raise ParameterError("need 0 < dt <= t_max")
    n_steps = int(round(t_max / dt))
    gen = rng.generator()
    exit_idx, loc = _walk_one(
        dom, params, x0, dt, n_steps, gen, bridge_correction, np.empty(0, dtype=int), None
    )
    if exit_idx < 0:
        return ExitRecord(False, n_steps * dt, None, None)
    return ExitRecord(True, exit_idx * dt, loc, exit_idx)


def run_exit_ensemble(
    dom: Domain,
    params: StableParams,
    x0,
    dt: float,
    t_max: float,
    n_paths: int,
    seed: int,
    bridge_correction: bool = False,
    snapshot_times=(),
    n_workers: int = 1,
    stream_ids=None,
) -> EnsembleResult:
    """Run n_paths independent paths on streams (seed, stream_ids[i]).

    Results are aggregated in stream order, so survivor counts are
    invariant under permutations of stream_ids and under any degree of
    parallelism.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not dom.contains(x0):
        raise ParameterError(f"starting point {x0.tolist()} is not inside the domain")
    if bridge_correction and params.alpha < 2.0:
        raise ParameterError(
            "bridge_correction requires alpha = 2: no valid bridge law for the "
            "subordinated process is implemented"
        )
    n_steps = int(round(t_max / dt))
    if n_steps < 1:
        raise ParameterError("t_max must cover at least one step")
    snap_idx = np.asarray(sorted(int(round(t / dt)) for t in snapshot_times), dtype=int)
    for t in snapshot_times:
        if abs(round(t / dt) * dt - t) > 1e-9 * max(1.0, abs(t)):
            raise GridAlignmentError(f"snapshot time {t} is not a multiple of dt={dt}")
    if stream_ids is None:
        stream_ids = np.arange(n_paths, dtype=np.int64)
    else:
        stream_ids = np.asarray(stream_ids, dtype=np.int64)
        if len(stream_ids) != n_paths:
            raise ParameterError("stream_ids must have length n_paths")

    exit_idx = np.empty(n_paths, dtype=np.int64)
    per_path_snaps: list = [None] * n_paths if len(snap_idx) else []

    def _run_block(lo: int, hi: int):
        for i in range(lo, hi):
            gen = RngStream(seed, int(stream_ids[i])).generator()
            snaps = [[] for _ in snap_idx] if len(snap_idx) else None
            exit_idx[i], _ = _walk_one(
                dom, params, x0, dt, n_steps, gen, bridge_correction, snap_idx, snaps
            )
            if snaps is not None:
                per_path_snaps[i] = snaps

    if n_workers <= 1:
        _run_block(0, n_paths)
    else:
        chunk = max(1, -(-n_paths // n_workers))
        bounds_list = [(lo, min(lo + chunk, n_paths)) for lo in range(0, n_paths, chunk)]
        with ThreadPoolExecutor(max_workers=n_workers) as ex:
            list(ex.map(lambda b: _run_block(*b), bounds_list))

    snapshots = {}
    if len(snap_idx):
        for j, s in enumerate(snap_idx):
            rows = [
                ps[j][0]
                for ps in per_path_snaps
                if ps is not None and len(ps[j])
            ]
            snapshots[int(s)] = (
                np.asarray(rows) if rows else np.empty((0, params.dim))
            )
    return EnsembleResult(
        exit_idx=exit_idx, n_steps=n_steps, dt=dt, seed=seed, snapshots=snapshots
    )


def _grid_indices(t_grid, dt: float) -> np.ndarray:
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 2 or np.any(np.diff(t_grid) <= 0):
        raise ParameterError("t_grid must be increasing with at least two points")
    if t_grid[0] != 0.0:
        raise ParameterError("t_grid must start at 0 (p_hat(0) = 1 anchor)")
    idx = np.round(t_grid / dt).astype(int)
    if np.any(np.abs(idx * dt - t_grid) > 1e-9 * np.maximum(1.0, np.abs(t_grid))):
        raise GridAlignmentError("t_grid entries must be integer multiples of dt")
    return idx


def curve_from_ensemble(ens: EnsembleResult, t_grid, n_paths: int) -> SurvivalCurve:
    idx = _grid_indices(t_grid, ens.dt)
    if idx[-1] > ens.n_steps:
        raise GridAlignmentError("t_grid extends beyond the simulated horizon")
    ei = ens.exit_idx
    alive = np.where(ei < 0, np.iinfo(np.int64).max, ei)
    survivors = np.array([int(np.sum(alive > s)) for s in idx])
    p_hat = survivors / n_paths
    lo, hi = wilson_interval(survivors, n_paths)
    return SurvivalCurve(
        times=idx * ens.dt,
        survivors=survivors,
        n_paths=n_paths,
        p_hat=p_hat,
        ci_low=lo,
        ci_high=hi,
        dt=ens.dt,
        seed=ens.seed,
    )


def survival_curve(
    dom: Domain,
    params: StableParams,
    x0,
    t_grid,
    n_paths: int,
    dt: float,
    seed: int,
    bridge_correction: bool = False,
    n_workers: int = 1,
) -> SurvivalCurve:
    """Estimate P_x(tau_D > t) on t_grid from n_paths independent paths."""
    if n_paths < 100:
        raise ParameterError("n_paths must be at least 100")
    idx = _grid_indices(t_grid, dt)
    ens = run_exit_ensemble(
        dom,
        params,
        x0,
        dt,
        idx[-1] * dt,
        n_paths,
        seed,
        bridge_correction=bridge_correction,
        n_workers=n_workers,
    )
    return curve_from_ensemble(ens, np.asarray(t_grid, dtype=float), n_paths)


def mean_exit_time(
    dom: Domain,
    params: StableParams,
    x0,
    n_paths: int,
    dt: float,
    t_max: float,
    seed: int,
    decay_fit: DecayFit | None = None,
    bridge_correction: bool = False,
    n_workers: int = 1,
) -> MeanExitEstimate:
    """Sample mean of exit times, censored at t_max.

    The censored sample mean estimates the integral of the survival curve
    up to t_max; a supplied decay fit adds the exponential tail
    p_hat(t_max)/|rate| beyond the horizon, otherwise a censored estimate
    is flagged as a lower bound.
    """
    if n_paths < 100:
        raise ParameterError("n_paths must be at least 100")
    ens = run_exit_ensemble(
        dom, params, x0, dt, t_max, n_paths, seed,
        bridge_correction=bridge_correction, n_workers=n_workers,
    )
    censored = ens.censored
    if censored.all():
        raise ParameterError("t_max too small: every path was censored")
    times = ens.exit_times
    frac = float(censored.mean())
    tail = 0.0
    lower = False
    if frac > 0.0:
        if decay_fit is not None and decay_fit.rate < 0:
            tail = frac * 1.0 / abs(decay_fit.rate)
            # censored paths each contribute mean residual life 1/|rate|
        else:
            lower = True
    mean = float(times.mean()) + tail
    stderr = float(times.std(ddof=1) / math.sqrt(n_paths))
    return MeanExitEstimate(
        mean=mean,
        stderr=stderr,
        truncated_fraction=frac,
        tail_correction=tail,
        is_lower_bound=lower,
    )


def fit_decay_rate(curve: SurvivalCurve, policy: WindowPolicy | None = None) -> DecayFit:
    """Weighted LS fit of log p-hat over the count-selected window.

    Weights are inverse delta-method variances n p/(1-p); the window keeps
    grid points whose survivor counts lie in [min_survivors,
    max_fraction * n_paths], adapting across domains without a time scale.
    """
    policy = policy or WindowPolicy()
    s = curve.survivors
    n = curve.n_paths
    mask = (
        (s >= max(policy.min_survivors, 1))
        & (s <= policy.max_fraction * n)
        & (curve.times > 0)
    )
    if not mask.any():
        raise InsufficientDataError("insufficient tail data: fit window is empty")
    if mask.sum() < 5:
        raise InsufficientDataError(
            f"insufficient tail data: only {int(mask.sum())} usable points (need 5)"
        )
    t = curve.times[mask]
    p = curve.p_hat[mask]
    y = np.log(p)
    w = n * p / (1.0 - p)
    sw = w.sum()
    tbar = float((w * t).sum() / sw)
    ybar = float((w * y).sum() / sw)
    stt = float((w * (t - tbar) ** 2).sum())
    slope = float((w * (t - tbar) * (y - ybar)).sum() / stt)
    intercept = ybar - slope * tbar
    # curve points share paths: survivors are nested, so
    # Cov(log p_i, log p_j) ~ (1 - p_min)/(n p_min) with p_min the earlier
    # point.  Propagate that through the weighted-slope coefficients
    # instead of pretending the points are independent.
    a = w * (t - tbar) / stt
    pi = np.maximum.outer(p, p)  # p at the earlier of the two times
    cov = (1.0 - pi) / (n * pi)
    stderr = float(math.sqrt(max(a @ cov @ a, 0.0)))
    if stderr == 0.0:
        stderr = math.sqrt(1.0 / stt)
    resid = y - (intercept + slope * t)
    total = float((w * (y - ybar) ** 2).sum())
    r2 = 1.0 - float((w * resid**2).sum()) / total if total > 0 else 0.0
    return DecayFit(
        rate=slope,
        stderr=stderr,
        window=(float(t[0]), float(t[-1])),
        r_squared=r2,
        n_points=int(mask.sum()),
        intercept=float(intercept),
    )


def dt_bias_check(
    dom: Domain,
    params: StableParams,
    x0,
    dt: float,
    seed: int,
    n_paths: int = 20000,
    t_max: float = None,
    t_grid=None,
    bridge_correction: bool = False,
    policy: WindowPolicy | None = None,
    n_workers: int = 1,
) -> DtBiasReport:
    """Fit decay rates at dt and dt/2 on matched budgets and compare.

    A shift beyond the combined fit stderr signals exit-detection bias
    from unobserved excursions between grid points.
    """
    if t_grid is None:
        if t_max is None:
            raise ParameterError("provide t_max or t_grid")
        t_grid = np.linspace(0.0, t_max, 81)
        t_grid = np.round(t_grid / dt) * dt
        t_grid = np.unique(t_grid)
    rates = []
    errs = []
    for d in (dt, dt / 2.0):
        curve = survival_curve(
            dom, params, x0, t_grid, n_paths, d, seed,
            bridge_correction=bridge_correction, n_workers=n_workers,
        )
        fit = fit_decay_rate(curve, policy)
        rates.append(fit.rate)
        errs.append(fit.stderr)
    shift = rates[0] - rates[1]
    se = math.hypot(errs[0], errs[1])
    return DtBiasReport(
        dt=dt,
        rate_coarse=rates[0],
        rate_fine=rates[1],
        shift=shift,
        stderr_combined=se,
        exceeds_1se=abs(shift) > se,
        exceeds_2se=abs(shift) > 2.0 * se,
    )

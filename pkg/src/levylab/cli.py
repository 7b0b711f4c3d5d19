"""Command-line entry point.

Subcommands: sample, survival, meanexit, spectrum, bound, verify, report.
Exit status: 0 success/pass, 1 configuration or runtime error, 2 failed
verdict, 3 inconclusive verdict.  Every run that produces artifacts writes
them under --out with the versioned bundle schema; a run is replayable
from the config embedded in its bundle.

Seed resolution: --seed beats the LEVYLAB_SEED environment variable beats
mc.seed in the config file; an environment override is recorded in the
bundle.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import bounds as bd
from .config import THEOREM_IDS, config_digest, load_config
from .errors import (
    ConfigError,
    ConvergenceError,
    HypothesisViolationError,
    LevyLabError,
)
from .harness import (
    ResultBundle,
    load_bundle,
    render_report,
    run_experiment,
    save_bundle,
    spectral_bottom,
    verify,
)
from .exit_mc import mean_exit_time
from .sampler import RngStream, StableParams, sample_path, sample_stable_step
from .spectral import SpectralEstimate

SEED_ENV = "LEVYLAB_SEED"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAIL = 2
EXIT_INCONCLUSIVE = 3


def _add_config_args(p: argparse.ArgumentParser):
    p.add_argument("--config", required=True, help="path to a JSON experiment config")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config entry by dotted key (repeatable), e.g. mc.n_paths=5000",
    )
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, default=None, help="override mc.seed")
    p.add_argument("--workers", type=int, default=None, help="override mc.n_workers")


def _resolve_config(args):
    overrides = list(args.overrides)
    env_seed = None
    if args.seed is not None:
        overrides.append(f"mc.seed={int(args.seed)}")
    elif os.environ.get(SEED_ENV):
        try:
            env_seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {os.environ[SEED_ENV]!r}")
        overrides.append(f"mc.seed={env_seed}")
    if args.workers is not None:
        overrides.append(f"mc.n_workers={int(args.workers)}")
    cfg = load_config(args.config, overrides)
    return cfg, env_seed


def _cmd_sample(args) -> int:
    cfg, env_seed = _resolve_config(args)
    params = StableParams(cfg.alpha, cfg.dim)
    mc = cfg.mc
    os.makedirs(args.out, exist_ok=True)
    n = int(args.n)
    steps = sample_stable_step(params, mc["dt"], RngStream(mc["seed"], 0), size=n)
    inc_path = os.path.join(args.out, "increments.csv")
    with open(inc_path, "w") as fh:
        fh.write(",".join(f"dx{i}" for i in range(params.dim)) + "\n")
        for row in np.atleast_2d(steps):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    t_max = mc["t_max"] if mc["t_max"] is not None else 1.0
    path = sample_path(params, mc["x0"], t_max, mc["dt"], RngStream(mc["seed"], 1))
    path_file = os.path.join(args.out, "path.csv")
    with open(path_file, "w") as fh:
        fh.write("t," + ",".join(f"x{i}" for i in range(params.dim)) + ",subordinator\n")
        for k in range(len(path.times)):
            fh.write(
                repr(float(path.times[k]))
                + ","
                + ",".join(repr(float(v)) for v in path.positions[k])
                + ","
                + repr(float(path.subordinator_values[k]))
                + "\n"
            )
    print(f"wrote {inc_path} ({n} increments) and {path_file}")
    return EXIT_OK


def _cmd_survival(args) -> int:
    cfg, env_seed = _resolve_config(args)
    t0 = time.time()
    bundle = run_experiment(cfg)
    bundle.seed_override_env = env_seed
    save_bundle(bundle, args.out)
    print(render_report(bundle, timings={"survival": time.time() - t0}))
    return EXIT_OK


def _cmd_meanexit(args) -> int:
    cfg, env_seed = _resolve_config(args)
    mc = cfg.mc
    if mc["t_max"] is None:
        raise ConfigError("mc.t_max: required for the meanexit command")
    dom = cfg.domain()
    params = StableParams(cfg.alpha, cfg.dim)
    probes = cfg.probes or [mc["x0"]]
    bundle = ResultBundle(config=cfg.to_dict())
    rows = []
    for x in probes:
        est = mean_exit_time(
            dom, params, x, mc["n_paths"], mc["dt"], mc["t_max"], mc["seed"],
            bridge_correction=mc["bridge_correction"], n_workers=mc["n_workers"],
        )
        rows.append(
            {
                "x": list(np.atleast_1d(x).astype(float)),
                "mean": est.mean,
                "stderr": est.stderr,
                "truncated_fraction": est.truncated_fraction,
                "tail_correction": est.tail_correction,
                "is_lower_bound": est.is_lower_bound,
            }
        )
    bundle.fits.append({"mean_exit": rows})
    bundle.seed_override_env = env_seed
    save_bundle(bundle, args.out)
    for row in rows:
        print(
            f"x={row['x']} mean={row['mean']:.6g} +- {row['stderr']:.2g}"
            + (" (lower bound)" if row["is_lower_bound"] else "")
        )
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    cfg, env_seed = _resolve_config(args)
    dom = cfg.domain()
    est = spectral_bottom(dom, cfg.alpha, cfg.spectral["resolutions"])
    bundle = ResultBundle(config=cfg.to_dict())
    bundle.spectral.append(est.to_dict())
    bundle.seed_override_env = env_seed
    save_bundle(bundle, args.out)
    print(f"lambda = {est.value:.8g} +- {est.error:.2g} [{est.method}]")
    for n, v in est.resolution_ladder:
        print(f"  n={n}: {v:.8g}")
    return EXIT_OK


def _cmd_bound(args) -> int:
    f = args.formula
    if f == "inradius-lower":
        val = bd.inradius_lower(args.d, args.alpha, args.r, args.R, units=args.units)
    elif f == "iteration-exponent":
        val = bd.iteration_exponent(args.n, args.d, args.alpha, args.eps)
    elif f == "limit-rate":
        val = bd.limit_rate(args.d, args.alpha, args.lam)
    elif f == "survival-envelope":
        p = bd.EnvelopeParams(C=args.C, eps=args.eps, lam=args.lam, d=args.d, alpha=args.alpha)
        val = float(bd.survival_upper_envelope(p, args.t))
    elif f == "prelim-envelope":
        val = float(bd.prelim_envelope(args.C, args.eps, args.d, args.alpha, args.lam, args.t))
    elif f == "free-kernel":
        val = bd.free_kernel_profile(int(args.d), args.alpha, args.t, args.dist)
    elif f == "mean-exit-envelope":
        lo, hi = bd.mean_exit_envelope(args.delta, args.alpha, args.C_lo, args.C_hi)
        print(f"{lo!r} {hi!r}")
        return EXIT_OK
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown formula {f!r}")
    print(repr(val))
    return EXIT_OK


def _cmd_verify(args) -> int:
    cfg, env_seed = _resolve_config(args)
    t0 = time.time()
    bundle = verify(args.theorem, cfg)
    bundle.seed_override_env = env_seed
    save_bundle(bundle, args.out)
    report_text = render_report(bundle, timings={"verify": time.time() - t0})
    with open(os.path.join(args.out, "report.md"), "w") as fh:
        fh.write(report_text)
    print(report_text)
    verdict = bundle.reports[-1]["verdict"]
    return {"pass": EXIT_OK, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}[verdict]


def _cmd_report(args) -> int:
    bundle = load_bundle(args.bundle)
    print(render_report(bundle))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="levylab",
        description=(
            "Simulate symmetric alpha-stable exit times and check spectral "
            "survival bounds. Config defaults: mc.dt=1e-3, mc.n_paths=10000, "
            "mc.t_grid_points=121, spectral.resolutions=[256,512,1024], "
            "fit.window={min_survivors:100, max_fraction:0.2}, "
            "fit.tolerances={eps:0.1, rate_rel:0.1, slope_abs:0.08, "
            "stability_factor:2.0, min_bin_count:50, n_bins:64}. mc.seed is "
            "mandatory. Exit codes: 0 pass, 1 config/runtime error, 2 failed "
            "verdict, 3 inconclusive."
        ),
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw stable increments and one path to CSV")
    _add_config_args(p)
    p.add_argument("--n", type=int, default=10000, help="number of increments")
    p.set_defaults(fn=_cmd_sample)

    p = sub.add_parser("survival", help="survival curve, decay fit and envelope")
    _add_config_args(p)
    p.set_defaults(fn=_cmd_survival)

    p = sub.add_parser("meanexit", help="mean exit times at the probe points")
    _add_config_args(p)
    p.set_defaults(fn=_cmd_meanexit)

    p = sub.add_parser("spectrum", help="eigenvalue ladder for the config domain")
    _add_config_args(p)
    p.set_defaults(fn=_cmd_spectrum)

    p = sub.add_parser("bound", help="evaluate a closed-form bound")
    p.add_argument(
        "--formula",
        required=True,
        choices=[
            "inradius-lower",
            "iteration-exponent",
            "limit-rate",
            "survival-envelope",
            "prelim-envelope",
            "free-kernel",
            "mean-exit-envelope",
        ],
    )
    p.add_argument("--d", type=float, default=1)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--units", choices=["seminorm", "generator"], default="seminorm")
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--dist", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--C-lo", dest="C_lo", type=float, default=1.0)
    p.add_argument("--C-hi", dest="C_hi", type=float, default=1.0)
    p.set_defaults(fn=_cmd_bound)

    p = sub.add_parser("verify", help="run a theorem verification experiment")
    p.add_argument("--theorem", required=True, choices=list(THEOREM_IDS))
    _add_config_args(p)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("report", help="render the report of a saved bundle")
    p.add_argument("--bundle", required=True, help="bundle.json or its directory")
    p.set_defaults(fn=_cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except HypothesisViolationError as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ConvergenceError as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except LevyLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

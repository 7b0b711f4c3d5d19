"""Experiment configuration: schema, strict validation, defaults.

Configs are single JSON files with nested sections.  Validation is strict:
unknown keys are rejected with their dotted path, types are checked, the
seed is mandatory (reproducibility is not optional), and defaults are
filled in so the validated config is fully explicit and replayable.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .domains import (
    Ball,
    ConstantProfile,
    Domain,
    HalfSpace,
    Horn,
    Interval,
    RationalProfile,
    SwissCheese,
    Tube,
    WavyStripWithHoles,
)
from .errors import ConfigError

__all__ = [
    "ExperimentConfig",
    "validate_config",
    "load_config",
    "apply_overrides",
    "build_domain",
    "config_digest",
    "THEOREM_IDS",
]

THEOREM_IDS = ("thm-1-1", "cor-1-2", "thm-1-3", "prop-1-4", "thm-1-6", "iteration-3-2")

# schema: key -> (type, default); REQUIRED means no default
_REQUIRED = object()

_MC_SCHEMA = {
    "n_paths": (int, 10000),
    "dt": (float, 1e-3),
    "t_max": ((float, type(None)), None),
    "seed": (int, _REQUIRED),
    "x0": (list, [0.0]),
    "t_grid_points": (int, 121),
    "bridge_correction": (bool, False),
    "n_workers": (int, 1),
    "snapshot_times": (list, []),
}

_SPECTRAL_SCHEMA = {
    "resolutions": (list, [256, 512, 1024]),
    "extrapolate": (bool, True),
}

_WINDOW_SCHEMA = {
    "min_survivors": (int, 100),
    "max_fraction": (float, 0.2),
}

_TOL_SCHEMA = {
    "eps": (float, 0.1),
    "rate_rel": (float, 0.1),
    "slope_abs": (float, 0.08),
    "stability_factor": (float, 2.0),
    "min_bin_count": (int, 50),
    "n_bins": (int, 64),
}

_FIT_SCHEMA = {
    "window": (dict, None),
    "tolerances": (dict, None),
}

_TOP_SCHEMA = {
    "name": (str, "experiment"),
    "theorem_id": ((str, type(None)), None),
    "process": (dict, _REQUIRED),
    "domain": (dict, _REQUIRED),
    "mc": (dict, _REQUIRED),
    "spectral": (dict, None),
    "fit": (dict, None),
    "probes": (list, []),
    "kernel_times": (list, []),
    "deltas": (list, []),
    "bracket_a": ((float, type(None)), None),
}

_PROCESS_SCHEMA = {
    "alpha": (float, _REQUIRED),
    "dim": (int, 1),
}

_DOMAIN_SCHEMAS = {
    "interval": {"a": (float, -1.0), "b": (float, 1.0)},
    "ball": {"center": (list, [0.0, 0.0]), "radius": (float, 1.0)},
    "halfspace": {"normal": (list, [1.0]), "offset": (float, 0.0)},
    "tube": {"a": ((float, type(None)), None), "cross_section": (dict, _REQUIRED)},
    "horn": {"profile": (dict, _REQUIRED), "dim": (int, 2)},
    "swiss_cheese": {"hole_radius": (float, 0.25), "dim": (int, 2)},
    "wavy_strip": {
        "base": (float, 2.0),
        "amplitude": (float, 1.0),
        "frequency": (float, 3.0),
        "hole_radius": (float, 0.5),
        "hole_spacing": (float, 2.0),
    },
}

_PROFILE_SCHEMAS = {
    "rational": {"scale": (float, 1.0)},
    "constant": {"c": (float, 1.0)},
}


def _check_section(raw: dict, schema: dict, path: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected an object")
    out = {}
    for key in raw:
        if key not in schema:
            raise ConfigError(f"{path}.{key}: unknown key")
    for key, (typ, default) in schema.items():
        if key in raw:
            val = raw[key]
            expected = typ if isinstance(typ, tuple) else (typ,)
            if float in expected and isinstance(val, int) and not isinstance(val, bool):
                val = float(val)
            if bool not in expected and isinstance(val, bool):
                raise ConfigError(f"{path}.{key}: expected {typ}, got bool")
            if not isinstance(val, expected):
                names = "/".join(t.__name__ for t in expected)
                raise ConfigError(f"{path}.{key}: expected {names}, got {type(val).__name__}")
            out[key] = val
        elif default is _REQUIRED:
            raise ConfigError(f"{path}.{key}: missing required key")
        else:
            out[key] = default
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, fully-defaulted experiment description."""

    raw: dict

    @property
    def name(self) -> str:
        return self.raw["name"]

    @property
    def theorem_id(self):
        return self.raw["theorem_id"]

    @property
    def alpha(self) -> float:
        return self.raw["process"]["alpha"]

    @property
    def dim(self) -> int:
        return self.raw["process"]["dim"]

    @property
    def mc(self) -> dict:
        return self.raw["mc"]

    @property
    def spectral(self) -> dict:
        return self.raw["spectral"]

    @property
    def window(self) -> dict:
        return self.raw["fit"]["window"]

    @property
    def tolerances(self) -> dict:
        return self.raw["fit"]["tolerances"]

    @property
    def probes(self) -> list:
        return self.raw["probes"]

    def domain(self) -> Domain:
        return build_domain(self.raw["domain"])

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.raw))


def _validate_domain(raw: dict, path: str = "domain") -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected an object")
    kind = raw.get("kind")
    if kind not in _DOMAIN_SCHEMAS:
        raise ConfigError(
            f"{path}.kind: must be one of {sorted(_DOMAIN_SCHEMAS)}, got {kind!r}"
        )
    body = {k: v for k, v in raw.items() if k != "kind"}
    out = _check_section(body, _DOMAIN_SCHEMAS[kind], path)
    out["kind"] = kind
    if kind == "tube":
        out["cross_section"] = _validate_domain(out["cross_section"], f"{path}.cross_section")
    if kind == "horn":
        prof = out["profile"]
        pkind = prof.get("kind") if isinstance(prof, dict) else None
        if pkind not in _PROFILE_SCHEMAS:
            raise ConfigError(
                f"{path}.profile.kind: must be one of {sorted(_PROFILE_SCHEMAS)}, got {pkind!r}"
            )
        pbody = {k: v for k, v in prof.items() if k != "kind"}
        pout = _check_section(pbody, _PROFILE_SCHEMAS[pkind], f"{path}.profile")
        pout["kind"] = pkind
        out["profile"] = pout
    return out


def build_domain(spec: dict) -> Domain:
    kind = spec["kind"]
    if kind == "interval":
        return Interval(spec["a"], spec["b"])
    if kind == "ball":
        return Ball(tuple(spec["center"]), spec["radius"])
    if kind == "halfspace":
        return HalfSpace(tuple(spec["normal"]), spec["offset"])
    if kind == "tube":
        a = spec["a"] if spec["a"] is not None else -math.inf
        return Tube(a, build_domain(spec["cross_section"]))
    if kind == "horn":
        prof = spec["profile"]
        profile = (
            RationalProfile(prof["scale"]) if prof["kind"] == "rational"
            else ConstantProfile(prof["c"])
        )
        return Horn(profile, dim=spec["dim"])
    if kind == "swiss_cheese":
        return SwissCheese(spec["hole_radius"], dim=spec["dim"])
    if kind == "wavy_strip":
        return WavyStripWithHoles(
            base=spec["base"],
            amplitude=spec["amplitude"],
            frequency=spec["frequency"],
            hole_radius=spec["hole_radius"],
            hole_spacing=spec["hole_spacing"],
        )
    raise ConfigError(f"domain.kind: unsupported kind {kind!r}")


def validate_config(raw: dict) -> ExperimentConfig:
    """Strict schema check; fills defaults and cross-validates values."""
    top = _check_section(raw, _TOP_SCHEMA, "config")
    top["process"] = _check_section(top["process"], _PROCESS_SCHEMA, "process")
    alpha = top["process"]["alpha"]
    if not (0.0 < alpha <= 2.0):
        raise ConfigError(f"process.alpha: alpha must lie in (0, 2], got {alpha}")
    if top["process"]["dim"] < 1:
        raise ConfigError("process.dim: must be >= 1")
    top["domain"] = _validate_domain(top["domain"])
    top["mc"] = _check_section(top["mc"], _MC_SCHEMA, "mc")
    top["spectral"] = _check_section(top["spectral"] or {}, _SPECTRAL_SCHEMA, "spectral")
    fit = top["fit"] or {}
    fit = _check_section(fit, _FIT_SCHEMA, "fit")
    fit["window"] = _check_section(fit["window"] or {}, _WINDOW_SCHEMA, "fit.window")
    fit["tolerances"] = _check_section(fit["tolerances"] or {}, _TOL_SCHEMA, "fit.tolerances")
    top["fit"] = fit

    mc = top["mc"]
    if mc["dt"] <= 0:
        raise ConfigError("mc.dt: must be positive")
    if mc["n_paths"] < 100:
        raise ConfigError("mc.n_paths: must be at least 100")
    if mc["t_max"] is not None and mc["t_max"] <= 0:
        raise ConfigError("mc.t_max: must be positive when given")
    if mc["seed"] < 0:
        raise ConfigError("mc.seed: must be nonnegative")
    for tol_key in ("rate_rel", "slope_abs", "stability_factor"):
        if fit["tolerances"][tol_key] <= 0:
            raise ConfigError(f"fit.tolerances.{tol_key}: must be positive")
    if not (0.0 < fit["tolerances"]["eps"] < 1.0):
        raise ConfigError("fit.tolerances.eps: must lie in (0, 1)")
    tid = top["theorem_id"]
    if tid is not None and tid not in THEOREM_IDS:
        raise ConfigError(f"theorem_id: must be one of {THEOREM_IDS}, got {tid!r}")
    # building the domain validates its geometric parameters
    build_domain(top["domain"])
    if len(mc["x0"]) != top["process"]["dim"]:
        raise ConfigError("mc.x0: dimension does not match process.dim")
    return ExperimentConfig(raw=top)


def load_config(path: str, overrides=()) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    if overrides:
        raw = apply_overrides(raw, overrides)
    return validate_config(raw)


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply dotted-key=value strings; values parse as JSON, else string."""
    out = json.loads(json.dumps(raw))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, _, sval = item.partition("=")
        try:
            val = json.loads(sval)
        except json.JSONDecodeError:
            val = sval
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            if p not in node or not isinstance(node[p], dict):
                node[p] = {}
            node = node[p]
        node[parts[-1]] = val
    return out


def config_digest(cfg: ExperimentConfig) -> str:
    """Stable digest of the fully-defaulted config for report provenance."""
    blob = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]

"""Loading and validating YAML run configurations."""

import copy
from dataclasses import dataclass
from importlib import resources

import numpy as np
import yaml

from . import geometry as geo
from .errors import ConfigError
from .evolution import GammaSchedule
from .harnack import HarnackCoefficients
from .scenarios import InitialData, Scenario
from .verify.monitors import THEOREMS

REQUIRED = (("geometry", "kind"), ("geometry", "n"))
RESIDUAL_FAMILIES = ("prop", "thm2", "cor_u", "cor_v", "bochner", "li_yau", "coherence")


def load_defaults():
    text = resources.files("harnacklab").joinpath("defaults.yaml").read_text(encoding="utf-8")
    return yaml.safe_load(text)


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and key not in ("coefficients",):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be a mapping")
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = value
    return out


def _number(tree, block, key, positive=False):
    value = tree[block][key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{block}.{key} must be a number, got {value!r}")
    value = float(value)
    if not np.isfinite(value) or (positive and value <= 0):
        raise ConfigError(f"{block}.{key} must be {'positive' if positive else 'finite'}, got {value}")
    return value


@dataclass
class RunConfig:
    """A fully merged and validated configuration tree."""

    tree: dict

    @property
    def geometry(self):
        return self.tree["geometry"]

    @property
    def heat(self):
        return self.tree["heat"]

    @property
    def time(self):
        return self.tree["time"]

    @property
    def checks(self):
        return self.tree["checks"]

    @property
    def convergence(self):
        return self.tree["convergence"]

    @property
    def output(self):
        return self.tree["output"]

    def scenario(self):
        g, h, tm = self.geometry, self.heat, self.time
        gamma = GammaSchedule(h["gamma"]["kind"], float(h["gamma"]["value"]),
                              float(h["gamma"]["s"]))
        init = h["initial"]
        initial = InitialData(init["kind"], float(init["mean"]), tuple(init["cos"]),
                              tuple(init["sin"]), float(init["amp"]), float(init["amp2"]))
        extents = g["extents"]
        if extents is not None:
            extents = tuple(float(e) for e in (extents if isinstance(extents, list) else [extents]))
        return Scenario(kind=g["kind"], n=int(g["n"]), c0=float(g["c0"]), extents=extents,
                        a=float(h["a"]), gamma=gamma, initial=initial,
                        representation=h["representation"], t0=float(tm["t0"]),
                        t_end=float(tm["t_end"]), cfl_sigma=float(tm["cfl_sigma"]),
                        f_floor=float(h["f_floor"]))

    def snapshot_times(self, extra=()):
        tm = self.time
        t0, t_end, dt = float(tm["t0"]), float(tm["t_end"]), float(tm["snapshot_dt"])
        count = int(np.floor((t_end - t0) / dt + 1e-9))
        times = {round(t0 + k * dt, 12) for k in range(1, count + 1)}
        times.update(float(t) for t in extra)
        return sorted(t for t in times if t0 < t <= t_end)

    def coefficients(self):
        raw = self.checks["coefficients"]
        if not isinstance(raw, dict):
            raise ConfigError("checks.coefficients must be a mapping")
        allowed = {"alpha", "beta", "a", "b", "d"}
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError(f"unknown coefficient names {sorted(unknown)}")
        try:
            values = {k: float(v) for k, v in raw.items()}
        except (TypeError, ValueError):
            raise ConfigError("checks.coefficients must be numbers") from None
        values.setdefault("alpha", 0.0)
        values.setdefault("beta", 0.0)
        values.setdefault("a", 0.0)
        return HarnackCoefficients(c=float(self.heat["a"]), **values)


def validate(tree):
    for block, key in REQUIRED:
        if tree[block][key] is None:
            raise ConfigError(f"missing required config key {block}.{key}")
    cfg = RunConfig(tree)
    scenario = cfg.scenario()
    geom = scenario.geometry(int(cfg.geometry["resolution"]))
    geom.check_time(scenario.t0)
    if not scenario.t0 < scenario.t_end < geom.t_sing:
        raise ConfigError(
            f"need t0 < t_end < t_sing, got t0={scenario.t0}, t_end={scenario.t_end}, "
            f"t_sing={geom.t_sing}")
    _number(tree, "time", "snapshot_dt", positive=True)
    _number(tree, "time", "cfl_sigma", positive=True)
    if tree["time"]["t_min"] is not None:
        _number(tree, "time", "t_min", positive=True)
    scenario.problem(int(cfg.geometry["resolution"]))

    checks = tree["checks"]
    for th in checks["theorems"]:
        if th not in THEOREMS:
            raise ConfigError(f"unknown theorem {th!r}; choose from {THEOREMS}")
    for fam in checks["residuals"]:
        if fam not in RESIDUAL_FAMILIES:
            raise ConfigError(f"unknown residual family {fam!r}; choose from {RESIDUAL_FAMILIES}")
    for key in ("tolerance_C", "residual_delta", "residual_ceiling", "coherence_ceiling"):
        _number(tree, "checks", key, positive=True)
    _number(tree, "checks", "d")
    if int(checks["x_samples"]) < 0 or isinstance(checks["seed"], bool):
        raise ConfigError("checks.x_samples must be >= 0 and checks.seed an integer")
    int(checks["seed"])
    if "thm2" in checks["residuals"]:
        cfg.coefficients().check_square_form()
    for band in ("solver_band", "residual_band"):
        b = tree["convergence"][band]
        if not (isinstance(b, list) and len(b) == 2):
            raise ConfigError(f"convergence.{band} must be [low, high]")
    return cfg


def load_config(path, seed=None):
    """Read ``path``, merge over the shipped defaults, validate, and apply a ``seed`` override."""
    try:
        with open(path, encoding="utf-8") as fh:
            user = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    return config_from_dict(user if user is not None else {}, seed)


def config_from_dict(user, seed=None):
    if not isinstance(user, dict):
        raise ConfigError("config root must be a mapping")
    tree = _merge(load_defaults(), user)
    if seed is not None:
        tree["checks"]["seed"] = int(seed)
    try:
        return validate(tree)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None


def geometry_from(cfg, resolution=None):
    g = cfg.geometry
    res = int(g["resolution"] if resolution is None else resolution)
    return geo.make_geometry(g["kind"], g["n"], res, g["c0"], g["extents"])

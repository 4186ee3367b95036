"""Experiment configuration: YAML with one section per stage."""
from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
import yaml

from .errors import ConfigError

__all__ = ["STAGES", "DEFAULTS", "ExperimentConfig", "load_config", "reference_config"]

class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot, e.g. ``1e-10``."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                   |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                   |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                   |[-+]?\.(?:inf|Inf|INF)
                   |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))

STAGES = ("kernel-check", "env-gen", "corrector", "effective", "resolvent-sweep", "simulate")

DEFAULTS: dict = {
    "seed": 20240611,
    "output": "levyhom-out",
    "stages": list(STAGES),
    "kernel": {"dim": 2, "alpha": 1.4, "tail": {"kind": "truncated"}},
    "environment": {
        "kind": "shear",          # shear | random
        "period": 2 * math.pi,
        "amplitude": 2.0,         # shear only
        "mode": 1,                # shear only
        "modes": 12,              # random: lattice cutoff
        "spectrum_exponent": 2.0,
        "amplitude_scale": 0.5,
        "seed": None,             # defaults to the master seed
        "file": None,             # read the mode list from a CSV instead
    },
    "kernel_check": {"r": 1.0, "tol": 1e-10, "n_xi": 200, "n_directions": 8,
                     "xi_min": 1e-2, "xi_max": 1e2},
    "moments": {"q": 1.2, "r0": 1.0, "r": None},
    "corrector": {"N": 64, "schedule": [1.0, 0.1, 0.01, 0.001, 0.0], "R": None,
                  "tol": 1e-11, "symbol_tol": 1e-10, "identity_tol": 1e-6},
    "effective": {"a_bar_file": None},
    "resolvent": {"lambda": 1.0, "epsilons": [0.5, 0.25, 0.125, 0.0625], "p": 2.0, "R": 4.0,
                  "box_length": 16 * math.pi, "source_width": 1.0, "tol": 1e-10, "max_N": 1024},
    "montecarlo": {"M": 20000, "delta": 0.1, "dt": None, "epsilon": 0.5, "T": 4.0,
                   "times": None, "window": [1.0, 4.0], "n_batches": 32, "a_bar_file": None},
}


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown key '{where}'")
        if isinstance(base[key], dict) and key != "tail":
            if not isinstance(val, dict):
                raise ConfigError(f"'{where}' must be a mapping")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


def _canonical(obj):
    """JSON-stable view: floats as repr strings so the hash is exact."""
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, float):
        return repr(obj)
    return obj


@dataclass
class ExperimentConfig:
    """Resolved configuration with every default filled in."""

    data: dict
    source: Optional[str] = None

    def __getitem__(self, key):
        return self.data[key]

    @property
    def hash(self) -> str:
        """sha256 of the settings that affect numbers (output dir and stage list excluded)."""
        numeric = {k: v for k, v in self.data.items() if k not in ("output", "stages")}
        blob = json.dumps(_canonical(numeric), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, seed: Optional[int] = None, output: Optional[str] = None,
                       stages=None) -> "ExperimentConfig":
        data = copy.deepcopy(self.data)
        if seed is not None:
            data["seed"] = int(seed)
        if output is not None:
            data["output"] = str(output)
        if stages is not None:
            data["stages"] = list(stages)
        return ExperimentConfig(_validate(data), self.source)

    @property
    def environment_seed(self) -> int:
        s = self.data["environment"]["seed"]
        return int(self.data["seed"] if s is None else s)

    @property
    def warnings(self) -> list:
        out = []
        k = self.data["kernel"]
        if not k["dim"] > 4 * (k["alpha"] - 1):
            out.append(f"kernel.dim={k['dim']} does not exceed 4(alpha-1)")
        q, d = self.data["moments"]["q"], k["dim"]
        if not 2 * d / (d + 2) < q < 2:
            out.append(f"moments.q={q} outside ({2 * d / (d + 2):.3g}, 2)")
        return out


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _num(data, path, positive=False, integer=False, allow_none=False):
    node = data
    keys = path.split(".")
    for k in keys[:-1]:
        node = node[k]
    val = node[keys[-1]]
    if val is None and allow_none:
        return
    ok = isinstance(val, (int, float)) and not isinstance(val, bool)
    if integer:
        ok = isinstance(val, int) and not isinstance(val, bool)
    _require(ok, f"'{path}' must be {'an integer' if integer else 'a number'}, got {val!r}")
    if positive:
        _require(val > 0, f"'{path}' must be positive, got {val!r}")


def _validate(data: dict) -> dict:
    _num(data, "seed", integer=True)
    _require(0 <= data["seed"] < 2 ** 64, "'seed' must fit in an unsigned 64-bit integer")
    _require(isinstance(data["stages"], list) and all(s in STAGES for s in data["stages"]),
             f"'stages' must be a list drawn from {list(STAGES)}")
    _num(data, "kernel.dim", integer=True)
    _require(data["kernel"]["dim"] >= 2, "'kernel.dim' must be >= 2")
    _num(data, "kernel.alpha")
    _require(1 < data["kernel"]["alpha"] < 2, "'kernel.alpha' must lie in (1, 2)")
    tail = data["kernel"]["tail"]
    _require(isinstance(tail, dict) and tail.get("kind") in ("truncated", "powerlog", "exponential"),
             "'kernel.tail.kind' must be truncated, powerlog or exponential")
    env = data["environment"]
    _require(env["kind"] in ("shear", "random"), "'environment.kind' must be shear or random")
    _num(data, "environment.period", positive=True)
    _num(data, "environment.modes", integer=True)
    _num(data, "environment.seed", integer=True, allow_none=True)
    _num(data, "corrector.N", integer=True, positive=True)
    N = data["corrector"]["N"]
    _require(N >= 4 and N & (N - 1) == 0, "'corrector.N' must be a power of two >= 4")
    sched = data["corrector"]["schedule"]
    _require(isinstance(sched, list) and sched and all(isinstance(t, (int, float)) for t in sched),
             "'corrector.schedule' must be a non-empty list of numbers")
    _require(all(b < a for a, b in zip(sched, sched[1:])) and sched[-1] >= 0,
             "'corrector.schedule' must be strictly decreasing and end at a value >= 0")
    _num(data, "corrector.R", positive=True, allow_none=True)
    _num(data, "corrector.tol", positive=True)
    res = data["resolvent"]
    _num(data, "resolvent.lambda", positive=True)
    _require(isinstance(res["epsilons"], list) and res["epsilons"]
             and all(0 < e <= 1 for e in res["epsilons"]),
             "'resolvent.epsilons' must be a non-empty list in (0, 1]")
    _num(data, "resolvent.p")
    _require(res["p"] >= 1, "'resolvent.p' must be >= 1")
    _num(data, "resolvent.R", positive=True)
    _num(data, "resolvent.max_N", integer=True, positive=True)
    mc = data["montecarlo"]
    _num(data, "montecarlo.M", integer=True, positive=True)
    _num(data, "montecarlo.delta", positive=True)
    _require(mc["delta"] <= 1, "'montecarlo.delta' must be <= 1")
    _num(data, "montecarlo.epsilon", positive=True)
    _require(mc["epsilon"] <= 1, "'montecarlo.epsilon' must be <= 1")
    _num(data, "montecarlo.T", positive=True)
    _require(isinstance(mc["window"], list) and len(mc["window"]) == 2
             and 0 <= mc["window"][0] < mc["window"][1] <= mc["T"],
             "'montecarlo.window' must be [t0, t1] with 0 <= t0 < t1 <= T")
    return data


def load_config(path: Optional[str] = None, text: Optional[str] = None) -> ExperimentConfig:
    """Parse a YAML config file (or string) and fill in defaults.

    Raises
    ------
    ConfigError
        On YAML syntax errors (with line and column) or invalid keys/values.
    """
    if path is None and text is None:
        return reference_config()
    if text is None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.load(text, Loader=_Loader) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"invalid YAML{where}: {getattr(exc, 'problem', exc)}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of sections")
    data = _merge(DEFAULTS, raw)
    return ExperimentConfig(_validate(data), path)


def reference_config() -> ExperimentConfig:
    """Shear-flow reference experiment with all defaults."""
    return ExperimentConfig(_validate(copy.deepcopy(DEFAULTS)), None)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.data, sort_keys=True)


def as_plain(value: Any):
    """Convert numpy scalars and arrays into JSON-friendly values."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {k: as_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [as_plain(v) for v in value]
    return value

"""
Flat ``key = value`` experiment configuration.

Lines starting with ``#`` are comments.  Keys are grouped by dotted prefix
(``plant.K``, ``aise.nE``, ...).  Which groups are required depends on
``run.task`` and ``run.methods``; optional keys carry documented defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..aise import AiseConfig, VrfEr
from ..control_sim import DERIVATIVE_SOURCES, INTEGRATOR_UNITS, NoiseModel, PidConfig, PlantConfig
from ..covariance_adaptation import AdaptConfig
from ..exceptions import ConfigError
from ..input_estimation import IeConfig
from ..model_kalman import make_differentiator_model
from ..rls_forgetting import ErConfig, VrfConfig

TASKS = ("pid", "diff")


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit(v):
    return 0 <= v <= 1


def _parse_float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"not a finite number: {s}")
    return v


def _parse_int(s: str) -> int:
    f = float(s)
    if not f.is_integer():
        raise ValueError(f"not an integer: {s}")
    return int(f)


def _parse_segments(s: str) -> tuple:
    segs = []
    for part in s.split(";"):
        part = part.strip()
        if not part:
            continue
        a, b, d = part.split(":")
        segs.append((_parse_int(a), _parse_int(b), _parse_float(d)))
    if not segs:
        raise ValueError("no segments given")
    return tuple(segs)


def _parse_methods(s: str) -> tuple:
    methods = tuple(m.strip() for m in s.split(",") if m.strip())
    bad = [m for m in methods if m not in DERIVATIVE_SOURCES]
    if bad or not methods:
        raise ValueError(f"unknown method(s) {bad}; expected a subset of {DERIVATIVE_SOURCES}")
    return methods


def _parse_integrator(s: str) -> str:
    s = s.strip()
    if s not in INTEGRATOR_UNITS:
        raise ValueError(f"expected one of {INTEGRATOR_UNITS}")
    return s


def _parse_task(s: str) -> str:
    s = s.strip()
    if s not in TASKS:
        raise ValueError(f"expected one of {TASKS}")
    return s


# key -> (parser, range check or None, default or REQUIRED)
REQUIRED = object()
SCHEMA = {
    "run.task": (_parse_task, None, "pid"),
    "run.methods": (_parse_methods, None, DERIVATIVE_SOURCES),
    "run.seeds": (_parse_int, lambda v: v >= 1, 20),
    "plant.K": (_parse_float, _positive, REQUIRED),
    "plant.tauC": (_parse_float, _positive, REQUIRED),
    "plant.deadTime": (_parse_float, _nonneg, REQUIRED),
    "plant.Ts": (_parse_float, _positive, REQUIRED),
    "pid.Kp": (_parse_float, None, REQUIRED),
    "pid.Ki": (_parse_float, None, REQUIRED),
    "pid.Kd": (_parse_float, None, REQUIRED),
    "pid.integrator": (_parse_integrator, None, "sample"),
    "sim.N": (_parse_int, lambda v: v >= 1, REQUIRED),
    "sim.r": (_parse_float, None, 1.0),
    "noise.segments": (_parse_segments, None, REQUIRED),
    "ma.window": (_parse_int, lambda v: v >= 1, 10),
    "bw.order": (_parse_int, lambda v: v >= 1, 5),
    "bw.cutoff": (_parse_float, lambda v: 0 < v < 1, 0.6),
    "aise.nE": (_parse_int, lambda v: v >= 1, REQUIRED),
    "aise.nF": (_parse_int, lambda v: v >= 1, REQUIRED),
    "aise.Rz": (_parse_float, _positive, REQUIRED),
    "aise.Rd": (_parse_float, _positive, REQUIRED),
    "aise.Rtheta": (_parse_float, _positive, REQUIRED),
    "adapt.etaL": (_parse_float, _nonneg, REQUIRED),
    "adapt.etaU": (_parse_float, _positive, REQUIRED),
    "adapt.beta": (_parse_float, _unit, REQUIRED),
    "adapt.gridSize": (_parse_int, lambda v: v >= 2, 50),
    "vrf.eta": (_parse_float, _nonneg, REQUIRED),
    "vrf.tauN": (_parse_int, lambda v: v >= 1, REQUIRED),
    "vrf.tauD": (_parse_int, lambda v: v >= 6, REQUIRED),
    "vrf.alpha": (_parse_float, _unit, REQUIRED),
    "er.Rinf": (_parse_float, _positive, REQUIRED),
}

_PID_GROUPS = ("plant", "pid", "sim", "noise")
_AISE_GROUPS = ("aise", "adapt")
_VRF_GROUPS = ("vrf", "er")


def required_groups(task: str, methods) -> list[str]:
    groups = ["run"]
    if task == "pid":
        groups += list(_PID_GROUPS)
        if "bdMa" in methods:
            groups.append("ma")
        if "bdBw" in methods:
            groups.append("bw")
    if any(m.startswith("aise") for m in methods):
        groups += list(_AISE_GROUPS)
    if "aiseVrfEr" in methods:
        groups += list(_VRF_GROUPS)
    return groups


@dataclass
class ExperimentConfig:
    """Validated configuration; ``values`` keeps every parsed key."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    @property
    def task(self) -> str:
        return self.values["run.task"]

    @property
    def methods(self) -> tuple:
        return self.values["run.methods"]

    @property
    def seeds(self) -> int:
        return self.values["run.seeds"]

    @property
    def Ts(self) -> float:
        return self.values["plant.Ts"]

    @property
    def N(self) -> int:
        return self.values["sim.N"]

    def plant(self) -> PlantConfig:
        v = self.values
        return PlantConfig(v["plant.K"], v["plant.tauC"], v["plant.deadTime"], v["plant.Ts"])

    def pid(self, method: str) -> PidConfig:
        v = self.values
        return PidConfig(v["pid.Kp"], v["pid.Ki"], v["pid.Kd"], v["plant.Ts"], method, v["pid.integrator"])

    def noise(self, seed: int) -> NoiseModel:
        return NoiseModel(self.values["noise.segments"], seed)

    def aise(self, method: str, Ts: float | None = None) -> AiseConfig:
        """AISE settings for ``method`` ('aise' or 'aiseVrfEr') at sample time Ts."""
        v = self.values
        Ts = self.Ts if Ts is None else Ts
        ne = v["aise.nE"]
        l_theta = 2 * ne + 1
        ie = IeConfig(ne, v["aise.nF"], v["aise.Rz"], v["aise.Rd"], v["aise.Rtheta"] * np.eye(l_theta))
        adapt = AdaptConfig(v["adapt.etaL"], v["adapt.etaU"], v["adapt.beta"], v["adapt.gridSize"])
        forgetting = None
        if method == "aiseVrfEr":
            forgetting = VrfEr(
                VrfConfig(v["vrf.eta"], v["vrf.tauN"], v["vrf.tauD"], v["vrf.alpha"]),
                ErConfig.scaled_identity(v["er.Rinf"], l_theta),
            )
        elif method != "aise":
            raise ValueError(f"not an AISE method: {method}")
        return AiseConfig(make_differentiator_model(Ts), ie, adapt, forgetting)


def _split_lines(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; every error message names the offending key(s)."""
    raw = _split_lines(text)
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")

    values = {}
    for key, (parse, check, default) in SCHEMA.items():
        if key not in raw:
            if default is not REQUIRED:
                values[key] = default
            continue
        try:
            val = parse(raw[key])
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse {raw[key]!r} ({exc})") from None
        if check is not None and not check(val):
            raise ConfigError(f"{key}: value {val} out of range")
        values[key] = val

    groups = required_groups(values["run.task"], values["run.methods"])
    missing = [
        k for k, (_, _, d) in SCHEMA.items()
        if d is REQUIRED and k.split(".")[0] in groups and k not in values
    ]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    _cross_check(values, groups)
    return ExperimentConfig(values)


def _cross_check(v: dict, groups: list) -> None:
    if "vrf" in groups and v["vrf.tauD"] <= v["vrf.tauN"]:
        raise ConfigError(f"vrf.tauD: must exceed vrf.tauN ({v['vrf.tauD']} <= {v['vrf.tauN']})")
    if "adapt" in groups and v["adapt.etaU"] <= v["adapt.etaL"]:
        raise ConfigError(f"adapt.etaU: must exceed adapt.etaL ({v['adapt.etaU']} <= {v['adapt.etaL']})")
    if "plant" in groups:
        try:
            PlantConfig(v["plant.K"], v["plant.tauC"], v["plant.deadTime"], v["plant.Ts"])
        except ValueError as exc:
            raise ConfigError(f"plant.deadTime: {exc}") from None
    if "noise" in groups:
        try:
            NoiseModel(v["noise.segments"]).std(v["sim.N"])
        except ValueError as exc:
            raise ConfigError(f"noise.segments: {exc}") from None


def _format_value(val) -> str:
    if isinstance(val, tuple) and val and isinstance(val[0], tuple):
        return "; ".join(f"{a}:{b}:{d!r}" for a, b, d in val)
    if isinstance(val, tuple):
        return ", ".join(val)
    if isinstance(val, float):
        return repr(val)
    return str(val)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = [f"{key} = {_format_value(cfg.values[key])}" for key in SCHEMA if key in cfg.values]
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def builtin_config_text(name: str) -> str:
    """Text of a committed config: 'example1' or 'example2'."""
    return resources.files("adaptive_diff.configs").joinpath(f"{name}.conf").read_text(encoding="utf-8")


def builtin_config(name: str) -> ExperimentConfig:
    return parse_config(builtin_config_text(name))

"""Experiment configuration: one JSON or YAML file, every default materialized."""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import yaml

log = logging.getLogger(__name__)

# above this eps0 the iteration is not expected to contract
MAX_EPS0 = 1e-2


class ConfigError(ValueError):
    """A config field is missing, mistyped or outside its admissible range."""

    def __init__(self, name: str, message: str):
        self.field = name
        super().__init__(f"{name}: {message}")


@dataclass
class ModeSetConfig:
    h_max: int = 4
    m: int = 16


@dataclass
class TorusConfig:
    """``radius``/``exponent`` default to the schedule's ``r0 / (2 sqrt 2)`` and ``p_inf``."""

    profile: str = "power-law"
    radius: float | None = None
    exponent: float | None = None


@dataclass
class NonlinearityConfig:
    coeffs: list = field(default_factory=lambda: [1.0])


@dataclass
class FrequencyConfig:
    """``kind`` is ``random`` (drawn from the seed), ``squares`` or ``offsets``.

    ``nu`` and ``W`` are offsets from ``j^2`` on tangential and normal modes.
    """

    kind: str = "random"
    nu: dict = field(default_factory=dict)
    W: dict = field(default_factory=dict)


@dataclass
class DiophConfig:
    gamma: float = 0.01
    tau: float = 2.0
    l_max: int = 8
    bracket: str = "max"


@dataclass
class ScheduleConfig:
    r0: float = 1.0
    rho: float = 0.5
    p0: float = 2.0
    delta: float = 1.0


@dataclass
class RunConfig:
    n_steps: int = 4
    seed: int = 0
    n_samples: int = 10000
    eps0: float = 1e-4
    floor: float = 1e-13
    size_cap: int = 6
    max_degree: int = 2
    delta_grid: list = field(default_factory=lambda: [0.1, 0.2, 0.4, 0.8])
    gamma_grid: list = field(default_factory=lambda: [0.1, 0.05, 0.025])
    conjugacy_points: int = 10
    phase_samples: int = 16
    verify_source: str = "kam"
    n_times: int = 64
    t_max: float = 1.0
    n_x: int = 32


@dataclass
class OutputConfig:
    dir: str = "kamlab-out"


@dataclass
class ExperimentConfig:
    mode_set: ModeSetConfig = field(default_factory=ModeSetConfig)
    torus: TorusConfig = field(default_factory=TorusConfig)
    nonlinearity: NonlinearityConfig = field(default_factory=NonlinearityConfig)
    frequencies: FrequencyConfig = field(default_factory=FrequencyConfig)
    dioph: DiophConfig = field(default_factory=DiophConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    run: RunConfig = field(default_factory=RunConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    workers: int = 1

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def _build(cls, data, prefix: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(prefix, "expected a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{prefix}.{unknown[0]}" if prefix else unknown[0], "unknown field")
    kwargs = {}
    for name, value in data.items():
        path = f"{prefix}.{name}" if prefix else name
        default = known[name].default_factory() if known[name].default_factory is not dataclasses.MISSING else known[name].default
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, path)
        else:
            kwargs[name] = _coerce(value, default, path)
    return cls(**kwargs)


def _coerce(value, default, path: str):
    if value is None:
        return default
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected a boolean, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, float) or default is None:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(path, f"expected a list of numbers, got {value!r}")
        return [float(v) for v in value]
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(path, f"expected a mapping mode -> number, got {value!r}")
        out = {}
        for k, v in value.items():
            try:
                mode = int(k)
            except (TypeError, ValueError):
                raise ConfigError(f"{path}.{k}", "mode keys must be integers") from None
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{path}.{k}", f"expected a number, got {v!r}")
            out[mode] = float(v)
        return out
    return value


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Range checks; raises ``ConfigError`` naming the field."""
    from ..indices import ModeSet

    try:
        ms = ModeSet(cfg.mode_set.h_max, cfg.mode_set.m)
    except ValueError as exc:
        raise ConfigError("mode_set", str(exc)) from None
    s = cfg.schedule
    if s.r0 <= 0:
        raise ConfigError("schedule.r0", "must be positive")
    if not 0 < s.rho <= s.r0 / 2:
        raise ConfigError("schedule.rho", f"must lie in (0, r0/2] = (0, {s.r0 / 2}]")
    if s.delta <= 0:
        raise ConfigError("schedule.delta", "must be positive")
    d = cfg.dioph
    if not 0 < d.gamma <= 0.5:
        raise ConfigError("dioph.gamma", "must lie in (0, 1/2]")
    if d.tau < 1.5:
        raise ConfigError("dioph.tau", "must be at least 3/2")
    if d.l_max < 2:
        raise ConfigError("dioph.l_max", "must be at least 2")
    if d.bracket not in ("max", "sqrt"):
        raise ConfigError("dioph.bracket", "must be 'max' or 'sqrt'")
    if cfg.torus.profile not in ("power-law", "flat"):
        raise ConfigError("torus.profile", "must be 'power-law' or 'flat'")
    f = cfg.frequencies
    if f.kind not in ("random", "squares", "offsets"):
        raise ConfigError("frequencies.kind", "must be 'random', 'squares' or 'offsets'")
    for j, v in f.W.items():
        if j not in ms.normal:
            raise ConfigError(f"frequencies.W.{j}", "not a normal mode of the mode set")
        if abs(v) > 0.25:
            raise ConfigError(f"frequencies.W.{j}", f"|W_j| = {abs(v)} exceeds 1/4")
    for j, v in f.nu.items():
        if j not in ms.tangential:
            raise ConfigError(f"frequencies.nu.{j}", "not a tangential mode of the mode set")
        if abs(v) > 0.5:
            raise ConfigError(f"frequencies.nu.{j}", f"|nu_j - j^2| = {abs(v)} exceeds 1/2")
    if f.kind != "random" and f.W.get(0, 0.0) == 0.0:
        log.warning("W_0 = 0: the normal mode 0 is left without a frequency shift")
    r = cfg.run
    if not 0 < r.eps0 <= MAX_EPS0:
        raise ConfigError("run.eps0", f"must lie in (0, {MAX_EPS0}]")
    for name in ("n_steps", "n_samples", "conjugacy_points", "phase_samples", "n_times", "n_x", "size_cap"):
        if getattr(r, name) < (0 if name in ("n_steps", "conjugacy_points") else 1):
            raise ConfigError(f"run.{name}", "out of range")
    if r.verify_source not in ("kam", "diagonal"):
        raise ConfigError("run.verify_source", "must be 'kam' or 'diagonal'")
    if any(not 0 < x < 1 for x in r.delta_grid):
        raise ConfigError("run.delta_grid", "entries must lie in (0, 1)")
    if any(not 0 < x <= 0.5 for x in r.gamma_grid):
        raise ConfigError("run.gamma_grid", "entries must lie in (0, 1/2]")
    if cfg.workers < 1:
        raise ConfigError("workers", "must be at least 1")
    return cfg


def from_mapping(data: dict | None) -> ExperimentConfig:
    return validate(_build(ExperimentConfig, data or {}, ""))


def load_config(path: str | Path | None) -> ExperimentConfig:
    """Parse a ``.json``, ``.yaml`` or ``.yml`` file; ``None`` gives the defaults."""
    if path is None:
        return from_mapping({})
    path = Path(path)
    text = path.read_text()
    if path.suffix in (".yaml", ".yml"):
        data = yaml.safe_load(text)
    else:
        data = json.loads(text) if text.strip() else {}
    return from_mapping(data)

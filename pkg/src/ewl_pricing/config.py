"""Run configuration: defaults, flat ``key = value`` config files, validation."""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from .experiments import SCALES, SweepSpec, stratified_etas
from .fare_demand import FareStructure
from .market_simulator import DEFAULT_H, DEFAULT_NU, DEFAULT_STEPS, POLICY_KINDS, EpisodeConfig

COMMANDS = ("episode", "sweep-eta", "sweep-frat5", "detailed", "render")
SWEEP_KIND = {"sweep-eta": "eta_sweep", "sweep-frat5": "frat5_grid", "detailed": "detailed"}


class ConfigError(ValueError):
    """Invalid or unknown configuration value."""


@dataclass(frozen=True)
class RunConfig:
    command: str = "episode"
    out: str = "results"
    scale: str = "desk"
    seed: int = 0
    workers: int = 1
    chunk_size: int = 64
    eta: float = 2167.0
    frat5: float | None = None
    policy: str = "unified"
    H: int = DEFAULT_H
    nu: float = DEFAULT_NU
    steps: int = DEFAULT_STEPS
    clamp_min: float = 1.5
    clamp_max: float = 4.3
    base_fare: float = 50.0
    fare_step: float = 20.0
    n_fares: int = 10
    episodes: int | None = None
    eta_samples: int | None = None
    etas: tuple[float, ...] | None = None
    frat5_points: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}")
        if self.scale not in SCALES:
            raise ConfigError(f"scale must be one of {tuple(SCALES)}")
        if self.policy not in POLICY_KINDS:
            raise ConfigError(f"policy must be one of {POLICY_KINDS}")
        if self.frat5 is not None and not self.frat5 > 1:
            raise ConfigError(f"frat5 must be > 1, got {self.frat5}")
        if self.frat5_points is not None and any(f <= 1 for f in self.frat5_points):
            raise ConfigError("frat5_points must all be > 1")
        if self.eta < 0 or (self.etas is not None and any(e < 0 for e in self.etas)):
            raise ConfigError("eta must be >= 0")
        if not 1 < self.clamp_min <= self.clamp_max:
            raise ConfigError("need 1 < clamp_min <= clamp_max")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        for name in ("workers", "chunk_size", "H", "steps"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("episodes", "eta_samples"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.nu < 0:
            raise ConfigError("nu must be >= 0")
        if self.n_fares < 2 or self.base_fare <= 0 or self.fare_step <= 0:
            raise ConfigError("fare ladder needs n_fares >= 2 and positive base_fare/fare_step")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        """Build from already-typed or string values; unknown keys are rejected."""
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        kwargs = {k: _coerce(known[k], v) for k, v in data.items()}
        try:
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        for k in ("etas", "frat5_points"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    def to_text(self) -> str:
        """Serialise as a flat config file readable by :func:`load_config_file`."""
        lines = []
        for k, v in self.to_dict().items():
            if v is None:
                continue
            if isinstance(v, list):
                v = ", ".join(repr(float(x)) for x in v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    def structure(self) -> FareStructure:
        return FareStructure.from_fares(
            [self.base_fare + i * self.fare_step for i in range(self.n_fares)]
        )

    def episode_config(self) -> EpisodeConfig:
        return EpisodeConfig(
            structure=self.structure(),
            H=self.H,
            nu_true=self.nu,
            frat5_true=self.frat5 if self.frat5 is not None else 2.56,
            clamp=(self.clamp_min, self.clamp_max),
            eta=self.eta,
            steps=self.steps,
            policy_kind=self.policy,
            seed=self.seed,
        )

    def sweep_spec(self) -> SweepSpec:
        kind = SWEEP_KIND[self.command]
        overrides: dict[str, Any] = {
            "base": self.episode_config(),
            "eta_fixed": self.eta,
            "workers": self.workers,
            "chunk_size": self.chunk_size,
        }
        if self.episodes is not None:
            overrides["episodes_per_point"] = self.episodes
        if kind == "eta_sweep":
            if self.etas is not None:
                overrides["etas"] = tuple(self.etas)
            elif self.eta_samples is not None:
                overrides["etas"] = tuple(stratified_etas(self.eta_samples, self.seed))
        else:
            if self.frat5_points is not None:
                overrides["frat5_points"] = tuple(self.frat5_points)
            elif self.frat5 is not None:
                overrides["frat5_points"] = (self.frat5,)
        return SweepSpec.preset(kind, self.scale, self.seed, **overrides)


def _coerce(f: dataclasses.Field, value: Any) -> Any:
    t = str(f.type)
    if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
        if "None" in t:
            return None
        raise ConfigError(f"{f.name} may not be empty")
    try:
        if t.startswith("tuple"):
            if isinstance(value, str):
                value = [v for v in value.replace(",", " ").split()]
            return tuple(float(v) for v in value)
        if t.startswith("int"):
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(value)
            return int(value)
        if t.startswith("float"):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {f.name}: {value!r}") from None


def load_config_file(path: str | Path) -> dict[str, str]:
    """Read ``key = value`` lines (``#`` comments allowed) into a raw mapping."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep key case (H)
    try:
        parser.read_string("[run]\n" + path.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return dict(parser["run"])

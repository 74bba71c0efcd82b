import json
import os
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

# console loads .env before any STEKLOV_* default is read
from console import vprint
from geometry.domain import GeometryError, OuterDomain, make_outer_domain, unit_vector


class ConfigError(ValueError):
    pass


def _env_float(name: str, default: str) -> float:
    return float(os.getenv(name, default))


def _env_int(name: str, default: str) -> int:
    return int(os.getenv(name, default))


class OuterConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    kind: Literal["disk", "ellipse", "radial-profile"]
    R: float | None = Field(default=None, description="disk radius")
    a: float | None = Field(default=None, description="ellipse semi-axis along x")
    b: float | None = Field(default=None, description="ellipse semi-axis along y")
    base: float = Field(default=1.0, description="mean radius of a radial profile")
    cos: dict[str, float] = Field(default_factory=dict, description="harmonic index -> cosine coefficient")
    sin: dict[str, float] = Field(default_factory=dict, description="harmonic index -> sine coefficient")

    @model_validator(mode="after")
    def _valid_domain(self):
        try:
            self.domain()
        except GeometryError as exc:
            raise ValueError(str(exc)) from exc
        return self

    def domain(self) -> OuterDomain:
        return make_outer_domain(self.model_dump(exclude_none=True))


class SweepConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples: int = Field(default=20, ge=1)
    margin: float = Field(default=0.98, gt=0.0, lt=1.0, description="largest offset as a fraction of t_max")
    second: bool = Field(default=True, description="solve for sigma_2 at every offset")
    derivatives: bool = Field(default=True, description="evaluate sigma' and sigma'' formulas")
    finite_differences: bool = Field(default=False, description="add fd_first/fd_second columns")


class ConvergenceConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    h_levels: list[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])

    @field_validator("h_levels")
    @classmethod
    def _levels_ok(cls, v):
        if len(v) < 2:
            raise ValueError("need at least two mesh levels")
        if any(h <= 0 for h in v):
            raise ValueError("mesh sizes must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("mesh sizes must strictly decrease")
        return v


class InstanceConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    t: float = Field(ge=0.0)
    h: float | None = Field(default=None, gt=0.0)
    delta: float | None = Field(default=None, gt=0.0)
    delta_second: float | None = Field(default=None, gt=0.0)


class DerivCheckConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    instances: list[InstanceConfig] = Field(default_factory=list)
    delta_factor: float = Field(default=1e-3, gt=0.0, description="first-derivative step / t_max")
    delta_second_factor: float = Field(default=5e-3, gt=0.0, description="second-derivative step / t_max")
    first_tol: float = Field(default=0.02, gt=0.0)
    second_tol: float = Field(default=0.05, gt=0.0)
    stationary_scale: float = Field(default=1.0, gt=0.0, description="C in |sigma'(0)| <= C h")


class LabConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    outer: OuterConfig
    r: float = Field(gt=0.0)
    w: tuple[float, float] = (1.0, 0.0)
    t: float = Field(default=0.0, ge=0.0, description="offset for the solve subcommand")
    h: float = Field(default=0.05, gt=0.0)
    tol: float = Field(default_factory=lambda: _env_float("STEKLOV_TOL", "1e-10"), gt=0.0, le=1e-4)
    workers: int = Field(default_factory=lambda: _env_int("STEKLOV_WORKERS", "1"), ge=1)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    convergence: ConvergenceConfig = Field(default_factory=ConvergenceConfig)
    deriv_check: DerivCheckConfig = Field(default_factory=DerivCheckConfig)

    @field_validator("w")
    @classmethod
    def _unit_w(cls, v):
        try:
            return unit_vector(v)
        except GeometryError as exc:
            raise ValueError(str(exc)) from exc


def config_from_dict(data: dict) -> LabConfig:
    try:
        return LabConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration:\n{exc}") from exc


def load_config(path: str | Path) -> LabConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    config = config_from_dict(data)
    vprint(f"[dim]config {path}: tol={config.tol:g} workers={config.workers}[/dim]")
    return config

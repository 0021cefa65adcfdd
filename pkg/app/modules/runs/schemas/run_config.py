# app/modules/runs/schemas/run_config.py
"""
Run documents: one JSON file describing the model and the commands to run.
File location: app/modules/runs/schemas/run_config.py

Reals are read from their decimal text (``parse_float=Decimal``) so that no
coefficient passes through a binary double on its way in.
"""

import enum
import json
import re
from decimal import Decimal
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from typing_extensions import Annotated

from app.config.settings import settings
from app.core.exceptions import ConfigException, DomainException
from app.modules.manifolds.schemas.manifold import IntegratorMethod
from app.modules.melnikov.schemas.melnikov import MelnikovRoute
from app.modules.model.schemas.model import ModelSpec, PerturbationSeries
from app.modules.model.services.structure_service import StructureService

PositiveDecimal = Annotated[Decimal, Field(gt=0)]

_SIGMA_MODE = re.compile(r"^(zero|sigma_star|fixed:[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?)$")


class CachePolicy(str, enum.Enum):
    USE = "use"  # read hits, write misses
    REFRESH = "refresh"  # recompute, overwrite
    OFF = "off"


class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    spec: ModelSpec
    coefficients: Dict[str, Decimal] = Field(default_factory=dict)
    qmax: Optional[int] = Field(default=None, ge=3)

    @model_validator(mode="after")
    def _series_is_valid(self):
        try:
            StructureService().check_conservative(self.spec, self.series())
        except DomainException as e:
            raise ValueError(e.detail)
        return self

    def series(self) -> PerturbationSeries:
        return PerturbationSeries.from_coefficients(self.coefficients, qmax=self.qmax)


class _LadderCommand(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    delta_ladder: List[PositiveDecimal] = Field(default_factory=list)
    sigma_mode: str = "zero"
    precision_bits: Optional[int] = Field(default=None, ge=53)

    @field_validator("sigma_mode")
    @classmethod
    def _known_sigma_mode(cls, v):
        if not _SIGMA_MODE.match(v):
            raise ValueError("sigma_mode must be 'zero', 'sigma_star' or 'fixed:<decimal>'")
        return v

    @field_validator("delta_ladder")
    @classmethod
    def _distinct(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("delta_ladder has repeated values")
        return v


class IntegralsCommand(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n: List[Annotated[int, Field(ge=0)]] = Field(default_factory=lambda: [0])
    Q: List[Decimal] = Field(default_factory=list)
    C: List[Decimal] = Field(default_factory=lambda: [Decimal(0)])
    omega: List[Decimal] = Field(default_factory=list)
    d: PositiveDecimal = Decimal(1)
    l: int = 1
    precision_bits: Optional[int] = Field(default=None, ge=53)


class MelnikovCommand(_LadderCommand):
    l_range: List[int] = Field(default_factory=lambda: [-2, -1, 0, 1, 2])
    route: MelnikovRoute = MelnikovRoute.QUADRATURE


class SplittingCommand(_LadderCommand):
    u_section: Decimal = Field(default_factory=lambda: settings.U_SECTION)
    n_theta: int = Field(default_factory=lambda: settings.N_THETA, ge=3)
    integrator_method: Optional[IntegratorMethod] = None
    seed_radius: Optional[PositiveDecimal] = None

    @field_validator("u_section")
    @classmethod
    def _inside_section_range(cls, v):
        if abs(v) > settings.T0:
            raise ValueError(f"|u_section| must not exceed T0 = {settings.T0}")
        return v


class ReportCommand(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    fit: bool = True
    sharp_bound: bool = True


class Commands(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    integrals: Optional[IntegralsCommand] = None
    melnikov: Optional[MelnikovCommand] = None
    splitting: Optional[SplittingCommand] = None
    report: Optional[ReportCommand] = None


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    version: Literal[1]
    model: ModelConfig
    commands: Commands = Field(default_factory=Commands)
    output_dir: Optional[str] = None
    cache: CachePolicy = CachePolicy.USE

    @model_validator(mode="after")
    def _sigma_star_needs_dissipation(self):
        for name in ("melnikov", "splitting"):
            command = getattr(self.commands, name)
            if command is not None and command.sigma_mode == "sigma_star" and self.model.spec.conservative:
                raise ValueError(f"commands.{name}.sigma_mode: sigma_star needs a dissipative model")
        if self.commands.report is not None and self.commands.splitting is None:
            raise ValueError("commands.report reads the splitting ladder; add commands.splitting")
        return self

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        try:
            document = json.loads(text, parse_float=Decimal)
        except json.JSONDecodeError as e:
            raise ConfigException(f"not valid JSON: {e.msg} at line {e.lineno}", path=source)
        try:
            return cls.model_validate(document)
        except ValidationError as e:
            first = e.errors()[0]
            location = ".".join(str(part) for part in first["loc"]) or "<root>"
            raise ConfigException(f"{location}: {first['msg']}", path=source)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigException("configuration file not found", path=str(path))
        return cls.from_text(path.read_text(encoding="utf-8"), source=str(path))

# app/modules/model/schemas/model.py
import enum
import json
import re
from decimal import Decimal
from typing import Any, Dict, List, Optional, Tuple

import mpmath as mp
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.config.settings import settings


class Component(str, enum.Enum):
    F = "f"
    G = "g"
    H = "h"


_COEFFICIENT_KEY = re.compile(r"^([fgh])(\d)(\d)(\d)(\d)$")


class ModelSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha0: Decimal = Field(..., gt=0)
    alpha1: Decimal = Decimal(0)
    alpha2: Decimal = Decimal(0)
    b: Decimal = Field(..., gt=0)
    c: Decimal = Field(Decimal(0), ge=0)
    d: Decimal = Field(..., gt=0)
    p: Decimal = Field(Decimal(0), ge=-2)
    h3: Decimal = Decimal(0)
    conservative: bool = False

    @model_validator(mode="after")
    def _conservative_needs_unit_d(self):
        if self.conservative and self.d != 1:
            raise ValueError("a conservative system requires d = 1")
        return self

    def fingerprint(self) -> str:
        return json.dumps({k: str(v) for k, v in self.model_dump().items()}, sort_keys=True)


class TaylorTerm(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    component: Component
    q: int = Field(..., ge=3)
    k: int = Field(..., ge=0)
    m: int = Field(..., ge=0)
    n: int = Field(..., ge=0)
    value: Decimal

    @model_validator(mode="after")
    def _degree_within_order(self):
        if self.k + self.m + self.n > self.q:
            raise ValueError(f"k+m+n = {self.k + self.m + self.n} exceeds q = {self.q}")
        return self

    @property
    def index(self) -> Tuple[int, int, int, int]:
        return (self.q, self.k, self.m, self.n)


class PerturbationSeries(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    qmax: int = Field(default_factory=lambda: settings.TAYLOR_QMAX, ge=3)
    terms: List[TaylorTerm] = Field(default_factory=list)

    @model_validator(mode="after")
    def _terms_within_truncation(self):
        seen = set()
        for term in self.terms:
            if term.q > self.qmax:
                raise ValueError(f"term {term.component.value}{term.index} beyond qmax = {self.qmax}")
            key = (term.component, term.index)
            if key in seen:
                raise ValueError(f"duplicate coefficient {term.component.value}{term.index}")
            seen.add(key)
        return self

    @classmethod
    def from_coefficients(cls, coefficients: Dict[str, Any], qmax: Optional[int] = None) -> "PerturbationSeries":
        """Build from compact keys such as {"f3201": "1", "h3102": "-1"}"""
        terms = []
        for key, value in coefficients.items():
            match = _COEFFICIENT_KEY.match(key)
            if not match:
                raise ValueError(f"coefficient key {key!r} is not of the form f|g|h + qkmn")
            comp, q, k, m, n = match.groups()
            terms.append(
                TaylorTerm(component=comp, q=int(q), k=int(k), m=int(m), n=int(n), value=Decimal(str(value)))
            )
        if qmax is None:
            qmax = max([settings.TAYLOR_QMAX] + [t.q for t in terms])
        return cls(qmax=qmax, terms=terms)

    def component_terms(self, component: Component) -> List[TaylorTerm]:
        return [t for t in self.terms if t.component == component and t.value != 0]

    def coefficient(self, component: Component, q: int, k: int, m: int, n: int) -> Decimal:
        for term in self.terms:
            if term.component == component and term.index == (q, k, m, n):
                return term.value
        return Decimal(0)

    def is_zero(self) -> bool:
        return all(t.value == 0 for t in self.terms)

    def fingerprint(self) -> str:
        rows = sorted((t.component.value, t.index, str(t.value)) for t in self.terms if t.value != 0)
        return json.dumps({"qmax": self.qmax, "terms": rows})


class Params(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    delta: Decimal = Field(..., gt=0)
    sigma: Decimal = Decimal(0)

    def alpha(self, spec: ModelSpec) -> mp.mpf:
        """alpha = alpha0 + alpha1 delta sigma + alpha2 delta^2 at the active precision"""
        delta = mp.mpf(str(self.delta))
        sigma = mp.mpf(str(self.sigma))
        return (
            mp.mpf(str(spec.alpha0))
            + mp.mpf(str(spec.alpha1)) * delta * sigma
            + mp.mpf(str(spec.alpha2)) * delta**2
        )


class StateCartesian(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    x: Any
    y: Any
    z: Any

    def as_list(self) -> List[Any]:
        return [self.x, self.y, self.z]

    def norm(self):
        return mp.sqrt(abs(self.x) ** 2 + abs(self.y) ** 2 + abs(self.z) ** 2)

    def to_cylindric(self) -> "StateCylindric":
        r = (self.x**2 + self.y**2) / 2
        theta = mp.atan2(self.y, self.x) % (2 * mp.pi)
        return StateCylindric(r=r, theta=theta, z=self.z)


class StateCylindric(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    r: Any
    theta: Any
    z: Any

    @field_validator("r")
    @classmethod
    def _nonnegative_radius(cls, v):
        if mp.im(v) == 0 and mp.re(v) < 0:
            raise ValueError("r must be nonnegative")
        return v

    def to_cartesian(self) -> StateCartesian:
        rho = mp.sqrt(2 * self.r)
        return StateCartesian(x=rho * mp.cos(self.theta), y=rho * mp.sin(self.theta), z=self.z)


class CylindricVelocity(BaseModel):
    """(dr/dt, dtheta/dt, dz/dt) with the perturbation components F, G, H kept apart"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    r_dot: Any
    theta_dot: Any
    z_dot: Any
    F: Any
    G: Any
    H: Any


class HeteroclinicPoint(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    R0: Any
    Theta0: Any
    Z0: Any


class Equilibrium(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    state: StateCartesian
    residual: Any
    offset: Any  # distance to the unperturbed point (0, 0, +-1)
    jacobian: Any
    eigenvalues: List[Any]  # ordered (real, complex with positive imaginary part, conjugate)
    eigenvectors: Any  # columns in the eigenvalue order


class CriticalPoints(BaseModel):
    S_minus: Equilibrium
    S_plus: Equilibrium


class ScaledParameters(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: Params
    p: Decimal
    z_shift: Decimal  # delta^(p+3) h3 / 2, undone by to_unfolding

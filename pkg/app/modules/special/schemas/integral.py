# app/modules/special/schemas/integral.py
import enum
from decimal import Decimal
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class IntegralRoute(str, enum.Enum):
    QUADRATURE = "quadrature"
    BETA = "beta"
    ASYMPTOTIC = "asymptotic"


class IIntegralKey(BaseModel):
    """Integral of exp(-i omega |l| s) sinh^n(d s) / cosh^(Q + 1 + i C |l|)(d s) over the real line"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(..., ge=0)
    Q: Decimal
    l: int = 1
    C: Decimal = Decimal(0)
    omega: Decimal
    d: Decimal = Field(Decimal(1), gt=0)

    @model_validator(mode="after")
    def _convergent(self):
        if self.Q + 1 <= self.n:
            raise ValueError(f"Q + 1 = {self.Q + 1} must exceed n = {self.n}")
        if self.Q <= -1:
            raise ValueError("Q must exceed -1")
        return self


class IntegralValue(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    value: Any
    error: Any  # absolute error estimate
    route: IntegralRoute


class IntegralRow(BaseModel):
    """One lattice point evaluated by every route"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    key: IIntegralKey
    quadrature: Optional[Any] = None
    quadrature_error: Optional[Any] = None
    beta: Optional[Any] = None
    asymptotic: Optional[Any] = None
    gap_quadrature_beta: Optional[Any] = None
    gap_beta_asymptotic: Optional[Any] = None
    error: Optional[str] = None

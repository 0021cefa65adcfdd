# app/modules/melnikov/schemas/melnikov.py
import enum
from decimal import Decimal
from typing import Any, Dict, NamedTuple

from pydantic import BaseModel, ConfigDict

from app.modules.melnikov.schemas.fourier import FourierSeries
from app.modules.model.schemas.model import Params


class MelnikovRoute(str, enum.Enum):
    QUADRATURE = "quadrature"
    GAMMA_SERIES = "gamma_series"


class Branch(str, enum.Enum):
    UNSTABLE = "unstable"
    STABLE = "stable"


class Estimate(NamedTuple):
    value: Any
    error: Any


class MelnikovResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    upsilon0: FourierSeries
    route: MelnikovRoute
    params: Params
    error_estimate: Dict[int, Any]


class BorelConstant(BaseModel):
    """C = C1 - i C2 = (4 pi / d) mhat^[1](alpha0 / d)"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    C1: Any
    C2: Any
    mhat1_at_alpha_over_d: Any
    series_terms_used: int
    truncation_bound: Any
    coefficients: Dict[int, Any]  # c_q of the mode 1 of m(w, theta)

    @property
    def value(self):
        return self.C1 - 1j * self.C2


class Averages(BaseModel):
    """Upsilon0^[0] = sigma I + delta^(p+3) J"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    I: Any
    J: Any
    I_error: Any
    J_error: Any


class GraphValue(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    value: Any
    error: Any
    bound_ok: bool = True


class SigmaTarget(BaseModel):
    """Zero-average curves shifted to Upsilon0^[0] = a1 delta^a2 exp(-a3 pi / (2 d delta))"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    a1: Decimal = Decimal(0)
    a2: Decimal = Decimal(0)
    a3: Decimal = Decimal(1)

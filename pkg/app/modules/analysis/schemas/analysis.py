# app/modules/analysis/schemas/analysis.py
from decimal import Decimal
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class ConstrainedFit(BaseModel):
    """Fit with the power pinned, rate and prefactor free"""

    power: float
    rate: float
    log_prefactor: float
    rate_error: float
    log_prefactor_error: float
    rms: float


class FitResult(BaseModel):
    """log|mode 1|(delta) = log_prefactor + power log(delta) - rate / delta"""

    rate: float
    power: float
    log_prefactor: float
    rate_error: float
    power_error: float
    log_prefactor_error: float
    residuals: List[float]
    rms: float
    condition_estimate: float
    samples_used: int
    constrained: Optional[ConstrainedFit] = None


class ComparisonRow(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    delta: Decimal
    sigma: Decimal
    trusted: bool
    measured: Any  # mode 1 of Delta(u, .)
    measured_budget: Any
    melnikov: Any  # Upsilon0^[1] carried to the section
    melnikov_error: Any
    asymptotic: Any  # the Borel-constant route
    ratio_melnikov: Optional[Any] = None
    ratio_asymptotic: Optional[Any] = None
    phase_gap: Optional[Any] = None
    phase_gap_corrected: Optional[Any] = None
    measured_mode0: Any = 0
    melnikov_mode0: Any = 0


class ComparisonReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    rows: List[ComparisonRow] = Field(default_factory=list)
    L0: Any = 0
    verdicts: Dict[str, bool] = Field(default_factory=dict)
    fit: Optional[FitResult] = None

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

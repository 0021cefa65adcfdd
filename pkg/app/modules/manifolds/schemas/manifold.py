# app/modules/manifolds/schemas/manifold.py
import enum
from decimal import Decimal
from fractions import Fraction
from typing import Any, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config.settings import settings
from app.modules.melnikov.schemas.fourier import FourierSeries


class IntegratorMethod(str, enum.Enum):
    TAYLOR = "taylor"
    DOP853 = "dop853"


class Side(str, enum.Enum):
    UNSTABLE = "unstable_of_S_minus"
    STABLE = "stable_of_S_plus"


# float64 DOP853 cannot resolve relative errors below this
DOP853_TOL_FLOOR = Decimal("1e-14")


class IntegratorConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: IntegratorMethod = IntegratorMethod.TAYLOR
    abs_tol: Decimal = Field(..., gt=0)
    rel_tol: Decimal = Field(..., gt=0)
    precision_bits: int = Field(default=256, ge=53)
    max_steps: int = Field(default=200_000, gt=0)
    step_factor: Decimal = Field(default=Decimal("0.9"), gt=0, le=1)

    @model_validator(mode="after")
    def _tolerances_above_roundoff(self):
        floor = Fraction(1, 2 ** (self.precision_bits - 16))
        for name in ("abs_tol", "rel_tol"):
            if Fraction(getattr(self, name)) < floor:
                raise ValueError(f"{name} is below 2^-{self.precision_bits - 16}")
        if self.method == IntegratorMethod.DOP853 and self.rel_tol < DOP853_TOL_FLOOR:
            raise ValueError(f"dop853 works in float64, rel_tol must be >= {DOP853_TOL_FLOOR}")
        return self

    @classmethod
    def from_settings(cls, precision_bits: Optional[int] = None, method: Optional[str] = None) -> "IntegratorConfig":
        method = IntegratorMethod(method or settings.INTEGRATOR_METHOD)
        if method == IntegratorMethod.DOP853:
            return cls(method=method, abs_tol=Decimal("1e-11"), rel_tol=Decimal("1e-11"),
                       precision_bits=53, max_steps=settings.MAX_STEPS)
        bits = precision_bits or settings.PRECISION_BITS
        tol = Decimal(2) ** (-(3 * bits) // 4)
        return cls(method=method, abs_tol=tol, rel_tol=tol, precision_bits=bits, max_steps=settings.MAX_STEPS)

    def halved(self) -> "IntegratorConfig":
        """Replica with half the step factor for global error estimates"""
        if self.method == IntegratorMethod.DOP853:
            tighter = max(self.rel_tol / 64, DOP853_TOL_FLOOR)
            return self.model_copy(update={"rel_tol": tighter, "abs_tol": tighter})
        return self.model_copy(update={"step_factor": self.step_factor / 2})


class Checkpoint(BaseModel):
    """One accepted step: state(t + sign(h) s) = sum_j coefficients[j] s^j for s in [0, |h|]"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    t: Any
    h: Any
    coefficients: List[List[Any]]  # per component, ascending powers


class SectionEvent(BaseModel):
    """Stop when direction * (state[component] - level) crosses zero from below"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    level: Any
    component: int = 2
    direction: int = 1


class Trajectory(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    t0: Any
    t_final: Any
    state0: List[Any]
    final_state: List[Any]
    steps: int
    checkpoints: List[Checkpoint] = Field(default_factory=list)
    event_hit: bool = False
    event_residual: Any = None


class SectionCrossing(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    theta_at_section: Any
    r_at_section: Any  # (x^2 + y^2) / 2
    crossing_time: Any
    refinement_residual: Any
    seed_angle: Any = None
    z_at_section: Any = None
    radius_slope: Any = 0  # |dr/dz| along the trajectory at the crossing


class SeedFrame(BaseModel):
    """Saddle-focus S, real basis (vr, vi) of the complex eigenplane, normal e_n and graph Hessian"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    side: Side
    point: List[Any]
    plane: List[List[Any]]
    normal: List[Any]
    graph_hessian: Any
    complex_eigenvalue: Any
    normal_eigenvalue: Any


class SplittingBudget(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    integrator: Any = 0
    seeding: Any = 0
    refinement: Any = 0

    @property
    def total(self):
        return self.integrator + self.seeding + self.refinement


class SplittingSample(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    delta: Decimal
    sigma: Decimal
    u_section: Decimal
    thetas: List[Any]
    radii_unstable: List[Any]
    radii_stable: List[Any]
    delta_values: List[Any]
    delta_modes: FourierSeries
    D_modes: FourierSeries
    seed_radius: Decimal
    error_budget: Any
    budget: SplittingBudget
    trusted: bool = False
    distance_relation_ok: bool = True
    precision_bits: int = 256

    def mode_one(self):
        return self.delta_modes.mode(1)

# app/config/settings.py
from decimal import Decimal
from typing import List, Optional

from pydantic import field_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    PROJECT_NAME: str = "Hopf-zero Splitting Lab"
    LOG_LEVEL: str = "INFO"

    # Arithmetic
    PRECISION_BITS: int = 256
    QUADRATURE_REL_TOL: str = "1e-30"
    CONTOUR_SHIFT_RHO: Optional[Decimal] = None  # None -> max(8, Q) * d
    PRECISION_LADDER: List[int] = [128, 256, 512]

    # Model
    TAYLOR_QMAX: int = 6
    SIGMA_STAR_BOUND: Decimal = Decimal(10)
    NEWTON_MAX_ITER: int = 50

    # Melnikov
    MODE_CUTOFF: int = 4

    # Manifolds
    INTEGRATOR_METHOD: str = "taylor"
    MAX_STEPS: int = 200_000
    BLOWUP_NORM: Decimal = Decimal(1000)
    TIME_HORIZON: Decimal = Decimal(60)
    SEED_RADIUS: Decimal = Decimal("1e-3")
    SEED_BIAS_ORDER: int = 2
    N_THETA: int = 8
    U_SECTION: Decimal = Decimal(0)
    T0: Decimal = Decimal(1)
    SHOOT_MAX_ITER: int = 12
    SWEEP_SEEDS: int = 16
    TRUST_FRACTION: Decimal = Decimal("0.1")

    # Analysis
    SHARP_BOUND_M: Decimal = Decimal(1000)
    SHARP_BOUND_KAPPA: Decimal = Decimal(2)

    # Storage
    CACHE_DIR: str = ".cache"
    OUTPUT_DIR: str = "out"
    JOBS: int = 1

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = True
        extra = "ignore"  # Ignore extra fields in .env file

    @field_validator("PRECISION_LADDER", mode="before")
    @classmethod
    def _split_ladder(cls, v):
        if isinstance(v, str):
            return [int(item.strip()) for item in v.split(",") if item.strip()]
        return v

    @field_validator("INTEGRATOR_METHOD")
    @classmethod
    def _known_method(cls, v):
        if v not in ("taylor", "dop853"):
            raise ValueError("INTEGRATOR_METHOD must be one of: taylor, dop853")
        return v

    def precision_for_delta(self, delta) -> int:
        """Bits needed so that exp(-alpha*pi/(2 d delta)) stays well above roundoff"""
        low, mid, high = self.PRECISION_LADDER
        delta = Decimal(str(delta))
        if delta >= Decimal("0.15"):
            return low
        if delta >= Decimal("0.07"):
            return mid
        return high


# at the very bottom:
settings = Settings()

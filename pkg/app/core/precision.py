# app/core/precision.py
"""
Precision contract shared by every numerical module.
File location: app/core/precision.py

All reals enter the lab as decimal text (``Decimal``) or exact rationals
(``Fraction``) and become mpmath numbers only inside ``working_precision``.
"""

from contextlib import contextmanager
from decimal import Decimal
from fractions import Fraction
from typing import Any, Optional, Union

import mpmath as mp
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config.settings import settings

# complex numbers at the active precision; mpmath rounds every operation correctly
HPComplex = mp.mpc
Real = Union[int, Decimal, Fraction, str, Any]


class ScalarConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    precision_bits: int = Field(default=256, ge=53)
    quadrature_rel_tol: Decimal = Decimal("1e-30")
    contour_shift_rho: Optional[Decimal] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _tolerance_above_roundoff(self):
        floor = Fraction(1, 2 ** (self.precision_bits - 8))
        if Fraction(self.quadrature_rel_tol) < floor:
            raise ValueError(
                f"quadrature_rel_tol {self.quadrature_rel_tol} is below 2^-{self.precision_bits - 8}"
            )
        return self

    @classmethod
    def from_settings(cls, precision_bits: Optional[int] = None) -> "ScalarConfig":
        bits = precision_bits or settings.PRECISION_BITS
        tol = Decimal(settings.QUADRATURE_REL_TOL)
        floor = Decimal(2) ** (8 - bits)
        return cls(
            precision_bits=bits,
            quadrature_rel_tol=max(tol, floor * 4),
            contour_shift_rho=settings.CONTOUR_SHIFT_RHO,
        )

    def tolerance(self) -> mp.mpf:
        return to_mpf(self.quadrature_rel_tol)

    def eps(self) -> mp.mpf:
        return mp.mpf(2) ** (-self.precision_bits)


@contextmanager
def working_precision(cfg: Union[ScalarConfig, int]):
    bits = cfg if isinstance(cfg, int) else cfg.precision_bits
    with mp.workprec(bits):
        yield


def to_mpf(value: Real) -> mp.mpf:
    if isinstance(value, Fraction):
        return mp.mpf(value.numerator) / value.denominator
    if isinstance(value, (Decimal, str)):
        return mp.mpf(str(value))
    return mp.mpf(value)


def digits_for(bits: int) -> int:
    return int(bits * 0.30103) + 3


def format_real(value, bits: Optional[int] = None) -> str:
    """Full-precision decimal text of an mpmath real."""
    if bits is None:
        bits = mp.mp.prec
    return mp.nstr(mp.mpf(value), digits_for(bits), min_fixed=-4, max_fixed=8)


def to_decimal(value, bits: Optional[int] = None) -> Decimal:
    return Decimal(format_real(value, bits))


def exact_fraction(value: Real) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(Decimal(str(value)))

# app/tests/conftest.py
from decimal import Decimal

import mpmath as mp
import pytest

from app.core.precision import ScalarConfig
from app.modules.model.schemas.model import ModelSpec, PerturbationSeries


@pytest.fixture(autouse=True)
def _restore_mp_precision():
    prec = mp.mp.prec
    yield
    mp.mp.prec = prec


@pytest.fixture
def cfg() -> ScalarConfig:
    return ScalarConfig(precision_bits=256, quadrature_rel_tol=Decimal("1e-30"))


@pytest.fixture
def low_cfg() -> ScalarConfig:
    return ScalarConfig(precision_bits=128, quadrature_rel_tol=Decimal("1e-25"))


@pytest.fixture
def conservative_spec() -> ModelSpec:
    return ModelSpec(alpha0=1, b=1, c=0, d=1, p=0, conservative=True)


@pytest.fixture
def dissipative_spec() -> ModelSpec:
    return ModelSpec(alpha0=1, b=1, c=0, d=1, p=0)


@pytest.fixture
def system_c(conservative_spec):
    """f = x^2 z, h = -x z^2: divergence-free without rotational symmetry"""
    return conservative_spec, PerturbationSeries.from_coefficients({"f3201": "1", "h3102": "-1"})


@pytest.fixture
def system_d(dissipative_spec):
    """h = z^3"""
    return dissipative_spec, PerturbationSeries.from_coefficients({"h3003": "1"})


@pytest.fixture
def unperturbed(dissipative_spec):
    return dissipative_spec, PerturbationSeries()

from fractions import Fraction

import pytest
from pydantic import ValidationError

from app.core.exceptions import DomainException
from app.modules.model.schemas.model import ModelSpec, PerturbationSeries, TaylorTerm
from app.modules.model.services.structure_service import StructureService


def test_conservative_L0_is_minus_h3003(conservative_spec):
    series = PerturbationSeries.from_coefficients({"h3003": "-0.5"})
    assert StructureService().L0_constant(conservative_spec, series) == Fraction(1, 2)


def test_L0_vanishes_without_cubic_terms(dissipative_spec):
    assert StructureService().L0_constant(dissipative_spec, PerturbationSeries()) == 0


def test_dissipative_L0_of_the_cubic_h_system(system_d):
    spec, series = system_d
    # rho0 = 2/5 and H0 = -1 for d = b = 1
    assert StructureService().L0_constant(spec, series) == Fraction(1, 5)


def test_divergence_of_the_conservative_benchmark_vanishes(system_c):
    _, series = system_c
    report = StructureService().divergence_check(series, series.qmax)
    assert report.vanishes


def test_divergence_of_the_cubic_h_system(system_d):
    _, series = system_d
    report = StructureService().divergence_check(series, 3)
    assert report.coefficients == {(3, 0, 0, 2): Fraction(3)}


def test_divergence_of_the_empty_series():
    assert StructureService().divergence_check(PerturbationSeries(), 4).max_abs == 0


def test_divergence_degree_is_bounded_by_the_truncation():
    with pytest.raises(DomainException):
        StructureService().divergence_check(PerturbationSeries(qmax=4), 5)


def test_conservative_spec_rejects_a_dissipative_table(conservative_spec):
    series = PerturbationSeries.from_coefficients({"h3003": "1"})
    with pytest.raises(DomainException):
        StructureService().check_conservative(conservative_spec, series)


def test_conservative_spec_needs_unit_d():
    with pytest.raises(ValidationError):
        ModelSpec(alpha0=1, b=1, d=2, conservative=True)


def test_taylor_terms_respect_their_order():
    with pytest.raises(ValidationError):
        TaylorTerm(component="f", q=3, k=2, m=1, n=1, value="1")
    with pytest.raises(ValueError):
        PerturbationSeries.from_coefficients({"x3000": "1"})


def test_series_rejects_terms_beyond_qmax():
    with pytest.raises(ValidationError):
        PerturbationSeries(qmax=3, terms=[TaylorTerm(component="h", q=4, k=0, m=0, n=4, value="1")])

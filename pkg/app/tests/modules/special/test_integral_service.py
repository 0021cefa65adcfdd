from decimal import Decimal

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from app.core.exceptions import DomainException
from app.core.precision import working_precision
from app.modules.special.schemas.integral import IIntegralKey
from app.modules.special.services.integral_service import IntegralService


def key(n, Q, omega, C=0, l=1, d=1):
    return IIntegralKey(n=n, Q=Decimal(str(Q)), l=l, C=Decimal(str(C)), omega=Decimal(str(omega)), d=Decimal(str(d)))


def relative(a, b):
    return abs(a - b) / abs(b)


def test_odd_integrand_on_the_real_line_vanishes(cfg):
    assert IntegralService(cfg).I_quadrature(key(1, 2, 10, l=0)).value == 0


def test_real_line_integral_of_sech_squared(cfg):
    value = IntegralService(cfg).I_quadrature(key(0, 1, 10, l=0)).value
    with working_precision(cfg):
        assert abs(value - 2) < mp.mpf("1e-28")


def test_beta_closed_form_against_elementary_value(cfg):
    service = IntegralService(cfg)
    closed = service.I_closed_beta(2, 0, 10, 1)
    quadrature = service.I_quadrature(key(0, 2, 10)).value
    with working_precision(cfg):
        expected = mp.pi * 101 / (2 * mp.cosh(5 * mp.pi))
        assert relative(closed, expected) < mp.mpf("1e-60")
        assert relative(quadrature, expected) < mp.mpf("1e-20")


@pytest.mark.parametrize("Q", [1, 2, 3, 5])
@pytest.mark.parametrize("C", [0, 1])
@pytest.mark.parametrize("omega", [10, 20, 40])
def test_beta_closed_form_matches_quadrature(cfg, Q, C, omega):
    service = IntegralService(cfg)
    closed = service.I_closed_beta(Q, C, omega, 1)
    quadrature = service.I_quadrature(key(0, Q, omega, C=C)).value
    with working_precision(cfg):
        assert relative(quadrature, closed) <= mp.mpf("1e-20")


@settings(max_examples=30, deadline=None)
@given(
    Q=st.floats(min_value=0.5, max_value=6.0),
    C=st.floats(min_value=-2.0, max_value=2.0),
    omega=st.floats(min_value=1.0, max_value=50.0),
)
def test_closed_form_conjugation(Q, C, omega):
    service = IntegralService()
    value = service.I_closed_beta(Q, C, omega, 1)
    mirrored = service.I_closed_beta(Q, -C, -omega, 1)
    with working_precision(256):
        assert abs(value - mp.conj(mirrored)) <= mp.mpf("1e-60") * abs(value)


def test_recurrence_first_step_matches_quadrature(cfg):
    service = IntegralService(cfg)
    target = key(1, 3, 10)
    base = service.I_quadrature(key(0, 2, 10)).value
    lifted = service.I_recurrence(target, (base, None))
    with working_precision(cfg):
        assert relative(lifted, service.I_quadrature(target).value) <= mp.mpf("1e-18")


def test_recurrence_second_step_matches_quadrature(cfg):
    service = IntegralService(cfg)
    target = key(2, 4, 10, C=1)
    previous = service.I_quadrature(key(1, 3, 10, C=1)).value
    before_previous = service.I_quadrature(key(0, 2, 10, C=1)).value
    lifted = service.I_recurrence(target, (previous, before_previous))
    with working_precision(cfg):
        assert relative(lifted, service.I_quadrature(target).value) <= mp.mpf("1e-18")


def test_recurrence_is_linear(cfg):
    service = IntegralService(cfg)
    target = key(2, 4, 10)
    with working_precision(cfg):
        a, b, scale = mp.mpc(1, 2), mp.mpc(-3, 1), mp.mpf("2.5")
    plain = service.I_recurrence(target, (a, b))
    scaled = service.I_recurrence(target, (scale * a, scale * b))
    with working_precision(cfg):
        assert abs(scaled - scale * plain) < mp.mpf("1e-70")


def test_recurrence_needs_both_base_values(cfg):
    with pytest.raises(DomainException):
        IntegralService(cfg).I_recurrence(key(2, 4, 10), (mp.mpc(1), None))


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("omega", [10, 20, 40])
def test_beta_recurrence_matches_quadrature(cfg, n, omega):
    service = IntegralService(cfg)
    for Q, C in ((3, 0), (5, 1)):
        k = key(n, Q, omega, C=C)
        with working_precision(cfg):
            assert relative(service.I_beta_recurrence(k).value, service.I_quadrature(k).value) <= mp.mpf("1e-18")


def test_asymptotic_error_decreases_with_omega(cfg):
    service = IntegralService(cfg)
    errors = []
    for omega in (20, 40, 80):
        exact = service.I_closed_beta(3, 0, omega, 1)
        with working_precision(cfg):
            errors.append(abs(exact / service.I_asymptotic(0, 3, 0, omega, 1) - 1))
    with working_precision(cfg):
        assert errors[0] <= mp.mpf(8) / 20
        assert errors[0] / errors[1] >= mp.mpf("1.4")
        assert errors[1] / errors[2] >= mp.mpf("1.4")


def test_asymptotic_phase_factor(cfg):
    service = IntegralService(cfg)
    zero = service.I_asymptotic(0, 3, 1, 20, 1)
    with working_precision(cfg):
        assert abs(service.I_asymptotic(4, 3, 1, 20, 1) - zero) <= mp.mpf("1e-70") * abs(zero)
        assert abs(service.I_asymptotic(1, 3, 1, 20, 1) / zero - mp.mpc(0, -1)) < mp.mpf("1e-70")
        assert abs(service.I_asymptotic(0, 3, -1, 20, 1) - mp.conj(zero)) <= mp.mpf("1e-70") * abs(zero)


def test_bound_check_for_higher_modes(cfg):
    service = IntegralService(cfg)
    k = key(0, 2, 20, l=2)
    assert service.I_bound_check(k, service.I_quadrature(k).value)
    assert service.I_bound_check(k, 0)
    with pytest.raises(DomainException):
        service.I_bound_check(key(0, 2, 20, l=1), 0)


def test_triangulation_row(cfg):
    row = IntegralService(cfg).triangulate(key(1, 3, 20, C=1))
    assert row.error is None
    with working_precision(cfg):
        assert row.gap_quadrature_beta <= mp.mpf("1e-18")
        assert row.gap_beta_asymptotic <= mp.mpf(8) / 20


def test_lattice_skips_divergent_points(cfg):
    keys = IntegralService(cfg).lattice([0, 2], [Decimal(1), Decimal(3)], [Decimal(0)], [Decimal(10)], Decimal(1))
    assert [(k.n, k.Q) for k in keys] == [(0, 1), (0, 3), (2, 3)]


def test_key_requires_convergence():
    with pytest.raises(ValidationError):
        key(2, 1, 10)

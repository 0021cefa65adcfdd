import mpmath as mp

from app.core.precision import working_precision
from app.modules.manifolds.services.taylor_integrator import (
    TaylorJet,
    derivative_coefficients,
    evaluate_jet,
    horner,
    order_for,
    refine_root,
    step_size,
)
from app.modules.model.services.polynomial_field import PolynomialField


def test_jet_of_the_exponential():
    with working_precision(256):
        jet = TaylorJet(PolynomialField([{(1, 0, 0): mp.mpf(1)}, {}, {}]))
        series = jet.coefficients([mp.mpf(1), mp.mpf(0), mp.mpf(0)], 12)
        for j, value in enumerate(series[0]):
            assert abs(value - 1 / mp.factorial(j)) < mp.mpf("1e-70")
        assert all(v == 0 for v in series[1] + series[2])


def test_jet_of_a_quadratic_field():
    # z' = z^2 - 1 through z = 0 is -tanh t
    with working_precision(256):
        jet = TaylorJet(PolynomialField([{}, {}, {(0, 0, 0): mp.mpf(-1), (0, 0, 2): mp.mpf(1)}]))
        series = jet.coefficients([mp.mpf(0), mp.mpf(0), mp.mpf(0)], 9)
        expected = mp.taylor(lambda t: -mp.tanh(t), 0, 9)
        for got, want in zip(series[2], expected):
            assert abs(got - want) < mp.mpf("1e-50")
        value = evaluate_jet(series, mp.mpf("0.01"))[2]
        assert abs(value + mp.tanh(mp.mpf("0.01"))) < mp.mpf("1e-20")


def test_order_grows_with_the_tolerance():
    with working_precision(256):
        assert order_for(mp.mpf("1e-2")) == 8
        assert order_for(mp.mpf("1e-60")) == 71


def test_step_size_of_a_constant_jet_is_unbounded():
    with working_precision(128):
        assert step_size([[mp.mpf(1), mp.mpf(0), mp.mpf(0)]], mp.mpf("1e-20"), 1, 1) is None


def test_polynomial_helpers():
    with working_precision(128):
        assert horner([mp.mpf(1), mp.mpf(2), mp.mpf(3)], mp.mpf(2)) == 17
        assert derivative_coefficients([mp.mpf(5)]) == [0]
        assert derivative_coefficients([mp.mpf(1), mp.mpf(2), mp.mpf(3)]) == [2, 6]
        root, residual = refine_root([mp.mpf(-1), mp.mpf(0), mp.mpf(1)], 0, mp.mpf(2), mp.mpf("1e-30"))
        assert abs(root - 1) < mp.mpf("1e-30")
        assert residual < mp.mpf("1e-30")

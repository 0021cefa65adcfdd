from fractions import Fraction

import mpmath as mp
import pytest

from app.core.precision import working_precision
from app.modules.melnikov.schemas.melnikov import Branch, MelnikovRoute
from app.modules.melnikov.services.average_service import AverageService
from app.modules.melnikov.services.borel_service import BorelService
from app.modules.melnikov.services.melnikov_service import MelnikovService
from app.modules.model.schemas.model import ModelSpec, PerturbationSeries
from app.modules.special.services.integral_service import closed_value
from app.tests.factories import params


def _close(a, b, budget):
    return abs(a - b) <= budget


def test_zero_forcing_gives_zero_melnikov(unperturbed, cfg):
    spec, series = unperturbed
    service = MelnikovService(cfg)
    p = params("0.1")
    assert service.melnikov_pointwise(spec, series, p, 0, 1).value == 0
    assert service.upsilon0_quadrature(spec, series, p, 1).value == 0
    assert service.upsilon0_gamma_series(spec, series, p, 1).value == 0
    assert service.r10_graph(spec, series, p, Branch.UNSTABLE, "0.5", 1).value == 0


@pytest.mark.parametrize("delta", ["0.2", "0.1", "0.05"])
def test_conservative_average_vanishes(system_c, cfg, delta):
    spec, series = system_c
    value = MelnikovService(cfg).upsilon0_quadrature(spec, series, params(delta), 0).value
    with working_precision(cfg):
        assert abs(value) <= mp.mpf("1e-25") * mp.mpf(delta) ** 3


def test_negative_mode_is_the_conjugate(system_c, cfg):
    spec, series = system_c
    service = MelnikovService(cfg)
    plus = service.upsilon0_quadrature(spec, series, params("0.1"), 1)
    minus = service.upsilon0_quadrature(spec, series, params("0.1"), -1)
    with working_precision(cfg):
        assert _close(minus.value, mp.conj(plus.value), plus.error + minus.error + mp.mpf("1e-25") * abs(plus.value))


@pytest.mark.parametrize("l", [1, -1])
def test_quadrature_and_gamma_series_routes_agree(system_c, cfg, l):
    spec, series = system_c
    service = MelnikovService(cfg)
    quad = service.upsilon0_quadrature(spec, series, params("0.1"), l)
    gamma = service.upsilon0_gamma_series(spec, series, params("0.1"), l)
    with working_precision(cfg):
        assert quad.value != 0
        assert _close(quad.value, gamma.value, quad.error + gamma.error + mp.mpf("1e-20") * abs(quad.value))


def test_single_coefficient_gamma_series(dissipative_spec, cfg):
    series = PerturbationSeries.from_coefficients({"f4400": "1"})
    service = MelnikovService(cfg)
    p = params("0.1")
    gamma = service.upsilon0_gamma_series(dissipative_spec, series, p, 1)
    with working_precision(cfg):
        # delta^4 (sqrt 2)^5 times the mode 1 of cos^5, 10/32, times I_{0,6}^{1,0}(10)
        expected = (
            mp.mpf("0.1") ** 4 * 4 * mp.sqrt(2) * mp.mpf(10) / 32
            * closed_value(0, mp.mpf(6), mp.mpf(0), mp.mpf(10), mp.mpf(1))
        )
        assert _close(gamma.value, expected, mp.mpf("1e-40") * abs(expected))
    quad = service.upsilon0_quadrature(dissipative_spec, series, p, 1)
    with working_precision(cfg):
        assert _close(quad.value, gamma.value, quad.error + gamma.error + mp.mpf("1e-20") * abs(quad.value))


def test_coefficient_law_for_the_conservative_benchmark(system_c, cfg):
    spec, series = system_c
    borel = BorelService(cfg).borel_constant(spec, series)
    gaps = {}
    for delta in ("0.1", "0.05"):
        service = MelnikovService(cfg)
        p = params(delta)
        upsilon = service.upsilon0_quadrature(spec, series, p, 1).value
        predicted = service.predicted_mode_one(spec, p, borel)
        with working_precision(cfg):
            gaps[delta] = abs(upsilon / predicted - 1)
            if delta == "0.1":
                factor = 1 + 5 * mp.mpf(delta)
                assert 1 / factor <= abs(upsilon) / abs(predicted) <= factor
    with working_precision(cfg):
        assert gaps["0.05"] <= mp.mpf("0.5")
        assert gaps["0.05"] <= 3 * gaps["0.1"] * mp.mpf("0.5") * 3


def test_dissipative_benchmark_has_no_oscillating_modes(system_d, cfg):
    spec, series = system_d
    service = MelnikovService(cfg)
    for l in (1, -1):
        estimate = service.upsilon0_quadrature(spec, series, params("0.1"), l)
        with working_precision(cfg):
            assert abs(estimate.value) <= estimate.error + mp.mpf("1e-60")
    assert BorelService(cfg).borel_constant(spec, series).C1 == 0


def test_pointwise_matches_the_mode_reconstruction(system_c, cfg):
    spec, series = system_c
    service = MelnikovService(cfg)
    p = params("0.1")
    result = service.coefficients(spec, series, p)
    assert result.route == MelnikovRoute.QUADRATURE
    assert result.upsilon0.indices() == list(range(-4, 5))
    budget_modes = sum(result.error_estimate.values())
    for theta in ("0", "1.3", "4"):
        pointwise = service.melnikov_pointwise(spec, series, p, 0, theta)
        reconstructed = service.melnikov_from_modes(spec, p, result.upsilon0, 0, theta)
        with working_precision(cfg):
            budget = pointwise.error + budget_modes + mp.mpf("1e-25") * mp.mpf("0.1") ** 3
            assert _close(pointwise.value, reconstructed, budget)


def test_reconstruction_is_real(system_c, cfg):
    spec, series = system_c
    service = MelnikovService(cfg)
    result = service.coefficients(spec, series, params("0.1"), L=2)
    with working_precision(cfg):
        value = result.upsilon0.evaluate(mp.mpf("0.7"))
        assert abs(mp.im(value)) <= 4 * max(result.error_estimate.values()) + mp.mpf("1e-60")


def test_pointwise_average_is_sigma_i_plus_j(system_d, cfg):
    spec, series = system_d
    p = params("0.1", "0.0001")
    averages = AverageService(cfg).average_IJ(spec, series, p)
    service = MelnikovService(cfg)
    samples = [service.melnikov_pointwise(spec, series, p, 0, theta) for theta in ("0", "2.1", "4.2")]
    with working_precision(cfg):
        mean = mp.fsum(s.value for s in samples) / 3
        expected = mp.mpf("0.0001") * averages.I + mp.mpf("0.1") ** 3 * averages.J
        budget = max(s.error for s in samples) + mp.mpf("1e-25") * abs(expected)
        assert _close(mean, expected, budget)


@pytest.mark.parametrize("u, theta", [("-0.5", "0"), ("0", "2"), ("0.75", "5")])
def test_graphs_differ_by_the_melnikov_function(system_c, cfg, u, theta):
    spec, series = system_c
    service = MelnikovService(cfg)
    p = params("0.1")
    unstable = service.r10_graph(spec, series, p, Branch.UNSTABLE, u, theta)
    stable = service.r10_graph(spec, series, p, Branch.STABLE, u, theta)
    melnikov = service.melnikov_pointwise(spec, series, p, u, theta)
    assert unstable.bound_ok and stable.bound_ok
    with working_precision(cfg):
        budget = unstable.error + stable.error + melnikov.error + mp.mpf("1e-25") * mp.mpf("0.1") ** 3
        assert _close(unstable.value - stable.value, melnikov.value, budget)


@pytest.mark.slow
def test_graph_identity_on_the_full_grid(system_c, cfg):
    spec, series = system_c
    service = MelnikovService(cfg)
    p = params("0.1")
    for i in range(9):
        u = mp.mpf(-1) + mp.mpf(i) / 4
        for j in range(8):
            theta = 2 * mp.pi * j / 8
            unstable = service.r10_graph(spec, series, p, Branch.UNSTABLE, u, theta)
            stable = service.r10_graph(spec, series, p, Branch.STABLE, u, theta)
            melnikov = service.melnikov_pointwise(spec, series, p, u, theta)
            with working_precision(cfg):
                budget = unstable.error + stable.error + melnikov.error + mp.mpf("1e-25") * mp.mpf("0.1") ** 3
                assert _close(unstable.value - stable.value, melnikov.value, budget)


def test_graph_magnitude_bound_on_a_sweep(system_c, cfg):
    spec, series = system_c
    service = MelnikovService(cfg)
    for u in ("-2", "-1", "0", "1", "2"):
        assert service.r10_graph(spec, series, params("0.1"), Branch.UNSTABLE, u, "0.4").bound_ok


def test_asymptotic_error_shrinks_with_delta(system_c, cfg):
    spec, series = system_c
    service = MelnikovService(cfg)
    borel = service.borel_service.borel_constant(spec, series)
    errors = []
    for delta in ("0.1", "0.05"):
        p = params(delta)
        with working_precision(cfg):
            d = mp.mpf(delta)
            amplitude = mp.power(d, -2) * mp.exp(-mp.pi / (2 * d)) * abs(mp.mpc(borel.value))
        worst = mp.mpf(0)
        for theta in ("0", "1.5707963267948966"):
            exact = service.melnikov_pointwise(spec, series, p, 0, theta).value
            approx = service.melnikov_asymptotic(spec, series, p, 0, theta, borel=borel)
            with working_precision(cfg):
                worst = max(worst, abs(exact - approx) / amplitude)
        errors.append(worst)
    with working_precision(cfg):
        assert errors[1] <= 3 * mp.mpf("0.5") * errors[0]


def test_negated_constant_shifts_the_oscillation_by_pi(system_c, cfg):
    spec, series = system_c
    service = MelnikovService(cfg)
    borel = service.borel_service.borel_constant(spec, series)
    flipped = borel.model_copy(update={"C1": -borel.C1, "C2": -borel.C2})
    p = params("0.1")
    with working_precision(cfg):
        theta = mp.mpf("0.3")
        a = service.melnikov_asymptotic(spec, series, p, "0.2", theta, borel=borel)
        b = service.melnikov_asymptotic(spec, series, p, "0.2", theta + mp.pi, borel=flipped)
        assert abs(a - b) <= mp.mpf("1e-60") * (1 + abs(a))


def test_phase_correction_keeps_the_magnitude(system_c, cfg):
    spec, _ = system_c
    service = MelnikovService(cfg)
    p = params("0.1")
    with working_precision(cfg):
        upsilon = mp.mpc("1e-7", "-3e-7")
        assert service.upsilon_hat(upsilon, 1, Fraction(0), spec, p) == upsilon
        hat = service.upsilon_hat(upsilon, 1, Fraction(1, 5), spec, p)
        assert abs(abs(hat) - abs(upsilon)) < mp.mpf("1e-70")
        # exp(-i 1 * 0.2 * 0.01 * log 0.1)
        assert abs(hat / upsilon - mp.expj(-mp.mpf("0.002") * mp.log(mp.mpf("0.1")))) < mp.mpf("1e-70")


def test_higher_modes_decay(system_c, cfg):
    spec, series = system_c
    service = MelnikovService(cfg)
    p = params("0.1")
    result = service.coefficients(spec, series, p, L=3)
    checks = service.higher_mode_decay_ok(spec, series, p, result.upsilon0)
    assert set(checks) == {-3, -2, 2, 3}
    assert all(checks.values())


def _rotating_system():
    spec = ModelSpec(alpha0=1, b=1, c="0.5", d=1, p=0)
    series = PerturbationSeries.from_coefficients({"f3201": "1", "g3111": "0.5", "h3003": "1"})
    return spec, series


@pytest.mark.parametrize("l", [1, 2])
def test_quadrature_modes_are_conjugate_with_rotation(low_cfg, l):
    spec, series = _rotating_system()
    service = MelnikovService(low_cfg)
    p = params("0.2", "0.001")
    plus = service.upsilon0_quadrature(spec, series, p, l)
    minus = service.upsilon0_quadrature(spec, series, p, -l)
    with working_precision(low_cfg):
        assert plus.value != 0
        assert _close(minus.value, mp.conj(plus.value), plus.error + minus.error + mp.mpf("1e-15") * abs(plus.value))


def test_conjugation_holds_across_routes(low_cfg):
    spec, series = _rotating_system()
    service = MelnikovService(low_cfg)
    p = params("0.2", "0.001")
    quad = service.upsilon0_quadrature(spec, series, p, 1)
    gamma = service.upsilon0_gamma_series(spec, series, p, -1)
    with working_precision(low_cfg):
        assert _close(gamma.value, mp.conj(quad.value), quad.error + gamma.error + mp.mpf("1e-15") * abs(quad.value))

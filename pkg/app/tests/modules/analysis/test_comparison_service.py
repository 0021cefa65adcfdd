from decimal import Decimal
from fractions import Fraction

import mpmath as mp
import pytest

from app.core.exceptions import DomainException
from app.core.precision import ScalarConfig, working_precision
from app.modules.analysis.services.comparison_service import ComparisonService
from app.modules.melnikov.schemas.melnikov import SigmaTarget
from app.modules.melnikov.services.borel_service import BorelService
from app.modules.melnikov.services.melnikov_service import MelnikovService
from app.tests.factories import splitting_sample


def _melnikov_provider(excess):
    """Samples whose mode 1 is the Melnikov prediction times 1 + excess(delta)"""

    def provide(spec, series, params, bits):
        cfg = ScalarConfig.from_settings(bits)
        upsilon = MelnikovService(cfg).upsilon0_quadrature(spec, series, params, 1).value
        with working_precision(128):
            mode = upsilon * (1 + excess(params.delta))
            thetas = [2 * mp.pi * j / 3 for j in range(3)]
            values = [2 * mp.re(mode * mp.expj(t)) for t in thetas]
            return splitting_sample(values, budget=mp.nstr(abs(mode) * mp.mpf("1e-4"), 10), delta=params.delta)

    return provide


def test_routes_agree_on_consistent_samples(system_c):
    spec, series = system_c
    report = ComparisonService().compare_routes(
        spec, series, ["0.15", "0.25", "0.2"], u_section=0,
        provider=_melnikov_provider(lambda delta: mp.mpf(str(delta)) / 4),
    )
    assert [row.delta for row in report.rows] == [Decimal("0.25"), Decimal("0.2"), Decimal("0.15")]
    with working_precision(128):
        for row in report.rows:
            assert abs(row.ratio_melnikov - (1 + mp.mpf(str(row.delta)) / 4)) < mp.mpf("1e-6")
            assert row.phase_gap < mp.mpf("1e-6")
            assert row.ratio_asymptotic is not None
    assert report.fit is None
    assert report.verdicts["all_trusted"]
    assert report.verdicts["melnikov_deviation_shrinks"]
    assert report.verdicts["zero_average"]
    assert report.passed


def test_growing_deviation_fails(system_c):
    spec, series = system_c
    report = ComparisonService().compare_routes(
        spec, series, ["0.25", "0.2", "0.15"], u_section=0,
        provider=_melnikov_provider(lambda delta: 1 / (10 * mp.mpf(str(delta)))),
    )
    assert not report.verdicts["melnikov_deviation_shrinks"]
    assert not report.passed


def test_predicted_distance(system_c, cfg):
    spec, series = system_c
    borel = BorelService(cfg).borel_constant(spec, series)
    service = ComparisonService()
    with working_precision(cfg):
        value = service.predicted_distance(spec, borel, "0.01", 0, mp.pi / 2, Fraction(0), bits=256)
        # sqrt(b/(d+1)) exp(-pi/(2 delta)) delta^(q - 2/d - 1) C2 at u = 0, vartheta = 0
        expected = mp.sqrt(mp.mpf("0.5")) * mp.exp(-5 * mp.pi) * 10 * borel.C2
        assert abs(value - expected) < mp.mpf("1e-60") * abs(expected)
    with pytest.raises(DomainException):
        service.predicted_distance(spec, borel, 0, 0, 0, Fraction(0))


def test_wedge_bound_takes_the_slower_curve():
    service = ComparisonService()
    upper = SigmaTarget(a1=Decimal(1), a2=Decimal(3), a3=Decimal(1))
    lower = SigmaTarget(a1=Decimal(-2), a2=Decimal(3), a3=Decimal(2))
    with working_precision(256):
        bound = service.wedge_bound(upper, lower, 1, "0.1", bits=256)
        assert abs(bound - mp.mpf("0.001") * mp.exp(-5 * mp.pi)) < mp.mpf("1e-70")


def test_wedge_needs_curves_on_both_sides():
    service = ComparisonService()
    above = SigmaTarget(a1=Decimal(1), a2=Decimal(3), a3=Decimal(1))
    with pytest.raises(DomainException):
        service.wedge_bound(above, above, 1, "0.1")


@pytest.mark.slow
def test_measured_splitting_follows_melnikov(system_c):
    spec, series = system_c
    report = ComparisonService().compare_routes(spec, series, ["0.25", "0.2", "0.15", "0.12"], u_section=0, n_theta=8)
    rows = {str(row.delta): row for row in report.rows}
    assert report.verdicts["all_trusted"]
    assert abs(rows["0.25"].ratio_melnikov - 1) <= 0.3
    assert abs(rows["0.15"].ratio_melnikov - 1) <= 0.15
    assert rows["0.15"].phase_gap <= 0.3
    assert report.verdicts["melnikov_deviation_shrinks"]
    assert report.verdicts["fit_rate"] and report.verdicts["fit_power"]

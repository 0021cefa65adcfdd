import mpmath as mp
import pytest

from app.core.exceptions import DomainException
from app.core.precision import working_precision
from app.modules.manifolds.schemas.manifold import IntegratorConfig, Side
from app.modules.manifolds.services.section_service import SectionService, wrap_angle
from app.tests.factories import params


def test_wrap_angle():
    with working_precision(128):
        assert abs(wrap_angle(3 * mp.pi / 2) + mp.pi / 2) < mp.mpf("1e-35")
        assert abs(wrap_angle(mp.pi) + mp.pi) < mp.mpf("1e-35")
        assert wrap_angle(mp.mpf("0.25")) == mp.mpf("0.25")


def test_section_level(dissipative_spec, low_cfg):
    service = SectionService(low_cfg)
    with working_precision(low_cfg):
        assert service.section_level(dissipative_spec, 0) == 0
        assert abs(service.section_level(dissipative_spec, "0.5") - mp.tanh(mp.mpf("0.5"))) < mp.mpf("1e-35")
    with pytest.raises(DomainException):
        service.section_level(dissipative_spec, "1.5")


def test_unperturbed_crossing_sits_on_the_heteroclinic(unperturbed, low_cfg):
    spec, series = unperturbed
    service = SectionService(low_cfg, IntegratorConfig.from_settings(method="dop853"))
    p = params("0.1")
    frame = service.seeding_service.seed_frame(spec, series, p, Side.UNSTABLE)
    level = service.section_level(spec, 0)
    crossing = service.crossing(spec, series, p, frame, 0, "1e-3", level)
    with working_precision(low_cfg):
        # R0(0) = (d + 1) / (2 b) = 1
        assert abs(crossing.r_at_section - 1) < mp.mpf("1e-6")
        assert crossing.crossing_time > 0


def test_shooting_matches_the_target_angles(unperturbed, low_cfg):
    spec, series = unperturbed
    service = SectionService(low_cfg, IntegratorConfig.from_settings(method="dop853"))
    targets = [mp.mpf(0), mp.mpf(2)]
    crossings = service.section_radius(spec, series, params("0.1"), Side.STABLE, 0, targets, rho="1e-3")
    with working_precision(low_cfg):
        for target, crossing in zip(targets, crossings):
            assert abs(wrap_angle(crossing.theta_at_section - target)) < mp.mpf("1e-6")
            assert crossing.crossing_time < 0

import mpmath as mp
import pytest

from app.core.exceptions import DomainException
from app.core.precision import ScalarConfig, working_precision
from app.modules.manifolds.schemas.manifold import Side
from app.modules.manifolds.services.seeding_service import SeedingService
from app.tests.factories import params


@pytest.mark.parametrize("side, point", [(Side.UNSTABLE, -1), (Side.STABLE, 1)])
def test_unperturbed_frame(unperturbed, cfg, side, point):
    spec, series = unperturbed
    frame = SeedingService(cfg).seed_frame(spec, series, params("0.1"), side)
    with working_precision(cfg):
        assert frame.point == [0, 0, point]
        assert abs(abs(frame.normal[2]) - 1) < mp.mpf("1e-60")
        # z + 1 = (x^2 + y^2) / 4 near S_minus, so the graph Hessian is I / 2 up to the sign of the normal
        H = frame.graph_hessian
        assert abs(abs(H[0, 0]) - mp.mpf("0.5")) < mp.mpf("1e-50")
        assert abs(H[0, 0] - H[1, 1]) < mp.mpf("1e-50")
        assert abs(H[0, 1]) < mp.mpf("1e-50")
        assert abs(abs(mp.im(frame.complex_eigenvalue)) - 10) < mp.mpf("1e-50")


def test_seed_points_lie_on_the_unperturbed_manifold(unperturbed, cfg):
    spec, series = unperturbed
    service = SeedingService(cfg)
    rho = mp.mpf("1e-3")
    seeds = service.seed_manifold(spec, series, params("0.1"), Side.UNSTABLE, rho, 6)
    assert len(seeds) == 6
    with working_precision(cfg):
        for seed in seeds:
            x, y, z = seed.as_list()
            assert abs(mp.sqrt(x**2 + y**2 + (z + 1) ** 2) - rho) < mp.mpf("1e-25")
            # exact surface: (x^2 + y^2) / 2 = 1 - z^2
            assert abs((x**2 + y**2) / 2 - (1 - z**2)) < rho**3


def test_correction_improves_on_the_linear_seed(unperturbed, cfg):
    spec, series = unperturbed
    service = SeedingService(cfg)
    frame = service.seed_frame(spec, series, params("0.1"), Side.STABLE)
    rho = mp.mpf("1e-2")
    with working_precision(cfg):
        gaps = []
        for correction in (False, True):
            x, y, z = service.seed_point(frame, "0.4", rho, correction)
            gaps.append(abs((x**2 + y**2) / 2 - (1 - z**2)))
        assert gaps[1] < gaps[0] / 10


def test_seed_count_must_be_positive(unperturbed, cfg):
    spec, series = unperturbed
    with pytest.raises(DomainException):
        SeedingService(cfg).seed_manifold(spec, series, params("0.1"), Side.UNSTABLE, "1e-3", 0)


def test_perturbed_frames_exist(system_c):
    spec, series = system_c
    service = SeedingService(ScalarConfig(precision_bits=128, quadrature_rel_tol="1e-25"))
    for side in Side:
        frame = service.seed_frame(spec, series, params("0.2"), side)
        assert len(frame.plane) == 2

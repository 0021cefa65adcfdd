import mpmath as mp
import pytest

from app.core.exceptions import BlowUpException, DomainException
from app.core.precision import working_precision
from app.modules.manifolds.schemas.manifold import IntegratorConfig, IntegratorMethod, SectionEvent
from app.modules.manifolds.services.integrator_service import IntegratorService
from app.modules.model.schemas.model import StateCartesian
from app.tests.factories import params


def _axis(z):
    return StateCartesian(x=mp.mpf(0), y=mp.mpf(0), z=mp.mpf(z))


@pytest.fixture
def taylor_cfg():
    return IntegratorConfig.from_settings(128, "taylor")


@pytest.fixture
def dop853_cfg():
    return IntegratorConfig.from_settings(method="dop853")


def test_taylor_follows_the_axis_connection(unperturbed, taylor_cfg):
    spec, series = unperturbed
    trajectory = IntegratorService(taylor_cfg).integrate(spec, series, params("0.1"), _axis(0), 1)
    with working_precision(128):
        x, y, z = trajectory.final_state
        assert x == 0 and y == 0
        assert abs(z + mp.tanh(1)) < mp.mpf("1e-25")
        assert trajectory.t_final == 1


def test_taylor_integrates_backwards(unperturbed, taylor_cfg):
    spec, series = unperturbed
    trajectory = IntegratorService(taylor_cfg).integrate(spec, series, params("0.1"), _axis(0), -1)
    with working_precision(128):
        assert abs(trajectory.final_state[2] - mp.tanh(1)) < mp.mpf("1e-25")


def test_dop853_follows_the_axis_connection(unperturbed, dop853_cfg):
    spec, series = unperturbed
    trajectory = IntegratorService(dop853_cfg).integrate(spec, series, params("0.1"), _axis(0), 1)
    with working_precision(53):
        assert abs(trajectory.final_state[2] + mp.tanh(1)) < mp.mpf("1e-9")


@pytest.mark.parametrize("method", ["taylor", "dop853"])
def test_section_event(unperturbed, method):
    spec, series = unperturbed
    cfg = IntegratorConfig.from_settings(128, method)
    event = SectionEvent(level=mp.mpf("-0.5"), component=2, direction=-1)
    trajectory = IntegratorService(cfg).integrate(spec, series, params("0.1"), _axis(0), 5, event=event)
    assert trajectory.event_hit
    with working_precision(128):
        tolerance = mp.mpf("1e-20") if method == "taylor" else mp.mpf("1e-8")
        assert abs(trajectory.t_final - mp.atanh(mp.mpf("0.5"))) < tolerance
        assert abs(trajectory.final_state[2] + mp.mpf("0.5")) < tolerance


def test_zero_horizon_returns_the_initial_state(unperturbed, taylor_cfg):
    spec, series = unperturbed
    trajectory = IntegratorService(taylor_cfg).integrate(spec, series, params("0.1"), _axis("0.3"), 0)
    assert trajectory.steps == 0
    assert trajectory.final_state == trajectory.state0


def test_blow_up_is_reported(unperturbed, taylor_cfg):
    # z' = z^2 - 1 from z = 2 reaches infinity at t = atanh(1/2)
    spec, series = unperturbed
    with pytest.raises(BlowUpException):
        IntegratorService(taylor_cfg).integrate(spec, series, params("0.1"), _axis(2), 1)


def test_non_finite_initial_state(unperturbed, taylor_cfg):
    spec, series = unperturbed
    with pytest.raises(DomainException):
        IntegratorService(taylor_cfg).integrate(spec, series, params("0.1"), _axis(mp.nan), 1)


def test_dense_checkpoints_reproduce_the_flow(unperturbed, taylor_cfg):
    spec, series = unperturbed
    trajectory = IntegratorService(taylor_cfg).integrate(spec, series, params("0.1"), _axis(0), 1, dense=True)
    assert len(trajectory.checkpoints) == trajectory.steps
    with working_precision(128):
        checkpoint = trajectory.checkpoints[len(trajectory.checkpoints) // 2]
        assert abs(checkpoint.coefficients[2][0] + mp.tanh(checkpoint.t)) < mp.mpf("1e-25")


def test_replicate_error_is_small(system_c, taylor_cfg):
    spec, series = system_c
    state = StateCartesian(x=mp.mpf("0.01"), y=mp.mpf(0), z=mp.mpf("-0.9"))
    error = IntegratorService(taylor_cfg).replicate_error(spec, series, params("0.2"), state, "0.5")
    with working_precision(128):
        assert error < mp.mpf("1e-20")


def test_conservative_flow_preserves_volume(system_c, taylor_cfg):
    spec, series = system_c
    state = StateCartesian(x=mp.mpf("0.3"), y=mp.mpf("0.1"), z=mp.mpf("-0.2"))
    drift = IntegratorService(taylor_cfg).volume_drift(spec, series, params("0.2"), state, "0.5")
    with working_precision(128):
        assert drift < mp.mpf("1e-15")


def test_dissipative_flow_follows_liouville(system_d, taylor_cfg):
    spec, series = system_d
    state = StateCartesian(x=mp.mpf("0.3"), y=mp.mpf("0.1"), z=mp.mpf("-0.2"))
    drift = IntegratorService(taylor_cfg).volume_drift(spec, series, params("0.2", "0.001"), state, "0.5")
    with working_precision(128):
        assert drift < mp.mpf("1e-15")


def test_dop853_rejects_tolerances_below_float64():
    with pytest.raises(ValueError):
        IntegratorConfig(method=IntegratorMethod.DOP853, abs_tol="1e-20", rel_tol="1e-20", precision_bits=53)

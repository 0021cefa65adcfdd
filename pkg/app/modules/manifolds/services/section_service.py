# app/modules/manifolds/services/section_service.py
"""
Crossings of the invariant manifolds with the section z = Z0(u).
File location: app/modules/manifolds/services/section_service.py

The unstable manifold is followed forward from S_minus until z first
rises through Z0(u); the stable one backward from S_plus until z first
falls through it. The angle at the section is matched to each target by
secant iterations on the seed angle, with a sweep and trigonometric
interpolation as fallback.
"""

import logging
from typing import List, Optional, Tuple

import mpmath as mp

from app.config.settings import settings
from app.core.exceptions import DomainException, SectionException
from app.core.precision import ScalarConfig, to_mpf, working_precision
from app.modules.manifolds.schemas.manifold import IntegratorConfig, SectionCrossing, SectionEvent, SeedFrame, Side
from app.modules.manifolds.services.integrator_service import IntegratorService
from app.modules.manifolds.services.seeding_service import SeedingService
from app.modules.model.schemas.model import ModelSpec, Params, PerturbationSeries, StateCartesian
from app.modules.model.services.polynomial_field import full_field

logger = logging.getLogger(__name__)


def wrap_angle(angle):
    """Representative in [-pi, pi)"""
    return (angle + mp.pi) % (2 * mp.pi) - mp.pi


class SectionService:
    def __init__(self, cfg: Optional[ScalarConfig] = None, integrator_cfg: Optional[IntegratorConfig] = None):
        self.cfg = cfg or ScalarConfig.from_settings()
        self.integrator_cfg = integrator_cfg or IntegratorConfig.from_settings(self.cfg.precision_bits)
        self.integrator_service = IntegratorService(self.integrator_cfg)
        self.seeding_service = SeedingService(self.cfg)

    def section_level(self, spec: ModelSpec, u_section):
        """Z0(u) = tanh(d u) on the section, |u| <= T0"""
        if abs(to_mpf(u_section)) > to_mpf(settings.T0):
            raise DomainException(f"u_section = {u_section} outside [-T0, T0] with T0 = {settings.T0}")
        with working_precision(self.cfg):
            return mp.tanh(to_mpf(spec.d) * to_mpf(u_section))

    def crossing(
        self,
        spec: ModelSpec,
        series: PerturbationSeries,
        params: Params,
        frame: SeedFrame,
        phi,
        rho,
        level,
        cfg: Optional[IntegratorConfig] = None,
    ) -> SectionCrossing:
        cfg = cfg or self.integrator_cfg
        seed = self.seeding_service.seed_point(frame, phi, rho)
        forward = frame.side == Side.UNSTABLE
        horizon = to_mpf(settings.TIME_HORIZON)
        event = SectionEvent(level=level, component=2, direction=1 if forward else -1)
        trajectory = self.integrator_service.integrate(
            spec, series, params, StateCartesian(x=seed[0], y=seed[1], z=seed[2]),
            horizon if forward else -horizon, cfg, event=event,
        )
        if not trajectory.event_hit:
            raise SectionException(f"{frame.side.value}: no crossing with z = {mp.nstr(level, 8)} before t = {settings.TIME_HORIZON}")
        with working_precision(cfg.precision_bits):
            x, y, z = trajectory.final_state[:3]
            limit = mp.mpf(2) ** (-(cfg.precision_bits // 2))
            if trajectory.event_residual > limit:
                raise SectionException(
                    f"crossing refined only to {mp.nstr(trajectory.event_residual, 5)}, need {mp.nstr(limit, 5)}"
                )
            vx, vy, vz = full_field(spec, series, params).evaluate([x, y, z])
            slope = abs((x * vx + y * vy) / vz) if vz != 0 else mp.inf
            return SectionCrossing(
                theta_at_section=mp.atan2(y, x) % (2 * mp.pi),
                r_at_section=(x**2 + y**2) / 2,
                crossing_time=trajectory.t_final,
                refinement_residual=trajectory.event_residual * slope,
                seed_angle=to_mpf(phi),
                z_at_section=z,
                radius_slope=slope,
            )

    def section_radius(
        self,
        spec: ModelSpec,
        series: PerturbationSeries,
        params: Params,
        side: Side,
        u_section,
        theta_targets: List,
        cfg: Optional[IntegratorConfig] = None,
        rho=None,
        guesses: Optional[List] = None,
    ) -> List[SectionCrossing]:
        """One crossing per target angle, matched by shooting on the seed angle"""
        cfg = cfg or self.integrator_cfg
        level = self.section_level(spec, u_section)
        frame = self.seeding_service.seed_frame(spec, series, params, side)
        with working_precision(self.cfg):
            rho = to_mpf(rho if rho is not None else settings.SEED_RADIUS)
            targets = [to_mpf(t) % (2 * mp.pi) for t in theta_targets]
            crossings: List[SectionCrossing] = []
            slope, anchor = mp.mpf(1), None
            for index, target in enumerate(targets):
                if guesses is not None and guesses[index] is not None:
                    phi = guesses[index]
                elif anchor is not None:
                    phi = anchor.seed_angle + wrap_angle(target - anchor.theta_at_section) / slope
                else:
                    phi = target
                result = self._shoot(spec, series, params, frame, target, phi, rho, level, cfg, slope)
                if result is None:
                    logger.warning(f"{side.value}: secant shooting stalled at theta={mp.nstr(target, 8)}, sweeping")
                    return self._sweep(spec, series, params, frame, targets, rho, level, cfg)
                crossing, slope = result
                crossings.append(crossing)
                anchor = crossing
        logger.info(f"{side.value}: {len(crossings)} section crossings at u={u_section}")
        return crossings

    def _shoot(self, spec, series, params, frame, target, phi, rho, level, cfg, slope) -> Optional[Tuple[SectionCrossing, object]]:
        """Secant iterations on F(phi) = theta_section(phi) - target"""
        with working_precision(self.cfg):
            tol = mp.mpf(2) ** (-(cfg.precision_bits // 2))
            current = self.crossing(spec, series, params, frame, phi, rho, level, cfg)
            gap = wrap_angle(current.theta_at_section - target)
            previous = None
            for iteration in range(settings.SHOOT_MAX_ITER + 1):
                logger.debug(f"shoot {frame.side.value} iteration {iteration}: gap {mp.nstr(gap, 5)}")
                if abs(gap) <= tol:
                    current.refinement_residual += abs(gap) * self._radius_theta_slope(previous, current)
                    return current, slope
                if iteration == settings.SHOOT_MAX_ITER:
                    break
                if previous is not None:
                    previous_gap = wrap_angle(previous.theta_at_section - target)
                    if gap != previous_gap:
                        slope = (gap - previous_gap) / (current.seed_angle - previous.seed_angle)
                if not (mp.mpf("0.1") < slope < 10):
                    return None
                previous = current
                current = self.crossing(spec, series, params, frame, current.seed_angle - gap / slope, rho, level, cfg)
                gap = wrap_angle(current.theta_at_section - target)
            return None

    @staticmethod
    def _radius_theta_slope(previous: Optional[SectionCrossing], current: SectionCrossing):
        if previous is None:
            return mp.mpf(0)
        dtheta = wrap_angle(current.theta_at_section - previous.theta_at_section)
        return abs((current.r_at_section - previous.r_at_section) / dtheta) if dtheta != 0 else mp.mpf(0)

    def _sweep(self, spec, series, params, frame, targets, rho, level, cfg) -> List[SectionCrossing]:
        """Equispaced seed angles, then r(theta) by trigonometric interpolation on the nonuniform angles"""
        count = settings.SWEEP_SEEDS
        samples: List[SectionCrossing] = []
        for j in range(count):
            with working_precision(self.cfg):
                phi = 2 * mp.pi * j / count
            samples.append(self.crossing(spec, series, params, frame, phi, rho, level, cfg))
        with working_precision(self.cfg):
            steps = [wrap_angle(samples[(j + 1) % count].theta_at_section - samples[j].theta_at_section)
                     for j in range(count)]
            if any(step <= 0 for step in steps):
                raise SectionException(f"{frame.side.value}: section angle is not monotone in the seed angle")
            thetas = [c.theta_at_section for c in samples]
            radii = [c.r_at_section for c in samples]
            coefficients = _trig_fit(thetas, radii, (count - 1) // 2)
            K = (count - 1) // 2
            tail = abs(coefficients[2 * K - 1]) + abs(coefficients[2 * K])
            residual = max(c.refinement_residual for c in samples) + tail
            times = {j: samples[j].crossing_time for j in range(count)}
            out = []
            for target in targets:
                nearest = min(range(count), key=lambda j: abs(wrap_angle(thetas[j] - target)))
                out.append(SectionCrossing(
                    theta_at_section=target,
                    r_at_section=_trig_eval(coefficients, target),
                    crossing_time=times[nearest],
                    refinement_residual=residual,
                    seed_angle=None,
                    z_at_section=level,
                    radius_slope=samples[nearest].radius_slope,
                ))
            return out


def _trig_fit(thetas: List, values: List, K: int) -> List:
    """Least-squares a0 + sum_k (a_k cos k t + b_k sin k t), ordered [a0, a1, b1, ..., aK, bK]"""
    M = mp.matrix(len(thetas), 2 * K + 1)
    for row, t in enumerate(thetas):
        M[row, 0] = 1
        for k in range(1, K + 1):
            M[row, 2 * k - 1] = mp.cos(k * t)
            M[row, 2 * k] = mp.sin(k * t)
    solution, _ = mp.qr_solve(M, mp.matrix(values))
    return [solution[i] for i in range(2 * K + 1)]


def _trig_eval(coefficients: List, t):
    K = (len(coefficients) - 1) // 2
    return coefficients[0] + mp.fsum(
        coefficients[2 * k - 1] * mp.cos(k * t) + coefficients[2 * k] * mp.sin(k * t) for k in range(1, K + 1)
    )

# app/modules/manifolds/services/integrator_service.py
"""
Service layer for trajectories of the full scaled field.
File location: app/modules/manifolds/services/integrator_service.py

Two methods: the multiprecision Taylor integrator (default) and scipy's
DOP853 in float64 for quick exploratory runs.
"""

import logging
from typing import List, Optional

import mpmath as mp
import numpy as np
from scipy.integrate import solve_ivp

from app.config.settings import settings
from app.core.exceptions import BlowUpException, DomainException, StepLimitException
from app.core.precision import to_mpf, working_precision
from app.modules.manifolds.schemas.manifold import (
    Checkpoint,
    IntegratorConfig,
    IntegratorMethod,
    SectionEvent,
    Trajectory,
)
from app.modules.manifolds.services.taylor_integrator import (
    TaylorJet,
    evaluate_jet,
    horner,
    order_for,
    refine_root,
    step_size,
)
from app.modules.model.schemas.model import ModelSpec, Params, PerturbationSeries, StateCartesian
from app.modules.model.services.polynomial_field import PolynomialField, full_field

logger = logging.getLogger(__name__)


class IntegratorService:
    def __init__(self, cfg: Optional[IntegratorConfig] = None):
        self.cfg = cfg or IntegratorConfig.from_settings()

    def field_for(
        self, spec: ModelSpec, series: PerturbationSeries, params: Params, track_divergence: bool = False
    ) -> PolynomialField:
        with working_precision(self.cfg.precision_bits):
            field = full_field(spec, series, params)
            if track_divergence:
                field = field.extended(field.divergence())
            return field

    def integrate(
        self,
        spec: ModelSpec,
        series: PerturbationSeries,
        params: Params,
        state0: StateCartesian,
        t_final,
        cfg: Optional[IntegratorConfig] = None,
        event: Optional[SectionEvent] = None,
        dense: bool = False,
        track_divergence: bool = False,
    ) -> Trajectory:
        """Flow from state0 over [0, t_final]; negative t_final integrates backwards"""
        cfg = cfg or self.cfg
        field = self.field_for(spec, series, params, track_divergence)
        start = state0.as_list() + ([mp.mpf(0)] if track_divergence else [])
        return self.integrate_field(field, start, t_final, cfg, event=event, dense=dense)

    def integrate_field(
        self,
        field: PolynomialField,
        state0: List,
        t_final,
        cfg: Optional[IntegratorConfig] = None,
        event: Optional[SectionEvent] = None,
        dense: bool = False,
    ) -> Trajectory:
        cfg = cfg or self.cfg
        with working_precision(cfg.precision_bits):
            state0 = [mp.mpf(v) for v in state0]
            if not all(mp.isfinite(v) for v in state0):
                raise DomainException(f"non-finite initial state {state0}")
            t_final = to_mpf(t_final)
            if t_final == 0:
                return Trajectory(t0=mp.mpf(0), t_final=t_final, state0=state0, final_state=list(state0), steps=0)
            if cfg.method == IntegratorMethod.DOP853:
                return self._integrate_dop853(field, state0, t_final, cfg, event, dense)
            return self._integrate_taylor(field, state0, t_final, cfg, event, dense)

    def _integrate_taylor(self, field, state0, t_final, cfg, event, dense) -> Trajectory:
        direction = 1 if t_final > 0 else -1
        jet = TaylorJet(field.scaled(direction) if direction < 0 else field)
        horizon = abs(t_final)
        tol = min(to_mpf(cfg.abs_tol), to_mpf(cfg.rel_tol))
        order = order_for(tol)
        factor = to_mpf(cfg.step_factor)
        blowup = to_mpf(settings.BLOWUP_NORM)

        s, state, checkpoints = mp.mpf(0), list(state0), []
        for step in range(cfg.max_steps):
            series = jet.coefficients(state, order)
            scale = max(mp.mpf(1), max(abs(v) for v in state[:3]))
            h = step_size(series, tol, scale, factor)
            h = horizon - s if h is None else min(h, horizon - s)
            if dense:
                checkpoints.append(Checkpoint(t=direction * s, h=direction * h, coefficients=series))

            if event is not None:
                hit = self._event_in_step(series, h, event, tol)
                if hit is not None:
                    offset, residual = hit
                    final = evaluate_jet(series, offset)
                    logger.debug(f"section reached after {step + 1} Taylor steps at t={mp.nstr(direction * (s + offset), 12)}")
                    return Trajectory(
                        t0=mp.mpf(0), t_final=direction * (s + offset), state0=state0, final_state=final,
                        steps=step + 1, checkpoints=checkpoints, event_hit=True, event_residual=residual,
                    )

            state = evaluate_jet(series, h)
            s += h
            norm = mp.sqrt(mp.fsum(v**2 for v in state[:3]))
            if not mp.isfinite(norm) or norm > blowup:
                raise BlowUpException(f"trajectory norm {mp.nstr(norm, 5)} exceeds {settings.BLOWUP_NORM} at t={mp.nstr(direction * s, 8)}")
            if s >= horizon:
                logger.debug(f"Taylor integration (order {order}) reached t={mp.nstr(t_final, 8)} in {step + 1} steps")
                return Trajectory(
                    t0=mp.mpf(0), t_final=t_final, state0=state0, final_state=state,
                    steps=step + 1, checkpoints=checkpoints,
                )
        raise StepLimitException(f"{cfg.max_steps} steps exhausted before t={mp.nstr(t_final, 8)}")

    def _event_in_step(self, series, h, event: SectionEvent, tol):
        coefficients = series[event.component]
        start = event.direction * (coefficients[0] - event.level)
        end = event.direction * (horner(coefficients, h) - event.level)
        if not (start < 0 <= end):
            return None
        return refine_root(coefficients, event.level, h, tol)

    def _integrate_dop853(self, field, state0, t_final, cfg, event, dense) -> Trajectory:
        def rhs(t, y):
            return [float(v) for v in field.evaluate([mp.mpf(float(c)) for c in y[:3]])]

        events = None
        if event is not None:
            def crossing(t, y):
                return y[event.component] - float(event.level)

            crossing.terminal = True
            # solve_ivp directions are in physical time
            crossing.direction = event.direction * (1 if t_final > 0 else -1)
            events = [crossing]

        sol = solve_ivp(
            rhs, (0.0, float(t_final)), np.array([float(v) for v in state0]), method="DOP853",
            rtol=float(cfg.rel_tol), atol=float(cfg.abs_tol), events=events, dense_output=dense,
        )
        if sol.status == -1:
            raise StepLimitException(f"DOP853 failed: {sol.message}")
        final = [mp.mpf(float(v)) for v in sol.y[:, -1]]
        if np.linalg.norm(sol.y[:3, -1]) > float(settings.BLOWUP_NORM):
            raise BlowUpException(f"trajectory norm exceeds {settings.BLOWUP_NORM}")
        hit = bool(events) and len(sol.t_events[0]) > 0
        residual = None
        t_end = mp.mpf(float(sol.t[-1]))
        if hit:
            t_end = mp.mpf(float(sol.t_events[0][0]))
            final = [mp.mpf(float(v)) for v in sol.y_events[0][0]]
            residual = abs(final[event.component] - event.level)
        return Trajectory(
            t0=mp.mpf(0), t_final=t_end, state0=state0, final_state=final,
            steps=len(sol.t) - 1, event_hit=hit, event_residual=residual,
        )

    def replicate_error(
        self, spec: ModelSpec, series: PerturbationSeries, params: Params, state0: StateCartesian, t_final,
        cfg: Optional[IntegratorConfig] = None,
    ):
        """Global error estimate: distance between the run and its halved-step replica"""
        cfg = cfg or self.cfg
        first = self.integrate(spec, series, params, state0, t_final, cfg)
        second = self.integrate(spec, series, params, state0, t_final, cfg.halved())
        with working_precision(cfg.precision_bits):
            return mp.sqrt(mp.fsum((a - b) ** 2 for a, b in zip(first.final_state, second.final_state)))

    def volume_drift(
        self, spec: ModelSpec, series: PerturbationSeries, params: Params, state0: StateCartesian, t_final,
        cfg: Optional[IntegratorConfig] = None,
    ):
        """|det DPhi - exp(int div)| with DPhi from central differences of the flow"""
        cfg = cfg or self.cfg
        field = self.field_for(spec, series, params, track_divergence=True)
        with working_precision(cfg.precision_bits):
            base = state0.as_list()
            eps = mp.mpf(2) ** (-(cfg.precision_bits // 3))
            center = self.integrate_field(field, base + [mp.mpf(0)], t_final, cfg)
            J = mp.matrix(3, 3)
            for col in range(3):
                plus, minus = list(base), list(base)
                plus[col] += eps
                minus[col] -= eps
                forward = self.integrate_field(field, plus + [mp.mpf(0)], t_final, cfg).final_state
                backward = self.integrate_field(field, minus + [mp.mpf(0)], t_final, cfg).final_state
                for row in range(3):
                    J[row, col] = (forward[row] - backward[row]) / (2 * eps)
            liouville = mp.exp(center.final_state[3])
            drift = abs(mp.det(J) - liouville)
            logger.debug(f"volume drift {mp.nstr(drift, 5)} over t={mp.nstr(to_mpf(t_final), 6)}")
            return drift

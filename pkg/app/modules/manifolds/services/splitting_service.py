# app/modules/manifolds/services/splitting_service.py
"""
Service layer for the measured splitting Delta(u, theta) = r^u - r^s.
File location: app/modules/manifolds/services/splitting_service.py
"""

import logging
from decimal import Decimal
from typing import List, Optional, Tuple

import mpmath as mp

from app.config.settings import settings
from app.core.exceptions import UntrustedSampleException
from app.core.precision import ScalarConfig, to_mpf, working_precision
from app.modules.manifolds.schemas.manifold import (
    IntegratorConfig,
    SectionCrossing,
    Side,
    SplittingBudget,
    SplittingSample,
)
from app.modules.manifolds.services.section_service import SectionService
from app.modules.melnikov.schemas.fourier import FourierSeries
from app.modules.model.schemas.model import ModelSpec, Params, PerturbationSeries
from app.modules.model.services.field_service import field_constants

logger = logging.getLogger(__name__)


class SplittingService:
    def __init__(self, cfg: Optional[ScalarConfig] = None, integrator_cfg: Optional[IntegratorConfig] = None):
        self.cfg = cfg or ScalarConfig.from_settings()
        self.section_service = SectionService(self.cfg, integrator_cfg)
        self.integrator_cfg = self.section_service.integrator_cfg

    def _side(
        self, spec, series, params, side: Side, u_section, targets, cfg: IntegratorConfig, rho
    ) -> Tuple[List, SplittingBudget]:
        """Richardson-extrapolated radii over {rho, rho/2} and the budget of one side"""
        coarse = self.section_service.section_radius(spec, series, params, side, u_section, targets, cfg, rho)
        fine = self.section_service.section_radius(
            spec, series, params, side, u_section, targets, cfg, rho / 2,
            guesses=[c.seed_angle for c in coarse],
        )
        replica_budget = self._replicate(spec, series, params, side, u_section, fine[0], cfg, rho / 2)
        with working_precision(self.cfg):
            factor = mp.mpf(2) ** settings.SEED_BIAS_ORDER - 1
            radii = [f.r_at_section + (f.r_at_section - c.r_at_section) / factor for c, f in zip(coarse, fine)]
            budget = SplittingBudget(
                integrator=replica_budget,
                seeding=max(abs(f.r_at_section - c.r_at_section) for c, f in zip(coarse, fine)),
                refinement=max(c.refinement_residual for c in coarse + fine),
            )
        logger.debug(
            f"{side.value} budget: integrator {mp.nstr(budget.integrator, 3)}, "
            f"seeding {mp.nstr(budget.seeding, 3)}, refinement {mp.nstr(budget.refinement, 3)}"
        )
        return radii, budget

    def _replicate(self, spec, series, params, side, u_section, reference: SectionCrossing, cfg, rho):
        """Re-run one crossing with the step factor halved"""
        frame = self.section_service.seeding_service.seed_frame(spec, series, params, side)
        level = self.section_service.section_level(spec, u_section)
        if reference.seed_angle is None:
            reference = self.section_service.crossing(spec, series, params, frame, 0, rho, level, cfg)
        replica = self.section_service.crossing(
            spec, series, params, frame, reference.seed_angle, rho, level, cfg.halved()
        )
        with working_precision(self.cfg):
            return abs(replica.r_at_section - reference.r_at_section)

    def splitting(
        self,
        spec: ModelSpec,
        series: PerturbationSeries,
        params: Params,
        u_section=None,
        n_theta: Optional[int] = None,
        cfg: Optional[IntegratorConfig] = None,
        rho=None,
    ) -> SplittingSample:
        cfg = cfg or self.integrator_cfg
        u_section = Decimal(str(u_section if u_section is not None else settings.U_SECTION))
        n_theta = n_theta or settings.N_THETA
        rho = Decimal(str(rho if rho is not None else settings.SEED_RADIUS))
        logger.info(f"splitting at delta={params.delta}, sigma={params.sigma}, u={u_section}, n_theta={n_theta}")

        with working_precision(self.cfg):
            targets = [2 * mp.pi * j / n_theta for j in range(n_theta)]
            rho_mp = to_mpf(rho)
        unstable, budget_u = self._side(spec, series, params, Side.UNSTABLE, u_section, targets, cfg, rho_mp)
        stable, budget_s = self._side(spec, series, params, Side.STABLE, u_section, targets, cfg, rho_mp)

        with working_precision(self.cfg):
            L = (n_theta - 1) // 2
            gaps = [ru - rs for ru, rs in zip(unstable, stable)]
            distances = [mp.sqrt(2 * ru) - mp.sqrt(2 * rs) for ru, rs in zip(unstable, stable)]
            budget = SplittingBudget(
                integrator=budget_u.integrator + budget_s.integrator,
                seeding=budget_u.seeding + budget_s.seeding,
                refinement=budget_u.refinement + budget_s.refinement,
            )
            delta_modes = FourierSeries.from_samples(gaps, L)
            total = budget.total
            trusted = bool(total < to_mpf(settings.TRUST_FRACTION) * abs(delta_modes.mode(1)))
            relation_ok = self._distance_relation(spec, params, u_section, unstable, stable, distances, total)
            sample = SplittingSample(
                delta=params.delta,
                sigma=params.sigma,
                u_section=u_section,
                thetas=targets,
                radii_unstable=unstable,
                radii_stable=stable,
                delta_values=gaps,
                delta_modes=delta_modes,
                D_modes=FourierSeries.from_samples(distances, L),
                seed_radius=rho,
                error_budget=total,
                budget=budget,
                trusted=trusted,
                distance_relation_ok=relation_ok,
                precision_bits=self.cfg.precision_bits,
            )
            if not trusted:
                logger.warning(
                    f"untrusted sample at delta={params.delta}: budget {mp.nstr(total, 3)} "
                    f"vs |mode 1| {mp.nstr(abs(delta_modes.mode(1)), 3)}"
                )
            if not relation_ok:
                logger.warning(f"D and its linearization disagree beyond second order at delta={params.delta}")
            return sample

    def _distance_relation(self, spec, params, u_section, unstable, stable, distances, budget) -> bool:
        """D = sqrt(b/(d+1)) cosh(du) Delta up to |Delta| (|Delta| + |rbar - R0|) / (2 R0)^(3/2)"""
        k = field_constants(spec, params)
        u = to_mpf(u_section)
        R0 = k.kappa / 2 / mp.cosh(k.d * u) ** 2
        linear = mp.cosh(k.d * u) / mp.sqrt(k.kappa)
        for ru, rs, D in zip(unstable, stable, distances):
            gap = ru - rs
            second = abs(gap) * (abs(gap) + abs((ru + rs) / 2 - R0)) / (2 * R0) ** mp.mpf(1.5)
            if abs(D - linear * gap) > 2 * second + budget:
                return False
        return True

    def sharp_bound_check(
        self, spec: ModelSpec, sample: SplittingSample, upsilon0_abs, kappa=None, M=None
    ) -> bool:
        """max |Delta| <= cosh^(2/d)(du) (|Upsilon^[0]| + M delta^(p-2/d) kappa^(-3-2/d) exp(-alpha pi/(2 d delta) + alpha kappa))"""
        kappa = settings.SHARP_BOUND_KAPPA if kappa is None else kappa
        M = settings.SHARP_BOUND_M if M is None else M
        with working_precision(self.cfg):
            k = field_constants(spec, Params(delta=sample.delta, sigma=sample.sigma))
            kappa, M = to_mpf(kappa), to_mpf(M)
            u = to_mpf(sample.u_section)
            exponential = (
                M * mp.power(k.delta, k.p - 2 / k.d) * mp.power(kappa, -3 - 2 / k.d)
                * mp.exp(-k.alpha * mp.pi / (2 * k.d * k.delta) + k.alpha * kappa)
            )
            bound = mp.power(mp.cosh(k.d * u), 2 / k.d) * (to_mpf(upsilon0_abs) + exponential)
            return max((abs(v) for v in sample.delta_values), default=mp.mpf(0)) <= bound


def require_trusted(sample: SplittingSample) -> SplittingSample:
    if not sample.trusted:
        raise UntrustedSampleException(
            f"sample at delta={sample.delta} has budget {mp.nstr(sample.error_budget, 3)}; raise precision_bits"
        )
    return sample

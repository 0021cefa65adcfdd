# app/modules/melnikov/services/average_service.py
"""
Averages of the Melnikov function and the zero-average parameter curve.
File location: app/modules/melnikov/services/average_service.py
"""

import logging
from decimal import Decimal
from typing import Optional

import mpmath as mp

from app.config.settings import settings
from app.core.exceptions import ConvergenceException, DomainException
from app.core.precision import ScalarConfig, to_decimal, to_mpf, working_precision
from app.modules.melnikov.schemas.melnikov import Averages, SigmaTarget
from app.modules.melnikov.services.melnikov_service import MelnikovService, _degree
from app.modules.model.schemas.model import ModelSpec, Params, PerturbationSeries
from app.modules.model.services.field_service import field_constants
from app.modules.model.services.forcing_service import forcing_value
from app.modules.model.services.polynomial_field import perturbation_field
from app.modules.special.services.integral_service import closed_value
from app.modules.special.services.quadrature import plan_line, quad_line

logger = logging.getLogger(__name__)


class AverageService:
    def __init__(self, cfg: Optional[ScalarConfig] = None):
        self.cfg = cfg or ScalarConfig.from_settings()
        self.melnikov_service = MelnikovService(self.cfg)

    def average_IJ(self, spec: ModelSpec, series: PerturbationSeries, params: Params) -> Averages:
        """I = ((d+1)/b) int cosh^(-2/d-2)(dw) dw and J = delta^-3 int [F^[0] + ((d+1)/b) Z0 H^[0]] / cosh^(2/d)"""
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            I = k.kappa * mp.re(closed_value(0, 2 / k.d + 1, 0, 0, k.d))

            # mode 0 of the sigma-free forcing, averaged over an aliasing-free theta grid
            free = field_constants(spec, params.model_copy(update={"sigma": Decimal(0)}))
            pert = perturbation_field(series, params)
            samples = 2 * (_degree(series) + 2) + 1
            exponent = 2 / k.d

            def f(w):
                mean = mp.fsum(forcing_value(free, pert, w, 2 * mp.pi * j / samples) for j in range(samples))
                return mean / samples / mp.power(mp.cosh(k.d * w), exponent)

            plan = plan_line(0, k.d, exponent, self.cfg.tolerance(), shift_path=False)
            scale = k.weight * k.delta**3
            value, error = quad_line(f, plan, self.cfg.tolerance(), label="J", abs_floor=scale)
            return Averages(
                I=I,
                J=mp.re(value) / scale,
                I_error=abs(I) * self.cfg.eps() * 2**16,
                J_error=error / scale,
            )

    def resolve_sigma(self, spec: ModelSpec, series: PerturbationSeries, delta, sigma_mode: str = "zero") -> Decimal:
        """'zero', 'sigma_star' or 'fixed:<decimal>'"""
        if sigma_mode == "zero":
            return Decimal(0)
        if sigma_mode == "sigma_star":
            return self.sigma_star(spec, series, delta)
        if sigma_mode.startswith("fixed:"):
            try:
                return Decimal(sigma_mode.split(":", 1)[1])
            except ArithmeticError:
                raise DomainException(f"sigma_mode {sigma_mode!r} does not carry a decimal value")
        raise DomainException(f"unknown sigma_mode {sigma_mode!r}")

    def sigma_star(
        self,
        spec: ModelSpec,
        series: PerturbationSeries,
        delta,
        target: Optional[SigmaTarget] = None,
        residual_tol=Decimal("1e-20"),
    ) -> Decimal:
        """sigma with Upsilon0^[0](delta, sigma) = target(delta), seeded at -(J/I) delta^(p+3)"""
        if spec.conservative:
            raise DomainException("the zero-average curve is defined for dissipative systems")
        delta = Decimal(str(delta))
        bits = self.cfg.precision_bits
        base = Params(delta=delta, sigma=Decimal(0))
        averages = self.average_IJ(spec, series, base)

        with working_precision(self.cfg):
            k = field_constants(spec, base)
            if averages.I == 0:
                raise DomainException("I vanishes, no zero-average curve")
            scale = mp.power(k.delta, k.p + 3)
            goal = mp.mpf(0)
            if target is not None and target.a1 != 0:
                goal = to_mpf(target.a1) * mp.power(k.delta, to_mpf(target.a2)) * mp.exp(
                    -to_mpf(target.a3) * mp.pi / (2 * k.d * k.delta)
                )
            seed = (goal - scale * averages.J) / averages.I
            logger.info(f"sigma* seed at delta={delta}: {mp.nstr(seed, 12)}")

        def average(sigma) -> object:
            params = Params(delta=delta, sigma=to_decimal(sigma, bits))
            value = self.melnikov_service.upsilon0_quadrature(spec, series, params, 0).value
            with working_precision(self.cfg):
                return mp.re(value) - goal

        with working_precision(self.cfg):
            bound = to_mpf(settings.SIGMA_STAR_BOUND) * scale
            if abs(seed) > bound:
                raise DomainException(f"sigma* seed {mp.nstr(seed, 8)} outside |sigma| <= {mp.nstr(bound, 8)}")
            threshold = to_mpf(residual_tol) * (abs(seed) * averages.I + scale * abs(averages.J) + abs(goal))
            residual = average(seed)
            if abs(residual) <= threshold:
                return to_decimal(seed, bits)
            lo, hi = -2 * bound, 2 * bound
            f_lo, f_hi = average(lo), average(hi)
            if f_lo * f_hi > 0:
                raise ConvergenceException("average does not change sign on the sigma bracket", residual=mp.nstr(residual, 5))
            try:
                root = mp.findroot(average, (lo, hi), solver="anderson", verify=False)
            except (ValueError, ZeroDivisionError) as exc:
                raise ConvergenceException(f"sigma* root-finding failed: {exc}", residual=mp.nstr(residual, 5))
            root = mp.re(root)
            residual = average(root)
            logger.debug(f"sigma* residual {mp.nstr(residual, 5)} against threshold {mp.nstr(threshold, 5)}")
            if abs(residual) > threshold:
                raise ConvergenceException("sigma* residual above tolerance", residual=mp.nstr(residual, 5))
            return to_decimal(root, bits)

# app/modules/melnikov/services/melnikov_service.py
"""
Service layer for the adapted Melnikov function and its coefficients.
File location: app/modules/melnikov/services/melnikov_service.py

M(u, theta) = cosh^(2/d)(du) sum_l Upsilon0^[l] exp(i l (theta + omega u + (c/d) log cosh(du)))
"""

import logging
from fractions import Fraction
from typing import Dict, Optional

import mpmath as mp

from app.config.settings import settings
from app.core.precision import ScalarConfig, to_mpf, working_precision
from app.modules.melnikov.schemas.fourier import FourierSeries
from app.modules.melnikov.schemas.melnikov import (
    Branch,
    BorelConstant,
    Estimate,
    GraphValue,
    MelnikovResult,
    MelnikovRoute,
)
from app.modules.melnikov.services.borel_service import BorelService
from app.modules.model.schemas.model import ModelSpec, Params, PerturbationSeries
from app.modules.model.services.field_service import FieldConstants, field_constants
from app.modules.model.services.forcing_service import ForcingService, forcing_value
from app.modules.model.services.polynomial_field import perturbation_field
from app.modules.special.services.integral_service import closed_value
from app.modules.special.services.quadrature import LinePlan, plan_line, quad_line, real_extent

logger = logging.getLogger(__name__)


def _phase(k: FieldConstants, w):
    """delta^-1 eta(w) = omega w + (c/d) log cosh(d w)"""
    return k.omega * w + k.c / k.d * mp.log(mp.cosh(k.d * w))


def _degree(series: PerturbationSeries) -> int:
    return max((t.q for t in series.terms if t.value != 0), default=0)


def _theta_samples(series: PerturbationSeries) -> int:
    # F(0) is a trigonometric polynomial of degree q + 1 in theta
    return 2 * (_degree(series) + 2) + 1


class MelnikovService:
    """
    Melnikov coefficients by quadrature on a shifted contour and by the
    Gamma series, the pointwise function, its asymptotic form and r10
    """

    def __init__(self, cfg: Optional[ScalarConfig] = None):
        self.cfg = cfg or ScalarConfig.from_settings()
        self.forcing_service = ForcingService(self.cfg)
        self.borel_service = BorelService(self.cfg)

    def _scale(self, k: FieldConstants):
        return k.weight * k.delta**3

    def _theta_mode(self, k, pert, w, l: int, samples: int):
        """Mode l of F(0)(w, .) at complex w by an aliasing-free discrete transform"""
        acc = mp.mpc(0)
        for j in range(samples):
            theta = 2 * mp.pi * j / samples
            acc += forcing_value(k, pert, w, theta) * mp.expj(-l * theta)
        return acc / samples

    # ---- pointwise function and graphs -------------------------------------------------

    def _kernel(self, k: FieldConstants, pert, u, theta):
        phase_u = _phase(k, u)
        exponent = 2 / k.d

        def f(w):
            angle = theta - (_phase(k, w) - phase_u)
            return forcing_value(k, pert, w, angle) / mp.power(mp.cosh(k.d * w), exponent)

        return f

    def _real_plan(self, k: FieldConstants, series: PerturbationSeries, u) -> LinePlan:
        top = k.omega * (_degree(series) + 2)
        plan = plan_line(top, k.d, 2 / k.d, self.cfg.tolerance(), shift_path=False)
        points = list(plan.points)
        if u <= points[0] or u >= points[-1]:
            reach = abs(u) + real_extent(2 / k.d, k.d, self.cfg.tolerance())
            points = [-reach] + points + [reach]
        return LinePlan(shift=plan.shift, eps=plan.eps, points=points)

    def melnikov_pointwise(
        self, spec: ModelSpec, series: PerturbationSeries, params: Params, u, theta
    ) -> Estimate:
        """cosh^(2/d)(du) times the real-line integral of F(0)(w, theta - (eta(w) - eta(u))/delta) / cosh^(2/d)(dw)"""
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            u, theta = to_mpf(u), to_mpf(theta)
            pert = perturbation_field(series, params)
            plan = self._real_plan(k, series, u)
            value, error = quad_line(
                self._kernel(k, pert, u, theta), plan, self.cfg.tolerance(),
                label="melnikov", abs_floor=self._scale(k),
            )
            factor = mp.power(mp.cosh(k.d * u), 2 / k.d)
            return Estimate(value=factor * value, error=factor * error)

    def r10_graph(
        self, spec: ModelSpec, series: PerturbationSeries, params: Params, branch: Branch, u, theta, bound_M=100
    ) -> GraphValue:
        """First-order graph of the unstable (integral from -inf) or stable (from +inf) manifold"""
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            u, theta = to_mpf(u), to_mpf(theta)
            pert = perturbation_field(series, params)
            plan = self._real_plan(k, series, u)
            if branch == Branch.UNSTABLE:
                points = [t for t in plan.points if t < u] + [u]
                sign = 1
            else:
                points = [u] + [t for t in plan.points if t > u]
                sign = -1
            value, error = quad_line(
                self._kernel(k, pert, u, theta), LinePlan(shift=0, eps=plan.eps, points=points),
                self.cfg.tolerance(), label=f"r10 {branch.value}", abs_floor=self._scale(k),
            )
            cosh_u = mp.cosh(k.d * u)
            factor = mp.power(cosh_u, 2 / k.d)
            result = sign * factor * value
            bound = to_mpf(bound_M) * mp.power(k.delta, k.p + 3) / cosh_u**3
            bound_ok = abs(result) <= bound
            if not bound_ok:
                logger.warning(f"r10 {branch.value} at u={mp.nstr(u, 5)} exceeds M delta^(p+3) cosh^-3(du)")
            return GraphValue(value=result, error=factor * error, bound_ok=bound_ok)

    # ---- coefficients ------------------------------------------------------------------

    def upsilon0_quadrature(self, spec: ModelSpec, series: PerturbationSeries, params: Params, l: int) -> Estimate:
        """Upsilon0^[l] on the shifted contour (real line for l = 0)"""
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            pert = perturbation_field(series, params)
            samples = _theta_samples(series)
            if abs(l) > _degree(series) + 1:
                return Estimate(value=mp.mpc(0), error=mp.mpf(0))
            Omega = l * k.omega
            exponent = 2 / k.d
            rho = to_mpf(self.cfg.contour_shift_rho) if self.cfg.contour_shift_rho is not None else None
            if rho is None:
                rho = max(mp.mpf(8), _degree(series) + exponent) * k.d
            eps_guess = min(rho / abs(Omega), mp.pi / 4) if Omega else mp.pi / 4
            log_dynamic = abs(Omega) * eps_guess / k.d + abs(l * k.c / k.d) * mp.pi / 2 + 10
            plan = plan_line(Omega, k.d, exponent, self.cfg.tolerance(), rho=rho, log_dynamic=log_dynamic)

            def f(w):
                kernel = mp.expj(-l * _phase(k, w))
                return kernel * self._theta_mode(k, pert, w, l, samples) / mp.power(mp.cosh(k.d * w), exponent)

            floor = self._scale(k) * mp.exp(-abs(Omega) * mp.pi / (2 * k.d))
            value, error = quad_line(f, plan, self.cfg.tolerance(), label=f"upsilon0[{l}]", abs_floor=floor)
            return Estimate(value=mp.mpc(value), error=error)

    def upsilon0_gamma_series(self, spec: ModelSpec, series: PerturbationSeries, params: Params, l: int) -> Estimate:
        """Finite sum of mode-table coefficients times I_{n, j+n+2/d-1}^{l, c/d} in closed form"""
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            total, magnitude = mp.mpc(0), mp.mpf(0)
            for term in self.forcing_service.forcing_mode_terms(spec, series, params, l):
                Q = term.sech_power + term.tanh_power + 2 / k.d - 1
                value = term.coefficient * closed_value(term.tanh_power, Q, l * k.c / k.d, l * k.omega, k.d)
                total += value
                magnitude += abs(value)
            return Estimate(value=total, error=magnitude * self.cfg.eps() * 2**16)

    def coefficients(
        self,
        spec: ModelSpec,
        series: PerturbationSeries,
        params: Params,
        route: MelnikovRoute = MelnikovRoute.QUADRATURE,
        L: Optional[int] = None,
    ) -> MelnikovResult:
        L = settings.MODE_CUTOFF if L is None else L
        compute = self.upsilon0_quadrature if route == MelnikovRoute.QUADRATURE else self.upsilon0_gamma_series
        modes, errors = {}, {}
        for l in range(-L, L + 1):
            estimate = compute(spec, series, params, l)
            modes[l], errors[l] = estimate.value, estimate.error
        with working_precision(self.cfg):
            series_out = FourierSeries.from_modes(modes)
            gap = series_out.reality_gap()
            allowed = 2 * max(errors.values(), default=mp.mpf(0)) + self.cfg.eps() * 2**16 * (1 + series_out.max_abs())
            if gap > allowed:
                logger.warning(f"Melnikov modes violate conjugate symmetry by {mp.nstr(gap, 3)}")
        logger.info(f"Melnikov coefficients ({route.value}) at delta={params.delta}, sigma={params.sigma}, L={L}")
        return MelnikovResult(upsilon0=series_out, route=route, params=params, error_estimate=errors)

    def melnikov_from_modes(self, spec: ModelSpec, params: Params, upsilon0: FourierSeries, u, theta):
        """Reconstruct M(u, theta) from the Upsilon0 coefficients"""
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            u, theta = to_mpf(u), to_mpf(theta)
            shift = theta + _phase(k, u)
            return mp.power(mp.cosh(k.d * u), 2 / k.d) * mp.re(upsilon0.evaluate(shift))

    def section_mode(self, spec: ModelSpec, params: Params, upsilon, l: int, u):
        """Mode l in theta of M(u, .): cosh^(2/d)(du) Upsilon0^[l] exp(i l delta^-1 eta(u))"""
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            u = to_mpf(u)
            return mp.power(mp.cosh(k.d * u), 2 / k.d) * upsilon * mp.expj(l * _phase(k, u))

    # ---- asymptotics -------------------------------------------------------------------

    def melnikov_asymptotic(
        self,
        spec: ModelSpec,
        series: PerturbationSeries,
        params: Params,
        u,
        theta,
        borel: Optional[BorelConstant] = None,
        upsilon_zero=None,
    ):
        """cosh^(2/d)(du) [Upsilon0^[0] + delta^(p-2/d) exp(-alpha pi/(2 d delta)) (C1 cos + C2 sin)(theta + vartheta)]"""
        borel = borel or self.borel_service.borel_constant(spec, series)
        if upsilon_zero is None:
            upsilon_zero = 0 if spec.conservative else self.upsilon0_quadrature(spec, series, params, 0).value
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            u, theta = to_mpf(u), to_mpf(theta)
            vartheta = k.omega * u + k.c / k.d * (mp.log(mp.cosh(k.d * u)) - mp.log(k.delta))
            amplitude = mp.power(k.delta, k.p - 2 / k.d) * mp.exp(-k.alpha * mp.pi / (2 * k.d * k.delta))
            oscillation = borel.C1 * mp.cos(theta + vartheta) + borel.C2 * mp.sin(theta + vartheta)
            return mp.power(mp.cosh(k.d * u), 2 / k.d) * (mp.re(upsilon_zero) + amplitude * oscillation)

    def predicted_mode_one(self, spec: ModelSpec, params: Params, borel: BorelConstant):
        """delta^(p-2/d-ic/d) exp(-alpha pi/(2 d delta)) C / 2"""
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            power = mp.power(k.delta, mp.mpc(k.p - 2 / k.d, -k.c / k.d))
            return power * mp.exp(-k.alpha * mp.pi / (2 * k.d * k.delta)) * borel.value / 2

    def upsilon_hat(self, upsilon, l: int, L0: Fraction, spec: ModelSpec, params: Params):
        """Upsilon0^[l] exp(-i l alpha d^-1 L0 delta^(p+2) log delta)"""
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            L0 = mp.mpf(L0.numerator) / L0.denominator
            phase = -l * k.alpha / k.d * L0 * mp.power(k.delta, k.p + 2) * mp.log(k.delta)
            return upsilon * mp.expj(phase)

    def higher_mode_decay_ok(
        self, spec: ModelSpec, series: PerturbationSeries, params: Params, upsilon0: FourierSeries, K=10, M=1
    ) -> Dict[int, bool]:
        """|Upsilon0^[l]| against K (M omega)^qmax exp(-(3|l|/4) alpha pi/(2 d delta)) for |l| >= 2"""
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            out = {}
            for l in upsilon0.indices():
                if abs(l) < 2:
                    continue
                bound = (
                    to_mpf(K) * self._scale(k) * mp.power(to_mpf(M) * k.omega, _degree(series) + 2 / k.d)
                    * mp.exp(-mp.mpf(3 * abs(l)) / 4 * k.alpha * mp.pi / (2 * k.d * k.delta))
                )
                out[l] = abs(upsilon0.mode(l)) <= bound
            return out

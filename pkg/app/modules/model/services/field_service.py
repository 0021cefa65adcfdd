# app/modules/model/services/field_service.py
"""
Service layer for the scaled Hopf-zero vector field.
File location: app/modules/model/services/field_service.py
"""

import logging
from decimal import Decimal
from typing import NamedTuple, Optional, Tuple

import mpmath as mp

from app.config.settings import settings
from app.core.exceptions import ConvergenceException, DomainException
from app.core.precision import ScalarConfig, to_decimal, to_mpf, working_precision
from app.modules.model.schemas.model import (
    CriticalPoints,
    CylindricVelocity,
    Equilibrium,
    HeteroclinicPoint,
    ModelSpec,
    Params,
    PerturbationSeries,
    ScaledParameters,
    StateCartesian,
    StateCylindric,
)
from app.modules.model.services.polynomial_field import (
    PolynomialField,
    full_field,
    perturbation_field,
)

logger = logging.getLogger(__name__)


class FieldConstants(NamedTuple):
    delta: mp.mpf
    sigma: mp.mpf
    alpha: mp.mpf
    omega: mp.mpf  # alpha / delta
    b: mp.mpf
    c: mp.mpf
    d: mp.mpf
    p: mp.mpf
    kappa: mp.mpf  # (d + 1) / b
    weight: mp.mpf  # delta^p


def field_constants(spec: ModelSpec, params: Params) -> FieldConstants:
    delta = to_mpf(params.delta)
    alpha = params.alpha(spec)
    d = to_mpf(spec.d)
    b = to_mpf(spec.b)
    p = to_mpf(spec.p)
    return FieldConstants(
        delta=delta,
        sigma=to_mpf(params.sigma),
        alpha=alpha,
        omega=alpha / delta,
        b=b,
        c=to_mpf(spec.c),
        d=d,
        p=p,
        kappa=(d + 1) / b,
        weight=mp.power(delta, p),
    )


def heteroclinic_values(k: FieldConstants, u, theta0=0) -> Tuple[object, object, object]:
    """R0, Theta0, Z0 at (possibly complex) u"""
    du = k.d * u
    sech = 1 / mp.cosh(du)
    R0 = k.kappa / 2 * sech**2
    Theta0 = theta0 - k.omega * u - k.c / k.d * mp.log(mp.cosh(du))
    return R0, Theta0, mp.tanh(du)


class FieldService:
    """
    Evaluation of the scaled field in Cartesian and symplectic cylindric
    coordinates, its unperturbed heteroclinic and its critical points
    """

    def __init__(self, cfg: Optional[ScalarConfig] = None):
        self.cfg = cfg or ScalarConfig.from_settings()

    def validate_params(self, spec: ModelSpec, params: Params, sigma_bound: Optional[Decimal] = None) -> Params:
        """Check |sigma| <= sigma_bound delta^(p+3) and alpha > 0"""
        bound = sigma_bound if sigma_bound is not None else settings.SIGMA_STAR_BOUND
        with working_precision(self.cfg):
            limit = to_mpf(bound) * mp.power(to_mpf(params.delta), to_mpf(spec.p) + 3)
            if abs(to_mpf(params.sigma)) > limit:
                raise DomainException(
                    f"|sigma| = {params.sigma} exceeds {bound} delta^(p+3) = {mp.nstr(limit, 8)}"
                )
            if params.alpha(spec) <= 0:
                raise DomainException(f"alpha is not positive at delta = {params.delta}")
        return params

    def build_field(self, spec: ModelSpec, series: PerturbationSeries, params: Params) -> PolynomialField:
        with working_precision(self.cfg):
            return full_field(spec, series, params)

    def eval_field_cartesian(
        self, spec: ModelSpec, series: PerturbationSeries, params: Params, state: StateCartesian
    ) -> StateCartesian:
        """Velocity of the scaled field at a Cartesian state"""
        with working_precision(self.cfg):
            point = state.as_list()
            if not all(mp.isfinite(v) for v in point):
                raise DomainException(f"non-finite state {point}")
            vx, vy, vz = full_field(spec, series, params).evaluate(point)
            if not all(mp.isfinite(v) for v in (vx, vy, vz)):
                raise DomainException("field overflow at the given state")
            return StateCartesian(x=vx, y=vy, z=vz)

    def eval_field_cylindric(
        self, spec: ModelSpec, series: PerturbationSeries, params: Params, state: StateCylindric
    ) -> CylindricVelocity:
        """Velocity in (r, theta, z); F, G, H are the conjugated perturbation components"""
        with working_precision(self.cfg):
            if mp.re(state.r) <= 0 and mp.im(state.r) == 0:
                raise DomainException("cylindric field is singular on the axis r = 0")
            k = field_constants(spec, params)
            rho = mp.sqrt(2 * state.r)
            cos_t, sin_t = mp.cos(state.theta), mp.sin(state.theta)
            point = [rho * cos_t, rho * sin_t, state.z]
            f, g, h = perturbation_field(series, params).evaluate(point)
            F = rho * (cos_t * f + sin_t * g)
            G = (-sin_t * f + cos_t * g) / rho
            H = h
            return CylindricVelocity(
                r_dot=2 * state.r * (k.sigma - k.d * state.z) + k.weight * F,
                theta_dot=-k.omega - k.c * state.z + k.weight * G,
                z_dot=-1 + 2 * k.b * state.r + state.z**2 + k.weight * H,
                F=F,
                G=G,
                H=H,
            )

    def heteroclinic(self, spec: ModelSpec, params: Params, u, theta0=0) -> HeteroclinicPoint:
        with working_precision(self.cfg):
            u = to_mpf(u) if not isinstance(u, (mp.mpf, mp.mpc)) else u
            R0, Theta0, Z0 = heteroclinic_values(field_constants(spec, params), u, to_mpf(theta0))
            if not all(mp.isfinite(v) for v in (R0, Theta0, Z0)):
                raise DomainException(f"heteroclinic undefined at u = {u}")
            return HeteroclinicPoint(R0=R0, Theta0=Theta0, Z0=Z0)

    def critical_points(
        self, spec: ModelSpec, series: PerturbationSeries, params: Params, tol=None
    ) -> CriticalPoints:
        """Damped Newton from (0,0,-1) and (0,0,1) with eigen-decomposition of the Jacobian"""
        with working_precision(self.cfg):
            field = full_field(spec, series, params)
            tol = to_mpf(tol) if tol is not None else self.cfg.eps() * 2**16
            points = []
            for sign in (-1, 1):
                state, residual = self._newton(field, [mp.mpf(0), mp.mpf(0), mp.mpf(sign)], tol)
                points.append(self._equilibrium(field, state, residual, sign, spec, params))
            return CriticalPoints(S_minus=points[0], S_plus=points[1])

    def _newton(self, field: PolynomialField, seed, tol):
        x = mp.matrix(seed)
        value = mp.matrix(field.evaluate(list(x)))
        residual = mp.norm(value)
        for iteration in range(settings.NEWTON_MAX_ITER):
            if residual <= tol:
                logger.debug(f"Newton converged in {iteration} iterations, residual {mp.nstr(residual, 5)}")
                return [x[0], x[1], x[2]], residual
            step = mp.lu_solve(field.jacobian(list(x)), -value)
            damping = mp.mpf(1)
            for _ in range(60):
                trial = x + damping * step
                trial_value = mp.matrix(field.evaluate(list(trial)))
                if mp.norm(trial_value) < residual:
                    break
                damping /= 2
            else:
                raise ConvergenceException("Newton step damping failed at critical point", residual=mp.nstr(residual, 5))
            x, value, residual = trial, trial_value, mp.norm(trial_value)
        if residual <= tol:
            return [x[0], x[1], x[2]], residual
        raise ConvergenceException("Newton did not converge at critical point", residual=mp.nstr(residual, 5))

    def _equilibrium(self, field, state, residual, sign, spec, params) -> Equilibrium:
        J = field.jacobian(state)
        values, vectors = mp.eig(J)
        noise = mp.mpf(2) ** (-(self.cfg.precision_bits // 2)) * (1 + max(abs(v) for v in values))
        order = sorted(range(3), key=lambda i: (abs(mp.im(values[i])) > noise, -mp.im(values[i])))
        ordered = [values[i] for i in order]
        V = mp.matrix(3, 3)
        for col, i in enumerate(order):
            for row in range(3):
                V[row, col] = vectors[row, i]
        offset = mp.sqrt(state[0] ** 2 + state[1] ** 2 + (state[2] - sign) ** 2)
        scale = mp.power(to_mpf(params.delta), to_mpf(spec.p) + 4)
        if offset > 10 * scale:
            logger.warning(
                f"critical point offset {mp.nstr(offset, 5)} above 10 delta^(p+4) = {mp.nstr(10 * scale, 5)}"
            )
        return Equilibrium(
            state=StateCartesian(x=state[0], y=state[1], z=state[2]),
            residual=residual,
            offset=offset,
            jacobian=J,
            eigenvalues=ordered,
            eigenvectors=V,
        )

    def scale_from_unfolding(self, spec: ModelSpec, mu, nu, q) -> ScaledParameters:
        """delta = sqrt(mu), sigma = nu / delta, p = q - 2"""
        mu, nu = Decimal(str(mu)), Decimal(str(nu))
        with working_precision(self.cfg):
            if mu <= 0:
                raise DomainException(f"mu = {mu} must be positive")
            delta = mp.sqrt(to_mpf(mu))
            if abs(to_mpf(nu)) >= to_mpf(spec.d) * delta:
                raise DomainException(f"(mu, nu) = ({mu}, {nu}) outside the region |nu| < d sqrt(mu)")
            p = Decimal(str(q)) - 2
            if p < -2:
                raise DomainException(f"q = {q} gives p below -2")
            sigma = to_mpf(nu) / delta
            z_shift = mp.power(delta, to_mpf(p) + 3) * to_mpf(spec.h3) / 2
            bits = self.cfg.precision_bits
            params = Params(delta=to_decimal(delta, bits), sigma=to_decimal(sigma, bits))
            return ScaledParameters(params=params, p=p, z_shift=to_decimal(z_shift, bits))

    def to_unfolding(self, state: StateCartesian, scaled: ScaledParameters) -> StateCartesian:
        """(x, y, z) scaled -> (delta x, delta y, delta (z - z_shift))"""
        with working_precision(self.cfg):
            delta = to_mpf(scaled.params.delta)
            return StateCartesian(
                x=delta * state.x,
                y=delta * state.y,
                z=delta * (state.z - to_mpf(scaled.z_shift)),
            )

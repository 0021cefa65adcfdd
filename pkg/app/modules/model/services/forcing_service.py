# app/modules/model/services/forcing_service.py
"""
The forcing F(0) of the radial equation along the unperturbed heteroclinic.
File location: app/modules/model/services/forcing_service.py
"""

import logging
from typing import Dict, List, Optional, Tuple

import mpmath as mp
from pydantic import BaseModel, ConfigDict

from app.core.precision import ScalarConfig, to_mpf, working_precision
from app.modules.melnikov.schemas.fourier import FourierSeries
from app.modules.model.schemas.model import Component, ModelSpec, Params, PerturbationSeries
from app.modules.model.services.field_service import FieldConstants, field_constants
from app.modules.model.services.mode_table import trig_mode_mp
from app.modules.model.services.polynomial_field import perturbation_field

logger = logging.getLogger(__name__)


class ForcingModeTerm(BaseModel):
    """coefficient * sech^sech_power(d w) * tanh^tanh_power(d w)"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    coefficient: object
    sech_power: int
    tanh_power: int
    order: int  # q of the Taylor term, 0 for the sigma term


def forcing_value(k: FieldConstants, pert, w, theta):
    """F(0)(w, theta) for real or complex w given the unweighted perturbation field"""
    dw = k.d * w
    sech = 1 / mp.cosh(dw)
    tanh = mp.tanh(dw)
    rho = mp.sqrt(k.kappa) * sech  # sqrt(2 R0), analytic off the real line
    cos_t, sin_t = mp.cos(theta), mp.sin(theta)
    f, g, h = pert.evaluate([rho * cos_t, rho * sin_t, tanh])
    R0 = k.kappa / 2 * sech**2
    F = rho * (cos_t * f + sin_t * g)
    return 2 * k.sigma * R0 + k.weight * F + k.weight * k.kappa * tanh * h


class ForcingService:
    def __init__(self, cfg: Optional[ScalarConfig] = None):
        self.cfg = cfg or ScalarConfig.from_settings()

    def forcing_F0(self, spec: ModelSpec, series: PerturbationSeries, params: Params, u, theta):
        """F(0)(u, theta) = 2 sigma R0 + delta^p F(0) + delta^p ((d+1)/b) Z0 H(0)"""
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            return forcing_value(k, perturbation_field(series, params), _mp(u), _mp(theta))

    def forcing_mode_terms(
        self, spec: ModelSpec, series: PerturbationSeries, params: Params, l: int
    ) -> List[ForcingModeTerm]:
        """Exact expansion of the mode l of F(0) in powers of sech and tanh"""
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            root = mp.sqrt(k.kappa)
            merged: Dict[Tuple[int, int, int], object] = {}

            def add(key, value):
                if value != 0:
                    merged[key] = merged.get(key, 0) + value

            if l == 0:
                add((2, 0, 0), k.sigma * k.kappa)
            for term in series.component_terms(Component.F):
                a = trig_mode_mp(term.k + 1, term.m, l)
                coef = k.weight * k.delta**term.q * to_mpf(term.value) * root ** (term.k + term.m + 1)
                add((term.k + term.m + 1, term.n, term.q), coef * a)
            for term in series.component_terms(Component.G):
                a = trig_mode_mp(term.k, term.m + 1, l)
                coef = k.weight * k.delta**term.q * to_mpf(term.value) * root ** (term.k + term.m + 1)
                add((term.k + term.m + 1, term.n, term.q), coef * a)
            for term in series.component_terms(Component.H):
                a = trig_mode_mp(term.k, term.m, l)
                coef = k.weight * k.delta**term.q * to_mpf(term.value) * k.kappa * root ** (term.k + term.m)
                add((term.k + term.m, term.n + 1, term.q), coef * a)
            return [
                ForcingModeTerm(coefficient=mp.mpc(value), sech_power=j, tanh_power=n, order=q)
                for (j, n, q), value in sorted(merged.items())
                if value != 0
            ]

    def forcing_F0_fourier(
        self, spec: ModelSpec, series: PerturbationSeries, params: Params, u, L: int
    ) -> FourierSeries:
        """Modes -L..L of F(0)(u, .) from the exact trigonometric mode tables"""
        if L < 0:
            raise ValueError("mode cutoff must be nonnegative")
        with working_precision(self.cfg):
            k = field_constants(spec, params)
            du = k.d * _mp(u)
            sech, tanh = 1 / mp.cosh(du), mp.tanh(du)
            modes = {}
            for l in range(-L, L + 1):
                modes[l] = mp.fsum(
                    t.coefficient * sech**t.sech_power * tanh**t.tanh_power
                    for t in self.forcing_mode_terms(spec, series, params, l)
                )
            # the forcing is a trigonometric polynomial of degree qmax + 1
            tail = mp.mpf(0) if L > series.qmax else FourierSeries.from_modes({L: modes[L]}).tail_bound
            return FourierSeries(modes=modes, L=L, tail_bound=tail)


def _mp(value):
    return value if isinstance(value, (mp.mpf, mp.mpc)) else to_mpf(value)

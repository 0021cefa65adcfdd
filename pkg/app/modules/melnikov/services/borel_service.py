# app/modules/melnikov/services/borel_service.py
"""
Borel transform of the mode 1 of m(w, theta).

m(w, theta) = sqrt(kappa) w^(1+2/d+ic/d) (F~ - i sqrt(kappa) h), kappa = (d+1)/b,
collects the top-degree Taylor terms; its mode 1 is sum_q c_q w^(q+1+2/d+ic/d).
"""

import logging
from typing import Dict, Iterable, Optional, Tuple

import mpmath as mp

from app.core.precision import ScalarConfig, to_mpf, working_precision
from app.modules.melnikov.schemas.melnikov import BorelConstant
from app.modules.model.schemas.model import Component, ModelSpec, PerturbationSeries
from app.modules.model.services.mode_table import trig_mode_mp
from app.modules.special.services.gamma_service import gamma_checked

logger = logging.getLogger(__name__)


def borel_transform(terms: Iterable[Tuple[object, object]], k, zeta):
    """Term-wise rule w^(n+1+ik) -> zeta^(n+ik) / Gamma(n+1+ik) for m(w) = sum c_n w^(n+1+ik)"""
    total = mp.mpc(0)
    for n, coefficient in terms:
        exponent = mp.mpc(n, k)
        total += coefficient * mp.power(zeta, exponent) / gamma_checked(exponent + 1)
    return total


class BorelService:
    def __init__(self, cfg: Optional[ScalarConfig] = None):
        self.cfg = cfg or ScalarConfig.from_settings()

    def mode_one_coefficients(self, spec: ModelSpec, series: PerturbationSeries) -> Dict[int, object]:
        """c_q = sum_{k+m+n=q} sqrt(kappa)^(k+m+1) (-i)^n [f a_{k+1,m} + g a_{k,m+1} - i sqrt(kappa) h a_{k,m}]"""
        with working_precision(self.cfg):
            root = mp.sqrt((to_mpf(spec.d) + 1) / to_mpf(spec.b))
            coefficients: Dict[int, object] = {}

            def add(q, value):
                coefficients[q] = coefficients.get(q, mp.mpc(0)) + value

            for component in (Component.F, Component.G, Component.H):
                for term in series.component_terms(component):
                    if term.k + term.m + term.n != term.q:
                        continue
                    factor = root ** (term.k + term.m + 1) * mp.power(mp.mpc(0, -1), term.n) * to_mpf(term.value)
                    if component == Component.F:
                        mode = trig_mode_mp(term.k + 1, term.m, 1)
                    elif component == Component.G:
                        mode = trig_mode_mp(term.k, term.m + 1, 1)
                    else:
                        mode = mp.mpc(0, -1) * root * trig_mode_mp(term.k, term.m, 1)
                    add(term.q, factor * mode)
            return {q: c for q, c in sorted(coefficients.items()) if c != 0}

    def borel_constant(self, spec: ModelSpec, series: PerturbationSeries) -> BorelConstant:
        with working_precision(self.cfg):
            d = to_mpf(spec.d)
            C = to_mpf(spec.c) / d
            zeta = to_mpf(spec.alpha0) / d
            coefficients = self.mode_one_coefficients(spec, series)
            terms = [(q + 2 / d, c) for q, c in coefficients.items()]
            mhat = borel_transform(terms, C, zeta)
            constant = 4 * mp.pi / d * mhat
            last = (
                abs(borel_transform(terms[-1:], C, zeta)) * 4 * mp.pi / d if terms else mp.mpf(0)
            )
            logger.info(f"Borel constant C = {mp.nstr(constant, 12)} from {len(terms)} orders")
            return BorelConstant(
                C1=mp.re(constant),
                C2=-mp.im(constant),
                mhat1_at_alpha_over_d=mhat,
                series_terms_used=len(terms),
                truncation_bound=last,
                coefficients=coefficients,
            )

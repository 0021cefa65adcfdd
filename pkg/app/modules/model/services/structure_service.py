# app/modules/model/services/structure_service.py
import logging
from fractions import Fraction
from typing import Dict, Tuple

from pydantic import BaseModel, ConfigDict

from app.core.exceptions import DomainException
from app.core.precision import exact_fraction
from app.modules.model.schemas.model import Component, ModelSpec, PerturbationSeries

logger = logging.getLogger(__name__)


class DivergenceReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    # (q, k, m, n) -> coefficient of delta^q x^k y^m z^n in df/dx + dg/dy + dh/dz
    coefficients: Dict[Tuple[int, int, int, int], Fraction]
    max_abs: Fraction
    degree: int

    @property
    def vanishes(self) -> bool:
        return self.max_abs == 0


class StructureService:
    """Exact rational constants of the perturbation tables"""

    def L0_constant(self, spec: ModelSpec, series: PerturbationSeries) -> Fraction:
        def coef(component: Component, key: str) -> Fraction:
            q, k, m, n = (int(ch) for ch in key)
            return exact_fraction(series.coefficient(component, q, k, m, n))

        f, g, h = Component.F, Component.G, Component.H
        h3003 = coef(h, "3003")
        if spec.conservative:
            return -h3003

        b, d = exact_fraction(spec.b), exact_fraction(spec.d)
        kappa = (d + 1) / b
        bracket = (
            kappa / 4 * (coef(f, "3120") + coef(g, "3210") + 3 * coef(f, "3300") + 3 * coef(g, "3030"))
            - (coef(f, "3102") + coef(g, "3012"))
            - kappa * (coef(h, "3201") + coef(h, "3021"))
            + 2 * h3003
        )
        rho0 = (d + 1) / (2 * b * d * (3 * d + 2)) * bracket
        H0 = -h3003 + kappa / 2 * (coef(h, "3021") + coef(h, "3201"))
        return -(2 * b / d) * rho0 - H0 / d

    def divergence_check(self, series: PerturbationSeries, degree: int) -> DivergenceReport:
        if degree > series.qmax:
            raise DomainException(f"degree {degree} exceeds the truncation qmax = {series.qmax}")
        lookup = {(t.component, t.index): exact_fraction(t.value) for t in series.terms}
        coefficients: Dict[Tuple[int, int, int, int], Fraction] = {}
        for q in range(3, degree + 1):
            for k in range(q + 1):
                for m in range(q + 1 - k):
                    for n in range(q + 1 - k - m):
                        value = (
                            (k + 1) * lookup.get((Component.F, (q, k + 1, m, n)), Fraction(0))
                            + (m + 1) * lookup.get((Component.G, (q, k, m + 1, n)), Fraction(0))
                            + (n + 1) * lookup.get((Component.H, (q, k, m, n + 1)), Fraction(0))
                        )
                        if value != 0:
                            coefficients[(q, k, m, n)] = value
        max_abs = max((abs(v) for v in coefficients.values()), default=Fraction(0))
        logger.debug(f"divergence up to degree {degree}: max coefficient {max_abs}")
        return DivergenceReport(coefficients=coefficients, max_abs=max_abs, degree=degree)

    def check_conservative(self, spec: ModelSpec, series: PerturbationSeries) -> None:
        """A conservative spec must carry a divergence-free table"""
        if not spec.conservative:
            return
        report = self.divergence_check(series, series.qmax)
        if not report.vanishes:
            worst = max(report.coefficients, key=lambda key: abs(report.coefficients[key]))
            raise DomainException(
                f"conservative system has divergence coefficient {report.coefficients[worst]} at (q,k,m,n) = {worst}"
            )

# app/modules/analysis/services/comparison_service.py
"""
Service layer comparing the measured splitting with the Melnikov and
asymptotic predictions along a delta ladder.
File location: app/modules/analysis/services/comparison_service.py
"""

import logging
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional

import mpmath as mp

from app.config.settings import settings
from app.core.exceptions import DomainException, InsufficientDataException
from app.core.precision import ScalarConfig, to_mpf, working_precision
from app.modules.analysis.schemas.analysis import ComparisonReport, ComparisonRow
from app.modules.analysis.services.fit_service import FitService
from app.modules.manifolds.schemas.manifold import IntegratorConfig, SplittingSample
from app.modules.manifolds.services.splitting_service import SplittingService
from app.modules.melnikov.schemas.melnikov import BorelConstant, SigmaTarget
from app.modules.melnikov.services.average_service import AverageService
from app.modules.melnikov.services.borel_service import BorelService
from app.modules.melnikov.services.melnikov_service import MelnikovService
from app.modules.model.schemas.model import ModelSpec, Params, PerturbationSeries
from app.modules.model.services.structure_service import StructureService

logger = logging.getLogger(__name__)

# Delta(u, .) mode 0 on a zero-average curve is O(delta^(p+4)) with this constant
MODE0_CONSTANT = 10
L0_CHECK_DELTA = Decimal("0.1")

SampleProvider = Callable[[ModelSpec, PerturbationSeries, Params, int], SplittingSample]


def _wrap(angle):
    return (angle + mp.pi) % (2 * mp.pi) - mp.pi


def _phase_gap(measured, predicted):
    if measured == 0 or predicted == 0:
        return None
    return abs(_wrap(mp.arg(measured) - mp.arg(predicted)))


class ComparisonService:
    def __init__(self, precision_bits: Optional[int] = None, integrator_cfg: Optional[IntegratorConfig] = None):
        self.precision_bits = precision_bits
        self.integrator_cfg = integrator_cfg
        self.fit_service = FitService()
        self.structure_service = StructureService()

    def _bits(self, delta) -> int:
        return self.precision_bits or settings.precision_for_delta(delta)

    def _splitting_provider(self, u_section, n_theta) -> SampleProvider:
        def provide(spec, series, params, bits):
            cfg = ScalarConfig.from_settings(bits)
            integrator_cfg = self.integrator_cfg or IntegratorConfig.from_settings(bits)
            return SplittingService(cfg, integrator_cfg).splitting(spec, series, params, u_section, n_theta)

        return provide

    def compare_routes(
        self,
        spec: ModelSpec,
        series: PerturbationSeries,
        delta_ladder: Iterable,
        sigma_mode: str = "zero",
        u_section=None,
        n_theta: Optional[int] = None,
        provider: Optional[SampleProvider] = None,
    ) -> ComparisonReport:
        u_section = Decimal(str(u_section if u_section is not None else settings.U_SECTION))
        provider = provider or self._splitting_provider(u_section, n_theta)
        L0 = self.structure_service.L0_constant(spec, series)
        ladder = sorted((Decimal(str(delta)) for delta in delta_ladder), reverse=True)
        borel = BorelService(ScalarConfig.from_settings(self._bits(ladder[-1]) if ladder else None)).borel_constant(spec, series)

        rows, samples = [], []
        for delta in ladder:
            bits = self._bits(delta)
            cfg = ScalarConfig.from_settings(bits)
            sigma = AverageService(cfg).resolve_sigma(spec, series, delta, sigma_mode)
            params = Params(delta=delta, sigma=sigma)
            sample = provider(spec, series, params, bits)
            samples.append(sample)
            rows.append(self._row(spec, series, params, sample, borel, L0, cfg, u_section))
            logger.info(f"compared routes at delta={delta}")

        report = ComparisonReport(rows=rows, L0=L0)
        report.verdicts = self._verdicts(spec, rows, L0, sigma_mode)
        pinned = float(spec.p) - 2 / float(spec.d)
        try:
            report.fit = self.fit_service.fit_exponential_law(samples, pinned_power=pinned)
        except InsufficientDataException as e:
            logger.info(f"no fit for this ladder: {str(e)}")
        if report.fit is not None:
            with working_precision(53):
                rate = float(to_mpf(spec.alpha0) * mp.pi / (2 * to_mpf(spec.d)))
            report.verdicts["fit_rate"] = abs(report.fit.rate / rate - 1) <= 0.02
            report.verdicts["fit_power"] = abs(report.fit.power - pinned) <= 0.3
        return report

    def _row(self, spec, series, params, sample, borel, L0, cfg, u_section) -> ComparisonRow:
        melnikov_service = MelnikovService(cfg)
        upsilon1 = melnikov_service.upsilon0_quadrature(spec, series, params, 1)
        upsilon0 = melnikov_service.upsilon0_quadrature(spec, series, params, 0)
        with working_precision(cfg):
            melnikov = melnikov_service.section_mode(spec, params, upsilon1.value, 1, u_section)
            corrected = melnikov_service.section_mode(
                spec, params, melnikov_service.upsilon_hat(upsilon1.value, 1, L0, spec, params), 1, u_section
            )
            asymptotic = melnikov_service.section_mode(
                spec, params, melnikov_service.predicted_mode_one(spec, params, borel), 1, u_section
            )
            mode0 = mp.re(melnikov_service.section_mode(spec, params, upsilon0.value, 0, u_section))
            error = abs(melnikov_service.section_mode(spec, params, upsilon1.error, 0, u_section))
            vanishing = abs(upsilon1.value) <= upsilon1.error
            measured = sample.mode_one()
            return ComparisonRow(
                delta=params.delta,
                sigma=params.sigma,
                trusted=sample.trusted,
                measured=measured,
                measured_budget=sample.error_budget,
                melnikov=melnikov,
                melnikov_error=error,
                asymptotic=asymptotic,
                ratio_melnikov=None if vanishing else abs(measured) / abs(melnikov),
                ratio_asymptotic=abs(measured) / abs(asymptotic) if asymptotic != 0 else None,
                phase_gap=None if vanishing else _phase_gap(measured, melnikov),
                phase_gap_corrected=None if vanishing else _phase_gap(measured, corrected),
                measured_mode0=mp.re(sample.delta_modes.mode(0)),
                melnikov_mode0=mode0,
            )

    def _verdicts(self, spec: ModelSpec, rows: List[ComparisonRow], L0: Fraction, sigma_mode: str) -> Dict[str, bool]:
        verdicts = {"all_trusted": all(row.trusted for row in rows)}
        deviations = [abs(row.ratio_melnikov - 1) for row in rows if row.trusted and row.ratio_melnikov is not None]
        verdicts["melnikov_deviation_shrinks"] = all(b <= a for a, b in zip(deviations, deviations[1:]))
        zero_predicted = [row for row in rows if row.ratio_melnikov is None]
        verdicts["vanishing_prediction_consistent"] = all(
            abs(row.measured) <= row.measured_budget + abs(row.melnikov_error) for row in zero_predicted
        )
        if spec.conservative or sigma_mode == "sigma_star":
            verdicts["zero_average"] = all(
                abs(row.measured_mode0)
                <= row.measured_budget + MODE0_CONSTANT * mp.power(to_mpf(row.delta), to_mpf(spec.p) + 4)
                for row in rows
            )
        if L0 != 0:
            verdicts["l0_phase_one_sided"] = all(
                row.phase_gap_corrected <= row.phase_gap + abs(row.measured_budget / row.measured)
                for row in rows
                if row.delta <= L0_CHECK_DELTA and row.phase_gap is not None and row.phase_gap_corrected is not None
            )
        return verdicts

    def predicted_distance(self, spec: ModelSpec, borel: BorelConstant, mu, u, theta, L0: Fraction, bits: Optional[int] = None):
        """Distance between the manifolds in the unfolding variables at sqrt(mu) = delta, q = p + 2"""
        with working_precision(bits or settings.PRECISION_BITS):
            mu = to_mpf(mu)
            if mu <= 0:
                raise DomainException("mu must be positive")
            delta = mp.sqrt(mu)
            d, b, c = to_mpf(spec.d), to_mpf(spec.b), to_mpf(spec.c)
            alpha0, q = to_mpf(spec.alpha0), to_mpf(spec.p) + 2
            u, theta = to_mpf(u), to_mpf(theta)
            L0 = mp.mpf(L0.numerator) / L0.denominator
            vartheta = alpha0 * u / delta + (
                c * mp.log(mp.cosh(d * u)) - (c + alpha0 * L0 * mp.power(delta, q)) * mp.log(delta)
            ) / d
            prefactor = (
                mp.sqrt(b / (d + 1)) * mp.exp(-alpha0 * mp.pi / (2 * d * delta))
                / mp.power(delta, 2 / d + 1 - q) * mp.power(mp.cosh(d * u), 1 + 2 / d)
            )
            return prefactor * (borel.C1 * mp.cos(theta + vartheta) + borel.C2 * mp.sin(theta + vartheta))

    def wedge_bound(self, upper: SigmaTarget, lower: SigmaTarget, d, delta, bits: Optional[int] = None):
        """|Upsilon^[0]| bound between the sigma-curves of (a1+, a2+, a3+) and (a1-, a2-, a3-)"""
        if not (upper.a1 > 0 > lower.a1) or upper.a3 <= 0 or lower.a3 <= 0:
            raise DomainException("the wedge needs a1+ > 0 > a1- and positive a3")
        chosen = upper if upper.a3 <= lower.a3 else lower
        with working_precision(bits or settings.PRECISION_BITS):
            delta, d = to_mpf(delta), to_mpf(d)
            return (
                abs(to_mpf(chosen.a1)) * mp.power(delta, to_mpf(chosen.a2))
                * mp.exp(-to_mpf(chosen.a3) * mp.pi / (2 * d * delta))
            )

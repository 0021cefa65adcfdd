# app/modules/analysis/services/fit_service.py
"""
Weighted least-squares fits of the exponentially small law.
File location: app/modules/analysis/services/fit_service.py
"""

import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import curve_fit

from app.core.exceptions import InsufficientDataException
from app.modules.analysis.schemas.analysis import ConstrainedFit, FitResult
from app.modules.manifolds.schemas.manifold import SplittingSample

logger = logging.getLogger(__name__)

MIN_SAMPLES = 4
MIN_SPAN = 2.0


def exponential_law(delta, log_prefactor, power, rate):
    return log_prefactor + power * np.log(delta) - rate / delta


class FitService:
    def fit_points(
        self,
        deltas: Sequence[float],
        magnitudes: Sequence[float],
        budgets: Optional[Sequence[float]] = None,
        pinned_power: Optional[float] = None,
    ) -> FitResult:
        """Fit log|mode 1| against delta; a budget e on |mode 1| = m weighs the log residual by m^2/e^2"""
        x = np.asarray(deltas, dtype=float)
        magnitudes = np.asarray(magnitudes, dtype=float)
        if len(x) < MIN_SAMPLES:
            raise InsufficientDataException(f"{len(x)} samples, need at least {MIN_SAMPLES}")
        if np.any(magnitudes <= 0) or np.any(x <= 0):
            raise InsufficientDataException("fit needs positive deltas and nonzero modes")
        if x.max() / x.min() < MIN_SPAN:
            raise InsufficientDataException(f"delta range spans a factor {x.max() / x.min():.3f} < {MIN_SPAN}")
        y = np.log(magnitudes)
        sigma = None
        if budgets is not None:
            relative = np.asarray(budgets, dtype=float) / magnitudes
            if np.all(relative > 0):
                sigma = relative

        p0 = [float(y.mean()), 0.0, 1.0]
        popt, pcov = curve_fit(exponential_law, x, y, p0=p0, sigma=sigma, absolute_sigma=False)
        errors = np.sqrt(np.abs(np.diag(pcov)))
        residuals = y - exponential_law(x, *popt)
        design = np.column_stack([np.ones_like(x), np.log(x), -1.0 / x])
        if sigma is not None:
            design = design / sigma[:, None]
        result = FitResult(
            log_prefactor=float(popt[0]),
            power=float(popt[1]),
            rate=float(popt[2]),
            log_prefactor_error=float(errors[0]),
            power_error=float(errors[1]),
            rate_error=float(errors[2]),
            residuals=[float(r) for r in residuals],
            rms=float(np.sqrt(np.mean(residuals**2))),
            condition_estimate=float(np.linalg.cond(design)),
            samples_used=len(x),
        )
        if pinned_power is not None:
            result.constrained = self._pinned(x, y, sigma, pinned_power)
        logger.info(f"fit: rate={result.rate:.6g}±{result.rate_error:.2g}, power={result.power:.4g}±{result.power_error:.2g}")
        return result

    def _pinned(self, x, y, sigma, power: float) -> ConstrainedFit:
        law = lambda delta, log_prefactor, rate: exponential_law(delta, log_prefactor, power, rate)
        popt, pcov = curve_fit(law, x, y, p0=[float(y.mean()), 1.0], sigma=sigma, absolute_sigma=False)
        errors = np.sqrt(np.abs(np.diag(pcov)))
        residuals = y - law(x, *popt)
        return ConstrainedFit(
            power=power,
            log_prefactor=float(popt[0]),
            rate=float(popt[1]),
            log_prefactor_error=float(errors[0]),
            rate_error=float(errors[1]),
            rms=float(np.sqrt(np.mean(residuals**2))),
        )

    def fit_exponential_law(
        self, samples: List[SplittingSample], pinned_power: Optional[float] = None
    ) -> FitResult:
        """Fit over the trusted samples; untrusted ones are dropped"""
        trusted = [s for s in samples if s.trusted]
        if len(trusted) < len(samples):
            logger.warning(f"fit ignores {len(samples) - len(trusted)} untrusted samples")
        trusted.sort(key=lambda s: s.delta)
        return self.fit_points(
            [float(s.delta) for s in trusted],
            [float(abs(s.mode_one())) for s in trusted],
            [float(s.error_budget) for s in trusted],
            pinned_power=pinned_power,
        )

from decimal import Decimal

import mpmath as mp

from app.core.precision import working_precision
from app.modules.manifolds.schemas.manifold import SplittingBudget, SplittingSample
from app.modules.melnikov.schemas.fourier import FourierSeries
from app.modules.model.schemas.model import Params


def params(delta, sigma=0) -> Params:
    return Params(delta=Decimal(str(delta)), sigma=Decimal(str(sigma)))


def splitting_sample(values, budget="1e-12", trusted=True, delta="0.1", sigma=0) -> SplittingSample:
    """Sample with Delta(u, theta_j) = values[j] on an equispaced grid"""
    with working_precision(128):
        values = [mp.mpf(v) for v in values]
        L = (len(values) - 1) // 2
        return SplittingSample(
            delta=Decimal(str(delta)),
            sigma=Decimal(str(sigma)),
            u_section=Decimal(0),
            thetas=[2 * mp.pi * j / len(values) for j in range(len(values))],
            radii_unstable=[1 + v for v in values],
            radii_stable=[mp.mpf(1)] * len(values),
            delta_values=values,
            delta_modes=FourierSeries.from_samples(values, L),
            D_modes=FourierSeries.from_samples(values, L),
            seed_radius=Decimal("1e-3"),
            error_budget=mp.mpf(budget),
            budget=SplittingBudget(integrator=mp.mpf(budget)),
            trusted=trusted,
            precision_bits=128,
        )

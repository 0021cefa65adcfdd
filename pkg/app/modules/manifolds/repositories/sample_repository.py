# app/modules/manifolds/repositories/sample_repository.py
import logging
from decimal import Decimal
from typing import Any, Dict, List, Optional

import mpmath as mp

from app.core.precision import format_real, working_precision
from app.modules.manifolds.schemas.manifold import IntegratorConfig, SplittingBudget, SplittingSample
from app.modules.melnikov.schemas.fourier import FourierSeries
from app.modules.model.schemas.model import ModelSpec, Params, PerturbationSeries
from app.services.cache_service import CacheService

logger = logging.getLogger(__name__)

NAMESPACE = "splitting"


def _real(value, bits: int) -> str:
    return format_real(value, bits)


def _complex(value, bits: int) -> List[str]:
    return [format_real(mp.re(value), bits), format_real(mp.im(value), bits)]


def _series_document(series: FourierSeries, bits: int) -> Dict[str, Any]:
    return {
        "modes": {str(l): _complex(series.mode(l), bits) for l in series.indices()},
        "tail_bound": _real(series.tail_bound, bits),
    }


def _series_from(document: Dict[str, Any]) -> FourierSeries:
    modes = {int(l): mp.mpc(mp.mpf(re), mp.mpf(im)) for l, (re, im) in document["modes"].items()}
    return FourierSeries.from_modes(modes, tail_bound=mp.mpf(document["tail_bound"]))


def sample_to_document(sample: SplittingSample) -> Dict[str, Any]:
    """Full-precision decimal text for every number"""
    bits = sample.precision_bits
    with working_precision(bits):
        return {
            "delta": str(sample.delta),
            "sigma": str(sample.sigma),
            "u_section": str(sample.u_section),
            "seed_radius": str(sample.seed_radius),
            "precision_bits": bits,
            "thetas": [_real(v, bits) for v in sample.thetas],
            "radii_unstable": [_real(v, bits) for v in sample.radii_unstable],
            "radii_stable": [_real(v, bits) for v in sample.radii_stable],
            "delta_values": [_real(v, bits) for v in sample.delta_values],
            "delta_modes": _series_document(sample.delta_modes, bits),
            "D_modes": _series_document(sample.D_modes, bits),
            "error_budget": _real(sample.error_budget, bits),
            "budget": {
                "integrator": _real(sample.budget.integrator, bits),
                "seeding": _real(sample.budget.seeding, bits),
                "refinement": _real(sample.budget.refinement, bits),
            },
            "trusted": sample.trusted,
            "distance_relation_ok": sample.distance_relation_ok,
        }


def sample_from_document(document: Dict[str, Any]) -> SplittingSample:
    bits = int(document["precision_bits"])
    with working_precision(bits):
        numbers = lambda key: [mp.mpf(v) for v in document[key]]
        return SplittingSample(
            delta=Decimal(document["delta"]),
            sigma=Decimal(document["sigma"]),
            u_section=Decimal(document["u_section"]),
            thetas=numbers("thetas"),
            radii_unstable=numbers("radii_unstable"),
            radii_stable=numbers("radii_stable"),
            delta_values=numbers("delta_values"),
            delta_modes=_series_from(document["delta_modes"]),
            D_modes=_series_from(document["D_modes"]),
            seed_radius=Decimal(document["seed_radius"]),
            error_budget=mp.mpf(document["error_budget"]),
            budget=SplittingBudget(**{k: mp.mpf(v) for k, v in document["budget"].items()}),
            trusted=bool(document["trusted"]),
            distance_relation_ok=bool(document["distance_relation_ok"]),
            precision_bits=bits,
        )


class SampleRepository:
    """SplittingSamples keyed by the content hash of everything that determines them"""

    def __init__(self, cache: Optional[CacheService] = None):
        self.cache = cache or CacheService()

    def key(
        self,
        spec: ModelSpec,
        series: PerturbationSeries,
        params: Params,
        u_section,
        n_theta: int,
        integrator_cfg: IntegratorConfig,
        seed_radius,
    ) -> str:
        return self.cache.key({
            "spec": spec.fingerprint(),
            "series": series.fingerprint(),
            "delta": str(params.delta),
            "sigma": str(params.sigma),
            "u_section": str(u_section),
            "n_theta": n_theta,
            "integrator": integrator_cfg.model_dump(mode="json"),
            "seed_radius": str(seed_radius),
        })

    def get_document(self, key: str) -> Optional[Dict[str, Any]]:
        return self.cache.get(NAMESPACE, key)

    def get(self, key: str) -> Optional[SplittingSample]:
        document = self.get_document(key)
        if document is None:
            return None
        try:
            return sample_from_document(document)
        except (KeyError, ValueError, TypeError) as e:
            logger.warning(f"cached sample {key[:12]} is malformed, recomputing: {str(e)}")
            return None

    def put(self, key: str, sample: SplittingSample) -> Dict[str, Any]:
        document = sample_to_document(sample)
        self.cache.put(NAMESPACE, key, document)
        return document

    def put_document(self, key: str, document: Dict[str, Any]) -> None:
        self.cache.put(NAMESPACE, key, document)

# app/modules/runs/services/run_service.py
"""
Orchestration of the batch commands over a run document.
File location: app/modules/runs/services/run_service.py

Independent (delta, command) tasks are mapped over a process pool when more
than one job is requested. Worker functions live at module level so the pool
can pickle them, and they return plain documents of decimal strings: the
CSV written after a fresh computation and after a cache hit is the same text.
"""

import logging
import multiprocessing
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import mpmath as mp

from app.config.settings import settings
from app.core.exceptions import MissingInputException
from app.core.precision import ScalarConfig, format_real, working_precision
from app.modules.analysis.schemas.analysis import ComparisonReport
from app.modules.analysis.services.comparison_service import ComparisonService
from app.modules.manifolds.repositories.sample_repository import (
    SampleRepository,
    sample_from_document,
    sample_to_document,
)
from app.modules.manifolds.schemas.manifold import IntegratorConfig
from app.modules.manifolds.services.splitting_service import SplittingService
from app.modules.melnikov.schemas.melnikov import MelnikovRoute
from app.modules.melnikov.services.average_service import AverageService
from app.modules.melnikov.services.melnikov_service import MelnikovService
from app.modules.model.schemas.model import ModelSpec, Params, PerturbationSeries
from app.modules.model.services.field_service import FieldService
from app.modules.runs.schemas.run_config import CachePolicy, RunConfig, SplittingCommand
from app.modules.special.schemas.integral import IIntegralKey
from app.modules.special.services.integral_service import IntegralService
from app.services.cache_service import CacheService, content_hash
from app.services.file_service import FileService

logger = logging.getLogger(__name__)

INTEGRAL_FIELDS = [
    "n", "Q", "C", "omega", "d", "l",
    "quadrature_re", "quadrature_im", "quadrature_error",
    "beta_re", "beta_im", "asymptotic_re", "asymptotic_im",
    "gap_quadrature_beta", "gap_beta_asymptotic", "error",
]
MELNIKOV_FIELDS = ["delta", "sigma", "sigma_mode", "route", "l", "re", "im", "error"]
SPLITTING_FIELDS = ["delta", "sigma", "u_section", "l", "re", "im", "error_budget", "trusted"]
REPORT_FIELDS = [
    "delta", "sigma", "trusted",
    "measured_re", "measured_im", "measured_budget",
    "melnikov_re", "melnikov_im", "melnikov_error",
    "asymptotic_re", "asymptotic_im",
    "ratio_melnikov", "ratio_asymptotic",
    "phase_gap", "phase_gap_corrected",
    "measured_mode0", "melnikov_mode0", "sharp_bound_ok",
]


def _text(value, bits: int) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    with working_precision(bits):
        return format_real(value, bits)


def _complex_text(value, bits: int):
    if value is None:
        return "", ""
    with working_precision(bits):
        value = mp.mpc(value)
        return format_real(mp.re(value), bits), format_real(mp.im(value), bits)


# ---- pool workers ----------------------------------------------------------------------


def _integral_task(key: IIntegralKey, bits: int) -> Dict[str, str]:
    row = IntegralService(ScalarConfig.from_settings(bits)).triangulate(key)
    out = {
        "n": str(key.n), "Q": str(key.Q), "C": str(key.C),
        "omega": str(key.omega), "d": str(key.d), "l": str(key.l),
        "error": row.error or "",
    }
    out["quadrature_re"], out["quadrature_im"] = _complex_text(row.quadrature, bits)
    out["beta_re"], out["beta_im"] = _complex_text(row.beta, bits)
    out["asymptotic_re"], out["asymptotic_im"] = _complex_text(row.asymptotic, bits)
    out["quadrature_error"] = _text(row.quadrature_error, bits)
    out["gap_quadrature_beta"] = _text(row.gap_quadrature_beta, bits)
    out["gap_beta_asymptotic"] = _text(row.gap_beta_asymptotic, bits)
    return out


def _melnikov_task(
    spec: ModelSpec, series: PerturbationSeries, params: Params, sigma_mode: str,
    route: MelnikovRoute, l_range: List[int], bits: int,
) -> Dict[str, Any]:
    delta, sigma = params.delta, params.sigma
    service = MelnikovService(ScalarConfig.from_settings(bits))
    compute = service.upsilon0_quadrature if route == MelnikovRoute.QUADRATURE else service.upsilon0_gamma_series
    rows = []
    for l in l_range:
        estimate = compute(spec, series, params, l)
        re, im = _complex_text(estimate.value, bits)
        rows.append({
            "delta": str(delta), "sigma": str(sigma), "sigma_mode": sigma_mode, "route": route.value,
            "l": str(l), "re": re, "im": im, "error": _text(estimate.error, bits),
        })
    return {"sigma": str(sigma), "rows": rows}


def _splitting_task(
    spec: ModelSpec, series: PerturbationSeries, params: Params, command: SplittingCommand,
    integrator_cfg: IntegratorConfig, bits: int,
) -> Dict[str, Any]:
    service = SplittingService(ScalarConfig.from_settings(bits), integrator_cfg)
    sample = service.splitting(
        spec, series, params, command.u_section, command.n_theta, rho=command.seed_radius
    )
    return sample_to_document(sample)


def _apply(task):
    function, args = task
    return function(*args)


class RunService:
    def __init__(
        self,
        config: RunConfig,
        output_dir: Optional[str] = None,
        precision_bits: Optional[int] = None,
        jobs: Optional[int] = None,
        use_cache: bool = True,
        cache_dir: Optional[str] = None,
    ):
        self.config = config
        self.spec = config.model.spec
        self.series = config.model.series()
        self.precision_bits = precision_bits
        self.jobs = max(1, jobs or settings.JOBS)
        self.policy = config.cache if use_cache else CachePolicy.OFF
        self.file_service = FileService(output_dir or config.output_dir)
        self.repository = SampleRepository(CacheService(cache_dir, enabled=self.policy != CachePolicy.OFF))

    def _bits(self, delta=None, override: Optional[int] = None) -> int:
        if self.precision_bits:
            return self.precision_bits
        if override:
            return override
        return settings.precision_for_delta(delta) if delta is not None else settings.PRECISION_BITS

    def _ladder_params(self, delta, sigma_mode: str, bits: int) -> Params:
        """Resolved sigma for one rung, checked against the admissible range before any work"""
        cfg = ScalarConfig.from_settings(bits)
        sigma = AverageService(cfg).resolve_sigma(self.spec, self.series, delta, sigma_mode)
        return FieldService(cfg).validate_params(self.spec, Params(delta=delta, sigma=sigma))

    def _map(self, function: Callable, arguments: Sequence[tuple]) -> List[Any]:
        tasks = [(function, args) for args in arguments]
        if self.jobs == 1 or len(tasks) < 2:
            return [_apply(task) for task in tasks]
        with multiprocessing.Pool(min(self.jobs, len(tasks))) as pool:
            return pool.map(_apply, tasks)

    def _metadata(self, command: str, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        payload = {
            "command": command,
            "config_hash": content_hash(self.config.model_dump(mode="json")),
            "spec": self.config.model.spec.model_dump(mode="json"),
            "precision_override": self.precision_bits,
        }
        payload.update(extra or {})
        return payload

    # ---- commands --------------------------------------------------------------------

    def cmd_integrals(self) -> Path:
        command = self.config.commands.integrals
        if command is None:
            raise MissingInputException(["commands.integrals"])
        bits = self._bits(override=command.precision_bits)
        keys = IntegralService(ScalarConfig.from_settings(bits)).lattice(
            command.n, command.Q, command.C, command.omega, command.d, command.l
        )
        logger.info(f"integrals: {len(keys)} lattice points at {bits} bits")
        rows = self._map(_integral_task, [(key, bits) for key in keys])
        failed = sum(1 for row in rows if row["error"])
        if failed:
            logger.error(f"integrals: {failed} of {len(rows)} rows aborted")
        self.file_service.write_json("integrals.meta.json", self._metadata("integrals", {"bits": bits, "rows": len(rows)}))
        return self.file_service.write_csv("integrals.csv", INTEGRAL_FIELDS, rows)

    def cmd_melnikov(self) -> Path:
        command = self.config.commands.melnikov
        if command is None:
            raise MissingInputException(["commands.melnikov"])
        ladder = sorted(command.delta_ladder, reverse=True)
        bits = [self._bits(delta, command.precision_bits) for delta in ladder]
        params = [self._ladder_params(delta, command.sigma_mode, b) for delta, b in zip(ladder, bits)]
        arguments = [
            (self.spec, self.series, p, command.sigma_mode, command.route, command.l_range, b)
            for p, b in zip(params, bits)
        ]
        logger.info(f"melnikov: {len(ladder)} deltas, route {command.route.value}, l in {command.l_range}")
        results = self._map(_melnikov_task, arguments)
        sigmas = {str(delta): result["sigma"] for delta, result in zip(ladder, results)}
        self.file_service.write_json(
            "melnikov.meta.json", self._metadata("melnikov", {"sigma_mode": command.sigma_mode, "sigma": sigmas})
        )
        rows = [row for result in results for row in result["rows"]]
        return self.file_service.write_csv("melnikov.csv", MELNIKOV_FIELDS, rows)

    def _splitting_plan(self, command: SplittingCommand) -> List[Dict[str, Any]]:
        """Resolved params, precision and cache key for every delta of the ladder"""
        plan = []
        for delta in sorted(command.delta_ladder, reverse=True):
            bits = self._bits(delta, command.precision_bits)
            params = self._ladder_params(delta, command.sigma_mode, bits)
            method = command.integrator_method.value if command.integrator_method else None
            integrator_cfg = IntegratorConfig.from_settings(bits, method)
            seed_radius = command.seed_radius or settings.SEED_RADIUS
            key = self.repository.key(
                self.spec, self.series, params, command.u_section, command.n_theta, integrator_cfg, seed_radius
            )
            plan.append({"params": params, "bits": bits, "integrator_cfg": integrator_cfg, "key": key})
        return plan

    def splitting_documents(self) -> List[Dict[str, Any]]:
        command = self.config.commands.splitting
        if command is None:
            raise MissingInputException(["commands.splitting"])
        plan = self._splitting_plan(command)
        documents: List[Optional[Dict[str, Any]]] = [None] * len(plan)
        if self.policy == CachePolicy.USE:
            documents = [self.repository.get_document(item["key"]) for item in plan]
        missing = [i for i, document in enumerate(documents) if document is None]
        logger.info(f"splitting: {len(plan) - len(missing)} cached, {len(missing)} to compute")
        computed = self._map(
            _splitting_task,
            [
                (self.spec, self.series, plan[i]["params"], command, plan[i]["integrator_cfg"], plan[i]["bits"])
                for i in missing
            ],
        )
        for i, document in zip(missing, computed):
            if self.policy != CachePolicy.OFF:
                self.repository.put_document(plan[i]["key"], document)
            documents[i] = document
        for item, document in zip(plan, documents):
            if not document["trusted"]:
                logger.warning(f"splitting sample at delta={item['params'].delta} is untrusted")
        return documents

    def cmd_splitting(self) -> Path:
        command = self.config.commands.splitting
        documents = self.splitting_documents()
        rows = []
        for document in documents:
            for l, (re, im) in sorted(document["delta_modes"]["modes"].items(), key=lambda item: int(item[0])):
                rows.append({
                    "delta": document["delta"], "sigma": document["sigma"], "u_section": document["u_section"],
                    "l": l, "re": re, "im": im, "error_budget": document["error_budget"],
                    "trusted": "true" if document["trusted"] else "false",
                })
        self.file_service.write_json(
            "splitting.meta.json",
            self._metadata("splitting", {
                "sigma_mode": command.sigma_mode,
                "n_theta": command.n_theta,
                "samples": [
                    {k: document[k] for k in ("delta", "sigma", "precision_bits", "seed_radius", "budget",
                                              "distance_relation_ok")}
                    for document in documents
                ],
            }),
        )
        return self.file_service.write_csv("splitting.csv", SPLITTING_FIELDS, rows)

    def cmd_report(self) -> ComparisonReport:
        command = self.config.commands.splitting
        options = self.config.commands.report
        if command is None or options is None:
            raise MissingInputException([name for name, value in (("commands.splitting", command),
                                                                   ("commands.report", options)) if value is None])
        plan = self._splitting_plan(command)
        documents = {
            item["params"].delta: self.repository.get_document(item["key"]) if self.policy != CachePolicy.OFF else None
            for item in plan
        }
        missing = [f"splitting sample delta={delta}" for delta, document in documents.items() if document is None]
        if missing:
            raise MissingInputException(missing)
        samples = {delta: sample_from_document(document) for delta, document in documents.items()}

        service = ComparisonService(self.precision_bits or command.precision_bits)
        report = service.compare_routes(
            self.spec, self.series, list(samples), command.sigma_mode, command.u_section, command.n_theta,
            provider=lambda spec, series, params, bits: samples[params.delta],
        )
        if not options.fit:
            report.verdicts = {k: v for k, v in report.verdicts.items() if not k.startswith("fit_")}
        sharp = {}
        if options.sharp_bound:
            for row in report.rows:
                sample = samples[row.delta]
                bits = sample.precision_bits
                splitting_service = SplittingService(ScalarConfig.from_settings(bits))
                with working_precision(bits):
                    upsilon0_abs = abs(row.melnikov_mode0)
                sharp[row.delta] = splitting_service.sharp_bound_check(self.spec, sample, upsilon0_abs)
            report.verdicts["sharp_bound"] = all(ok for delta, ok in sharp.items() if samples[delta].trusted)

        rows = []
        for row in report.rows:
            bits = samples[row.delta].precision_bits
            out = {
                "delta": str(row.delta), "sigma": str(row.sigma), "trusted": _text(row.trusted, bits),
                "measured_budget": _text(row.measured_budget, bits),
                "melnikov_error": _text(row.melnikov_error, bits),
                "ratio_melnikov": _text(row.ratio_melnikov, bits),
                "ratio_asymptotic": _text(row.ratio_asymptotic, bits),
                "phase_gap": _text(row.phase_gap, bits),
                "phase_gap_corrected": _text(row.phase_gap_corrected, bits),
                "measured_mode0": _text(row.measured_mode0, bits),
                "melnikov_mode0": _text(row.melnikov_mode0, bits),
                "sharp_bound_ok": _text(sharp.get(row.delta), bits),
            }
            out["measured_re"], out["measured_im"] = _complex_text(row.measured, bits)
            out["melnikov_re"], out["melnikov_im"] = _complex_text(row.melnikov, bits)
            out["asymptotic_re"], out["asymptotic_im"] = _complex_text(row.asymptotic, bits)
            rows.append(out)
        self.file_service.write_csv("report.csv", REPORT_FIELDS, rows)
        self.file_service.write_text("report.txt", render_summary(report))
        return report

    def check_config(self) -> Dict[str, Any]:
        """Summary of what the document asks for; loading it already validated it"""
        commands = self.config.commands
        return {
            "spec": self.spec.model_dump(mode="json"),
            "terms": len(self.series.terms),
            "qmax": self.series.qmax,
            "conservative": self.spec.conservative,
            "commands": [name for name in ("integrals", "melnikov", "splitting", "report")
                         if getattr(commands, name) is not None],
            "cache": self.policy.value,
        }


def render_summary(report: ComparisonReport) -> str:
    lines = [f"L0 = {report.L0}"]
    for row in report.rows:
        ratio = "-" if row.ratio_melnikov is None else mp.nstr(row.ratio_melnikov, 8)
        gap = "-" if row.phase_gap is None else mp.nstr(row.phase_gap, 4)
        lines.append(
            f"delta={row.delta} sigma={row.sigma} trusted={'yes' if row.trusted else 'no'} "
            f"|measured|/|melnikov|={ratio} phase_gap={gap}"
        )
    if report.fit is not None:
        fit = report.fit
        lines.append(
            f"fit: rate={fit.rate:.8g} +/- {fit.rate_error:.2g}, power={fit.power:.6g} +/- {fit.power_error:.2g}, "
            f"rms={fit.rms:.3g}, cond={fit.condition_estimate:.3g}"
        )
        if fit.constrained is not None:
            lines.append(f"fit (power pinned at {fit.constrained.power:.6g}): rate={fit.constrained.rate:.8g}")
    for name in sorted(report.verdicts):
        lines.append(f"{'PASS' if report.verdicts[name] else 'FAIL'} {name}")
    lines.append("OVERALL " + ("PASS" if report.passed else "FAIL"))
    return "\n".join(lines) + "\n"

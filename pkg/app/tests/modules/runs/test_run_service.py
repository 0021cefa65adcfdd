import json
from decimal import Decimal

import pytest

from app.core.exceptions import DomainException, MissingInputException
from app.modules.manifolds.repositories.sample_repository import sample_to_document
from app.modules.runs.schemas.run_config import RunConfig
from app.modules.runs.services.run_service import INTEGRAL_FIELDS, RunService, render_summary
from app.tests.factories import splitting_sample

UNPERTURBED = {"spec": {"alpha0": 1, "b": 1, "c": 0, "d": 1, "p": 0}, "coefficients": {}}


def _config(commands, model=UNPERTURBED) -> RunConfig:
    return RunConfig.from_text(json.dumps({"version": 1, "model": model, "commands": commands}))


def _service(tmp_path, commands, **kwargs) -> RunService:
    return RunService(
        _config(commands), output_dir=str(tmp_path / "out"), cache_dir=str(tmp_path / "cache"), **kwargs
    )


def _seed_cache(service: RunService, trusted=True):
    """Zero splitting samples under the keys the splitting command would use"""
    for item in service._splitting_plan(service.config.commands.splitting):
        sample = splitting_sample([0, 0, 0], trusted=trusted, delta=item["params"].delta)
        service.repository.put_document(item["key"], sample_to_document(sample))


def test_empty_lattice_writes_the_header_only(tmp_path):
    path = _service(tmp_path, {"integrals": {"Q": [], "omega": []}}).cmd_integrals()
    assert path.read_text(encoding="utf-8") == ",".join(INTEGRAL_FIELDS) + "\n"
    meta = json.loads((tmp_path / "out" / "integrals.meta.json").read_text(encoding="utf-8"))
    assert meta["rows"] == 0


def test_integrals_rerun_is_byte_identical(tmp_path):
    service = _service(tmp_path, {"integrals": {"Q": [2], "omega": [10]}})
    first = service.cmd_integrals().read_bytes()
    second = service.cmd_integrals().read_bytes()
    assert first == second
    rows = service.file_service.read_csv("integrals.csv")
    assert len(rows) == 1 and rows[0]["error"] == ""
    assert float(rows[0]["gap_quadrature_beta"]) < 1e-20


def test_missing_command_is_reported(tmp_path):
    with pytest.raises(MissingInputException) as e:
        _service(tmp_path, {}).cmd_melnikov()
    assert e.value.missing == ["commands.melnikov"]
    assert e.value.exit_code == 6


def test_melnikov_rows_follow_the_ladder(tmp_path):
    service = _service(tmp_path, {"melnikov": {"delta_ladder": [0.1, 0.2], "l_range": [0, 1]}})
    service.cmd_melnikov()
    rows = service.file_service.read_csv("melnikov.csv")
    assert [(row["delta"], row["l"]) for row in rows] == [("0.2", "0"), ("0.2", "1"), ("0.1", "0"), ("0.1", "1")]
    assert all(row["re"] == "0.0" and row["sigma"] == "0" for row in rows)


@pytest.mark.parametrize("command", ["melnikov", "splitting"])
def test_fixed_sigma_outside_the_admissible_range_is_rejected(tmp_path, command):
    # |sigma| <= 10 delta^3 = 0.08 at delta = 0.2
    service = _service(tmp_path, {command: {"delta_ladder": [0.2], "sigma_mode": "fixed:0.5"}}, use_cache=False)
    with pytest.raises(DomainException) as e:
        getattr(service, f"cmd_{command}")()
    assert e.value.exit_code == 2
    assert not (tmp_path / "out" / f"{command}.csv").exists()


def test_fixed_sigma_inside_the_range_reaches_the_rows(tmp_path):
    service = _service(tmp_path, {"melnikov": {"delta_ladder": [0.2], "sigma_mode": "fixed:0.001", "l_range": [1]}})
    service.cmd_melnikov()
    rows = service.file_service.read_csv("melnikov.csv")
    assert [(row["sigma"], row["l"]) for row in rows] == [("0.001", "1")]


def test_report_needs_cached_samples(tmp_path):
    service = _service(tmp_path, {"splitting": {"delta_ladder": [0.2, 0.1]}, "report": {}})
    with pytest.raises(MissingInputException) as e:
        service.cmd_report()
    assert e.value.missing == ["splitting sample delta=0.1", "splitting sample delta=0.2"]


def test_report_without_cache_cannot_read_samples(tmp_path):
    service = _service(tmp_path, {"splitting": {"delta_ladder": [0.2]}, "report": {}})
    _seed_cache(service)
    off = _service(tmp_path, {"splitting": {"delta_ladder": [0.2]}, "report": {}}, use_cache=False)
    with pytest.raises(MissingInputException):
        off.cmd_report()


def test_report_from_cached_samples(tmp_path):
    service = _service(tmp_path, {"splitting": {"delta_ladder": [0.2, 0.1]}, "report": {}})
    _seed_cache(service)
    report = service.cmd_report()
    assert [str(row.delta) for row in report.rows] == ["0.2", "0.1"]
    assert all(row.ratio_melnikov is None for row in report.rows)
    assert report.verdicts["vanishing_prediction_consistent"]
    assert report.verdicts["sharp_bound"]
    assert report.fit is None
    assert report.passed
    text = (tmp_path / "out" / "report.txt").read_text(encoding="utf-8")
    assert text == render_summary(report)
    assert text.endswith("OVERALL PASS\n")
    first = (tmp_path / "out" / "report.csv").read_bytes()
    service.cmd_report()
    assert (tmp_path / "out" / "report.csv").read_bytes() == first


def test_untrusted_samples_fail_the_report(tmp_path):
    service = _service(tmp_path, {"splitting": {"delta_ladder": [0.2]}, "report": {}})
    _seed_cache(service, trusted=False)
    report = service.cmd_report()
    assert not report.verdicts["all_trusted"]
    assert "FAIL all_trusted" in render_summary(report)


def test_splitting_reads_the_cache(tmp_path):
    service = _service(tmp_path, {"splitting": {"delta_ladder": [0.2]}})
    _seed_cache(service)
    service.cmd_splitting()
    rows = service.file_service.read_csv("splitting.csv")
    assert [row["l"] for row in rows] == ["-1", "0", "1"]
    assert all(row["delta"] == "0.2" and row["trusted"] == "true" for row in rows)


def test_check_config_summary(tmp_path):
    summary = _service(tmp_path, {"splitting": {"delta_ladder": [0.2]}, "report": {}}).check_config()
    assert summary["commands"] == ["splitting", "report"]
    assert summary["terms"] == 0
    assert summary["cache"] == "use"


SYSTEM_C = {
    "spec": {"alpha0": 1, "b": 1, "c": 0, "d": 1, "p": 0, "conservative": True},
    "coefficients": {"f3201": 1, "h3102": -1},
}


def test_splitting_and_report_end_to_end_at_low_precision(tmp_path):
    commands = {
        "splitting": {"delta_ladder": [0.25, 0.2], "n_theta": 3, "integrator_method": "dop853"},
        "report": {"fit": False},
    }
    service = RunService(
        _config(commands, model=SYSTEM_C), output_dir=str(tmp_path / "out"), cache_dir=str(tmp_path / "cache"),
        precision_bits=128,
    )
    first = service.cmd_splitting().read_bytes()
    rows = service.file_service.read_csv("splitting.csv")
    assert [(row["delta"], row["l"]) for row in rows] == [
        ("0.25", "-1"), ("0.25", "0"), ("0.25", "1"), ("0.2", "-1"), ("0.2", "0"), ("0.2", "1"),
    ]
    assert all(row["trusted"] in ("true", "false") for row in rows)
    assert all(0 <= float(row["error_budget"]) < 1e-3 for row in rows)
    # the second pass is served from the cache
    assert service.cmd_splitting().read_bytes() == first

    report = service.cmd_report()
    assert [row.delta for row in report.rows] == [Decimal("0.25"), Decimal("0.2")]
    assert report.fit is None
    assert (tmp_path / "out" / "report.txt").read_text(encoding="utf-8") == render_summary(report)

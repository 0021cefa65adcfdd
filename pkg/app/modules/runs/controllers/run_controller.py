# app/modules/runs/controllers/run_controller.py
import functools
import json
import logging

import click

from app.core.exceptions import LabException
from app.modules.runs.schemas.run_config import RunConfig
from app.modules.runs.services.run_service import RunService

logger = logging.getLogger(__name__)


class CommandFailed(click.ClickException):
    """A LabException surfaced with its own exit code"""

    def __init__(self, exc: LabException):
        super().__init__(exc.detail)
        self.exit_code = exc.exit_code


def run_options(command):
    """Flags shared by every command that reads a run document"""

    @click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False), help="Run document (JSON)")
    @click.option("--out", "output_dir", default=None, type=click.Path(file_okay=False), help="Artifact directory")
    @click.option("--precision", "precision_bits", default=None, type=click.IntRange(min=53), help="Override every precision")
    @click.option("--jobs", default=None, type=click.IntRange(min=1), help="Worker processes")
    @click.option("--no-cache", "no_cache", is_flag=True, default=False, help="Neither read nor write the cache")
    @functools.wraps(command)
    def wrapper(config_path, output_dir, precision_bits, jobs, no_cache, **kwargs):
        try:
            config = RunConfig.load(config_path)
            service = RunService(
                config, output_dir=output_dir, precision_bits=precision_bits, jobs=jobs, use_cache=not no_cache
            )
            return command(service, **kwargs)
        except LabException as e:
            logger.error(f"{command.__name__} failed: {e.detail}")
            raise CommandFailed(e)

    return wrapper


@click.command("integrals")
@run_options
def integrals(service: RunService):
    """Triangulate the I-integral lattice (quadrature, Beta recurrence, asymptotics)"""
    click.echo(str(service.cmd_integrals()))


@click.command("melnikov")
@run_options
def melnikov(service: RunService):
    """Melnikov coefficients along the delta ladder"""
    click.echo(str(service.cmd_melnikov()))


@click.command("splitting")
@run_options
def splitting(service: RunService):
    """Measure the splitting of the manifolds along the delta ladder"""
    click.echo(str(service.cmd_splitting()))


@click.command("report")
@run_options
@click.pass_context
def report(ctx: click.Context, service: RunService):
    """Compare the measured splitting with the predictions; exit status 1 on any FAIL"""
    result = service.cmd_report()
    click.echo("PASS" if result.passed else "FAIL")
    if not result.passed:
        ctx.exit(1)


@click.command("check-config")
@run_options
def check_config(service: RunService):
    """Validate a run document and print what it asks for"""
    click.echo(json.dumps(service.check_config(), indent=2, sort_keys=True))

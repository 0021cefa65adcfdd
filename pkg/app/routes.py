# app/routes.py
import click

from app.config.settings import settings
from app.modules.runs.routes import commands as run_commands

# Main command group
cli = click.Group(name="hopflab", help=f"{settings.PROJECT_NAME}: batch commands over a run document")

for command in run_commands:
    cli.add_command(command)

# app/modules/runs/routes.py
from app.modules.runs.controllers import run_controller

# Commands exposed by the runs module, in help order
commands = [
    run_controller.check_config,
    run_controller.integrals,
    run_controller.melnikov,
    run_controller.splitting,
    run_controller.report,
]

# app/core/exceptions.py
from typing import Iterable, Optional


class LabException(Exception):
    """Base error of the lab. ``exit_code`` is what the command line returns."""

    exit_code: int = 1

    def __init__(self, detail: str = "Computation failed", exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def __str__(self) -> str:
        return self.detail


class DomainException(LabException):
    exit_code = 2

    def __init__(self, detail: str = "Input outside the admitted domain"):
        super().__init__(detail=detail)


class ConfigException(LabException):
    exit_code = 2

    def __init__(self, detail: str = "Invalid run configuration", path: Optional[str] = None):
        if path:
            detail = f"{path}: {detail}"
        super().__init__(detail=detail)
        self.path = path


class PoleException(LabException):
    exit_code = 3

    def __init__(self, pole: int, detail: Optional[str] = None):
        super().__init__(detail=detail or f"Gamma function has a pole at {pole}")
        self.pole = pole


class DivisionException(LabException):
    exit_code = 3

    def __init__(self, detail: str = "Division by zero in recurrence"):
        super().__init__(detail=detail)


class ConvergenceException(LabException):
    exit_code = 4

    def __init__(self, detail: str = "Iteration did not converge", residual=None):
        if residual is not None:
            detail = f"{detail} (last residual {residual})"
        super().__init__(detail=detail)
        self.residual = residual


class AccuracyException(LabException):
    exit_code = 4

    def __init__(self, detail: str = "Requested tolerance not reached", achieved=None):
        if achieved is not None:
            detail = f"{detail} (achieved bound {achieved})"
        super().__init__(detail=detail)
        self.achieved = achieved


class StepLimitException(LabException):
    exit_code = 4

    def __init__(self, detail: str = "Integrator exhausted its step budget"):
        super().__init__(detail=detail)


class BlowUpException(LabException):
    exit_code = 4

    def __init__(self, detail: str = "Trajectory left the bounded region"):
        super().__init__(detail=detail)


class SectionException(LabException):
    exit_code = 4

    def __init__(self, detail: str = "No section crossing within the time horizon"):
        super().__init__(detail=detail)


class UntrustedSampleException(LabException):
    exit_code = 5

    def __init__(self, detail: str = "Error budget exceeds the admitted fraction of the leading mode"):
        super().__init__(detail=detail)


class InsufficientDataException(LabException):
    exit_code = 5

    def __init__(self, detail: str = "Not enough trusted samples to fit"):
        super().__init__(detail=detail)


class MissingInputException(LabException):
    exit_code = 6

    def __init__(self, missing: Iterable[str]):
        self.missing = sorted(missing)
        super().__init__(detail="Missing inputs: " + ", ".join(self.missing))

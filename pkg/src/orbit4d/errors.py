"""Failure classes shared across the pipeline.

Each class maps to one CLI exit code so batch drivers can tell apart
bad inputs, missing upstream stages, and mid-stage blowups.
"""


class OrbitError(Exception):
    """Base class for everything this package raises on purpose."""

    exit_code = 4


class InvalidArgument(OrbitError, ValueError):
    """An operation was called with inputs that violate its contract."""

    exit_code = 2


class InvalidState(OrbitError, RuntimeError):
    """An object is not in the state the operation requires (e.g. untrained model)."""

    exit_code = 4


class MissingStage(OrbitError):
    """A pipeline command ran before its upstream stage completed."""

    exit_code = 3

    def __init__(self, stage: str):
        super().__init__(f"required stage marker missing: {stage!r}")
        self.stage = stage


class WorkspaceLocked(OrbitError):
    """Another process holds the workspace lock."""

    exit_code = 5


class NonFiniteLoss(OrbitError):
    """Optimization produced NaN/inf; carries diagnostics for the log."""

    exit_code = 4

    def __init__(self, iteration: int, value: float, detail: str = ""):
        msg = f"non-finite loss at iteration {iteration}: {value!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.iteration = iteration
        self.value = value

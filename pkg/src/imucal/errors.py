"""Exception hierarchy.  ``code`` is the machine-readable tag printed by the CLI."""


class ImucalError(Exception):
    code = "error"
    exit_code = 1

    def __init__(self, message: str = "", stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def describe(self) -> str:
        where = f" [{self.stage}]" if self.stage else ""
        return f"{self.code}{where}: {self}"


class StreamFormatError(ImucalError, ValueError):
    code = "bad-input"
    exit_code = 3


class InsufficientDataError(ImucalError):
    code = "insufficient-data"
    exit_code = 4


class UnderdeterminedError(ImucalError):
    code = "underdetermined"
    exit_code = 5


class NoUsableThresholdError(UnderdeterminedError):
    """Every threshold multiplier produced fewer segments than required."""

    code = "no-usable-k"

    def __init__(self, message: str = "", best_count: int = 0, stage: str | None = None):
        super().__init__(message, stage)
        self.best_count = best_count


class DivergedError(ImucalError):
    code = "diverged"
    exit_code = 6


class MissingMotionDataError(ImucalError):
    code = "missing-motion-data"
    exit_code = 7


class InconsistentParityError(ImucalError):
    code = "inconsistent-parity"
    exit_code = 8

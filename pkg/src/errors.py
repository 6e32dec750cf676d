"""Exception hierarchy shared by the library and the command line.

Errors that can reach the CLI carry an ``exit_code`` so `src.main` can map
each failure class to a distinct process status.
"""
from __future__ import annotations

from typing import Optional


class DenoiseError(Exception):
    exit_code = 1


class ConfigError(DenoiseError):
    """Bad config file, unknown key, or config/checkpoint mismatch."""
    exit_code = 4

    def __init__(self, message: str, errors: Optional[list[str]] = None):
        super().__init__(message)
        self.errors = list(errors or [])


class MissingFileError(DenoiseError):
    exit_code = 3


class ImageFormatError(DenoiseError):
    exit_code = 7


class GradcheckFailed(DenoiseError):
    exit_code = 5


class TrainingDivergedError(DenoiseError):
    """Raised when the loss goes non-finite; ``dump_path`` holds the state dump."""
    exit_code = 6

    def __init__(self, message: str, dump_path: Optional[str] = None):
        super().__init__(message)
        self.dump_path = dump_path


class ShapeError(ValueError):
    pass


class TapeError(RuntimeError):
    pass


class NonFiniteError(ArithmeticError):
    pass


class MissingGradientError(RuntimeError):
    pass

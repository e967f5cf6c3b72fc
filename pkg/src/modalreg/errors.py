"""Exception types raised across the package.

Every error carries the name of the module that raised it and, when one is
to blame, the offending parameter, so the CLI can report structured failures.
"""

from __future__ import annotations


class ModalRegError(Exception):
    module = "modalreg"

    def __init__(self, message: str, parameter: str | None = None, module: str | None = None):
        super().__init__(message)
        self.parameter = parameter
        if module is not None:
            self.module = module

    def to_dict(self) -> dict:
        return {
            "error": type(self).__name__,
            "module": self.module,
            "parameter": self.parameter,
            "message": str(self),
        }


class DataError(ModalRegError, ValueError):
    module = "dataset"


class MissingColumnError(DataError):
    pass


class NonNumericError(DataError):
    def __init__(self, row: int, column: str, value: str):
        super().__init__(
            f"non-numeric value {value!r} at row {row}, column {column!r}",
            parameter=column,
        )
        self.row = row
        self.column = column


class DimensionError(DataError):
    pass


class DomainError(ModalRegError, ValueError):
    """A scalar argument lies outside its admissible range."""


class SolverError(ModalRegError, RuntimeError):
    module = "qr_solver"


class ConvergenceError(SolverError):
    """Iteration cap hit; ``incumbent`` holds the last vertex visited."""

    def __init__(self, message: str, incumbent=None, parameter: str | None = None):
        super().__init__(message, parameter=parameter)
        self.incumbent = incumbent


class BandwidthError(ModalRegError, ValueError):
    module = "mode_estimator"


class CoverageError(ModalRegError, ValueError):
    module = "mode_estimator"


class InferenceError(ModalRegError, RuntimeError):
    module = "inference"


class SingularMatrixError(InferenceError):
    pass


class RangeError(InferenceError):
    pass


class ExperimentError(ModalRegError, RuntimeError):
    module = "simlab"

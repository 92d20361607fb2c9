from pathlib import Path
from typing import ClassVar, Optional, Self


class RadialGdpError(Exception):
    """
    Base class of all errors raised by `radialgdp`.

    Every subclass carries the process exit code the command line interface returns
    when the error escapes a subcommand.
    """

    exit_code: ClassVar[int] = 1


class DomainError(RadialGdpError, ValueError):
    """
    Raised when an input violates a precondition of a numerical operation,
    e.g. a non-positive smoothing penalty or a parameter outside `[0, 1]`.
    """

    exit_code = 3


class AlignmentError(DomainError):
    """
    Raised when a rigid alignment is not well defined.

    Attributes:
        diagnostic (Optional[str]): A short description of why the alignment failed,
            e.g. the singular values of the cross-covariance matrix.
    """

    def __init__(self, *args, diagnostic: Optional[str] = None) -> None:
        super().__init__(*args)
        self.diagnostic = diagnostic


class ConfigError(RadialGdpError):
    exit_code = 2


class DataError(RadialGdpError):
    """
    Raised for malformed input files. Unlike most errors here, `DataError` knows where
    it happened: `path` and `line` are instance attributes tied to the offending file.

    Example:
        ```python
        try:
            surface = read_surface_csv(path)
        except DataError as e:
            print(e.path, e.line)
        ```
    """

    exit_code = 3

    def __init__(
        self, *args, path: Optional[Path] = None, line: Optional[int] = None
    ) -> None:
        super().__init__(*args)
        self.path = path
        self.line = line

    def __str__(self) -> str:
        message = super().__str__()
        if self.path is None:
            return message
        location = f"{self.path}" if self.line is None else f"{self.path}:{self.line}"
        return f"{location}: {message}"

    def at(self, path: Path, line: Optional[int] = None) -> Self:
        self.path, self.line = path, line
        return self


class ArtifactNotFoundError(DataError, FileNotFoundError):
    """Raised when a pipeline stage expects an artifact that an earlier stage did not write."""


class NumericalError(RadialGdpError):
    exit_code = 4


class InvariantError(NumericalError):
    """Raised when an internal invariant (e.g. a positive retained eigenvalue) is broken."""
